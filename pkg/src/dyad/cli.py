"""Command line front end: ``dyad --config run.ini [--out DIR] [--workers N] [--seed S]``.

The config is an INI file with flat sections ([run], [model], [numerics],
[construction], [data], [io], [sweep]); ``#`` starts a comment. Unknown
sections or keys are rejected. Every run writes into the output directory

    trajectory.csv   t,j,a,b rows sorted by (t, j)
    report.json      verification or budget report with pass flags
    manifest.json    resolved config (defaults filled in) and content hashes

Exit codes: 0 all pass flags true, 1 a verification failed (report still
written), 2 config error, 3 numeric failure (diagnostic.json written).
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import kernels
from .constructor.hsystem import ConstructionError, InvalidRho
from .constructor.monodromy import SearchConfig
from .constructor.solution import construct
from .core import ModelError, ModelSpec, ShellState, Variant
from .galerkin import BlowUpError, IntegratorConfig, energy_budget, integrate
from .verifier import (
    THRESHOLDS,
    nonuniqueness_demo,
    standard_data,
    standard_forcing,
    uniqueness_demo,
    verify_construction,
)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("simulate", "construct", "verify", "demo-nonunique", "demo-unique", "sweep")
MAX_SWEEP_POINTS = 10_000


class ConfigError(ValueError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


# ----------------------------------------------------------------------------
# schema


def _float(s: str) -> float:
    return float(s)


def _int(s: str) -> int:
    return int(s)


def _floats(s: str) -> list:
    return [float(x) for x in s.split(",") if x.strip()]


def _ints(s: str) -> list:
    return [int(x) for x in s.split(",") if x.strip()]


def _choice(*opts):
    def parse(s: str) -> str:
        if s not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}")
        return s

    return parse


def _words(s: str) -> list:
    return [x.strip() for x in s.split(",") if x.strip()]


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any = None
    required: bool = False


SCHEMA = {
    "run": {"command": Key(_choice(*COMMANDS), required=True)},
    "model": {
        "variant": Key(_choice(*(v.value for v in Variant)), "MHDForward"),
        "lambda": Key(_float, required=True),
        "theta": Key(_float),
        "alpha": Key(_float),
        "beta": Key(_float),
        "nu": Key(_float, 1.0),
        "mu": Key(_float, 1.0),
        "coeffs": Key(_floats),
    },
    "numerics": {
        "N": Key(_int, 12),
        "dt": Key(_float, 1e-4),
        "t_end": Key(_float, 1.0),
        "sample_every": Key(_int, 1),
        "grid_M": Key(_int, 4096),
        "j_max": Key(_int, 12),
        "identity_jmax": Key(_int, 20),
        "samples": Key(_int, 1001),
        "residual_points": Key(_int, 10_000),
        "galerkin_N": Key(_int, 6),
        "galerkin_dt": Key(_float, 5e-7),
        "Ns": Key(_ints, [12, 16]),
        "dts": Key(_floats, [1e-3, 5e-4]),
    },
    "construction": {
        "rho": Key(_float),
        "P": Key(_float),
        "Q": Key(_float, 0.0),
        "d0": Key(_float, 1.0),
        "search_box": Key(_floats, [5.0, 10.0, 20.0, 50.0]),
        "search_points": Key(_int, 101),
    },
    "data": {
        "initial": Key(_choice("zero", "standard"), "zero"),
        "forcing": Key(_choice("zero", "standard", "constructed"), "zero"),
        "amplitude": Key(_float, 1.0),
    },
    "io": {"formats": Key(_words, ["csv", "json"])},
    "sweep": {
        "command": Key(_choice(*COMMANDS[:-1])),
        "x_key": Key(str),
        "x_values": Key(_floats, []),
        "y_key": Key(str),
        "y_values": Key(_floats, []),
    },
}


def _fmt_value(v):
    if isinstance(v, list):
        return ",".join(_fmt_value(x) for x in v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def parse_config_text(text: str) -> dict:
    """Parse and validate; returns {section: {key: value}} with defaults filled in."""
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",), strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError("config", f"unreadable: {e}") from None
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(sec, "unknown section")
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{sec}.{key}", "unknown key")
    out: dict = {}
    for sec, keys in SCHEMA.items():
        out[sec] = {}
        for key, spec in keys.items():
            raw = cp.get(sec, key, fallback=None) if cp.has_section(sec) else None
            if raw is None or raw.strip() == "":
                if spec.required:
                    raise ConfigError(key if sec == "model" else f"{sec}.{key}", f"required key '{key}' missing in [{sec}]")
                out[sec][key] = spec.default
                continue
            try:
                out[sec][key] = spec.parse(raw.strip())
            except ValueError as e:
                raise ConfigError(f"{sec}.{key}", f"bad value {raw.strip()!r} ({e})") from None
    _validate(out)
    return out


def _validate(cfg: dict):
    cmd = cfg["run"]["command"]
    num = cfg["numerics"]
    for k in ("dt", "t_end", "galerkin_dt"):
        if not (math.isfinite(num[k]) and num[k] > 0):
            raise ConfigError(f"numerics.{k}", "must be > 0")
    for k in ("N", "galerkin_N", "sample_every", "grid_M", "samples", "residual_points", "search_points"):
        v = num.get(k, cfg["construction"].get(k))
        if v is not None and v < 1:
            raise ConfigError(k, "must be a positive integer")
    if num["j_max"] < 4:
        raise ConfigError("numerics.j_max", "must be at least 4")
    if num["identity_jmax"] < 4:
        raise ConfigError("numerics.identity_jmax", "must be at least 4")
    if cmd == "sweep":
        sw = cfg["sweep"]
        if sw["command"] is None:
            raise ConfigError("sweep.command", "required for the sweep command")
        if sw["x_key"] is None:
            raise ConfigError("sweep.x_key", "required for the sweep command")
        for axis in ("x", "y"):
            key = sw[f"{axis}_key"]
            if key is None:
                if sw[f"{axis}_values"]:
                    raise ConfigError(f"sweep.{axis}_values", f"given without sweep.{axis}_key")
                continue
            sec, _, name = key.partition(".")
            if sec not in ("model", "numerics", "construction", "data") or name not in SCHEMA.get(sec, {}):
                raise ConfigError(f"sweep.{axis}_key", f"{key!r} is not a sweepable key")
        n = max(1, len(sw["x_values"])) * max(1, len(sw["y_values"]))
        if n > MAX_SWEEP_POINTS:
            raise ConfigError("sweep.x_values", f"grid has {n} points, limit {MAX_SWEEP_POINTS}")
    else:
        model_from_config(cfg)


def model_from_config(cfg: dict) -> ModelSpec:
    m = cfg["model"]
    try:
        coeffs = tuple(m["coeffs"]) if m["coeffs"] is not None else None
        return ModelSpec(
            Variant(m["variant"]), m["lambda"], theta=m["theta"], alpha=m["alpha"], beta=m["beta"], nu=m["nu"], mu=m["mu"], cascade_coeffs=coeffs
        )
    except ModelError as e:
        msg = str(e)
        for key in ("lambda", "theta", "alpha", "beta", "coeffs", "nu", "mu"):
            if key in msg or (key == "nu" and "viscosity" in msg) or (key == "coeffs" and "cascade" in msg):
                raise ConfigError(f"model.{key}", msg) from None
        raise ConfigError("model", msg) from None


def resolved_text(cfg: dict) -> str:
    """The resolved config as INI text (stable order, None values omitted)."""
    lines = []
    for sec, keys in cfg.items():
        lines.append(f"[{sec}]")
        for k, v in keys.items():
            if v is not None:
                lines.append(f"{k} = {_fmt_value(v)}")
        lines.append("")
    return "\n".join(lines)


# ----------------------------------------------------------------------------
# output helpers


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def dumps(obj, indent: int = 2) -> str:
    """JSON with floats at 17 significant digits and insertion key order."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            items = [f"{pad}{enc(v, level + 1)}" for v in o]
            return "[\n" + ",\n".join(items) + "\n" + end + "]"
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, float):
            if math.isnan(o):
                return "NaN"
            if math.isinf(o):
                return "Infinity" if o > 0 else "-Infinity"
            return format(o, ".17g")
        return json.dumps(o)

    return enc(_jsonable(obj), 0) + "\n"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def trajectory_csv(times, A, B) -> bytes:
    """Rows t,j,a,b sorted by (t, j); A and B have shape (len(times), shells)."""
    times = np.asarray(times, dtype=float)
    nt, ns = A.shape
    buf = io.StringIO()
    buf.write("t,j,a,b\n")
    for i in range(nt):
        t = format(float(times[i]), ".17g")
        for j in range(ns):
            buf.write(f"{t},{j},{float(A[i, j]):.17g},{float(B[i, j]):.17g}\n")
    return buf.getvalue().encode()


class Outputs:
    def __init__(self, root: Path, formats):
        self.root = root
        self.formats = set(formats)
        self.files: dict = {}
        root.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, data: bytes):
        kind = name.rsplit(".", 1)[-1]
        if kind in ("csv", "json") and kind not in self.formats and name not in ("manifest.json", "diagnostic.json"):
            return
        (self.root / name).write_bytes(data)
        self.files[name] = _sha256(data)


# ----------------------------------------------------------------------------
# commands


def _solution(cfg):
    model = model_from_config(cfg)
    c = cfg["construction"]
    n = cfg["numerics"]
    search = SearchConfig(half_widths=tuple(c["search_box"]), points=c["search_points"], m=n["grid_M"])
    try:
        return construct(model, rho=c["rho"], Q=c["Q"], j_max=n["j_max"], m=n["grid_M"], search=search, P=c["P"], d0=c["d0"])
    except InvalidRho as e:
        raise ConfigError("construction.rho", str(e)) from None
    except ValueError as e:
        if isinstance(e, ConstructionError):
            raise
        raise ConfigError("model.variant" if "construction is available" in str(e) else "construction", str(e)) from None


def _solution_samples(sol, n_samples, n):
    t = np.linspace(0.0, sol.T, n_samples)
    A, B, _, _ = sol.fields(t, n, derivatives=False)
    return t, A.T, B.T


def cmd_simulate(cfg, out: Outputs):
    model = model_from_config(cfg)
    n = cfg["numerics"]
    d = cfg["data"]
    N = n["N"]
    init = standard_data(N, model.lam) if d["initial"] == "standard" else ShellState.zeros(N)
    if model.is_nse:
        init = ShellState(init.a, np.zeros_like(init.b), 0.0)
    if d["forcing"] == "zero":
        from .constructor.forcing import ForcingSpec

        forcing = ForcingSpec.zero()
    elif d["forcing"] == "standard":
        forcing = standard_forcing(N + 1, n["t_end"], d["amplitude"])
    else:
        from .constructor.forcing import synthesize_forcing

        sol = _solution(cfg)
        if n["t_end"] > sol.T * (1 + 1e-12):
            raise ConfigError("numerics.t_end", f"constructed forcing is defined up to T = {sol.T:.17g}")
        if N > sol.j_max:
            raise ConfigError("numerics.N", f"constructed forcing has shells 0..{sol.j_max} (numerics.j_max)")
        forcing = synthesize_forcing(sol)
    try:
        icfg = IntegratorConfig(n["dt"], n["t_end"], sample_every=n["sample_every"])
    except ValueError as e:
        raise ConfigError("numerics.dt", str(e)) from None
    traj = integrate(model, init, forcing, icfg)
    bud = energy_budget(traj)
    report = {
        "command": "simulate",
        "N": N,
        "dt": traj.dt,
        "backend": traj.backend,
        "final_energy": float(traj.energy[-1]),
        "max_abs_b": float(np.max(np.abs(traj.b))),
        "budget_max_abs": bud.max_abs,
        "budget_relative": bud.max_relative,
        "pass": {"budget": bud.max_relative <= THRESHOLDS["budget"]},
        "thresholds": {"budget": THRESHOLDS["budget"]},
    }
    out.write("trajectory.csv", trajectory_csv(traj.times, traj.a, traj.b))
    return report


def _construct_info(sol):
    d1, d2, scale = sol.h.boundary_defect()
    return {
        "variant": sol.h.variant.value,
        "rho": sol.rho,
        "c0": sol.h.c0,
        "d0": sol.h.d0,
        "P": sol.bump.P,
        "Q": sol.bump.Q,
        "T": sol.T,
        "boundary_defects": [d1, d2],
        "boundary_scale": scale,
    }


def cmd_construct(cfg, out: Outputs):
    sol = _solution(cfg)
    info = _construct_info(sol)
    d1, d2 = info["boundary_defects"]
    info["pass"] = {"calibration": max(d1, d2) <= THRESHOLDS["calibration"] * info["boundary_scale"]}
    info["thresholds"] = {"calibration": THRESHOLDS["calibration"]}
    info["solution"] = sol.to_manifest()
    t, A, B = _solution_samples(sol, cfg["numerics"]["samples"], sol.j_max)
    out.write("trajectory.csv", trajectory_csv(t, A, B))
    return {"command": "construct", **info}


def cmd_verify(cfg, out: Outputs, workers=1):
    sol = _solution(cfg)
    n = cfg["numerics"]
    rep = verify_construction(sol, n["j_max"], n["identity_jmax"], n["residual_points"], workers=workers)
    t, A, B = _solution_samples(sol, n["samples"], sol.j_max)
    out.write("trajectory.csv", trajectory_csv(t, A, B))
    return {"command": "verify", "construction": _construct_info(sol), **rep.to_dict()}


def cmd_demo_nonunique(cfg, out: Outputs, workers=1):
    sol = _solution(cfg)
    n = cfg["numerics"]
    res = nonuniqueness_demo(solution=sol, N=n["galerkin_N"], dt=n["galerkin_dt"], j_max=n["j_max"], identity_jmax=n["identity_jmax"], workers=workers)
    stride = 100
    g = res.galerkin
    idx = np.arange(0, g.times.size, stride)
    t = g.times[idx]
    A, B, _, _ = sol.fields(t, g.n_shells, derivatives=False)
    out.write("trajectory.csv", trajectory_csv(t, A.T, B.T))
    out.write("trajectory_galerkin.csv", trajectory_csv(t, g.a[idx], g.b[idx]))
    return {"command": "demo-nonunique", "construction": _construct_info(sol), **res.to_dict()}


def cmd_demo_unique(cfg, out: Outputs):
    model = model_from_config(cfg)
    n = cfg["numerics"]
    if model.theta is None or model.theta > 2.0:
        raise ConfigError("model.theta", "demo-unique needs a theta form with theta <= 2")
    if len(n["Ns"]) < 1 or len(n["dts"]) < 1:
        raise ConfigError("numerics.Ns", "need at least one truncation and one step")
    d = cfg["data"]
    forcing = None
    if d["forcing"] == "zero":
        from .constructor.forcing import ForcingSpec

        forcing = ForcingSpec.zero()
    elif d["forcing"] == "standard":
        forcing = standard_forcing(max(n["Ns"]) + 1, n["t_end"], d["amplitude"])
    else:
        raise ConfigError("data.forcing", "demo-unique takes zero or standard forcing")
    data = None if d["initial"] == "standard" else (lambda N: ShellState.zeros(N))
    res = uniqueness_demo(model, data, forcing, dts=n["dts"], Ns=n["Ns"], t_end=n["t_end"])
    key = (max(n["Ns"]), min(n["dts"]))
    tr = res.runs[key]
    out.write("trajectory.csv", trajectory_csv(tr.times, tr.a, tr.b))
    return {"command": "demo-unique", **res.to_dict()}


HEADLINE = {
    "simulate": "budget_relative",
    "construct": "rho",
    "verify": "separation",
    "demo-nonunique": "separation",
    "demo-unique": "divergence",
}


def _passed(report: dict) -> bool:
    return all(bool(v) for v in report.get("pass", {}).values())


def execute(cfg: dict, out_dir: Path, workers: int = 1, seed: int | None = None) -> int:
    """Run one resolved config; returns the exit code."""
    cmd = cfg["run"]["command"]
    out = Outputs(Path(out_dir), cfg["io"]["formats"])
    if cmd == "sweep":
        return run_sweep(cfg, out, workers, seed)
    try:
        if cmd == "simulate":
            report = cmd_simulate(cfg, out)
        elif cmd == "construct":
            report = cmd_construct(cfg, out)
        elif cmd == "verify":
            report = cmd_verify(cfg, out, workers)
        elif cmd == "demo-nonunique":
            report = cmd_demo_nonunique(cfg, out, workers)
        else:
            report = cmd_demo_unique(cfg, out)
    except (BlowUpError, ConstructionError, FloatingPointError) as e:
        diag = {"command": cmd, "error": type(e).__name__, "message": str(e)}
        for attr in ("time", "shell", "best_radius", "best_PQ"):
            if hasattr(e, attr):
                diag[attr] = getattr(e, attr)
        out.write("diagnostic.json", dumps(diag).encode())
        _write_manifest(cfg, out, seed)
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    out.write("report.json", dumps(report).encode())
    _write_manifest(cfg, out, seed)
    return EXIT_OK if _passed(report) else EXIT_VERIFY


def _write_manifest(cfg, out: Outputs, seed):
    text = resolved_text(cfg)
    from importlib.metadata import PackageNotFoundError, version

    try:
        ver = version("artifact")
    except PackageNotFoundError:
        ver = "unknown"
    manifest = {
        "config": cfg,
        "input_sha256": _sha256(text.encode()),
        "seed": seed,
        "backend": kernels.BACKEND,
        "version": ver,
        "outputs": dict(sorted(out.files.items())),
    }
    out.write("manifest.json", dumps(manifest).encode())


# ----------------------------------------------------------------------------
# sweep


def admissible(cfg: dict) -> tuple:
    """(ok, reason) for the parameter window a construction requires."""
    m = cfg["model"]
    v = m["variant"]
    if v == Variant.MHD_FRACTIONAL.value:
        a, b = m["alpha"], m["beta"]
        if a is None or b is None or not (0 < a <= b < 0.5 and 3 * b - a < 1):
            return False, "needs 0 < alpha <= beta < 1/2 and 3 beta - alpha < 1"
    if v == Variant.NSE_FRACTIONAL.value:
        a = m["alpha"]
        if a is None or not (0 < a < 0.5):
            return False, "needs 0 < alpha < 1/2"
    return True, ""


def _point_config(cfg, overrides):
    pc = {sec: dict(keys) for sec, keys in cfg.items()}
    pc["run"]["command"] = cfg["sweep"]["command"]
    for key, value in overrides:
        sec, _, name = key.partition(".")
        pc[sec][name] = SCHEMA[sec][name].parse(_fmt_value(value))
    return pc


def _run_point(args):
    pc, path, seed = args
    try:
        _validate(pc)
        code = execute(pc, path, 1, seed)
    except ConfigError as e:
        return "config-error", EXIT_CONFIG, math.nan, str(e)
    except Exception as e:  # recorded in the summary, the sweep goes on
        return "error", None, math.nan, f"{type(e).__name__}: {e}"
    value = math.nan
    rep = Path(path) / "report.json"
    if rep.exists():
        data = json.loads(rep.read_text())
        value = float(data.get(HEADLINE[pc["run"]["command"]], math.nan))
    status = {EXIT_OK: "ok", EXIT_VERIFY: "verification-failed", EXIT_NUMERIC: "numeric-failure"}.get(code, "error")
    return status, code, value, ""


def run_sweep(cfg, out: Outputs, workers=1, seed=None) -> int:
    sw = cfg["sweep"]
    xs = list(sw["x_values"])
    ys = list(sw["y_values"]) if sw["y_key"] else [None]
    if sw["y_key"] and not ys:
        xs = []
    points = []
    for (i, x), (j, y) in itertools.product(enumerate(xs), enumerate(ys)):
        over = [(sw["x_key"], x)]
        if y is not None:
            over.append((sw["y_key"], y))
        pc = _point_config(cfg, over)
        points.append((i, j, x, y, pc))
    results = {}
    todo = []
    for i, j, x, y, pc in points:
        ok, why = admissible(pc)
        if not ok:
            results[(i, j)] = ("skipped", None, math.nan, why)
        else:
            todo.append(((i, j), (pc, str(out.root / f"point_{i}_{j}"), seed)))
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for (key, _), res in zip(todo, pool.map(_run_point, [a for _, a in todo])):
                results[key] = res
    else:
        for key, a in todo:
            results[key] = _run_point(a)
    metric = HEADLINE[sw["command"]]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "x", "y", "status", "exit_code", metric, "note"])
    for i, j, x, y, _ in points:
        status, code, value, note = results[(i, j)]
        w.writerow([i, j, format(x, ".17g"), "" if y is None else format(y, ".17g"), status, "" if code is None else code, format(value, ".17g"), note])
    out.write("summary.csv", buf.getvalue().encode())
    _write_manifest(cfg, out, seed)
    failed = [r for r in results.values() if r[0] not in ("ok", "skipped")]
    return EXIT_OK if not failed else EXIT_VERIFY


# ----------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dyad", description="Dyadic shell models: simulate, construct, verify, demonstrate, sweep")
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--out", default=None, help="output directory (default: $DYAD_OUT or ./dyad_out)")
    ap.add_argument("--workers", type=int, default=1, help="concurrent checks or sweep points")
    ap.add_argument("--seed", type=int, default=None, help="recorded in the manifest; constructions are deterministic")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out or os.environ.get("DYAD_OUT") or "dyad_out")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as e:
        print(f"config error: config: cannot read {args.config}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.workers < 1:
        print("config error: workers: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config_text(text)
        return execute(cfg, out, args.workers, args.seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
