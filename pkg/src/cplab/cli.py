"""Command-line front end.

    cplab simulate --config run.json
    cplab verify   --config run.json
    cplab stokes   --input stokes.json

Exit codes: 0 success, 1 usage or configuration error, 2 numerical
failure, 3 a verification check failed. Errors are printed to stderr as
``{"error": <code>, "message": <text>}``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import canonical, flows, monodromy, reduction
from . import serialize as ser
from .errors import CplabError, InvalidInput, NumericalError, SingularQ
from .suite import CHECKS, Setup, orbit_state
from .systems import DEFAULT_WINDOWS, PARAM_NAMES, ParamSet, SystemId

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3
TOL_RANGE = (1e-13, 1e-3)
CONFIG_KEYS = {"system", "n", "g", "params", "t_start", "t_end", "tol", "seed", "outputs", "checks", "initial"}
OUTPUT_KEYS = {"matrix", "particles", "eigen_csv", "report", "mapped_csv"}
DEFAULT_SAMPLES = 21


class ConfigError(InvalidInput):
    pass


@dataclass
class RunConfig:
    system: SystemId
    n: int
    g: complex
    params: ParamSet
    t_start: complex
    t_end: complex
    tol: float
    seed: int
    outputs: dict[str, str] = field(default_factory=dict)
    checks: list[tuple[str, float]] = field(default_factory=list)
    x0: np.ndarray | None = None
    y0: np.ndarray | None = None

    def setup(self) -> Setup:
        return Setup(self.system, self.params, self.n, self.g, self.t_start, self.t_end,
                     self.tol, self.seed, self.x0, self.y0)


def _int(v, name, lo=None):
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"{name} must be an integer")
    if lo is not None and v < lo:
        raise ConfigError(f"{name} must be >= {lo}")
    return v


def parse_config(doc) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "system" not in doc:
        raise ConfigError("config needs 'system'")
    system = SystemId.parse(doc["system"])
    n = _int(doc.get("n", 2), "n", 1)
    g = ser.from_cpair(doc.get("g", 0.3), "g")
    raw_params = doc.get("params", {})
    if not isinstance(raw_params, dict):
        raise ConfigError("params must be an object")
    params = ParamSet(system, {k: ser.from_cpair(v, f"params.{k}") for k, v in raw_params.items()})
    w0, w1 = DEFAULT_WINDOWS[system]
    t_start = ser.from_cpair(doc.get("t_start", w0), "t_start")
    t_end = ser.from_cpair(doc.get("t_end", w1), "t_end")
    tol = doc.get("tol", 1e-10)
    if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not (TOL_RANGE[0] <= tol <= TOL_RANGE[1]):
        raise ConfigError(f"tol must be a number in [{TOL_RANGE[0]:g}, {TOL_RANGE[1]:g}]")
    seed = _int(doc.get("seed", 0), "seed", 0)

    outputs = doc.get("outputs", {})
    if not isinstance(outputs, dict) or set(outputs) - OUTPUT_KEYS:
        raise ConfigError(f"outputs must be an object with keys among {sorted(OUTPUT_KEYS)}")
    for k, v in outputs.items():
        if not isinstance(v, str):
            raise ConfigError(f"outputs.{k} must be a path string")

    checks = []
    for item in doc.get("checks", []):
        if isinstance(item, str):
            name, thr = item, None
        elif isinstance(item, dict) and set(item) <= {"name", "threshold"} and "name" in item:
            name, thr = item["name"], item.get("threshold")
        else:
            raise ConfigError(f"bad check entry {item!r}")
        if name not in CHECKS:
            raise ConfigError(f"unknown check {name!r}; available: {sorted(CHECKS)}")
        if thr is None:
            thr = CHECKS[name][1]
        if isinstance(thr, bool) or not isinstance(thr, (int, float)) or not math.isfinite(thr) or thr < 0:
            raise ConfigError(f"threshold for {name} must be a nonnegative number")
        checks.append((name, float(thr)))

    x0 = y0 = None
    if "initial" in doc:
        init = doc["initial"]
        if not isinstance(init, dict) or set(init) != {"x", "y"}:
            raise ConfigError("initial must be an object with keys 'x' and 'y'")
        x0 = np.array([ser.from_cpair(v, "initial.x") for v in init["x"]])
        y0 = np.array([ser.from_cpair(v, "initial.y") for v in init["y"]])
        if x0.size != n or y0.size != n:
            raise ConfigError(f"initial.x and initial.y need {n} entries")
    return RunConfig(system, n, g, params, t_start, t_end, float(tol), seed, outputs, checks, x0, y0)


def load_json(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None


def _mapped_csv(cfg: RunConfig, pr, path: str) -> None:
    mapped = canonical.map_trajectory(cfg.system, cfg.params, pr)
    header = ser.complex_columns("T")
    for j in range(cfg.n):
        header += ser.complex_columns(f"q{j + 1}") + ser.complex_columns(f"p{j + 1}")
    rows = []
    for m in mapped:
        row = [m.T.real, m.T.imag]
        for qj, pj in zip(m.q, m.p):
            row += [qj.real, qj.imag, pj.real, pj.imag]
        rows.append(row)
    ser.write_csv(path, header, rows)


def cmd_simulate(cfg: RunConfig) -> int:
    setup = cfg.setup()
    ps = setup.particles()
    out = cfg.outputs
    summary = {"system": cfg.system.value, "n": cfg.n}
    if "matrix" in out or "eigen_csv" in out or not out:
        st = orbit_state(ps, setup.rng(11)) if cfg.x0 is None else _embedded(ps)
        tr = flows.integrate_matrix_flow(cfg.system, cfg.params, st, cfg.t_end, tol=cfg.tol,
                                         n_samples=DEFAULT_SAMPLES, g=cfg.g)
        if "matrix" in out:
            flows.write_trajectory_json(tr, out["matrix"])
        if "eigen_csv" in out:
            flows.write_eigen_csv(tr, out["eigen_csv"])
        summary["commutator_drift"] = flows.commutator_drift(tr)
    if "particles" in out or "mapped_csv" in out:
        pr = reduction.integrate_particle_flow(cfg.system, cfg.params, ps, cfg.t_end, tol=cfg.tol,
                                               n_samples=DEFAULT_SAMPLES)
        if "particles" in out:
            doc = {
                "system": cfg.system.value,
                "params": {k: ser.cpair(v) for k, v in cfg.params.values.items()},
                "n": cfg.n,
                "g": ser.cpair(cfg.g),
                "tol": cfg.tol,
                "samples": [s.to_json() for s in pr],
            }
            ser.dump_json(doc, out["particles"])
        if "mapped_csv" in out:
            _mapped_csv(cfg, pr, out["mapped_csv"])
    if "report" in out:
        ser.dump_json(summary, out["report"])
    sys.stdout.write(ser.dump_json(summary))
    return EXIT_OK


def _embedded(ps):
    # user-supplied initial data is embedded without a gauge scramble
    from .systems import MatrixState

    X, Y = reduction.orbit_embed(ps)
    return MatrixState(X, Y, ps.t)


def _threads() -> int:
    raw = os.environ.get("CPLAB_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return max(1, min(4, os.cpu_count() or 1))


def cmd_verify(cfg: RunConfig) -> int:
    checks = cfg.checks or [(name, thr) for name, (_, thr) in CHECKS.items()]
    setup = cfg.setup()
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        futures = {name: pool.submit(CHECKS[name][0], setup) for name, _ in checks}
        values = {name: fut.result() for name, fut in futures.items()}
    report = {}
    for name, thr in sorted(checks):
        v = float(values[name])
        report[name] = {"value": v, "threshold": thr, "pass": bool(v < thr)}
    text = ser.dump_json(report)
    if "report" in cfg.outputs:
        Path(cfg.outputs["report"]).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK if all(r["pass"] for r in report.values()) else EXIT_CHECK


def cmd_stokes(path: str) -> int:
    doc = load_json(path)
    try:
        sd = monodromy.StokesData.from_json(doc)
    except SingularQ as exc:
        # a singular Q is bad input here, not a numerical failure
        raise ConfigError(str(exc)) from exc
    sys.stdout.write(ser.dump_json(monodromy.stokes_report(sd)))
    return EXIT_OK


def _error(code: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": code, "message": message}) + "\n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cplab", description="Matrix Painleve systems and their particle reductions.")
    sub = ap.add_subparsers(dest="command", required=True)
    p_sim = sub.add_parser("simulate", help="integrate matrix and particle flows")
    p_sim.add_argument("--config", required=True)
    p_ver = sub.add_parser("verify", help="run numerical checks and print a report")
    p_ver.add_argument("--config", required=True)
    p_sto = sub.add_parser("stokes", help="evaluate the Stokes relations for given data")
    p_sto.add_argument("--input", required=True)
    ap.epilog = "systems: " + ", ".join(f"{s.value}({', '.join(PARAM_NAMES[s]) or '-'})" for s in SystemId)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "stokes":
            return cmd_stokes(args.input)
        cfg = parse_config(load_json(args.config))
        if args.command == "simulate":
            return cmd_simulate(cfg)
        return cmd_verify(cfg)
    except InvalidInput as exc:
        code = exc.code if isinstance(exc, CplabError) and not isinstance(exc, ConfigError) else "ConfigError"
        if isinstance(exc, ConfigError) and isinstance(exc.__cause__, SingularQ):
            code = "SingularQ"
        _error(code, str(exc))
        return EXIT_CONFIG
    except NumericalError as exc:
        _error(exc.code, str(exc))
        return EXIT_NUMERIC
    except OSError as exc:
        _error("IOError", str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
