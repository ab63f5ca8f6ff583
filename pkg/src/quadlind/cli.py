"""Command-line front end.

Exit codes: 0 success, 1 validation or usage error, 2 numeric failure.
JSON floats are written with 17 significant digits; key order is fixed.
"""

from __future__ import annotations

import argparse
import io
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import oracle as orc
from .acceptance import run_all
from .algebra import MomentState, evolve_moments, hierarchy_generator
from .covdyn import (
    CovarianceMatrix,
    IntegrationError,
    check_physical,
    evolve_closed_form,
    evolve_integrate,
    solve_steady,
)
from .model import PRESETS, ModelError, ModelSpec, Statistics, parse_model
from .spectrum import classify, many_body_spectrum, multiset_distance, spectrum_X0
from .structure import build_generator_K, build_structure, dense_cap

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    model_path: str | None
    output: str | None
    dense_cap: int
    dim_cap: int
    n_max: int | None
    cutoff: int | None
    seed: int = 0

    def __post_init__(self):
        for name in ("dense_cap", "dim_cap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("n_max", "cutoff"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")


# -- output ------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if not np.isfinite(x):
        return "null"
    return format(float(x), ".17g")


def to_json(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats and ``{re, im}`` complexes."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return to_json({"re": obj.real, "im": obj.imag}, indent, _level)
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}{to_json(str(k))}: {to_json(v, indent, _level + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(text: str, path: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _csv(rows: Sequence[Sequence[float]], header: Sequence[str] | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt_float(v) for v in row) + "\n")
    return buf.getvalue()


# -- inputs ------------------------------------------------------------------


def load_model(ref: str) -> ModelSpec:
    """Model from a JSON file path or ``preset:<name>``."""
    if ref.startswith("preset:"):
        name = ref.split(":", 1)[1]
        if name not in PRESETS:
            raise ModelError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        return PRESETS[name]()
    path = Path(ref)
    if not path.is_file():
        raise ModelError(f"model file not found: {ref}")
    return parse_model(path.read_text())


def _load_matrix(path: str) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise ModelError(f"covariance file not found: {path}")
    text = p.read_text().strip()
    if text.startswith("[") or text.startswith("{"):
        import json

        doc = json.loads(text)
        if isinstance(doc, dict):
            doc = doc.get("gamma", doc.get("gamma_ss"))
        return np.asarray(doc, dtype=float)
    return np.loadtxt(io.StringIO(text), delimiter=",", ndmin=2)


def initial_covariance(model: ModelSpec, spec: str) -> CovarianceMatrix:
    if spec == "vacuum":
        return CovarianceMatrix.vacuum(model.statistics, model.n_modes)
    if spec == "zero":
        return CovarianceMatrix(model.statistics, np.zeros((model.dim, model.dim)))
    g = _load_matrix(spec)
    if g.shape != (model.dim, model.dim):
        raise ModelError(f"initial covariance has shape {g.shape}, expected {(model.dim, model.dim)}")
    return CovarianceMatrix(model.statistics, g)


def parse_times(text: str) -> list[float]:
    try:
        ts = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ModelError(f"cannot parse times {text!r}") from None
    if not ts or any(t < 0 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
        raise ModelError("times must be non-negative and strictly increasing")
    return ts


# -- reports -----------------------------------------------------------------


def steady_report(model: ModelSpec) -> dict:
    ss = solve_steady(build_structure(model))
    phys = check_physical(ss.gamma_ss)
    return {
        "statistics": model.statistics.value,
        "n_modes": model.n_modes,
        "gamma_ss": ss.gamma_ss.gamma,
        "residual": ss.residual,
        "unique": ss.unique,
        "physical": ss.physical,
        "witness": phys.witness,
        "kernel_dimension": ss.kernel_dimension,
    }


def spectrum_report(model: ModelSpec, n_max: int | None) -> dict:
    S = build_structure(model)
    sp = spectrum_X0(S)
    if model.is_fermion:
        mb = many_body_spectrum(sp, model.statistics, N_max=n_max if 2 * model.n_modes > 20 else None)
    else:
        mb = many_body_spectrum(sp, model.statistics, N_max=n_max if n_max is not None else 2)
    steady = solve_steady(S) if model.n_modes <= dense_cap() else None
    rep = classify(sp, steady, quasi_free=model.quasi_free)
    return {
        "xi": list(sp.xi),
        "lambda": [
            {"re": e.value.real, "im": e.value.imag, "occupation": list(e.occupation), "parity": e.parity}
            for e in mb.eigenvalues
        ],
        "truncation": mb.truncation,
        "gap": rep.gap,
        "covariance_gap": rep.covariance_gap,
        "stable": rep.stable,
        "relaxing": rep.relaxing,
        "steady_exists": rep.steady_exists,
        "defective": sp.defective,
        "quasi_free": model.quasi_free,
    }


def _moment_entry(t: float, m: MomentState) -> dict:
    out: dict[str, Any] = {"t": t, "tensors": {}}
    degrees = sorted({len(b) for b in m.basis})
    for k in degrees:
        out["tensors"][str(k)] = {
            "monomials": [list(b) for b in m.basis if len(b) == k],
            "values": [complex(v) for v in m.tensor(k)],
        }
    out["wick_deviation"] = m.wick_deviation(4) if m.k_max >= 4 else None
    return out


def oracle_compare(model: ModelSpec, cutoff: int | None, dim_cap: int, times: Sequence[float]) -> dict:
    """Cross-module equivalence checks on one model; returns a pass/fail report."""
    tol = 1e-8 if model.is_fermion else 1e-6
    L = orc.build_dense(model, cutoff=cutoff, dim_cap=dim_cap)
    S = build_structure(model)
    checks = []

    def add(name, dev, limit=tol):
        checks.append({"name": name, "max_deviation": float(dev), "tolerance": limit, "passed": bool(dev <= limit)})

    rho0 = np.zeros((L.D, L.D), dtype=complex)
    rho0[0, 0] = 1.0
    g0 = orc.covariance_from_rho(L.rep, rho0)
    dev = 0.0
    for t in times:
        ours = evolve_closed_form(S, g0, t).gamma
        ref = orc.covariance_from_rho(L.rep, orc.dense_evolve(L, rho0, t)).gamma
        dev = max(dev, np.abs(ours - ref).max())
    add("trajectory", dev)

    ss = solve_steady(S)
    if ss.unique and ss.physical:
        ref = orc.covariance_from_rho(L.rep, orc.dense_steady(L)).gamma
        add("steady_state", np.abs(ss.gamma_ss.gamma - ref).max())

    if model.quasi_free and model.is_fermion:
        mb = many_body_spectrum(spectrum_X0(S), model.statistics)
        dev = max(multiset_distance(mb.sector(s), orc.dense_spectrum(L, s)) for s in ("even", "odd"))
        add("spectrum", dev, 1e-7)
    return {
        "statistics": model.statistics.value,
        "n_modes": model.n_modes,
        "cutoff": L.rep.cutoff,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
    }


# -- subcommands -------------------------------------------------------------


def cmd_structure(args) -> int:
    model = load_model(args.model)
    S = build_structure(model)
    report = {
        "statistics": model.statistics.value,
        "n_modes": model.n_modes,
        "X": S.X,
        "Y": S.Y,
        "Z": [z for z in S.Z],
        "X0": S.X0,
    }
    _emit(to_json(report), args.out)
    if args.emit_K:
        K = build_generator_K(S)
        _emit(_csv(K), args.emit_K)
    return EXIT_OK


def cmd_evolve(args) -> int:
    model = load_model(args.model)
    S = build_structure(model)
    g0 = initial_covariance(model, args.gamma0)
    ts = parse_times(args.times)
    if args.method == "closed":
        traj = [evolve_closed_form(S, g0, t) for t in ts]
    else:
        traj = evolve_integrate(S, g0, ts)
    d = model.dim
    header = ["t"] + [f"g{i}_{j}" for i in range(d) for j in range(d)]
    rows = [[t, *g.gamma.reshape(-1)] for t, g in zip(ts, traj)]
    _emit(_csv(rows, header), args.out)
    return EXIT_OK


def cmd_steady(args) -> int:
    _emit(to_json(steady_report(load_model(args.model))), args.out)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    _emit(to_json(spectrum_report(load_model(args.model), args.nmax)), args.out)
    return EXIT_OK


def cmd_moments(args) -> int:
    model = load_model(args.model)
    if args.init == "gaussian-from-steady":
        ss = solve_steady(build_structure(model))
        if not ss.physical:
            raise ModelError("steady covariance is not physical; use --init gaussian-from-file")
        gamma = ss.gamma_ss
    else:
        if not args.gamma_file:
            raise ModelError("--init gaussian-from-file requires --gamma-file")
        gamma = initial_covariance(model, args.gamma_file)
    ts = parse_times(args.t)
    gen = hierarchy_generator(model, args.kmax)
    m0 = MomentState.gaussian(gamma, args.kmax)
    states = evolve_moments(gen, m0, ts)
    report = {
        "statistics": model.statistics.value,
        "n_modes": model.n_modes,
        "k_max": args.kmax,
        "times": [_moment_entry(t, m) for t, m in zip(ts, states)],
    }
    _emit(to_json(report), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    model = load_model(args.model)
    if args.what == "compare":
        report = oracle_compare(model, args.cutoff, args.dim_cap, parse_times(args.times))
        _emit(to_json(report), args.out)
        return EXIT_OK if report["passed"] else EXIT_NUMERIC
    L = orc.build_dense(model, cutoff=args.cutoff, dim_cap=args.dim_cap)
    if args.what == "spectrum":
        report = {"cutoff": L.rep.cutoff, "eigenvalues": list(orc.dense_spectrum(L))}
    elif args.what == "steady":
        rho = orc.dense_steady(L)
        report = {
            "cutoff": L.rep.cutoff,
            "kernel_dimension": orc.kernel_dimension(L),
            "gamma_ss": orc.covariance_from_rho(L.rep, rho).gamma,
            "top_level_population": orc.top_level_population(L.rep, rho),
        }
        if not model.is_fermion:
            try:
                chk = orc.cutoff_convergence(model, L.rep.cutoff, dim_cap=args.dim_cap)
                report["cutoff_change"] = chk.change
                report["conclusive"] = chk.conclusive
            except orc.OracleTooLarge:
                report["cutoff_change"] = None
                report["conclusive"] = False
    else:
        rho0 = np.zeros((L.D, L.D), dtype=complex)
        rho0[0, 0] = 1.0
        ts = parse_times(args.times)
        report = {
            "cutoff": L.rep.cutoff,
            "trajectory": [
                {"t": t, "gamma": orc.covariance_from_rho(L.rep, rho).gamma}
                for t, rho in zip(ts, orc.dense_trajectory(L, rho0, ts))
            ],
        }
    _emit(to_json(report), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    lines = []
    results = run_all(seed=args.seed, echo=lambda s: (print(s, flush=True), lines.append(s)))
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    if args.out:
        _emit(to_json([
            {"criterion": r.number, "name": r.name, "passed": r.passed, "max_deviation": r.max_deviation,
             "tolerance": r.tolerance, "runtime": r.runtime, "detail": r.detail}
            for r in results
        ]), args.out)
    return EXIT_OK if n_pass == len(results) else EXIT_NUMERIC


# -- parser ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quadlind", description="Quasi-free and quadratic Lindblad solver.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, model=True):
        if model:
            sp.add_argument("--model", required=True, help="model JSON path or preset:<name>")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        return sp

    s = common(sub.add_parser("structure", help="structure matrices X, Y, Z_s, X0"))
    s.add_argument("--emit-K", dest="emit_K", metavar="PATH", help="write dense K as CSV")
    s.set_defaults(func=cmd_structure)

    s = common(sub.add_parser("evolve", help="covariance trajectory as CSV"))
    s.add_argument("--gamma0", default="vacuum", help='covariance file, "vacuum" or "zero"')
    s.add_argument("--times", required=True, help="comma-separated increasing times")
    s.add_argument("--method", choices=("closed", "rk"), default="closed")
    s.set_defaults(func=cmd_evolve)

    s = common(sub.add_parser("steady", help="steady-state covariance"))
    s.set_defaults(func=cmd_steady)

    s = common(sub.add_parser("spectrum", help="single-particle and many-body spectrum"))
    s.add_argument("--nmax", type=int, default=None, help="occupation truncation (bosons, large fermions)")
    s.set_defaults(func=cmd_spectrum)

    s = common(sub.add_parser("moments", help="moment hierarchy evolution"))
    s.add_argument("--kmax", type=int, default=4)
    s.add_argument("--t", default="0,1", help="comma-separated increasing times")
    s.add_argument("--init", choices=("gaussian-from-steady", "gaussian-from-file"),
                   default="gaussian-from-steady")
    s.add_argument("--gamma-file", default=None, help="covariance file for gaussian-from-file")
    s.set_defaults(func=cmd_moments)

    s = common(sub.add_parser("oracle", help="dense brute-force Liouvillian"))
    s.add_argument("--cutoff", type=int, default=None, help="boson Fock cutoff per mode")
    s.add_argument("--what", choices=("spectrum", "steady", "trajectory", "compare"), default="compare")
    s.add_argument("--times", default="0.1,1,10")
    s.add_argument("--dim-cap", type=int, default=orc.DEFAULT_DIM_CAP)
    s.set_defaults(func=cmd_oracle)

    s = common(sub.add_parser("check", help="run the acceptance suite"), model=False)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_check)
    return p


def _qualified(exc: BaseException) -> str:
    return f"{type(exc).__module__}.{type(exc).__name__}: {exc}"


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        RunConfig(
            subcommand=args.command,
            model_path=getattr(args, "model", None),
            output=args.out,
            dense_cap=dense_cap(),
            dim_cap=getattr(args, "dim_cap", orc.DEFAULT_DIM_CAP),
            n_max=getattr(args, "nmax", None),
            cutoff=getattr(args, "cutoff", None),
            seed=getattr(args, "seed", 0),
        )
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    except (np.linalg.LinAlgError, IntegrationError, MemoryError, ArithmeticError, RuntimeError) as exc:
        # LinAlgError subclasses ValueError, so numeric failures are matched first
        print(_qualified(exc), file=sys.stderr)
        return EXIT_NUMERIC
    except (ModelError, ValueError, OSError) as exc:
        print(_qualified(exc), file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
