"""Acceptance suite: end-to-end checks of every module against closed forms and the dense oracle.

Each ``criterion_*`` function returns a :class:`CriterionResult`; :func:`run_all`
runs them in order. The suite is deterministic for a given seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import oracle as orc
from .algebra import (
    ClosureViolation,
    MajoranaPolynomial,
    MomentState,
    adjoint_apply,
    evolve_moments,
    hierarchy_generator,
)
from .covdyn import CovarianceMatrix, check_physical, evolve_closed_form, solve_steady
from .model import ModelSpec, Statistics, boson_damped, boson_pumped
from .random_models import random_fermion_model, random_model, random_relaxing_model
from .spectrum import classify, many_body_spectrum, multiset_distance, pairwise_sums, spectrum_X0
from .structure import build_generator_K, build_structure


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    runtime: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.number}. {self.name}: max dev {self.max_deviation:.3e} "
                f"(tol {self.tolerance:.0e}), {self.runtime:.2f}s {self.detail}").rstrip()


def _timed(number: int, name: str, tol: float, body: Callable[[], tuple]) -> CriterionResult:
    t0 = time.perf_counter()
    passed, dev, detail = body()
    return CriterionResult(number, name, bool(passed), float(dev), tol, time.perf_counter() - t0, detail)


def _vacuum_rho(rep: orc.FockRep) -> np.ndarray:
    rho = np.zeros((rep.dim, rep.dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def ladder_a(statistics, n_modes: int, mode: int = 0) -> MajoranaPolynomial:
    """``a_j = (w_{j+} - i w_{j-}) / sqrt(2)`` as a Majorana polynomial."""
    coeffs = np.zeros(2 * n_modes, dtype=complex)
    coeffs[mode] = 1 / np.sqrt(2)
    coeffs[mode + n_modes] = -1j / np.sqrt(2)
    return MajoranaPolynomial.linear(statistics, n_modes, coeffs)


# -- 1 -----------------------------------------------------------------------


def criterion_1() -> CriterionResult:
    tol = 1e-12

    def body():
        t0 = time.perf_counter()
        model = boson_pumped()
        S = build_structure(model)
        ss = solve_steady(S)
        K = build_generator_K(S)
        kev = np.linalg.eigvals(K)
        report = classify(spectrum_X0(S), ss)
        elapsed = time.perf_counter() - t0
        devs = [
            np.abs(S.X0 - 0.5 * np.eye(2)).max(),
            np.abs(ss.gamma_ss.gamma + 0.5 * np.eye(2)).max(),
            np.abs(kev - 1.0).max(),
        ]
        witness = check_physical(ss.gamma_ss).witness
        ok = (max(devs) <= tol and not ss.physical and abs(witness + 1.0) <= tol
              and not report.stable and not report.steady_exists and elapsed < 1.0)
        return ok, max(devs), f"witness={witness:.3g} solve={elapsed * 1e3:.1f}ms"

    return _timed(1, "unstable boson exact values", tol, body)


# -- 2 -----------------------------------------------------------------------


def criterion_2(cutoff: int = 30) -> CriterionResult:
    tol_sym, tol_dense = 1e-14, 1e-8

    def body():
        model = boson_pumped()
        a = ladder_a(Statistics.BOSON, 1)
        image = adjoint_apply(model, a, prune=0.0)
        sym_dev = max(abs(image.coefficient(m) - 0.5 * a.coefficient(m)) for m in [(0,), (1,)])
        sym_dev = max(sym_dev, max((abs(c) for m, c in image.items() if len(m) != 1), default=0.0))
        L = orc.build_dense(model, cutoff=cutoff)
        a_op = L.rep.a[0]
        lhs = L.adjoint(a_op)
        low = cutoff - 2
        dense_dev = np.abs(lhs[:low, :low] - 0.5 * a_op[:low, :low]).max()
        ok = sym_dev <= tol_sym and dense_dev <= tol_dense
        return ok, max(sym_dev, dense_dev), f"symbolic={sym_dev:.1e} dense={dense_dev:.1e}"

    return _timed(2, "adjoint eigen-relation L^dag(a) = a/2", tol_dense, body)


# -- 3 -----------------------------------------------------------------------


def criterion_3(seed: int = 0, trials: int = 50) -> CriterionResult:
    tol = 1e-7

    def body():
        rng = np.random.default_rng(seed)
        worst, ok = 0.0, True
        for k in range(trials):
            n = 1 + k % 2
            model = random_fermion_model(rng, n)
            mb = many_body_spectrum(spectrum_X0(build_structure(model)), Statistics.FERMION)
            L = orc.build_dense(model)
            for sector in ("even", "odd"):
                dense = orc.dense_spectrum(L, sector)
                ours = mb.sector(sector)
                if ours.size != dense.size or ours.size != 4**n // 2:
                    ok = False
                    continue
                worst = max(worst, multiset_distance(ours, dense))
        return ok and worst <= tol, worst, f"{trials} models"

    return _timed(3, "many-body spectrum vs dense Liouvillian", tol, body)


# -- 4 -----------------------------------------------------------------------


def criterion_4(seed: int = 1, trials: int = 50, times=(0.1, 1.0, 10.0)) -> CriterionResult:
    tol, tol_res = 1e-8, 1e-10

    def body():
        rng = np.random.default_rng(seed)
        worst_traj = worst_ss = worst_res = 0.0
        for _ in range(trials):
            model = random_fermion_model(rng, 2, n_quadratic=1)
            S = build_structure(model)
            L = orc.build_dense(model)
            rho0 = _vacuum_rho(L.rep)
            g0 = orc.covariance_from_rho(L.rep, rho0)
            for t in times:
                ours = evolve_closed_form(S, g0, t).gamma
                ref = orc.covariance_from_rho(L.rep, orc.dense_evolve(L, rho0, t)).gamma
                worst_traj = max(worst_traj, np.abs(ours - ref).max())
            ss = solve_steady(S)
            worst_res = max(worst_res, ss.residual)
            ref_ss = orc.covariance_from_rho(L.rep, orc.dense_steady(L)).gamma
            worst_ss = max(worst_ss, np.abs(ss.gamma_ss.gamma - ref_ss).max())
        ok = worst_traj <= tol and worst_ss <= tol and worst_res <= tol_res
        detail = f"traj={worst_traj:.1e} steady={worst_ss:.1e} residual={worst_res:.1e}"
        return ok, max(worst_traj, worst_ss), detail

    return _timed(4, "covariance dynamics vs dense oracle", tol, body)


# -- 5 -----------------------------------------------------------------------


def criterion_5(seed: int = 2, trials: int = 20) -> CriterionResult:
    tol = 1e-8

    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for k in range(trials):
            stats = Statistics.FERMION if k % 2 == 0 else Statistics.BOSON
            n = 1 + (k // 2) % 3
            model = random_relaxing_model(rng, stats, n)
            S = build_structure(model)
            sp = spectrum_X0(S)
            kev = np.linalg.eigvals(build_generator_K(S))
            worst = max(worst, multiset_distance(kev, pairwise_sums(sp)))
            report = classify(sp, quasi_free=True)
            cov_decay = -kev.real.max()
            worst = max(worst, abs(cov_decay - report.covariance_gap), abs(report.covariance_gap - 2 * report.gap))
        return worst <= tol, worst, f"{trials} models"

    return _timed(5, "K spectrum = pairwise sums, covariance gap = 2 gap", tol, body)


# -- 6 -----------------------------------------------------------------------


def criterion_6(seed: int = 3, closure_trials: int = 200, quad_trials: int = 3,
                k_max: int = 4, t: float = 1.0) -> CriterionResult:
    tol, wick_min = 1e-8, 1e-3

    def body():
        rng = np.random.default_rng(seed)
        violations = 0
        for k in range(closure_trials):
            stats = Statistics.FERMION if k % 2 == 0 else Statistics.BOSON
            n = 1 + (k // 2) % 2
            model = random_model(rng, stats, n, n_linear=2, n_quadratic=1 + k % 2)
            try:
                hierarchy_generator(model, k_max)
            except ClosureViolation:
                violations += 1

        worst_corr, best_wick, worst_qf_wick = 0.0, 0.0, 0.0
        for j in range(quad_trials + 1):
            quasi_free = j == quad_trials
            model = random_fermion_model(rng, 2, n_quadratic=0 if quasi_free else 1)
            gen = hierarchy_generator(model, k_max)
            L = orc.build_dense(model)
            rho0 = _vacuum_rho(L.rep)
            m0 = MomentState.gaussian(orc.covariance_from_rho(L.rep, rho0), k_max)
            mt = evolve_moments(gen, m0, [0.0, t])[-1]
            rho_t = orc.dense_evolve(L, rho0, t)
            ref = np.array([orc.correlator(L.rep, rho_t, m) for m in mt.basis if len(m) == 4])
            worst_corr = max(worst_corr, np.abs(mt.tensor(4) - ref).max())
            dev = mt.wick_deviation(4)
            if quasi_free:
                worst_qf_wick = dev
            else:
                best_wick = max(best_wick, dev)
        ok = violations == 0 and worst_corr <= tol and best_wick > wick_min and worst_qf_wick < tol
        detail = (f"violations={violations} corr={worst_corr:.1e} "
                  f"wick(quadratic)={best_wick:.2e} wick(quasi-free)={worst_qf_wick:.1e}")
        return ok, max(worst_corr, worst_qf_wick), detail

    return _timed(6, "hierarchy closure and non-Gaussianity", tol, body)


# -- 7 -----------------------------------------------------------------------


def _gaussian_steadiness(model: ModelSpec, cutoff: int | None = None) -> float:
    S = build_structure(model)
    ss = solve_steady(S)
    L = orc.build_dense(model, cutoff=cutoff)
    rho = orc.gaussian_state(L.rep, ss.gamma_ss)
    return float(np.linalg.norm(L.apply(rho)) / np.linalg.norm(L.matrix))


def criterion_7(seed: int = 4, trials: int = 20, boson_cutoff: int = 20) -> CriterionResult:
    tol = 1e-8

    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for k in range(trials):
            model = random_relaxing_model(rng, Statistics.FERMION, 1 + k % 3)
            worst = max(worst, _gaussian_steadiness(model))
        worst = max(worst, _gaussian_steadiness(boson_damped(1.0), cutoff=boson_cutoff))
        return worst <= tol, worst, f"{trials} fermion models + damped boson"

    return _timed(7, "Gaussian steady states are stationary", tol, body)


# -- 8 -----------------------------------------------------------------------


def criterion_8(gamma: float = 1.0, cutoff: int = 20) -> CriterionResult:
    tol = 1e-6

    def body():
        model = boson_damped(gamma)
        S = build_structure(model)
        ss = solve_steady(S)
        sp = spectrum_X0(S)
        report = classify(sp, ss)
        head = many_body_spectrum(sp, Statistics.BOSON, N_max=2).values
        expected = np.array([0, -gamma / 2, -gamma / 2, -gamma, -gamma, -gamma], dtype=complex)
        dense = orc.dense_spectrum(orc.build_dense(model, cutoff=cutoff))[:6]
        devs = [
            np.abs(ss.gamma_ss.gamma - 0.5 * np.eye(2)).max(),
            abs(report.gap - gamma / 2),
            multiset_distance(head, expected),
            multiset_distance(head, dense),
        ]
        return max(devs) <= tol, max(devs), f"gap={report.gap:.6g}"

    return _timed(8, "damped boson closed-form anchors", tol, body)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4,
            criterion_5, criterion_6, criterion_7, criterion_8)


def run_all(seed: int = 0, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    """Run every criterion; seeds are offset from ``seed`` per criterion."""
    results = []
    for fn in CRITERIA:
        kwargs = {}
        if "seed" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
            kwargs["seed"] = seed + len(results)
        res = fn(**kwargs)
        results.append(res)
        if echo is not None:
            echo(res.line())
    return results
