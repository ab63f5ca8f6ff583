"""Covariance-matrix dynamics, steady states and physicality checks."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from .model import Statistics
from .structure import (
    StructureSet,
    build_generator_K,
    dense_cap,
    generator_operator,
    generator_trace,
    symplectic_form,
)

log = logging.getLogger(__name__)

COND_LIMIT = 1e12
PHYSICAL_TOL = 1e-9


class SingularGeneratorError(np.linalg.LinAlgError):
    """K is (numerically) singular; the closed-form trajectory does not apply."""


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (reached t={t_reached:.6g})")
        self.t_reached = t_reached


def symmetrize(gamma: np.ndarray, statistics: Statistics, label: str = "") -> np.ndarray:
    """Project onto the (anti)symmetric class, logging the discarded residue."""
    gamma = np.asarray(gamma)
    if np.iscomplexobj(gamma):
        imag = np.abs(gamma.imag).max(initial=0.0)
        if imag > 1e-12:
            log.debug("discarding imaginary residue %.3e %s", imag, label)
        gamma = gamma.real
    if statistics is Statistics.FERMION:
        out = (gamma - gamma.T) / 2
    else:
        out = (gamma + gamma.T) / 2
    residue = np.abs(gamma - out).max(initial=0.0)
    if residue > 1e-12:
        log.debug("symmetry residue %.3e discarded %s", residue, label)
    return out


@dataclass(frozen=True)
class CovarianceMatrix:
    """Real covariance matrix: antisymmetric for fermions, symmetric for bosons."""

    statistics: Statistics
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "statistics", Statistics.parse(self.statistics))
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2:
            raise ValueError(f"covariance matrix must be 2n x 2n, got shape {g.shape}")
        sign = -1.0 if self.statistics is Statistics.FERMION else 1.0
        dev = np.abs(g - sign * g.T).max(initial=0.0)
        if dev > 1e-8 * max(1.0, np.abs(g).max(initial=0.0)):
            kind = "antisymmetric" if sign < 0 else "symmetric"
            raise ValueError(f"covariance matrix is not {kind} (deviation {dev:.3e})")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def n_modes(self) -> int:
        return self.gamma.shape[0] // 2

    @classmethod
    def vacuum(cls, statistics: Statistics, n_modes: int) -> "CovarianceMatrix":
        statistics = Statistics.parse(statistics)
        if statistics is Statistics.FERMION:
            eye = np.eye(n_modes)
            zero = np.zeros((n_modes, n_modes))
            return cls(statistics, 0.5 * np.block([[zero, eye], [-eye, zero]]))
        return cls(statistics, 0.5 * np.eye(2 * n_modes))

    @classmethod
    def maximally_mixed(cls, n_modes: int) -> "CovarianceMatrix":
        return cls(Statistics.FERMION, np.zeros((2 * n_modes, 2 * n_modes)))


@dataclass(frozen=True)
class SteadyStateResult:
    gamma_ss: CovarianceMatrix
    residual: float
    unique: bool
    physical: bool
    kernel_dimension: int


@dataclass(frozen=True)
class PhysicalityCheck:
    physical: bool
    witness: float


def check_physical(gamma: CovarianceMatrix, tol: float = PHYSICAL_TOL) -> PhysicalityCheck:
    """Fermion: ``witness = 1/2 - ||Gamma||_2``. Boson: ``witness = min eig(Gamma + i Omega/2)``."""
    g = gamma.gamma
    if gamma.statistics is Statistics.FERMION:
        witness = 0.5 - (np.linalg.norm(g, 2) if g.size else 0.0)
    else:
        omega = symplectic_form(gamma.n_modes)
        witness = np.linalg.eigvalsh(g + 0.5j * omega).min()
    witness = float(witness)
    return PhysicalityCheck(witness >= -tol, witness)


def _vectorized_inhomogeneity(S: StructureSet, use_dense: bool, K=None) -> np.ndarray:
    """``K^{-1} vec Y`` for the closed-form trajectory."""
    y = S.Y.reshape(-1)
    if use_dense:
        return np.linalg.solve(K, y)
    if S.quasi_free:
        return sla.solve_continuous_lyapunov(S.X, S.Y).reshape(-1)
    from scipy.sparse.linalg import gmres

    sol, info = gmres(generator_operator(S), y, rtol=1e-13, atol=0.0, restart=200, maxiter=1000)
    if info != 0:
        raise SingularGeneratorError(f"iterative solve of K x = vec Y did not converge (info={info})")
    return sol


def evolve_closed_form(S: StructureSet, gamma0: CovarianceMatrix, t: float) -> CovarianceMatrix:
    """``vec G(t) = e^{Kt} (vec G0 + K^{-1} vec Y) - K^{-1} vec Y``.

    Dense scaling-and-squaring exponential up to the mode cap, Krylov-type
    ``expm_multiply`` above it. Raises :class:`SingularGeneratorError` when K
    is singular; use :func:`evolve_integrate` in that case.
    """
    if gamma0.statistics is not S.statistics or gamma0.n_modes != S.n_modes:
        raise ValueError("initial covariance does not match the structure set")
    if t == 0:
        return gamma0
    use_dense = S.n_modes <= dense_cap()
    g0 = gamma0.gamma.reshape(-1)
    if use_dense:
        K = build_generator_K(S)
        if np.linalg.cond(K) > COND_LIMIT:
            raise SingularGeneratorError("K is singular; use evolve_integrate")
        kinv_y = _vectorized_inhomogeneity(S, True, K)
        vt = sla.expm(K * t) @ (g0 + kinv_y) - kinv_y
    else:
        from scipy.sparse.linalg import expm_multiply

        kinv_y = _vectorized_inhomogeneity(S, False)
        op = generator_operator(S)
        vt = expm_multiply(op * t, g0 + kinv_y, traceA=generator_trace(S) * t) - kinv_y
    d = S.dim
    return CovarianceMatrix(S.statistics, symmetrize(vt.reshape(d, d), S.statistics, f"t={t}"))


def evolve_integrate(
    S: StructureSet,
    gamma0: CovarianceMatrix,
    t_grid: Sequence[float],
    rtol: float = 1e-10,
    atol: float = 1e-12,
    method: str = "RK45",
) -> list[CovarianceMatrix]:
    """Adaptive Runge-Kutta integration of the matrix ODE, sampled at ``t_grid``."""
    ts = np.asarray(t_grid, dtype=float)
    if ts.ndim != 1 or ts.size == 0:
        raise ValueError("t_grid must be a non-empty 1-d sequence")
    if ts[0] < 0 or np.any(np.diff(ts) <= 0):
        raise ValueError("t_grid must be strictly increasing and start at t >= 0")
    d = S.dim

    def rhs(_t, y):
        return S.rhs(y.reshape(d, d)).reshape(-1)

    y0 = gamma0.gamma.reshape(-1)
    if ts[-1] == 0:
        return [gamma0]
    sol = solve_ivp(rhs, (0.0, ts[-1]), y0, method=method, t_eval=ts, rtol=rtol, atol=atol)
    if sol.status != 0:
        reached = float(sol.t[-1]) if sol.t.size else 0.0
        raise IntegrationError(f"integration failed: {sol.message}", reached)
    return [
        CovarianceMatrix(S.statistics, symmetrize(sol.y[:, k].reshape(d, d), S.statistics))
        for k in range(ts.size)
    ]


def steady_residual(S: StructureSet, gamma: np.ndarray) -> float:
    return float(np.linalg.norm(S.rhs(gamma)))


def solve_steady(S: StructureSet, rank_tol: float = 1e-10) -> SteadyStateResult:
    """Solve ``K vec G = -vec Y``; minimum-norm least squares when K is singular."""
    K = build_generator_K(S)
    y = S.Y.reshape(-1)
    d = S.dim
    sv = np.linalg.svd(K, compute_uv=False)
    scale = max(sv[0], 1.0) if sv.size else 1.0
    kernel_dim = int(np.sum(sv <= rank_tol * scale))
    if kernel_dim == 0:
        sol = np.linalg.solve(K, -y)
    else:
        sol = np.linalg.lstsq(K, -y, rcond=rank_tol)[0]
    gamma = CovarianceMatrix(S.statistics, symmetrize(sol.reshape(d, d), S.statistics, "steady"))
    phys = check_physical(gamma)
    return SteadyStateResult(
        gamma_ss=gamma,
        residual=steady_residual(S, gamma.gamma),
        unique=kernel_dim == 0,
        physical=phys.physical,
        kernel_dimension=kernel_dim,
    )


def solve_lyapunov(S: StructureSet) -> CovarianceMatrix:
    """Bartels-Stewart fast path for quasi-free models: ``X0 G + G X0^T = -Y``."""
    if not S.quasi_free:
        raise ValueError("the Lyapunov fast path only applies to quasi-free models")
    g = sla.solve_continuous_lyapunov(S.X0, -S.Y)
    return CovarianceMatrix(S.statistics, symmetrize(g, S.statistics, "lyapunov"))
