"""Single-particle and many-body Liouvillian spectra, stability classification.

For quasi-free models the full Liouvillian spectrum is generated by the
eigenvalues ``xi_k`` of X0: ``lambda_n = sum_k xi_k n_k`` with ``n_k in {0, 1}``
(fermions) or ``n_k in N`` (bosons, truncated at total occupation ``N_max``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg as sla

from .covdyn import SteadyStateResult
from .model import Statistics
from .structure import StructureSet

DEFECT_COND_LIMIT = 1e8
STABILITY_TOL = 1e-9
ENUMERATION_CAP = 10**6
FULL_FERMION_LIMIT = 20


class EnumerationTooLarge(MemoryError):
    pass


def _sort_key(z: complex, ndigits: int = 12):
    return (-round(z.real, ndigits), round(z.imag, ndigits))


@dataclass(frozen=True)
class SingleParticleSpectrum:
    xi: tuple
    defective: bool
    defect_score: float
    statistics: Statistics | None = None

    @property
    def max_real(self) -> float:
        return max((z.real for z in self.xi), default=-np.inf)


def _schur_eigenvalues(T: np.ndarray) -> list[complex]:
    """Eigenvalues of a real quasi-upper-triangular Schur factor."""
    n = T.shape[0]
    out: list[complex] = []
    k = 0
    while k < n:
        if k + 1 < n and T[k + 1, k] != 0.0:
            a, b, c, d = T[k, k], T[k, k + 1], T[k + 1, k], T[k + 1, k + 1]
            mean = (a + d) / 2
            disc = np.sqrt(complex(((a - d) / 2) ** 2 + b * c))
            out.extend([mean + disc, mean - disc])
            k += 2
        else:
            out.append(complex(T[k, k]))
            k += 1
    return out


def _defect_score(A: np.ndarray, xi: Sequence[complex]) -> tuple[bool, float]:
    """Condition number of the eigenvector matrix, plus a clustering test."""
    if A.size == 0:
        return False, 1.0
    _, V = np.linalg.eig(A)
    cond = float(np.linalg.cond(V))
    defective = not np.isfinite(cond) or cond > DEFECT_COND_LIMIT
    if not defective:
        # repeated eigenvalues with rank-deficient (A - xi) => Jordan block
        scale = max(1.0, np.abs(A).max())
        vals = np.asarray(xi)
        seen = []
        for z in vals:
            if any(abs(z - s) <= 1e-8 * scale for s in seen):
                continue
            seen.append(z)
            alg = int(np.sum(np.abs(vals - z) <= 1e-8 * scale))
            if alg > 1:
                geo = A.shape[0] - np.linalg.matrix_rank(A - z * np.eye(A.shape[0]), tol=1e-7 * scale)
                if geo < alg:
                    defective = True
    return defective, cond


def spectrum_X0(S: StructureSet | np.ndarray) -> SingleParticleSpectrum:
    """Eigenvalues of X0 via the real Schur form, sorted by (Re desc, Im asc)."""
    if isinstance(S, StructureSet):
        X0, stats = S.X0, S.statistics
    else:
        X0, stats = np.asarray(S, dtype=float), None
    if X0.size == 0:
        return SingleParticleSpectrum((), False, 1.0, stats)
    T, _ = sla.schur(X0, output="real")
    xi = sorted(_schur_eigenvalues(T), key=_sort_key)
    if stats is Statistics.FERMION:
        _check_conjugate_pairs(xi)
    defective, score = _defect_score(X0, xi)
    return SingleParticleSpectrum(tuple(complex(z) for z in xi), defective, score, stats)


def _check_conjugate_pairs(xi: Sequence[complex], tol: float = 1e-8) -> None:
    arr = np.asarray(xi)
    scale = max(1.0, np.abs(arr).max(initial=0.0))
    for z in arr:
        if np.min(np.abs(arr - np.conj(z))) > tol * scale:
            raise np.linalg.LinAlgError(f"eigenvalue {z} has no conjugate partner")


@dataclass(frozen=True)
class ManyBodyEigenvalue:
    value: complex
    occupation: tuple
    parity: str


@dataclass(frozen=True)
class ManyBodySpectrum:
    eigenvalues: tuple
    statistics: Statistics
    truncation: int | None

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.eigenvalues], dtype=complex)

    def sector(self, parity: str) -> np.ndarray:
        return np.array([e.value for e in self.eigenvalues if e.parity == parity], dtype=complex)


def _occupations_upto(n_slots: int, max_total: int, fermion: bool) -> Iterator[tuple]:
    pick = itertools.combinations if fermion else itertools.combinations_with_replacement
    for total in range(min(max_total, n_slots) + 1 if fermion else max_total + 1):
        for combo in pick(range(n_slots), total):
            occ = [0] * n_slots
            for k in combo:
                occ[k] += 1
            yield tuple(occ)


def _count_upto(n_slots: int, max_total: int, fermion: bool) -> int:
    from math import comb

    if fermion:
        return sum(comb(n_slots, k) for k in range(min(max_total, n_slots) + 1))
    return comb(n_slots + max_total, max_total)


def many_body_spectrum(
    sp: SingleParticleSpectrum,
    statistics: Statistics,
    N_max: int | None = None,
    cap: int = ENUMERATION_CAP,
) -> ManyBodySpectrum:
    """Enumerate ``lambda_n = sum_k xi_k n_k``.

    Fermions: all ``2^{2n}`` occupations when ``2n <= 20``, otherwise those with
    at most ``N_max`` excitations. Bosons: all occupations with total ``<= N_max``.
    """
    xi = np.asarray(sp.xi, dtype=complex)
    slots = xi.size
    fermion = statistics is Statistics.FERMION
    if fermion:
        if slots <= FULL_FERMION_LIMIT:
            bound = slots
        elif N_max is None:
            raise ValueError("N_max is required for fermionic systems with 2n > 20")
        else:
            bound = N_max
    else:
        if N_max is None or N_max < 1:
            raise ValueError("bosonic spectra need a truncation N_max >= 1")
        bound = N_max
    count = _count_upto(slots, bound, fermion)
    if count > cap:
        raise EnumerationTooLarge(f"{count} many-body eigenvalues exceed the cap {cap}")

    entries = []
    for occ in _occupations_upto(slots, bound, fermion):
        lam = complex(np.dot(occ, xi)) if slots else 0j
        if fermion:
            parity = "even" if sum(occ) % 2 == 0 else "odd"
        else:
            parity = "n/a"
        entries.append(ManyBodyEigenvalue(lam, occ, parity))
    entries.sort(key=lambda e: (*_sort_key(e.value), e.occupation))
    truncation = None if fermion and bound == slots else bound
    return ManyBodySpectrum(tuple(entries), statistics, truncation)


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    relaxing: bool
    gap: float | None
    covariance_gap: float | None
    zero_modes: int
    steady_exists: bool
    kernel_origin: str | None = None


def classify(
    sp: SingleParticleSpectrum,
    steady: SteadyStateResult | None = None,
    tol: float = STABILITY_TOL,
    quasi_free: bool = True,
) -> StabilityReport:
    """Stable iff ``max Re xi <= tol``; relaxing iff ``max Re xi < -tol``."""
    xi = np.asarray(sp.xi, dtype=complex)
    max_re = float(xi.real.max()) if xi.size else -np.inf
    stable = max_re <= tol
    relaxing = max_re < -tol
    gap = -max_re if relaxing and xi.size else None
    cov_gap = 2 * gap if gap is not None and quasi_free else None
    zero_modes = int(np.sum((np.abs(xi.real) <= tol) & (np.abs(xi.imag) <= tol)))

    if steady is None:
        steady_exists = sp.statistics is Statistics.FERMION
    elif steady.gamma_ss.statistics is Statistics.FERMION:
        steady_exists = True
    else:
        steady_exists = bool(steady.physical)

    origin = None
    if steady is not None and steady.kernel_dimension > 0:
        if zero_modes > 0:
            origin = "zero_mode"
        elif xi.size and np.min(np.abs(xi[:, None] + xi[None, :])) <= max(tol, 1e-8):
            origin = "pair_sum"
        else:
            origin = "unexplained"
    return StabilityReport(stable, relaxing, gap, cov_gap, zero_modes, steady_exists, origin)


def pairwise_sums(sp: SingleParticleSpectrum) -> np.ndarray:
    """``{xi_k + xi_k'}`` over all ordered pairs: the quasi-free spectrum of K."""
    xi = np.asarray(sp.xi, dtype=complex)
    return (xi[:, None] + xi[None, :]).reshape(-1)


def multiset_distance(a: Sequence[complex], b: Sequence[complex]) -> float:
    """Largest deviation under the optimal one-to-one matching of two multisets."""
    from scipy.optimize import linear_sum_assignment

    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    if a.size != b.size:
        return np.inf
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
