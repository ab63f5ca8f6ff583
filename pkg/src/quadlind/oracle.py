"""Dense brute-force reference: Fock-space operators and the full Liouvillian.

Fermions use a Jordan-Wigner construction (exact CAR, exact parity operator).
Bosons use a hard Fock cutoff ``d`` per mode; the CCR fails only on the top
Fock level, see :meth:`FockRep.ccr_defect`.

Vectorization is row-major throughout: ``vec(A rho B) = (A kron B^T) vec(rho)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .covdyn import CovarianceMatrix, check_physical
from .model import ModelSpec, Statistics
from .structure import symplectic_form

log = logging.getLogger(__name__)

DEFAULT_DIM_CAP = 64  # Hilbert-space dimension D, i.e. Liouvillian D^2 <= 4096
PURE_MODE_FLOOR = 1e-14


class OracleTooLarge(MemoryError):
    pass


def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)


@dataclass(frozen=True)
class FockRep:
    """Dense operators on the (truncated) Fock space of ``n_modes`` modes."""

    statistics: Statistics
    n_modes: int
    cutoff: int
    a: tuple
    w: tuple
    parity: np.ndarray | None

    @property
    def dim(self) -> int:
        return self.cutoff**self.n_modes

    @property
    def adag(self) -> tuple:
        return tuple(op.conj().T for op in self.a)

    def number(self) -> np.ndarray:
        return sum(op.conj().T @ op for op in self.a)

    def ccr_defect(self) -> float:
        """Largest deviation from the canonical (anti)commutator ``a_j a_j^dag -/+ ...``."""
        eye = np.eye(self.dim)
        worst = 0.0
        for i, ai in enumerate(self.a):
            for j, aj in enumerate(self.a):
                adj = aj.conj().T
                if self.statistics is Statistics.FERMION:
                    rel = ai @ adj + adj @ ai
                else:
                    rel = ai @ adj - adj @ ai
                worst = max(worst, np.abs(rel - (i == j) * eye).max())
        return float(worst)

    def monomial(self, indices: Sequence[int]) -> np.ndarray:
        """Dense ``w_{i1} w_{i2} ... w_{ik}`` (0-based Majorana indices)."""
        out = np.eye(self.dim, dtype=complex)
        for i in indices:
            out = out @ self.w[i]
        return out


def build_fock(statistics: Statistics, n_modes: int, cutoff: int | None = None,
               dim_cap: int = DEFAULT_DIM_CAP) -> FockRep:
    stats = Statistics.parse(statistics)
    if stats is Statistics.FERMION:
        d = 2
    else:
        if cutoff is None or cutoff < 2:
            raise ValueError("bosonic oracle needs a Fock cutoff >= 2")
        d = int(cutoff)
    if d**n_modes > dim_cap:
        raise OracleTooLarge(f"Hilbert dimension {d}**{n_modes} exceeds the oracle cap {dim_cap}")

    if stats is Statistics.FERMION:
        lower = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1| in the (empty, occupied) basis
        zsign = np.diag([1.0, -1.0])
        eye = np.eye(2)
        a = []
        for j in range(n_modes):
            factors = [zsign] * j + [lower] + [eye] * (n_modes - j - 1)
            a.append(_kron_all(factors).astype(complex))
        parity = _kron_all([zsign] * n_modes).astype(complex)
    else:
        lower = np.diag(np.sqrt(np.arange(1, d)), k=1)
        eye = np.eye(d)
        a = []
        for j in range(n_modes):
            factors = [eye] * j + [lower] + [eye] * (n_modes - j - 1)
            a.append(_kron_all(factors).astype(complex))
        parity = None

    s2 = np.sqrt(2.0)
    w_plus = [(op + op.conj().T) / s2 for op in a]
    w_minus = [1j * (op - op.conj().T) / s2 for op in a]
    return FockRep(stats, n_modes, d, tuple(a), tuple(w_plus + w_minus), parity)


def linear_operator(rep: FockRep, coeffs: Sequence[complex]) -> np.ndarray:
    return sum(c * w for c, w in zip(coeffs, rep.w))


def quadratic_operator(rep: FockRep, mat: np.ndarray) -> np.ndarray:
    """Dense ``sum_ij w_i M_ij w_j``."""
    dim = len(rep.w)
    out = np.zeros((rep.dim, rep.dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            if mat[i, j] != 0:
                out += mat[i, j] * (rep.w[i] @ rep.w[j])
    return out


@dataclass(frozen=True)
class DenseLiouvillian:
    matrix: np.ndarray
    rep: FockRep
    model: ModelSpec
    hamiltonian: np.ndarray
    jumps: tuple

    @property
    def D(self) -> int:
        return self.rep.dim

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return (self.matrix @ rho.reshape(-1)).reshape(self.D, self.D)

    def adjoint(self, op: np.ndarray) -> np.ndarray:
        """Heisenberg-picture action ``L^dag(O)`` (Hilbert-Schmidt adjoint)."""
        return (self.matrix.conj().T @ op.reshape(-1)).reshape(self.D, self.D)


def _dissipator(J: np.ndarray, eye: np.ndarray) -> np.ndarray:
    JdJ = J.conj().T @ J
    return np.kron(J, J.conj()) - 0.5 * np.kron(JdJ, eye) - 0.5 * np.kron(eye, JdJ.T)


def build_dense(model: ModelSpec, cutoff: int | None = None,
                dim_cap: int = DEFAULT_DIM_CAP) -> DenseLiouvillian:
    """Full ``D^2 x D^2`` Liouvillian of the model on the dense Fock representation."""
    rep = build_fock(model.statistics, model.n_modes, cutoff, dim_cap)
    D = rep.dim
    eye = np.eye(D)
    H = quadratic_operator(rep, model.hamiltonian_matrix())
    H = (H + H.conj().T) / 2
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    jumps = []
    for v in model.linear_jumps:
        J = linear_operator(rep, v)
        jumps.append(J)
        L += _dissipator(J, eye)
    for m in model.quadratic_jump_matrices():
        M = quadratic_operator(rep, m)
        M = (M + M.conj().T) / 2
        jumps.append(M)
        L += _dissipator(M, eye)
    return DenseLiouvillian(L, rep, model, H, tuple(jumps))


def dense_evolve(L: DenseLiouvillian, rho0: np.ndarray, t: float) -> np.ndarray:
    rho0 = np.asarray(rho0, dtype=complex)
    if t == 0:
        return rho0.copy()
    rho = (sla.expm(L.matrix * t) @ rho0.reshape(-1)).reshape(L.D, L.D)
    return (rho + rho.conj().T) / 2


def dense_trajectory(L: DenseLiouvillian, rho0: np.ndarray, t_grid: Sequence[float]) -> list[np.ndarray]:
    return [dense_evolve(L, rho0, t) for t in t_grid]


def expectation(rho: np.ndarray, op: np.ndarray) -> complex:
    return complex(np.trace(op @ rho))


def covariance_from_rho(rep: FockRep, rho: np.ndarray) -> CovarianceMatrix:
    """Fermion ``G_ij = (i/2)<w_i w_j - w_j w_i>``; boson ``G_ij = (1/2)<{w_i, w_j}>``."""
    dim = 2 * rep.n_modes
    g = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            prod_ij = rep.w[i] @ rep.w[j]
            prod_ji = rep.w[j] @ rep.w[i]
            if rep.statistics is Statistics.FERMION:
                g[i, j] = 0.5j * np.trace((prod_ij - prod_ji) @ rho)
            else:
                g[i, j] = 0.5 * np.trace((prod_ij + prod_ji) @ rho)
    resid = np.abs(g.imag).max()
    if resid > 1e-12:
        log.debug("covariance imaginary residue %.3e discarded", resid)
    return CovarianceMatrix(rep.statistics, _project(g.real, rep.statistics))


def _project(g: np.ndarray, stats: Statistics) -> np.ndarray:
    return (g - g.T) / 2 if stats is Statistics.FERMION else (g + g.T) / 2


def correlator(rep: FockRep, rho: np.ndarray, indices: Sequence[int]) -> complex:
    """``<w_{i1} ... w_{ik}>`` in state ``rho``."""
    return complex(np.trace(rep.monomial(indices) @ rho))


def _sort_eigs(vals: np.ndarray) -> np.ndarray:
    order = np.lexsort((np.round(vals.imag, 12), -np.round(vals.real, 12)))
    return vals[order]


def parity_superoperator(L: DenseLiouvillian) -> np.ndarray:
    P = L.rep.parity
    if P is None:
        raise ValueError("parity sectors are only defined for fermions")
    return np.kron(P, P.T)


def dense_spectrum(L: DenseLiouvillian, sector: str | None = None) -> np.ndarray:
    """All Liouvillian eigenvalues, or those of one fermionic parity sector.

    The sector of an operator ``R`` is even (odd) if ``Pi R Pi = R`` (``-R``).
    """
    M = L.matrix
    if sector is not None:
        if sector not in ("even", "odd"):
            raise ValueError("sector must be 'even' or 'odd'")
        diag = np.real(np.diag(parity_superoperator(L)))
        keep = diag > 0 if sector == "even" else diag < 0
        M = M[np.ix_(keep, keep)]
    return _sort_eigs(np.linalg.eigvals(M))


def dense_steady(L: DenseLiouvillian) -> np.ndarray:
    """Density matrix spanning the (numerical) kernel of L, normalized to unit trace."""
    U, s, Vh = np.linalg.svd(L.matrix)
    v = Vh[-1].conj()
    rho = v.reshape(L.D, L.D)
    rho = rho / np.trace(rho)
    return (rho + rho.conj().T) / 2


def kernel_dimension(L: DenseLiouvillian, tol: float = 1e-10) -> int:
    s = np.linalg.svd(L.matrix, compute_uv=False)
    return int(np.sum(s <= tol * max(1.0, s[0])))


def gaussian_state(rep: FockRep, gamma: CovarianceMatrix) -> np.ndarray:
    """Dense Gaussian state (zero first moments) with covariance ``gamma``.

    Fermions: block-diagonalize ``gamma`` by a real orthogonal transform and
    form the exact product ``2^-n prod_k (1 + 4 lam_k i u_k v_k)`` in the
    rotated Majoranas. Bosons: ``exp(-w^T h w / 2)`` with
    ``h = 2 i Omega arccoth(2 gamma i Omega)``, pure modes approached through
    a floored symplectic eigenvalue.
    """
    if gamma.statistics is not rep.statistics or gamma.n_modes != rep.n_modes:
        raise ValueError("covariance does not match the Fock representation")
    if not check_physical(gamma).physical:
        raise ValueError("covariance matrix is not physical")
    if rep.statistics is Statistics.FERMION:
        return _fermion_gaussian(rep, gamma.gamma)
    return _boson_gaussian(rep, gamma.gamma)


def _fermion_gaussian(rep: FockRep, g: np.ndarray) -> np.ndarray:
    T, O = sla.schur(g, output="real")
    dim = g.shape[0]
    pairs = []
    singles = []
    k = 0
    while k < dim:
        if k + 1 < dim and abs(T[k + 1, k]) > 0.0:
            pairs.append((k, k + 1))
            k += 2
        else:
            singles.append(k)
            k += 1
    # 1x1 blocks are zero for antisymmetric input; pair them with zero coupling
    pairs.extend(zip(singles[0::2], singles[1::2]))
    rho = np.eye(rep.dim, dtype=complex)
    for p, q in pairs:
        lam = T[p, q]
        u = linear_operator(rep, O[:, p])
        v = linear_operator(rep, O[:, q])
        rho = rho @ (np.eye(rep.dim) + 4.0 * lam * 1j * (u @ v))
    rho /= 2**rep.n_modes
    return (rho + rho.conj().T) / 2


def _boson_gaussian(rep: FockRep, g: np.ndarray) -> np.ndarray:
    omega = symplectic_form(rep.n_modes)
    i_omega = 1j * omega
    evals, evecs = np.linalg.eigh(g)
    sqrt_g = (evecs * np.sqrt(evals)) @ evecs.T
    inv_sqrt_g = (evecs / np.sqrt(evals)) @ evecs.T
    # 2 G iOmega is similar to the Hermitian 2 G^1/2 iOmega G^1/2
    x, U = np.linalg.eigh(2.0 * sqrt_g @ i_omega @ sqrt_g)
    mag = np.maximum(np.abs(x), 1.0 + PURE_MODE_FLOOR)
    f = np.sign(x) * 0.5 * np.log((mag + 1.0) / (mag - 1.0))
    arccoth_c = sqrt_g @ (U * f) @ U.conj().T @ inv_sqrt_g
    h = 2.0 * i_omega @ arccoth_c
    h = ((h + h.T) / 2).real
    Hq = quadratic_operator(rep, 0.5 * h)
    Hq = (Hq + Hq.conj().T) / 2
    e, V = np.linalg.eigh(Hq)
    weights = np.exp(-(e - e.min()))
    rho = (V * weights) @ V.conj().T
    rho /= np.trace(rho)
    return (rho + rho.conj().T) / 2


def top_level_population(rep: FockRep, rho: np.ndarray) -> float:
    """Population in the highest Fock level of any mode (boson cutoff monitor)."""
    if rep.statistics is Statistics.FERMION:
        return 0.0
    worst = 0.0
    for op in rep.a:
        n_op = op.conj().T @ op
        # projector on the top level of this mode via its number operator eigenbasis
        top = np.isclose(np.real(np.diag(n_op)), rep.cutoff - 1)
        worst = max(worst, float(np.real(np.sum(np.diag(rho)[top]))))
    return worst


@dataclass(frozen=True)
class CutoffCheck:
    cutoff: int
    change: float
    conclusive: bool


def cutoff_convergence(model: ModelSpec, cutoff: int, tol: float = 1e-6,
                       dim_cap: int = DEFAULT_DIM_CAP) -> CutoffCheck:
    """Steady-state covariance change when the boson cutoff is doubled.

    The doubled representation must itself fit under ``dim_cap``.
    """
    if model.is_fermion:
        return CutoffCheck(2, 0.0, True)
    covs = []
    for d in (cutoff, 2 * cutoff):
        L = build_dense(model, cutoff=d, dim_cap=dim_cap)
        covs.append(covariance_from_rho(L.rep, dense_steady(L)).gamma)
    change = float(np.abs(covs[1] - covs[0]).max())
    return CutoffCheck(cutoff, change, change < tol)
