"""Real structure matrices of the covariance equation of motion.

    d/dt Gamma = X Gamma + Gamma X^T + 2 sum_s Z_s Gamma Z_s^T + Y

and its vectorized generator ``K = X (x) 1 + 1 (x) X + 2 sum_s Z_s (x) Z_s``
(row-major vectorization, ``vec(Gamma)[i*2n + j] = Gamma[i, j]``).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .model import JumpMatrixB, ModelSpec, Statistics, build_jump_matrix

DEFAULT_DENSE_CAP = 32
SQRT2 = np.sqrt(2.0)


class GeneratorTooLarge(MemoryError):
    """Refusal to materialize a dense K above the mode cap."""


def dense_cap() -> int:
    """Largest mode count for which K is materialized densely (``LQ_CAP_DENSE``)."""
    raw = os.environ.get("LQ_CAP_DENSE")
    if raw is None:
        return DEFAULT_DENSE_CAP
    cap = int(raw)
    if cap <= 0:
        raise ValueError("LQ_CAP_DENSE must be positive")
    return cap


def symplectic_form(n_modes: int) -> np.ndarray:
    """``Omega = -i tau`` with ``tau = sigma_y (x) 1_n``; block form [[0, -1], [1, 0]]."""
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, -eye], [eye, zero]])


@dataclass(frozen=True)
class StructureSet:
    statistics: Statistics
    n_modes: int
    X: np.ndarray
    Y: np.ndarray
    Z: tuple
    X0: np.ndarray
    Omega: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return 2 * self.n_modes

    @property
    def quasi_free(self) -> bool:
        return len(self.Z) == 0

    def apply(self, gamma: np.ndarray) -> np.ndarray:
        """Matrix-free action of K on a (2n, 2n) matrix, without the inhomogeneity Y."""
        out = self.X @ gamma + gamma @ self.X.T
        for Zs in self.Z:
            out += 2.0 * Zs @ gamma @ Zs.T
        return out

    def rhs(self, gamma: np.ndarray) -> np.ndarray:
        """Right-hand side of the covariance equation of motion."""
        return self.apply(gamma) + self.Y


def build_structure(model: ModelSpec, B: JumpMatrixB | None = None) -> StructureSet:
    """Real-form structure matrices for a quadratic model.

    Fermions: ``X = 2h - B_r + 2 sum m_s^2``, ``Y = B_i``, ``Z_s = -sqrt(2) m_s``.
    Bosons:   ``X = 2 Omega h - Omega B_i + 2 sum (Omega m_s)^2``,
              ``Y = -Omega B_r Omega``, ``Z_s = -sqrt(2) Omega m_s``.

    The double commutator ``-1/2 [M, [M, G]]`` contributes ``4 m G m^T`` (fermion),
    so with the ``2 Z G Z^T`` convention ``Z_s`` carries a factor ``sqrt(2)``.
    """
    if B is None:
        B = build_jump_matrix(model)
    if B.B.shape != (model.dim, model.dim):
        raise ValueError("jump matrix does not match the model dimension")
    if model.is_fermion:
        X0 = 2.0 * model.h - B.B_r
        Y = B.B_i.copy()
        X = X0.copy()
        Z = []
        for m in model.quadratic_jumps:
            X += 2.0 * m @ m
            Z.append(-SQRT2 * m)
        omega = None
    else:
        omega = symplectic_form(model.n_modes)
        X0 = 2.0 * omega @ model.h - omega @ B.B_i
        Y = -omega @ B.B_r @ omega
        X = X0.copy()
        Z = []
        for m in model.quadratic_jumps:
            om = omega @ m
            X += 2.0 * om @ om
            Z.append(-SQRT2 * om)
    arrays = [X, Y, X0, *Z] + ([omega] if omega is not None else [])
    for a in arrays:
        a.setflags(write=False)
    return StructureSet(model.statistics, model.n_modes, X, Y, tuple(Z), X0, omega)


def structure_for(model: ModelSpec) -> StructureSet:
    return build_structure(model, build_jump_matrix(model))


def vec(gamma: np.ndarray) -> np.ndarray:
    return np.asarray(gamma).reshape(-1)


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim)


def build_generator_K(S: StructureSet, cap: int | None = None) -> np.ndarray:
    """Dense ``4n^2 x 4n^2`` generator; refuses above the mode cap."""
    cap = dense_cap() if cap is None else cap
    if S.n_modes > cap:
        raise GeneratorTooLarge(
            f"dense K for n={S.n_modes} exceeds the cap n<={cap}; use the matrix-free action"
        )
    eye = np.eye(S.dim)
    K = np.kron(S.X, eye) + np.kron(eye, S.X)
    for Zs in S.Z:
        K += 2.0 * np.kron(Zs, Zs)
    return K


def generator_operator(S: StructureSet):
    """K as a ``scipy.sparse.linalg.LinearOperator`` (matrix-free)."""
    from scipy.sparse.linalg import LinearOperator

    d = S.dim

    def matvec(v):
        v = np.asarray(v).reshape(-1)
        return S.apply(v.reshape(d, d)).reshape(-1)

    def rmatvec(v):
        v = np.asarray(v).reshape(-1)
        g = v.reshape(d, d)
        out = S.X.T @ g + g @ S.X
        for Zs in S.Z:
            out += 2.0 * Zs.T @ g @ Zs
        return out.reshape(-1)

    return LinearOperator((d * d, d * d), matvec=matvec, rmatvec=rmatvec, dtype=float)


def generator_trace(S: StructureSet) -> float:
    tr = 2.0 * S.dim * np.trace(S.X)
    for Zs in S.Z:
        tr += 2.0 * np.trace(Zs) ** 2
    return float(tr)
