"""Symbolic Majorana polynomial algebra and the closed moment hierarchy.

Monomials are tuples of 0-based Majorana indices in canonical order:
strictly increasing for fermions, non-decreasing for bosons. Index ``j < n``
labels ``w_{j+}``, index ``j + n`` labels ``w_{j-}``.

Rewriting rules:

* fermions, ``{w_i, w_j} = delta_ij``: ``w_b w_a = -w_a w_b`` for ``a != b``
  and ``w_a w_a = 1/2``;
* bosons, ``[w_a, w_b] = tau_ab`` with ``tau = sigma_y (x) 1_n``:
  ``w_b w_a = w_a w_b - tau_ab``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .covdyn import CovarianceMatrix, IntegrationError
from .model import ModelSpec, Statistics

PRUNE_TOL = 1e-15

Monomial = tuple


class ClosureViolation(ArithmeticError):
    """The adjoint Liouvillian raised the degree of a monomial."""


def tau_entry(a: int, b: int, n_modes: int) -> complex:
    """``tau_ab = [w_a, w_b]`` for bosons."""
    if b == a + n_modes and a < n_modes:
        return -1j
    if a == b + n_modes and b < n_modes:
        return 1j
    return 0j


def tau_matrix(n_modes: int) -> np.ndarray:
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, -1j * eye], [1j * eye, zero]])


@lru_cache(maxsize=1 << 16)
def _order_word(word: tuple, fermion: bool, n_modes: int) -> tuple:
    """Canonical expansion of an arbitrary product ``w_{i1} ... w_{ik}``.

    Returns a tuple of ``(monomial, coefficient)`` pairs.
    """
    for pos in range(len(word) - 1):
        a, b = word[pos], word[pos + 1]
        if fermion and a == b:
            rest = word[:pos] + word[pos + 2:]
            return tuple((m, 0.5 * c) for m, c in _order_word(rest, fermion, n_modes))
        if a > b:
            swapped = word[:pos] + (b, a) + word[pos + 2:]
            out: dict = {}
            for m, c in _order_word(swapped, fermion, n_modes):
                out[m] = out.get(m, 0) + (-c if fermion else c)
            if not fermion:
                t = tau_entry(b, a, n_modes)
                if t != 0:
                    rest = word[:pos] + word[pos + 2:]
                    for m, c in _order_word(rest, fermion, n_modes):
                        out[m] = out.get(m, 0) - t * c
            return tuple(out.items())
    return ((word, 1.0),)


class MajoranaPolynomial:
    """Finite sum of canonical Majorana monomials with complex coefficients."""

    __slots__ = ("statistics", "n_modes", "terms")

    def __init__(self, statistics: Statistics, n_modes: int,
                 terms: Mapping[Sequence[int], complex] | None = None,
                 prune: float = PRUNE_TOL):
        self.statistics = Statistics.parse(statistics)
        self.n_modes = int(n_modes)
        out: dict = {}
        fermion = self.statistics is Statistics.FERMION
        dim = 2 * self.n_modes
        for word, coeff in (terms or {}).items():
            word = tuple(int(i) for i in word)
            if any(i < 0 or i >= dim for i in word):
                raise IndexError(f"Majorana index out of range in {word}")
            for m, c in _order_word(word, fermion, self.n_modes):
                out[m] = out.get(m, 0) + coeff * c
        self.terms = {m: complex(c) for m, c in out.items() if abs(c) > prune}

    # -- constructors ------------------------------------------------------

    @classmethod
    def _raw(cls, statistics, n_modes, terms: dict, prune: float = PRUNE_TOL):
        obj = cls.__new__(cls)
        obj.statistics = statistics
        obj.n_modes = n_modes
        obj.terms = {m: complex(c) for m, c in terms.items() if abs(c) > prune}
        return obj

    @classmethod
    def identity(cls, statistics, n_modes, coeff: complex = 1.0):
        return cls(statistics, n_modes, {(): coeff})

    @classmethod
    def majorana(cls, statistics, n_modes, index: int, coeff: complex = 1.0):
        return cls(statistics, n_modes, {(index,): coeff})

    @classmethod
    def linear(cls, statistics, n_modes, coeffs: Sequence[complex]):
        return cls(statistics, n_modes, {(j,): c for j, c in enumerate(coeffs) if c != 0})

    @classmethod
    def quadratic(cls, statistics, n_modes, mat: np.ndarray):
        """``sum_ij w_i M_ij w_j``."""
        mat = np.asarray(mat)
        terms: dict = {}
        for i, j in zip(*np.nonzero(mat)):
            p = cls(statistics, n_modes, {(i, j): mat[i, j]}, prune=0.0)
            for m, c in p.terms.items():
                terms[m] = terms.get(m, 0) + c
        return cls._raw(Statistics.parse(statistics), int(n_modes), terms)

    # -- inspection --------------------------------------------------------

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def coefficient(self, monomial: Sequence[int]) -> complex:
        return self.terms.get(tuple(monomial), 0j)

    def is_zero(self) -> bool:
        return not self.terms

    def items(self):
        return sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0]))

    def __repr__(self):
        body = " + ".join(f"({c:.6g})w{list(m)}" for m, c in self.items()) or "0"
        return f"MajoranaPolynomial[{self.statistics.value}, n={self.n_modes}]({body})"

    # -- arithmetic --------------------------------------------------------

    def _check(self, other: "MajoranaPolynomial"):
        if other.statistics is not self.statistics or other.n_modes != self.n_modes:
            raise ValueError("statistics or mode count mismatch")

    def __add__(self, other):
        if not isinstance(other, MajoranaPolynomial):
            other = MajoranaPolynomial.identity(self.statistics, self.n_modes, other)
        self._check(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return MajoranaPolynomial._raw(self.statistics, self.n_modes, terms)

    __radd__ = __add__

    def __neg__(self):
        return MajoranaPolynomial._raw(self.statistics, self.n_modes,
                                       {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, MajoranaPolynomial):
            self._check(other)
            return _product(self, other)
        return MajoranaPolynomial._raw(self.statistics, self.n_modes,
                                       {m: c * other for m, c in self.terms.items()})

    def __rmul__(self, other):
        return MajoranaPolynomial._raw(self.statistics, self.n_modes,
                                       {m: other * c for m, c in self.terms.items()})

    def __matmul__(self, other):
        return self * other

    def dagger(self) -> "MajoranaPolynomial":
        """Hermitian conjugate (Majoranas are self-adjoint, so words reverse)."""
        return MajoranaPolynomial(self.statistics, self.n_modes,
                                  {m[::-1]: np.conj(c) for m, c in self.terms.items()})

    def allclose(self, other: "MajoranaPolynomial", atol: float = 1e-12) -> bool:
        diff = self - other
        return all(abs(c) <= atol for c in diff.terms.values())


def _product(p: MajoranaPolynomial, q: MajoranaPolynomial, prune: float = PRUNE_TOL):
    fermion = p.statistics is Statistics.FERMION
    terms: dict = {}
    for m1, c1 in p.terms.items():
        for m2, c2 in q.terms.items():
            cc = c1 * c2
            for m, c in _order_word(m1 + m2, fermion, p.n_modes):
                terms[m] = terms.get(m, 0) + cc * c
    return MajoranaPolynomial._raw(p.statistics, p.n_modes, terms, prune)


def commutator(p: MajoranaPolynomial, q: MajoranaPolynomial,
               prune: float = PRUNE_TOL) -> MajoranaPolynomial:
    """``[p, q]`` accumulated pairwise so leading-degree terms cancel exactly."""
    p._check(q)
    fermion = p.statistics is Statistics.FERMION
    n = p.n_modes
    terms: dict = {}
    for m1, c1 in p.terms.items():
        for m2, c2 in q.terms.items():
            cc = c1 * c2
            local: dict = {}
            for m, c in _order_word(m1 + m2, fermion, n):
                local[m] = local.get(m, 0) + c
            for m, c in _order_word(m2 + m1, fermion, n):
                local[m] = local.get(m, 0) - c
            for m, c in local.items():
                if c != 0:
                    terms[m] = terms.get(m, 0) + cc * c
    return MajoranaPolynomial._raw(p.statistics, n, terms, prune)


def normal_order(p: MajoranaPolynomial | Mapping, statistics: Statistics | None = None,
                 n_modes: int | None = None) -> MajoranaPolynomial:
    """Canonical form of a polynomial (or of a raw ``{word: coeff}`` mapping)."""
    if isinstance(p, MajoranaPolynomial):
        return MajoranaPolynomial(p.statistics, p.n_modes, p.terms)
    if statistics is None or n_modes is None:
        raise ValueError("raw word mappings need statistics and n_modes")
    return MajoranaPolynomial(statistics, n_modes, p)


# -- adjoint Liouvillian ------------------------------------------------------


class AdjointLiouvillian:
    """Heisenberg-picture generator ``L^dag`` of a quadratic model on polynomials.

    ``L^dag(O) = i[H, O] + sum_r (L_r^dag [O, L_r] + [L_r^dag, O] L_r) / 2
                 - sum_s [M_s, [M_s, O]] / 2``
    """

    def __init__(self, model: ModelSpec, prune: float = PRUNE_TOL):
        self.model = model
        self.prune = prune
        stats, n = model.statistics, model.n_modes
        self.H = MajoranaPolynomial.quadratic(stats, n, model.hamiltonian_matrix())
        self.L = [MajoranaPolynomial.linear(stats, n, v) for v in model.linear_jumps]
        self.Ldag = [MajoranaPolynomial.linear(stats, n, np.conj(v)) for v in model.linear_jumps]
        self.M = [MajoranaPolynomial.quadratic(stats, n, m) for m in model.quadratic_jump_matrices()]

    def __call__(self, p: MajoranaPolynomial) -> MajoranaPolynomial:
        if p.statistics is not self.model.statistics or p.n_modes != self.model.n_modes:
            raise ValueError("polynomial statistics/modes do not match the model")
        pr = self.prune
        out = 1j * commutator(self.H, p, pr)
        for L, Ld in zip(self.L, self.Ldag):
            out = out + 0.5 * (_product(Ld, commutator(p, L, pr), pr)
                               + _product(commutator(Ld, p, pr), L, pr))
        for M in self.M:
            out = out - 0.5 * commutator(M, commutator(M, p, pr), pr)
        return MajoranaPolynomial._raw(out.statistics, out.n_modes, out.terms, pr)


def adjoint_apply(model: ModelSpec, p: MajoranaPolynomial,
                  prune: float = PRUNE_TOL) -> MajoranaPolynomial:
    """``L^dag(p)`` expanded symbolically and normal-ordered."""
    if p.statistics is not model.statistics:
        raise ValueError("statistics mismatch between model and polynomial")
    return AdjointLiouvillian(model, prune)(p)


# -- moments -----------------------------------------------------------------


def canonical_monomials(statistics: Statistics, n_modes: int, degree: int) -> list[tuple]:
    dim = 2 * n_modes
    if Statistics.parse(statistics) is Statistics.FERMION:
        return list(itertools.combinations(range(dim), degree))
    return list(itertools.combinations_with_replacement(range(dim), degree))


def moment_degrees(statistics: Statistics, k_max: int) -> list[int]:
    if Statistics.parse(statistics) is Statistics.FERMION:
        return list(range(0, k_max + 1, 2))
    return list(range(0, k_max + 1))


def two_point_matrix(gamma: CovarianceMatrix) -> np.ndarray:
    """``G_ab = <w_a w_b>``: ``-i Gamma + 1/2`` (fermion), ``Gamma + tau/2`` (boson)."""
    g = gamma.gamma
    dim = g.shape[0]
    if gamma.statistics is Statistics.FERMION:
        return -1j * g + 0.5 * np.eye(dim)
    return g + 0.5 * tau_matrix(dim // 2)


def wick_moment(G: np.ndarray, indices: Sequence[int], fermion: bool) -> complex:
    """Ordered ``<w_{i1} ... w_{ik}>`` of a zero-mean Gaussian state by pairing recursion."""
    idx = tuple(indices)
    return _wick(G, idx, fermion, {})


def _wick(G, idx, fermion, memo):
    if not idx:
        return 1.0 + 0j
    if len(idx) % 2:
        return 0j
    if idx in memo:
        return memo[idx]
    first = idx[0]
    total = 0j
    for j in range(1, len(idx)):
        sign = -1.0 if fermion and (j - 1) % 2 else 1.0
        rest = idx[1:j] + idx[j + 1:]
        total += sign * G[first, idx[j]] * _wick(G, rest, fermion, memo)
    memo[idx] = total
    return total


def wick_four_point(gamma: CovarianceMatrix, a: int, b: int, c: int, d: int) -> complex:
    """Four-point function of a zero-mean Gaussian state from its covariance.

    Fermions require distinct indices (normal-order first otherwise).
    """
    fermion = gamma.statistics is Statistics.FERMION
    if fermion and len({a, b, c, d}) < 4:
        raise ValueError("repeated fermionic indices: normal-order the product first")
    G = two_point_matrix(gamma)
    sign = -1.0 if fermion else 1.0
    return complex(G[a, b] * G[c, d] + sign * G[a, c] * G[b, d] + G[a, d] * G[b, c])


@dataclass(frozen=True)
class MomentState:
    """Expectation values ``<w_I>`` of all canonical monomials up to degree ``k_max``.

    For fermions only even degrees are carried (even-parity sector).
    """

    statistics: Statistics
    n_modes: int
    k_max: int
    basis: tuple
    values: np.ndarray

    def tensor(self, k: int) -> np.ndarray:
        """Packed degree-``k`` correlations, in the order of ``canonical_monomials``."""
        return np.array([v for m, v in zip(self.basis, self.values) if len(m) == k])

    def value(self, monomial: Sequence[int]) -> complex:
        return complex(self.values[self.basis.index(tuple(monomial))])

    def covariance(self) -> CovarianceMatrix:
        dim = 2 * self.n_modes
        pair = {m: v for m, v in zip(self.basis, self.values) if len(m) == 2}
        g = np.zeros((dim, dim))
        fermion = self.statistics is Statistics.FERMION
        for (a, b), v in pair.items():
            if fermion:
                g[a, b] = (1j * v).real
                g[b, a] = -g[a, b]
            else:
                g[a, b] = (v - 0.5 * tau_entry(a, b, self.n_modes)).real
                g[b, a] = g[a, b]
        return CovarianceMatrix(self.statistics, g)

    def wick_prediction(self, k: int) -> np.ndarray:
        G = two_point_matrix(self.covariance())
        fermion = self.statistics is Statistics.FERMION
        return np.array([wick_moment(G, m, fermion) for m in self.basis if len(m) == k])

    def wick_deviation(self, k: int = 4) -> float:
        """``|| Gamma^(k) - Wick(Gamma^(2)) ||`` over the packed degree-``k`` entries."""
        if k > self.k_max:
            return 0.0
        return float(np.linalg.norm(self.tensor(k) - self.wick_prediction(k)))

    @classmethod
    def gaussian(cls, gamma: CovarianceMatrix, k_max: int) -> "MomentState":
        """Moments of the zero-mean Gaussian state with covariance ``gamma``."""
        stats, n = gamma.statistics, gamma.n_modes
        basis = tuple(m for k in moment_degrees(stats, k_max) for m in canonical_monomials(stats, n, k))
        G = two_point_matrix(gamma)
        fermion = stats is Statistics.FERMION
        memo: dict = {}
        vals = np.array([_wick(G, m, fermion, memo) for m in basis], dtype=complex)
        return cls(stats, n, k_max, basis, vals)

    @classmethod
    def from_values(cls, statistics, n_modes, k_max, values: Mapping[tuple, complex] | Iterable):
        stats = Statistics.parse(statistics)
        basis = tuple(m for k in moment_degrees(stats, k_max) for m in canonical_monomials(stats, n_modes, k))
        if isinstance(values, Mapping):
            vals = np.array([values.get(m, 0j) for m in basis], dtype=complex)
        else:
            vals = np.asarray(list(values), dtype=complex)
        if vals.shape != (len(basis),):
            raise ValueError("moment vector does not match the canonical basis")
        return cls(stats, n_modes, k_max, basis, vals)


@dataclass(frozen=True)
class MomentHierarchy:
    """Linear generator ``d<w_I>/dt = sum_J G[I, J] <w_J>`` on canonical monomials."""

    statistics: Statistics
    n_modes: int
    k_max: int
    basis: tuple
    matrix: np.ndarray

    def _rows(self, k: int) -> np.ndarray:
        return np.array([len(m) == k for m in self.basis])

    def block(self, k_out: int, k_in: int) -> np.ndarray:
        """Coupling of ``d Gamma^(k_out)/dt`` to ``Gamma^(k_in)``."""
        return self.matrix[np.ix_(self._rows(k_out), self._rows(k_in))]


def hierarchy_generator(model: ModelSpec, k_max: int, prune: float = PRUNE_TOL) -> MomentHierarchy:
    """Assemble the exact moment generator; raises :class:`ClosureViolation` on degree growth."""
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    fermion = model.is_fermion
    if fermion and k_max % 2:
        raise ValueError("fermionic hierarchies are restricted to even k_max")
    stats, n = model.statistics, model.n_modes
    basis = tuple(m for k in moment_degrees(stats, k_max) for m in canonical_monomials(stats, n, k))
    index = {m: i for i, m in enumerate(basis)}
    action = AdjointLiouvillian(model, prune)
    G = np.zeros((len(basis), len(basis)), dtype=complex)
    for row, mono in enumerate(basis):
        image = action(MajoranaPolynomial._raw(stats, n, {mono: 1.0}))
        for m, c in image.terms.items():
            if len(m) > len(mono):
                raise ClosureViolation(
                    f"L^dag raised degree {len(mono)} -> {len(m)} (monomial {mono} -> {m}, coeff {c:.3e})"
                )
            if fermion and len(m) % 2:
                raise ClosureViolation(f"odd monomial {m} produced from even monomial {mono}")
            G[row, index[m]] += c
    return MomentHierarchy(stats, n, k_max, basis, G)


def evolve_moments(gen: MomentHierarchy, m0: MomentState, t_grid: Sequence[float],
                   rtol: float = 1e-10, atol: float = 1e-12, method: str = "RK45") -> list[MomentState]:
    """Integrate the block-triangular linear moment ODE."""
    if m0.basis != gen.basis:
        raise ValueError("initial moments do not match the hierarchy basis")
    if abs(m0.values[0] - 1.0) > 1e-12:
        raise ValueError("initial moments must satisfy <1> = 1")
    ts = np.asarray(t_grid, dtype=float)
    if ts.ndim != 1 or ts.size == 0 or ts[0] < 0 or np.any(np.diff(ts) <= 0):
        raise ValueError("t_grid must be strictly increasing and start at t >= 0")
    if ts[-1] == 0:
        return [m0]
    G = gen.matrix
    sol = solve_ivp(lambda _t, y: G @ y, (0.0, ts[-1]), m0.values, method=method,
                    t_eval=ts, rtol=rtol, atol=atol)
    if sol.status != 0:
        raise IntegrationError(f"moment integration failed: {sol.message}",
                               float(sol.t[-1]) if sol.t.size else 0.0)
    out = []
    for k in range(ts.size):
        vals = m0.values.copy() if ts[k] == 0 else sol.y[:, k].copy()
        out.append(MomentState(m0.statistics, m0.n_modes, m0.k_max, m0.basis, vals))
    return out
