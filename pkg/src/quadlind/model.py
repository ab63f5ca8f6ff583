"""Quadratic Lindblad model descriptions.

A model is given in the Majorana basis ``w_{1+}..w_{n+}, w_{1-}..w_{n-}`` with

    w_{j+} = (a_j + a_j^dag) / sqrt(2),   w_{j-} = i (a_j - a_j^dag) / sqrt(2).

Fermionic Majoranas are normalized as ``{w_i, w_j} = delta_ij`` (not ``2 delta_ij``).

Fermionic coefficient matrices are purely imaginary, so only their real factors
are stored: ``H = i h`` and ``M_s = i m_s`` with ``h, m_s`` real antisymmetric.
Bosonic ``H`` and ``M_s`` are real symmetric and stored as-is.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-12


class ModelError(ValueError):
    """Invalid model document or model data."""


class Statistics(enum.Enum):
    FERMION = "fermion"
    BOSON = "boson"

    @classmethod
    def parse(cls, tag) -> "Statistics":
        if isinstance(tag, cls):
            return tag
        try:
            return cls(str(tag).lower())
        except ValueError:
            raise ModelError(f"unknown statistics tag {tag!r}") from None


# fixed unitary taking ladder coefficients (a_j, a_j^dag) to Majorana (w_{j+}, w_{j-})
_LADDER_TO_MAJORANA = np.array([[1.0, 1.0], [-1j, 1j]]) / np.sqrt(2)


def ladder_to_majorana(coeffs: Sequence[complex], n_modes: int) -> np.ndarray:
    """Convert coefficients on ``(a_1..a_n, a^dag_1..a^dag_n)`` to the Majorana basis."""
    c = np.asarray(coeffs, dtype=complex)
    alpha, beta = c[:n_modes], c[n_modes:]
    out = np.empty(2 * n_modes, dtype=complex)
    out[:n_modes] = _LADDER_TO_MAJORANA[0, 0] * alpha + _LADDER_TO_MAJORANA[0, 1] * beta
    out[n_modes:] = _LADDER_TO_MAJORANA[1, 0] * alpha + _LADDER_TO_MAJORANA[1, 1] * beta
    return out


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelSpec:
    """Validated quadratic Lindblad model.

    Attributes
    ----------
    statistics : Statistics
    n_modes : int
    h : ndarray, shape (2n, 2n)
        Real antisymmetric (fermion, ``H = i h``) or real symmetric (boson, ``H = h``).
    linear_jumps : tuple of complex ndarray, each shape (2n,)
    quadratic_jumps : tuple of real ndarray, each shape (2n, 2n)
        Same parametrization as ``h``.
    """

    statistics: Statistics
    n_modes: int
    h: np.ndarray
    linear_jumps: tuple = field(default_factory=tuple)
    quadratic_jumps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        stats = Statistics.parse(self.statistics)
        object.__setattr__(self, "statistics", stats)
        n = self.n_modes
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise ModelError(f"n_modes must be a positive integer, got {n!r}")
        object.__setattr__(self, "n_modes", int(n))
        dim = 2 * int(n)

        h = _real_matrix(self.h, dim, "h")
        _check_symmetry(h, stats, "h")
        object.__setattr__(self, "h", _freeze(h))

        jumps = []
        for r, vec in enumerate(self.linear_jumps):
            v = np.array(vec, dtype=complex).reshape(-1)
            if v.shape != (dim,):
                raise ModelError(f"linear_jumps[{r}] has length {v.size}, expected {dim}")
            if not np.all(np.isfinite(v)):
                raise ModelError(f"linear_jumps[{r}] has non-finite entries")
            jumps.append(_freeze(v))
        object.__setattr__(self, "linear_jumps", tuple(jumps))

        quads = []
        for s, mat in enumerate(self.quadratic_jumps):
            m = _real_matrix(mat, dim, f"quadratic_jumps[{s}]")
            _check_symmetry(m, stats, f"quadratic_jumps[{s}]")
            quads.append(_freeze(m))
        object.__setattr__(self, "quadratic_jumps", tuple(quads))

    @property
    def dim(self) -> int:
        return 2 * self.n_modes

    @property
    def is_fermion(self) -> bool:
        return self.statistics is Statistics.FERMION

    @property
    def quasi_free(self) -> bool:
        return len(self.quadratic_jumps) == 0

    def hamiltonian_matrix(self) -> np.ndarray:
        """Coefficient matrix ``H`` of ``sum_ij w_i H_ij w_j`` (complex for fermions)."""
        return 1j * self.h if self.is_fermion else self.h.astype(complex)

    def quadratic_jump_matrices(self) -> list[np.ndarray]:
        if self.is_fermion:
            return [1j * m for m in self.quadratic_jumps]
        return [m.astype(complex) for m in self.quadratic_jumps]

    def __eq__(self, other):
        if not isinstance(other, ModelSpec):
            return NotImplemented
        return (
            self.statistics is other.statistics
            and self.n_modes == other.n_modes
            and np.array_equal(self.h, other.h)
            and len(self.linear_jumps) == len(other.linear_jumps)
            and all(np.array_equal(a, b) for a, b in zip(self.linear_jumps, other.linear_jumps))
            and len(self.quadratic_jumps) == len(other.quadratic_jumps)
            and all(np.array_equal(a, b) for a, b in zip(self.quadratic_jumps, other.quadratic_jumps))
        )

    __hash__ = None


def _real_matrix(mat, dim: int, name: str) -> np.ndarray:
    try:
        a = np.array(mat, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"{name} is not a real matrix: {exc}") from None
    if a.shape != (dim, dim):
        raise ModelError(f"{name} has shape {a.shape}, expected ({dim}, {dim})")
    if not np.all(np.isfinite(a)):
        raise ModelError(f"{name} has non-finite entries")
    return a


def _check_symmetry(a: np.ndarray, stats: Statistics, name: str) -> None:
    if stats is Statistics.FERMION:
        dev = np.max(np.abs(a + a.T), initial=0.0)
        kind = "antisymmetric"
    else:
        dev = np.max(np.abs(a - a.T), initial=0.0)
        kind = "symmetric"
    if dev > SYMMETRY_TOL:
        raise ModelError(f"{name} must be {kind} for {stats.value}s (deviation {dev:.3e})")


@dataclass(frozen=True)
class JumpMatrixB:
    """``B = sum_r L_r L_r^dag`` with real part ``B_r`` and imaginary part ``B_i``."""

    B: np.ndarray
    B_r: np.ndarray
    B_i: np.ndarray


def build_jump_matrix(model: ModelSpec) -> JumpMatrixB:
    dim = model.dim
    B = np.zeros((dim, dim), dtype=complex)
    for v in model.linear_jumps:
        B += np.outer(v, v.conj())
    B_r = (B + B.conj()).real / 2
    B_i = ((B - B.conj()) / 2j).real
    if dim:
        min_eig = np.linalg.eigvalsh(B).min()
        if min_eig < -PSD_TOL * max(1.0, np.abs(B).max()):
            raise ModelError(f"jump matrix B is not positive semi-definite (min eig {min_eig:.3e})")
    return JumpMatrixB(_freeze(B), _freeze(B_r), _freeze(B_i))


# -- serialization -----------------------------------------------------------


def model_from_dict(doc: dict[str, Any]) -> ModelSpec:
    if not isinstance(doc, dict):
        raise ModelError("model document must be a JSON object")
    missing = {"statistics", "n_modes", "h"} - doc.keys()
    if missing:
        raise ModelError(f"model document is missing fields: {sorted(missing)}")
    unknown = set(doc) - {"statistics", "n_modes", "h", "linear_jumps", "quadratic_jumps", "basis"}
    if unknown:
        raise ModelError(f"unknown model fields: {sorted(unknown)}")
    stats = Statistics.parse(doc["statistics"])
    n = doc["n_modes"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ModelError(f"n_modes must be a positive integer, got {n!r}")
    basis = doc.get("basis", "majorana")
    if basis not in ("majorana", "ladder"):
        raise ModelError(f"basis must be 'majorana' or 'ladder', got {basis!r}")

    jumps = []
    for r, entry in enumerate(doc.get("linear_jumps", [])):
        if not isinstance(entry, dict) or "re" not in entry:
            raise ModelError(f"linear_jumps[{r}] must be an object with 're' (and optional 'im')")
        try:
            re = np.asarray(entry["re"], dtype=float)
            im = np.asarray(entry.get("im", np.zeros_like(re)), dtype=float)
        except (TypeError, ValueError) as exc:
            raise ModelError(f"linear_jumps[{r}]: {exc}") from None
        if re.shape != im.shape or re.ndim != 1:
            raise ModelError(f"linear_jumps[{r}]: 're' and 'im' must be equal-length vectors")
        v = re + 1j * im
        if basis == "ladder":
            if v.size != 2 * n:
                raise ModelError(f"linear_jumps[{r}] has length {v.size}, expected {2 * n}")
            v = ladder_to_majorana(v, n)
        jumps.append(v)

    return ModelSpec(
        statistics=stats,
        n_modes=n,
        h=doc["h"],
        linear_jumps=tuple(jumps),
        quadratic_jumps=tuple(doc.get("quadratic_jumps", [])),
    )


def parse_model(text: str) -> ModelSpec:
    """Parse a JSON model document into a validated :class:`ModelSpec`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"model document is not valid JSON: {exc}") from None
    return model_from_dict(doc)


def model_to_dict(model: ModelSpec) -> dict[str, Any]:
    """Serialize to the JSON schema (always in the Majorana basis)."""
    return {
        "statistics": model.statistics.value,
        "n_modes": model.n_modes,
        "h": model.h.tolist(),
        "linear_jumps": [{"re": v.real.tolist(), "im": v.imag.tolist()} for v in model.linear_jumps],
        "quadratic_jumps": [m.tolist() for m in model.quadratic_jumps],
        "basis": "majorana",
    }


def serialize_model(model: ModelSpec) -> str:
    return json.dumps(model_to_dict(model))


# -- reference models --------------------------------------------------------


def fermion_decay(gamma: float = 1.0) -> ModelSpec:
    """Single fermionic mode with jump ``sqrt(gamma) a``."""
    L = np.sqrt(gamma / 2) * np.array([1.0, -1j])
    return ModelSpec(Statistics.FERMION, 1, np.zeros((2, 2)), (L,))


def boson_damped(gamma: float = 1.0) -> ModelSpec:
    """Single bosonic mode with jump ``sqrt(gamma) a``."""
    L = np.sqrt(gamma / 2) * np.array([1.0, -1j])
    return ModelSpec(Statistics.BOSON, 1, np.zeros((2, 2)), (L,))


def boson_pumped() -> ModelSpec:
    """Single bosonic mode with jump ``a^dag``: unstable, no steady state."""
    L = np.array([1.0, 1j]) / np.sqrt(2)
    return ModelSpec(Statistics.BOSON, 1, np.zeros((2, 2)), (L,))


PRESETS = {
    "fermion_decay": fermion_decay,
    "boson_damped": boson_damped,
    "boson_pumped": boson_pumped,
}
