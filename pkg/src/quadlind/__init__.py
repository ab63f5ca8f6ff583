"""Quasi-free and quadratic Lindblad master equations in the Majorana representation.

Majorana operators are normalized so that fermionic ones satisfy
``{w_i, w_j} = delta_ij`` and bosonic ones ``[w_a, w_b] = tau_ab``, ordered
``(w_{1+}..w_{n+}, w_{1-}..w_{n-})`` with ``w_+ = (a + a^dag)/sqrt(2)`` and
``w_- = i (a - a^dag)/sqrt(2)``. Indices are 0-based.
"""

from .covdyn import (
    CovarianceMatrix,
    SteadyStateResult,
    check_physical,
    evolve_closed_form,
    evolve_integrate,
    solve_lyapunov,
    solve_steady,
)
from .model import ModelError, ModelSpec, Statistics, build_jump_matrix, parse_model, serialize_model
from .spectrum import classify, many_body_spectrum, spectrum_X0
from .structure import build_generator_K, build_structure

__all__ = [
    "CovarianceMatrix",
    "ModelError",
    "ModelSpec",
    "Statistics",
    "SteadyStateResult",
    "build_generator_K",
    "build_jump_matrix",
    "build_structure",
    "check_physical",
    "classify",
    "evolve_closed_form",
    "evolve_integrate",
    "many_body_spectrum",
    "parse_model",
    "serialize_model",
    "solve_lyapunov",
    "solve_steady",
    "spectrum_X0",
]
