"""Seeded random model generators used by the property and acceptance suites."""

from __future__ import annotations

import numpy as np

from .model import ModelSpec, Statistics, ladder_to_majorana
from .spectrum import spectrum_X0
from .structure import build_structure


def _antisym(rng: np.random.Generator, dim: int, scale: float) -> np.ndarray:
    a = rng.normal(scale=scale, size=(dim, dim))
    return a - a.T


def _sym(rng: np.random.Generator, dim: int, scale: float) -> np.ndarray:
    a = rng.normal(scale=scale, size=(dim, dim))
    return (a + a.T) / 2


def _jumps(rng: np.random.Generator, dim: int, count: int, scale: float) -> tuple:
    return tuple(
        scale * (rng.normal(size=dim) + 1j * rng.normal(size=dim)) / np.sqrt(2 * dim)
        for _ in range(count)
    )


def random_fermion_model(rng: np.random.Generator, n_modes: int, n_linear: int | None = None,
                         n_quadratic: int = 0, scale: float = 1.0) -> ModelSpec:
    """Random fermionic model with ``n_linear`` linear and ``n_quadratic`` quadratic jumps."""
    dim = 2 * n_modes
    n_linear = dim if n_linear is None else n_linear
    h = _antisym(rng, dim, 0.5 * scale)
    lin = _jumps(rng, dim, n_linear, scale)
    quad = tuple(_antisym(rng, dim, 0.5 * scale) for _ in range(n_quadratic))
    return ModelSpec(Statistics.FERMION, n_modes, h, lin, quad)


def random_boson_model(rng: np.random.Generator, n_modes: int, n_linear: int | None = None,
                       n_quadratic: int = 0, scale: float = 1.0) -> ModelSpec:
    """Random bosonic model; generally neither stable nor relaxing."""
    dim = 2 * n_modes
    n_linear = dim if n_linear is None else n_linear
    h = _sym(rng, dim, 0.5 * scale)
    lin = _jumps(rng, dim, n_linear, scale)
    quad = tuple(_sym(rng, dim, 0.5 * scale) for _ in range(n_quadratic))
    return ModelSpec(Statistics.BOSON, n_modes, h, lin, quad)


def random_model(rng: np.random.Generator, statistics, n_modes: int, **kw) -> ModelSpec:
    if Statistics.parse(statistics) is Statistics.FERMION:
        return random_fermion_model(rng, n_modes, **kw)
    return random_boson_model(rng, n_modes, **kw)


def random_relaxing_model(rng: np.random.Generator, statistics, n_modes: int,
                          margin: float = 0.05, max_tries: int = 1000, **kw) -> ModelSpec:
    """Rejection-sample until ``max Re xi(X0) < -margin`` and X0 is diagonalizable."""
    stats = Statistics.parse(statistics)
    for _ in range(max_tries):
        if stats is Statistics.BOSON:
            # damping-dominated: annihilation-heavy jumps, weak Hamiltonian
            model = _damped_boson(rng, n_modes, **kw)
        else:
            model = random_fermion_model(rng, n_modes, **kw)
        sp = spectrum_X0(build_structure(model))
        if sp.max_real < -margin and not sp.defective:
            return model
    raise RuntimeError(f"no relaxing {stats.value} model found in {max_tries} draws")


def _damped_boson(rng: np.random.Generator, n_modes: int, n_linear: int | None = None,
                  n_quadratic: int = 0, scale: float = 1.0) -> ModelSpec:
    dim = 2 * n_modes
    n_linear = n_modes if n_linear is None else n_linear
    h = _sym(rng, dim, 0.3 * scale)
    lin = []
    for _ in range(n_linear):
        # mostly a, a little a^dag: c_a a + c_d a^dag in the Majorana basis
        alpha = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
        beta = 0.3 * (rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes))
        v = ladder_to_majorana(np.concatenate([alpha, beta]), n_modes)
        lin.append(scale * v / np.sqrt(n_modes))
    quad = tuple(_sym(rng, dim, 0.3 * scale) for _ in range(n_quadratic))
    return ModelSpec(Statistics.BOSON, n_modes, h, tuple(lin), quad)
