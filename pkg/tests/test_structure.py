import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadlind import oracle as orc
from quadlind.model import ModelSpec, Statistics, boson_pumped, build_jump_matrix, fermion_decay
from quadlind.random_models import random_model
from quadlind.structure import (
    GeneratorTooLarge,
    StructureSet,
    build_generator_K,
    build_structure,
    generator_operator,
    symplectic_form,
    unvec,
    vec,
)


def test_sec6_structure():
    S = build_structure(boson_pumped())
    assert np.allclose(S.X0, 0.5 * np.eye(2), atol=1e-15)
    assert np.allclose(S.Y, 0.5 * np.eye(2), atol=1e-15)
    assert S.Z == ()


def test_sec6_generator_is_identity():
    K = build_generator_K(build_structure(boson_pumped()))
    assert np.allclose(K, np.eye(4), atol=1e-15)


def test_fermion_decay_structure():
    S = build_structure(fermion_decay(1.0))
    assert np.allclose(S.X, -0.5 * np.eye(2))
    assert np.allclose(S.Y, 0.5 * np.array([[0, 1], [-1, 0]]))
    assert np.allclose(build_generator_K(S), -np.eye(4))


def test_zero_model():
    S = build_structure(ModelSpec("fermion", 2, np.zeros((4, 4))))
    assert np.all(S.X == 0) and np.all(S.Y == 0) and S.Z == ()


def test_single_identity_Z():
    S = StructureSet(Statistics.FERMION, 1, np.zeros((2, 2)), np.zeros((2, 2)), (np.eye(2),), np.zeros((2, 2)))
    assert np.allclose(build_generator_K(S), 2 * np.eye(4))


def test_omega_squares_to_minus_identity():
    om = symplectic_form(3)
    assert np.allclose(om @ om, -np.eye(6))


@pytest.mark.parametrize("stats", ["fermion", "boson"])
def test_real_form_matches_complex_form(rng, stats):
    # quasi-free part written with the complex Hamiltonian and tau
    model = random_model(rng, stats, 2)
    S = build_structure(model)
    B = build_jump_matrix(model)
    H = model.hamiltonian_matrix()
    if stats == "fermion":
        X0 = -2j * H - B.B_r
        Y = B.B_i
    else:
        tau = 1j * symplectic_form(2)
        X0 = -2j * tau @ H + 1j * tau @ B.B_i
        Y = tau @ B.B_r @ tau
    assert np.abs(X0.imag).max() < 1e-12 and np.abs(Y.imag).max() < 1e-12
    assert np.allclose(S.X0, X0.real, atol=1e-13)
    assert np.allclose(S.Y, Y.real, atol=1e-13)


def _random_state(rng, dim, support):
    psi = rng.normal(size=(dim, support)) + 1j * rng.normal(size=(dim, support))
    psi[support:] = 0.0
    rho = psi @ psi.conj().T
    return rho / np.trace(rho)


@pytest.mark.parametrize("stats,cutoff,support", [("fermion", None, 16), ("boson", 6, 4)])
def test_equation_of_motion_against_oracle(rng, stats, cutoff, support):
    # d Gamma/dt of an arbitrary state equals rhs(Gamma): closure of the two-point equations
    for _ in range(5):
        model = random_model(rng, stats, 2, n_quadratic=2)
        S = build_structure(model)
        L = orc.build_dense(model, cutoff=cutoff)
        if stats == "boson":
            # keep the support on the lowest levels of both modes
            idx = [i * cutoff + j for i in range(2) for j in range(2)]
            rho = np.zeros((L.D, L.D), dtype=complex)
            sub = _random_state(rng, 4, 4)
            rho[np.ix_(idx, idx)] = sub
        else:
            rho = _random_state(rng, L.D, support)
        g = orc.covariance_from_rho(L.rep, rho).gamma
        drho = L.apply(rho)
        dim = 2 * model.n_modes
        dg = np.zeros((dim, dim))
        for a in range(dim):
            for b in range(dim):
                pab = L.rep.w[a] @ L.rep.w[b]
                pba = L.rep.w[b] @ L.rep.w[a]
                if stats == "fermion":
                    dg[a, b] = np.real(0.5j * np.trace((pab - pba) @ drho))
                else:
                    dg[a, b] = np.real(0.5 * np.trace((pab + pba) @ drho))
        assert np.allclose(S.rhs(g), dg, atol=1e-10)


def test_vec_round_trip(rng):
    g = rng.normal(size=(4, 4))
    assert np.array_equal(unvec(vec(g), 4), g)


@pytest.mark.parametrize("stats", ["fermion", "boson"])
def test_matrix_free_action_matches_dense(rng, stats):
    model = random_model(rng, stats, 2, n_quadratic=1)
    S = build_structure(model)
    K = build_generator_K(S)
    op = generator_operator(S)
    v = rng.normal(size=16)
    assert np.allclose(op.matvec(v), K @ v)
    assert np.allclose(op.rmatvec(v), K.T @ v)


def test_dense_cap(monkeypatch):
    S = build_structure(random_model(np.random.default_rng(0), "fermion", 3))
    monkeypatch.setenv("LQ_CAP_DENSE", "2")
    with pytest.raises(GeneratorTooLarge):
        build_generator_K(S)
    monkeypatch.setenv("LQ_CAP_DENSE", "3")
    assert build_generator_K(S).shape == (36, 36)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), stats=st.sampled_from(["fermion", "boson"]),
       n=st.integers(1, 3), n_quad=st.integers(0, 2))
def test_symmetry_class_preserved(seed, stats, n, n_quad):
    rng = np.random.default_rng(seed)
    S = build_structure(random_model(rng, stats, n, n_quadratic=n_quad))
    g = rng.normal(size=(2 * n, 2 * n))
    sign = -1 if stats == "fermion" else 1
    g = g + sign * g.T
    out = unvec(build_generator_K(S) @ vec(g), 2 * n)
    assert np.allclose(out, sign * out.T, atol=1e-12)
    assert all(np.isfinite(a).all() for a in (S.X, S.Y, *S.Z))


def test_fermion_always_stable():
    rng = np.random.default_rng(7)
    for k in range(100):
        model = random_model(rng, "fermion", 1 + k % 3, n_quadratic=k % 3)
        ev = np.linalg.eigvals(build_generator_K(build_structure(model)))
        assert ev.real.max() <= 1e-10
