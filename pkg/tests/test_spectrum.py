import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadlind import oracle as orc
from quadlind.covdyn import solve_steady
from quadlind.model import ModelSpec, Statistics, boson_damped, boson_pumped, fermion_decay
from quadlind.random_models import random_fermion_model, random_relaxing_model
from quadlind.spectrum import (
    EnumerationTooLarge,
    SingleParticleSpectrum,
    classify,
    many_body_spectrum,
    multiset_distance,
    pairwise_sums,
    spectrum_X0,
)
from quadlind.structure import build_generator_K, build_structure


def test_sec6_single_particle():
    sp = spectrum_X0(build_structure(boson_pumped()))
    assert np.allclose(sp.xi, [0.5, 0.5])
    assert not sp.defective


def test_fermion_decay_single_particle():
    sp = spectrum_X0(build_structure(fermion_decay()))
    assert np.allclose(sp.xi, [-0.5, -0.5])


def test_nilpotent_is_defective():
    sp = spectrum_X0(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert np.allclose(sp.xi, [0, 0])
    assert sp.defective


def test_ordering_is_deterministic():
    X0 = np.diag([-1.0, 0.0, -3.0, -0.5])
    X0[:2, :2] = [[-1.0, 2.0], [-2.0, -1.0]]
    xi = spectrum_X0(X0).xi
    assert xi[0] == pytest.approx(-0.5)
    assert xi[1] == pytest.approx(-1 - 2j) and xi[2] == pytest.approx(-1 + 2j)
    assert xi[3] == pytest.approx(-3)


def test_fermion_decay_many_body():
    mb = many_body_spectrum(spectrum_X0(build_structure(fermion_decay())), Statistics.FERMION)
    assert np.allclose(mb.values, [0, -0.5, -0.5, -1])
    assert [e.parity for e in mb.eigenvalues] == ["even", "odd", "odd", "even"]
    assert mb.truncation is None


def test_boson_damped_many_body_head():
    mb = many_body_spectrum(spectrum_X0(build_structure(boson_damped())), Statistics.BOSON, N_max=2)
    assert np.allclose(mb.values, [0, -0.5, -0.5, -1, -1, -1])
    assert mb.truncation == 2


def test_boson_requires_truncation():
    with pytest.raises(ValueError):
        many_body_spectrum(spectrum_X0(build_structure(boson_damped())), Statistics.BOSON)


def test_empty_spectrum():
    sp = SingleParticleSpectrum((), False, 1.0, Statistics.FERMION)
    assert np.allclose(many_body_spectrum(sp, Statistics.FERMION).values, [0])


def test_enumeration_cap():
    sp = SingleParticleSpectrum(tuple([-1.0 + 0j] * 20), False, 1.0, Statistics.FERMION)
    with pytest.raises(EnumerationTooLarge):
        many_body_spectrum(sp, Statistics.FERMION)
    assert len(many_body_spectrum(sp, Statistics.FERMION, cap=2**20).eigenvalues) == 2**20


def test_large_fermion_needs_nmax():
    sp = SingleParticleSpectrum(tuple([-1.0 + 0j] * 22), False, 1.0, Statistics.FERMION)
    with pytest.raises(ValueError):
        many_body_spectrum(sp, Statistics.FERMION)
    mb = many_body_spectrum(sp, Statistics.FERMION, N_max=1)
    assert len(mb.eigenvalues) == 23 and mb.truncation == 1


def test_classify_sec6():
    S = build_structure(boson_pumped())
    rep = classify(spectrum_X0(S), solve_steady(S))
    assert not rep.stable and not rep.relaxing and not rep.steady_exists
    assert rep.gap is None


def test_classify_fermion_decay():
    S = build_structure(fermion_decay())
    rep = classify(spectrum_X0(S), solve_steady(S))
    assert rep.stable and rep.relaxing and rep.steady_exists
    assert rep.gap == pytest.approx(0.5) and rep.covariance_gap == pytest.approx(1.0)


def test_classify_marginal():
    sp = SingleParticleSpectrum((0j, -1 + 0j), False, 1.0, Statistics.FERMION)
    rep = classify(sp)
    assert rep.stable and not rep.relaxing and rep.zero_modes == 1


def test_classify_kernel_origin():
    h = np.array([[0.0, 0.3], [-0.3, 0.0]])
    S = build_structure(ModelSpec("fermion", 1, h))
    rep = classify(spectrum_X0(S), solve_steady(S))
    assert rep.kernel_origin == "pair_sum"


def test_many_body_matches_dense_with_sectors():
    rng = np.random.default_rng(5)
    for k in range(10):
        model = random_fermion_model(rng, 1 + k % 2)
        mb = many_body_spectrum(spectrum_X0(build_structure(model)), Statistics.FERMION)
        L = orc.build_dense(model)
        assert multiset_distance(mb.values, orc.dense_spectrum(L)) <= 1e-7
        for sector in ("even", "odd"):
            assert multiset_distance(mb.sector(sector), orc.dense_spectrum(L, sector)) <= 1e-7


def test_multiset_distance():
    assert multiset_distance([1, 2, 3], [3, 1, 2]) == 0
    assert multiset_distance([1, 2], [1, 2, 3]) == np.inf
    assert multiset_distance([1, 2], [1.1, 2]) == pytest.approx(0.1)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), stats=st.sampled_from(["fermion", "boson"]), n=st.integers(1, 3))
def test_pairwise_sums_and_gap(seed, stats, n):
    model = random_relaxing_model(np.random.default_rng(seed), stats, n)
    S = build_structure(model)
    sp = spectrum_X0(S)
    kev = np.linalg.eigvals(build_generator_K(S))
    assert multiset_distance(kev, pairwise_sums(sp)) <= 1e-8
    rep = classify(sp)
    assert -kev.real.max() == pytest.approx(2 * rep.gap, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(1, 3))
def test_many_body_invariants(seed, n):
    sp = spectrum_X0(build_structure(random_fermion_model(np.random.default_rng(seed), n)))
    mb = many_body_spectrum(sp, Statistics.FERMION)
    xi = np.asarray(sp.xi)
    assert len(mb.eigenvalues) == 2 ** (2 * n)
    assert any(e.occupation == (0,) * (2 * n) and e.value == 0 for e in mb.eigenvalues)
    for e in mb.eigenvalues:
        assert set(e.occupation) <= {0, 1}
        assert e.value == pytest.approx(complex(np.dot(e.occupation, xi)), abs=1e-14)
        assert e.parity == ("even" if sum(e.occupation) % 2 == 0 else "odd")
    # conjugate pairing of the real X0
    for z in xi:
        assert np.min(np.abs(xi - np.conj(z))) <= 1e-8
