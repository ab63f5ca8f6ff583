import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadlind.model import (
    ModelError,
    ModelSpec,
    Statistics,
    boson_pumped,
    build_jump_matrix,
    fermion_decay,
    ladder_to_majorana,
    model_to_dict,
    parse_model,
    serialize_model,
)
from quadlind.random_models import random_model


def _doc(**kw):
    doc = {"statistics": "fermion", "n_modes": 1, "h": [[0, 0], [0, 0]]}
    doc.update(kw)
    return json.dumps(doc)


def test_parse_fermion_decay_document():
    s = 1 / np.sqrt(2)
    model = parse_model(_doc(linear_jumps=[{"re": [s, 0], "im": [0, -s]}]))
    assert model.statistics is Statistics.FERMION
    assert model.n_modes == 1
    assert np.allclose(model.linear_jumps[0], fermion_decay(1.0).linear_jumps[0])


def test_parse_sec6_boson_document():
    s = 1 / np.sqrt(2)
    model = parse_model(_doc(statistics="boson", linear_jumps=[{"re": [s, 0], "im": [0, s]}]))
    assert model.statistics is Statistics.BOSON
    assert np.allclose(model.linear_jumps[0], boson_pumped().linear_jumps[0])


def test_ladder_basis_matches_majorana():
    # a^dag on one mode
    ladder = parse_model(_doc(statistics="boson", basis="ladder", linear_jumps=[{"re": [0, 1]}]))
    assert np.allclose(ladder.linear_jumps[0], boson_pumped().linear_jumps[0])
    assert np.allclose(ladder_to_majorana([1, 0], 1), [1 / np.sqrt(2), -1j / np.sqrt(2)])


def test_fermion_h_not_antisymmetric_rejected():
    with pytest.raises(ModelError, match="antisymmetric|symmetr"):
        parse_model(_doc(h=[[0, 1], [1, 0]]))


def test_boson_h_not_symmetric_rejected():
    with pytest.raises(ModelError):
        parse_model(_doc(statistics="boson", h=[[0, 1], [-1, 0]]))


def test_symmetry_tolerance_is_hard():
    h = [[0, 1], [-1 + 1e-9, 0]]
    with pytest.raises(ModelError):
        parse_model(_doc(h=h))


@pytest.mark.parametrize(
    "doc",
    [
        {"statistics": "anyon", "n_modes": 1, "h": [[0, 0], [0, 0]]},
        {"statistics": "fermion", "n_modes": 0, "h": []},
        {"statistics": "fermion", "n_modes": 1, "h": [[0, 0, 0], [0, 0, 0], [0, 0, 0]]},
        {"statistics": "fermion", "n_modes": 1},
        {"statistics": "fermion", "n_modes": 1, "h": [[0, 0], [0, 0]], "extra": 1},
        {"statistics": "fermion", "n_modes": 1, "h": [[0, 0], [0, 0]], "linear_jumps": [{"re": [1, 0, 0]}]},
    ],
)
def test_invalid_documents(doc):
    with pytest.raises(ModelError):
        parse_model(json.dumps(doc))


def test_invalid_json():
    with pytest.raises(ModelError):
        parse_model("{not json")


def test_jump_matrix_sec6():
    B = build_jump_matrix(boson_pumped())
    assert np.allclose(B.B, 0.5 * np.array([[1, -1j], [1j, 1]]))
    assert np.allclose(B.B_r, 0.5 * np.eye(2))
    assert np.allclose(B.B_i, 0.5 * np.array([[0, -1], [1, 0]]))


def test_jump_matrix_empty():
    model = ModelSpec("fermion", 2, np.zeros((4, 4)))
    B = build_jump_matrix(model)
    assert np.all(B.B == 0) and np.all(B.B_r == 0) and np.all(B.B_i == 0)


def test_jump_matrix_fermion_decay():
    # independent: outer product by hand
    L = np.array([1, -1j]) / np.sqrt(2)
    expected = np.outer(L, L.conj())
    B = build_jump_matrix(fermion_decay(1.0))
    assert np.allclose(B.B, expected)
    assert np.allclose(B.B_i, 0.5 * np.array([[0, 1], [-1, 0]]))


def test_model_is_immutable():
    model = fermion_decay()
    with pytest.raises(ValueError):
        model.h[0, 0] = 1.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), stats=st.sampled_from(["fermion", "boson"]),
       n=st.integers(1, 3), n_quad=st.integers(0, 2))
def test_jump_matrix_invariants(seed, stats, n, n_quad):
    model = random_model(np.random.default_rng(seed), stats, n, n_quadratic=n_quad)
    B = build_jump_matrix(model)
    assert np.allclose(B.B, B.B.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(B.B).min() >= -1e-12
    assert np.allclose(B.B_r, B.B_r.T, atol=1e-14)
    assert np.allclose(B.B_i, -B.B_i.T, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), stats=st.sampled_from(["fermion", "boson"]), n=st.integers(1, 3))
def test_serialization_round_trip(seed, stats, n):
    model = random_model(np.random.default_rng(seed), stats, n, n_quadratic=1)
    again = parse_model(serialize_model(model))
    assert again == model
    assert model_to_dict(again) == model_to_dict(model)
