import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semrel.errors import ConfigError, NumericalError
from semrel.linalg_pca import PcaModel, fit_pca


DIAG = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])


def test_diagonal_line_fixture():
    model = fit_pca(DIAG)
    inv = 1 / math.sqrt(2)
    assert np.allclose(model.components[0], [inv, inv], atol=1e-12)
    assert model.explained_variance[0] == pytest.approx(2.0)
    assert model.explained_variance[1] == pytest.approx(0.0, abs=1e-12)


def test_axis_aligned_data_gives_identity_rows():
    data = np.array([[-3.0, 0.0], [3.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    model = fit_pca(data)
    assert np.allclose(np.abs(model.components), np.eye(2), atol=1e-12)
    assert np.allclose(model.components, np.eye(2), atol=1e-12)  # sign convention
    assert model.explained_variance[0] > model.explained_variance[1]


def test_transform_of_mean_is_zero():
    model = fit_pca(DIAG)
    assert np.allclose(model.transform(np.array([1.0, 1.0])), [0.0, 0.0], atol=1e-12)


def test_one_dimensional_model_is_centering():
    model = fit_pca(np.array([[1.0], [3.0], [5.0]]))
    assert model.components[0, 0] == pytest.approx(1.0)
    assert model.transform(np.array([4.0]))[0] == pytest.approx(4.0 - 3.0)


def test_full_rank_reconstruction():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(20, 8))
    model = fit_pca(X, k=8)
    Z = model.transform_many(X)
    reconstructed = Z @ model.components + model.mean
    assert np.max(np.abs(reconstructed - X)) < 1e-8


def test_orthonormality_and_variance_order():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(40, 6)) * np.array([5, 4, 3, 2, 1, 0.5])
    model = fit_pca(X)
    G = model.components @ model.components.T
    assert np.max(np.abs(G - np.eye(model.k))) <= 1e-8
    ev = model.explained_variance
    assert all(ev[i] >= ev[i + 1] - 1e-12 for i in range(len(ev) - 1))
    Z = model.transform_many(X)
    col_var = Z.var(axis=0, ddof=1)
    assert np.allclose(col_var, ev, atol=1e-8)
    assert np.max(np.abs(Z.mean(axis=0))) <= 1e-8
    total = X.var(axis=0, ddof=1).sum()
    assert ev.sum() == pytest.approx(total, rel=1e-6)


def test_errors():
    with pytest.raises(NumericalError):
        fit_pca(np.array([[1.0, 2.0]]))
    with pytest.raises(ConfigError):
        fit_pca(DIAG, k=3)
    with pytest.raises(ConfigError):
        fit_pca(DIAG, k=0)
    with pytest.raises(NumericalError):
        fit_pca(np.array([[1.0, np.nan], [2.0, 3.0]]))
    model = fit_pca(DIAG)
    with pytest.raises(ConfigError, match="length"):
        model.transform(np.ones(5))


def test_default_k_is_min_of_dim_and_samples():
    rng = np.random.default_rng(5)
    tall = fit_pca(rng.normal(size=(10, 3)))
    assert tall.k == 3
    wide = fit_pca(rng.normal(size=(3, 10)))
    assert wide.k == 3


def test_save_load_round_trip(tmp_path):
    model = fit_pca(np.random.default_rng(9).normal(size=(12, 4)))
    model.save(tmp_path / "pca.json")
    again = PcaModel.load(tmp_path / "pca.json")
    v = np.array([0.3, -1.2, 4.5, 0.0])
    assert np.allclose(model.transform(v), again.transform(v), atol=1e-9)
    d = json.loads((tmp_path / "pca.json").read_text(encoding="utf-8"))
    assert set(d) == {"mean", "components", "explained_variance"}


def test_save_is_byte_deterministic(tmp_path):
    X = np.random.default_rng(10).normal(size=(15, 5))
    fit_pca(X).save(tmp_path / "a.json")
    fit_pca(X).save(tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_load_rejects_malformed(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"mean": [0], "components": "nope"}', encoding="utf-8")
    with pytest.raises(ConfigError):
        PcaModel.load(path)


def test_sign_convention_largest_coordinate_positive():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(30, 5))
    model = fit_pca(X)
    for row in model.components:
        assert row[np.argmax(np.abs(row))] > 0


@given(st.integers(min_value=2, max_value=12), st.integers(min_value=2, max_value=6),
       st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_pca_invariants_random(n, d, seed):
    X = np.random.default_rng(seed).normal(size=(n, d))
    model = fit_pca(X)
    assert model.k == min(n, d)
    G = model.components @ model.components.T
    assert np.max(np.abs(G - np.eye(model.k))) <= 1e-8
    Z = model.transform_many(X)
    assert np.max(np.abs(Z.mean(axis=0))) <= 1e-8
