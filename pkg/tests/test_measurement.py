"""Implicit measurement operator: adjoint consistency, distribution scaling,
dataset synthesis, and the isometry probe."""

import numpy as np
import pytest

from tuckreg import measurement as meas, model as mdl, tensor as tn

DIMS = (5, 4, 3)


def test_sensing_tensor_deterministic_and_order_free():
    op = meas.LinearMapSpec(m=6, dims=DIMS, seed=3)
    x4 = op.sensing_tensor(4)
    x1 = op.sensing_tensor(1)
    np.testing.assert_array_equal(op.sensing_tensor(4), x4)
    np.testing.assert_array_equal(op.sensing_tensor(1), x1)
    assert np.any(x1 != x4)
    with pytest.raises(ValueError):
        op.sensing_tensor(6)


@pytest.mark.parametrize("dist", meas.DISTRIBUTIONS)
def test_entry_variance_is_inverse_m(dist):
    m = 40
    op = meas.LinearMapSpec(m=m, dims=(20, 20), seed=9, distribution=dist)
    entries = np.concatenate([op.sensing_tensor(i).ravel() for i in range(m)])
    assert abs(entries.mean()) < 3.0 / np.sqrt(entries.size * m)
    assert entries.var() == pytest.approx(1.0 / m, rel=0.05)
    if dist == "rademacher":
        assert np.all(np.abs(entries) * np.sqrt(m) == pytest.approx(1.0, abs=1e-12))


@pytest.mark.parametrize("dist", meas.DISTRIBUTIONS)
def test_apply_matches_explicit_inner_products(dist):
    op = meas.LinearMapSpec(m=7, dims=DIMS, seed=5, distribution=dist)
    rng = np.random.default_rng(0)
    z = rng.standard_normal(DIMS)
    y = op.apply(z)
    for i in range(op.m):
        assert y[i] == pytest.approx(tn.inner(op.sensing_tensor(i), z), rel=1e-14)


def test_adjoint_identity_small():
    op = meas.LinearMapSpec(m=9, dims=DIMS, seed=8)
    rng = np.random.default_rng(1)
    for _ in range(20):
        z = rng.standard_normal(DIMS)
        v = rng.standard_normal(op.m)
        lhs = float(np.dot(op.apply(z), v))
        rhs = tn.inner(z, op.adjoint(v))
        assert abs(lhs - rhs) / (tn.frob_norm(z) * np.linalg.norm(v)) <= 1e-10


def test_shape_validation():
    op = meas.LinearMapSpec(m=3, dims=DIMS, seed=0)
    with pytest.raises(ValueError):
        op.apply(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        op.adjoint(np.zeros(4))
    with pytest.raises(ValueError):
        meas.LinearMapSpec(m=0, dims=DIMS, seed=0)
    with pytest.raises(ValueError):
        meas.LinearMapSpec(m=1, dims=DIMS, seed=0, distribution="cauchy")


def test_synthesize_noiseless_and_noise_determinism():
    op = meas.LinearMapSpec(m=12, dims=DIMS, seed=2)
    b = mdl.gen_model(DIMS, (2, 2, 2), (2, 2, 2), 0.5, 1).compose()
    clean = meas.synthesize(b, op, 0.0, noise_seed=7)
    np.testing.assert_array_equal(clean.y, op.apply(b))
    noisy1 = meas.synthesize(b, op, 0.3, noise_seed=7)
    noisy2 = meas.synthesize(b, op, 0.3, noise_seed=7)
    np.testing.assert_array_equal(noisy1.y, noisy2.y)
    assert np.any(noisy1.y != clean.y)
    with pytest.raises(ValueError):
        meas.synthesize(b, op, -1.0, 0)


def test_rip_probe_shrinks_with_m():
    dims, rank, sp = (6, 6, 6), (2, 2, 2), (2, 2, 2)
    small = meas.rip_probe(meas.LinearMapSpec(m=20, dims=dims, seed=4), dims, rank, sp, 1.0, 15, 0)
    large = meas.rip_probe(meas.LinearMapSpec(m=2000, dims=dims, seed=4), dims, rank, sp, 1.0, 15, 0)
    assert len(small["samples"]) == 15
    assert 0 <= large["delta_hat"] < small["delta_hat"]
    assert large["delta_hat"] < 0.5


def test_dataset_roundtrip(tmp_path):
    op = meas.LinearMapSpec(m=5, dims=DIMS, seed=13, distribution="uniform")
    b = mdl.gen_model(DIMS, (1, 1, 1), (2, 2, 2), 0.5, 3).compose()
    data = meas.synthesize(b, op, 0.2, noise_seed=99)
    meas.save_dataset(tmp_path / "d", data, model_ref="m")
    back, man = meas.load_dataset(tmp_path / "d")
    np.testing.assert_array_equal(back.y, data.y)
    assert back.map == op and man["model_ref"] == "m"
