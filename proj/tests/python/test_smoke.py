"""Smoke tests for the python bindings; the heavy verification lives in the
C++ suites."""

import math

import numpy as np
import pytest

import floweval as fe


def grid(n, extent=1.0):
    return fe.Grid.square(n, extent)


def test_score_anchors():
    assert fe.score(1e-6) == pytest.approx(100.0, abs=1e-9)
    assert fe.score(1.0) == pytest.approx(0.0, abs=1e-9)
    assert fe.score(1e-3) == pytest.approx(50.0, abs=1e-9)
    assert fe.score(1e-4) == pytest.approx(200.0 / 3.0, abs=1e-9)
    assert fe.score(5.0) == 0.0  # clamped


def test_sdf_round_trip_against_scipy():
    scipy = pytest.importorskip("scipy.ndimage")
    rng = np.random.default_rng(7)
    g = grid(48)
    blob = scipy.gaussian_filter(rng.standard_normal((g.ny, g.nx)), 6)
    mask = (blob > np.median(blob)).astype(np.float64)

    ours = fe.sdf_from_mask(g, mask)
    d_out = scipy.distance_transform_edt(mask) * g.h
    d_in = scipy.distance_transform_edt(1 - mask) * g.h
    reference = np.where(mask == 1, d_out - g.h / 2, -(d_in - g.h / 2))
    np.testing.assert_allclose(ours, reference, atol=1e-12)

    back = fe.mask_from_sdf(g, ours)
    interior = np.abs(ours) > g.h
    np.testing.assert_array_equal(back[interior], mask[interior].astype(np.uint8))


def test_band_mask_inclusive_bounds():
    g = grid(3)
    sdf = np.full((3, 3), 0.9)
    sdf[0, 0], sdf[0, 1], sdf[1, 0], sdf[1, 1] = 0.1, 0.25, 0.15, 0.05
    band = fe.band_mask(g, sdf, 0.0, 0.2)
    assert band.sum() == 3
    assert band[0, 1] == 0


def test_gradient_exact_on_quadratics():
    g = grid(17)
    x = np.linspace(0, 1, g.nx)
    X, Y = np.meshgrid(x, x, indexing="xy")
    fx, fy = fe.gradient(g, X**2 + X * Y)
    np.testing.assert_allclose(fx, 2 * X + Y, atol=1e-12)
    np.testing.assert_allclose(fy, X, atol=1e-12)
    np.testing.assert_allclose(fe.laplacian(g, X**2 + Y**2), 4.0, atol=1e-10)


def test_momentum_residual_linear_field():
    g = grid(33)
    x = np.linspace(0, 1, g.nx)
    X, Y = np.meshgrid(x, x, indexing="xy")
    rx, ry = fe.momentum_residual(g, X, -Y, np.zeros_like(X), re=100.0)
    np.testing.assert_allclose(rx, X, atol=1e-11)
    np.testing.assert_allclose(ry, Y, atol=1e-11)


def test_m3_approaches_the_analytic_mean():
    g = grid(129)
    x = np.linspace(0, 1, g.nx)
    X, Y = np.meshgrid(x, x, indexing="xy")
    sdf = np.ones_like(X)
    value = fe.m3(g, X, -Y, np.zeros_like(X), 100.0, sdf)
    assert value == pytest.approx(2.0 / 3.0, rel=1e-3)


def test_evaluate_sample_self_prediction():
    g = grid(65)
    made = fe.manufactured_sample("radial-disc", g, re=250.0)
    rep = fe.evaluate_sample(
        g, made["u"], made["v"], made["p"], made["u"], made["v"], made["p"],
        made["sdf"], 250.0,
    )
    assert rep["m1_score"] == 100.0
    assert rep["m2_score"] == 100.0
    assert rep["m3_raw"] > 0.0

    zeros = np.zeros((g.ny, g.nx))
    zero_rep = fe.evaluate_sample(
        g, zeros, zeros, zeros, made["u"], made["v"], made["p"], made["sdf"], 250.0
    )
    assert zero_rep["m1_mse"] == pytest.approx(made["m1_zero_pred"], rel=1e-12)
    assert zero_rep["m2_mse"] < zero_rep["m1_mse"]


def test_splits_are_deterministic():
    ids = [f"s{k:04d}" for k in range(50)]
    res = [10.0 + 19.8 * k for k in range(50)]
    train1, test1 = fe.random_split(ids, res, 0.2, seed=3)
    train2, test2 = fe.random_split(ids, res, 0.2, seed=3)
    assert (train1, test1) == (train2, test2)
    assert len(test1) == 10
    assert not set(train1) & set(test1)

    train, test = fe.extrapolatory_split(ids, res, 0.1)
    test_res = sorted(res[ids.index(t)] for t in test)
    train_res = [res[ids.index(t)] for t in train]
    assert max(test_res[:5]) < min(train_res)
    assert min(test_res[5:]) > max(train_res)


def test_errors_surface_as_exceptions():
    g = grid(8)
    with pytest.raises(fe.FlowEvalError):
        fe.sdf_from_mask(g, np.ones((g.ny, g.nx)))  # single-phase mask
    with pytest.raises(fe.FlowEvalError):
        fe.band_mask(g, -np.ones((g.ny, g.nx)) * 0.5, 0.0, 0.2)  # empty band
    with pytest.raises(fe.FlowEvalError):
        fe.score(-0.5)
