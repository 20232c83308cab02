import math

import numpy as np
import pytest

from panelscale import SmoothingKernel, kernel_eval, kernel_weights, lambda_correction
from panelscale.kernels import KERNEL_KINDS, weights_matrix

import oracles

# high-precision oracle values (mpmath, 40 digits)
LAMBDA_005 = 2.1459660262893472
LAMBDA_QUARTER = 1.1774100225154747  # sqrt(2 log 2)


def test_epanechnikov_point_values():
    k = SmoothingKernel("epanechnikov")
    assert kernel_eval(k, 0.0) == 0.75
    assert kernel_eval(k, 1.5) == 0.0
    assert kernel_eval(k, -0.5) == kernel_eval(k, 0.5)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        SmoothingKernel("gaussian")


@pytest.mark.parametrize("kind", KERNEL_KINDS)
def test_kernel_axioms_numeric(kind):
    # (compact support, symmetry, nonnegativity, unit mass, squared mass > 1/2)
    k = SmoothingKernel(kind)
    zs = np.linspace(-2, 2, 4001)
    vals = kernel_eval(k, zs)
    assert np.all(vals >= 0)
    assert np.all(vals[np.abs(zs) > 1] == 0)
    assert np.allclose(vals, vals[::-1])
    mass, sq = oracles.riemann_kernel_integral(kind)
    assert abs(mass - 1.0) < 1e-6
    assert sq > 0.5


def test_epanechnikov_squared_mass_exact():
    # closed form 3/5 from the symbolic oracle
    _, sq = oracles.riemann_kernel_integral("epanechnikov")
    assert abs(sq - 0.6) < 1e-6


def test_kernel_weights_support_window():
    k = SmoothingKernel("epanechnikov")
    w = kernel_weights(k, 10, 0.5, 0.2)
    positive = {t + 1 for t in range(10) if w[t] > 0}
    assert positive == {4, 5, 6}
    # t=3 and t=7 sit exactly on the support edge
    assert w[2] == 0.0 and w[6] == 0.0


def test_kernel_weights_boundary_location():
    k = SmoothingKernel("epanechnikov")
    w = kernel_weights(k, 50, 0.0, 0.1)
    times = np.arange(1, 51) / 50
    assert np.all(w[times > 0.1] == 0)


def test_kernel_weights_riemann_sum():
    # sum of weights / (Th) approximates the unit mass for interior u
    k = SmoothingKernel("epanechnikov")
    T, u, h = 400, 0.5, 0.1
    w = kernel_weights(k, T, u, h)
    assert abs(w.sum() / (T * h) - 1.0) < 2.0 / (T * h)


def test_kernel_weights_matches_loop_oracle():
    for kind in KERNEL_KINDS:
        k = SmoothingKernel(kind)
        w = kernel_weights(k, 23, 0.37, 0.21)
        ref = oracles.naive_weights(kind, 23, 0.37, 0.21)
        np.testing.assert_allclose(w, ref, atol=1e-15)


def test_weights_matrix_rows_match_single_calls():
    k = SmoothingKernel("biweight")
    us = np.array([0.3, 0.5, 0.9])
    hs = np.array([0.1, 0.25, 0.1])
    W = weights_matrix(k, 37, us, hs)
    for row, (u, h) in zip(W, zip(us, hs)):
        np.testing.assert_array_equal(row, kernel_weights(k, 37, u, h))


def test_weights_lipschitz_in_u():
    # finite-difference slope bounded by C/h for the built-in kernels
    step = 1e-6
    for kind in KERNEL_KINDS:
        k = SmoothingKernel(kind)
        T, h = 64, 0.125
        w0 = kernel_weights(k, T, 0.43, h)
        w1 = kernel_weights(k, T, 0.43 + step, h)
        slope = np.abs(w1 - w0).max() / step
        assert slope <= 3.0 / h


def test_lambda_values():
    assert lambda_correction(0.5) == 0.0
    assert abs(lambda_correction(1.0 / (2.0 * math.e)) - math.sqrt(2.0)) < 1e-15
    assert abs(lambda_correction(0.05) - LAMBDA_005) < 1e-12
    assert abs(lambda_correction(0.25) - LAMBDA_QUARTER) < 1e-12


def test_lambda_domain():
    with pytest.raises(ValueError):
        lambda_correction(0.6)
    with pytest.raises(ValueError):
        lambda_correction(0.0)


def test_lambda_strictly_decreasing():
    hs = np.linspace(0.01, 0.5, 200)
    vals = [lambda_correction(h) for h in hs]
    assert all(a > b for a, b in zip(vals, vals[1:]))
