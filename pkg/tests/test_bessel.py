import numpy as np
import pytest
from scipy.special import ive, kve

from deltaprime import bessel


def scipy_i_scaled(l, z):
    return np.sqrt(np.pi / (2 * z)) * ive(l + 0.5, z)


def scipy_k_scaled(l, z):
    return np.sqrt(np.pi / (2 * z)) * kve(l + 0.5, z)


Z_GRID = [0.01, 0.1, 0.5, 0.9, 2.0, 7.3, 15.0, 40.0, 123.0, 400.0, 800.0]


@pytest.mark.parametrize("l", range(0, 13))
def test_scaled_i_matches_scipy(l):
    for z in Z_GRID:
        ours = bessel.spherical_i_scaled(l, z)
        ref = scipy_i_scaled(l, z)
        assert ours == pytest.approx(ref, rel=1e-12), (l, z)


@pytest.mark.parametrize("l", range(0, 13))
def test_scaled_k_matches_scipy(l):
    for z in Z_GRID:
        ours = bessel.spherical_k_scaled(l, z)
        ref = scipy_k_scaled(l, z)
        assert ours == pytest.approx(ref, rel=1e-12), (l, z)


@pytest.mark.parametrize("l", range(0, 13))
def test_wronskian_identity(l):
    # i_l k_l' - i_l' k_l = -pi/(2 z^2), checked in relative terms
    for z in Z_GRID:
        assert abs(bessel.wronskian_residual(l, z)) < 1e-12, (l, z)


def test_closed_forms_low_order():
    z = 3.7
    assert bessel.spherical_i_scaled(0, z) == pytest.approx(
        np.exp(-z) * np.sinh(z) / z, rel=1e-14)
    assert bessel.spherical_k_scaled(0, z) == pytest.approx(
        np.pi / 2 / z, rel=1e-14)
    assert bessel.spherical_i_scaled_d(0, z) == pytest.approx(
        np.exp(-z) * (np.cosh(z) / z - np.sinh(z) / z**2), rel=1e-13)
    assert bessel.spherical_k_scaled_d(0, z) == pytest.approx(
        -np.pi / 2 * (z + 1) / z**2, rel=1e-14)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        bessel.spherical_i_scaled(0, 0.0)
    with pytest.raises(ValueError):
        bessel.spherical_i_scaled(-1, 1.0)
    with pytest.raises(ValueError):
        bessel.spherical_k_scaled(2, -1.0)
