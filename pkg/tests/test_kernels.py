import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate as spi

from landau_fisher.kernels import (CUTOFF, RAW, KernelSpec, a_matrix, alpha, alpha_log_slope_weight, alpha_tilde,
                                   b_field, eta, eta_self_test, j2_eta_constant, laplacian_alpha_tilde,
                                   origin_cell_average, sqrt_alpha_and_slope)

vec3 = arrays(np.float64, 3, elements=st.floats(-10, 10))


def test_a_matrix_examples():
    np.testing.assert_array_equal(a_matrix([1.0, 0.0, 0.0]), np.diag([0.0, 1.0, 1.0]))


@given(vec3)
def test_a_annihilates_z_and_splits_into_b(z):
    a = a_matrix(z)
    scale = max(float(z @ z), 1e-300)
    assert np.max(np.abs(a @ z)) <= 1e-14 * scale * (1 + np.linalg.norm(z))
    bb = sum(np.outer(b_field(k, z), b_field(k, z)) for k in range(3))
    assert np.max(np.abs(a - bb)) <= 1e-14 * scale
    assert abs(np.trace(a) - 2 * z @ z) <= 1e-14 * scale


def test_b_field_examples():
    e = np.eye(3)
    np.testing.assert_array_equal(b_field(0, e[1]), e[2])
    np.testing.assert_array_equal(b_field(1, e[1]), np.zeros(3))
    with pytest.raises(ValueError):
        b_field(3, e[0])


@given(vec3, st.integers(0, 2))
def test_b_field_orthogonal(z, k):
    assert abs(b_field(k, z) @ z) <= 1e-13 * max(z @ z, 1e-300)


def test_gamma_range_enforced():
    for bad in (-1.0, -2.0, -3.5):
        with pytest.raises(ValueError):
            KernelSpec(bad)
    with pytest.raises(ValueError):
        KernelSpec(-3.0, epsilon=-1.0)
    with pytest.raises(ValueError):
        KernelSpec(-3.0, cutoff_mode="soft")


def test_alpha_tilde_values():
    spec = KernelSpec(-3.0, cutoff_mode=CUTOFF)
    r = np.linspace(1.0, 7.0, 31)
    np.testing.assert_allclose(alpha_tilde(r, spec), r**-3.0, rtol=1e-15)
    assert alpha_tilde(0.25, spec) == pytest.approx(1 / 16, rel=1e-14)
    assert alpha_tilde(0.0, spec) == 0.0
    assert alpha(0.3, spec) == alpha_tilde(0.3, spec)


@pytest.mark.parametrize("gamma", [-3.0, -2.7, -2.2])
def test_alpha_tilde_bounded(gamma):
    r = np.linspace(0.0, 10.0, 100001)
    assert np.max(alpha_tilde(r, KernelSpec(gamma, cutoff_mode=CUTOFF))) <= 2.0**-gamma


def test_raw_alpha_regularisation():
    spec = KernelSpec(-3.0, epsilon=0.5)
    assert alpha(0.0, spec) == pytest.approx(0.5**-3)
    assert alpha(2.0, KernelSpec(-2.5)) == pytest.approx(2.0**-2.5)


def test_eta_self_test_reports_measured_curvature():
    res = eta_self_test()
    assert res["passed"]
    assert eta(0.5) == pytest.approx(1 / 32, abs=1e-15) and eta(1.0) == 1.0
    # a C2 blend from r^5 at 1/2 to 1 at 1 cannot keep eta'' <= 2: the measured value is what downstream uses
    assert res["sup_eta_dd"] == pytest.approx(19.521, abs=1e-3)
    assert KernelSpec(-3.0).eta_sup_dd == res["sup_eta_dd"]


def test_eta_self_test_catches_corrupted_table():
    from landau_fisher.kernels import ETA_BLEND

    bad = ETA_BLEND.copy()
    bad[0] += 1e-3
    res = eta_self_test(bad)
    assert not res["passed"]


@pytest.mark.parametrize("mode", [RAW, CUTOFF])
@pytest.mark.parametrize("gamma", [-3.0, -2.4])
def test_sqrt_alpha_slope_matches_difference(mode, gamma):
    spec = KernelSpec(gamma, cutoff_mode=mode)
    r = np.linspace(0.05, 3.0, 301)
    r = r[(np.abs(r - 0.5) > 1e-3) & (np.abs(r - 1.0) > 1e-3)]
    root, slope = sqrt_alpha_and_slope(r, spec)
    np.testing.assert_allclose(root, np.sqrt(alpha(r, spec)), rtol=1e-13)
    d = 1e-6
    fd = (np.sqrt(alpha(r + d, spec)) - np.sqrt(alpha(r - d, spec))) / (2 * d)
    np.testing.assert_allclose(slope, fd, rtol=1e-6, atol=1e-9)


def test_log_slope_weight_pure_power():
    spec = KernelSpec(-3.0)
    r = np.linspace(0.1, 4.0, 50)
    np.testing.assert_allclose(alpha_log_slope_weight(r, spec), 4.5 * r**-5.0, rtol=1e-13)


def test_laplacian_alpha_tilde_against_radial_difference():
    gamma = -3.0
    spec = KernelSpec(gamma, cutoff_mode=CUTOFF)
    r = np.linspace(0.1, 2.0, 191)
    d = 1e-3
    r = r[(np.abs(r - 0.5) > 3 * d) & (np.abs(r - 1.0) > 3 * d)]  # the third derivative of eta jumps at the knots
    f = lambda x: alpha_tilde(x, spec)
    d2 = (-f(r + 2 * d) + 16 * f(r + d) - 30 * f(r) + 16 * f(r - d) - f(r - 2 * d)) / (12 * d * d)
    d1 = (-f(r + 2 * d) + 8 * f(r + d) - 8 * f(r - d) + f(r - 2 * d)) / (12 * d)
    np.testing.assert_allclose(laplacian_alpha_tilde(r, gamma), d2 + 2 * d1 / r, rtol=1e-6, atol=1e-6)


def test_j2_constant_measured():
    c = j2_eta_constant(-3.0)
    assert c == pytest.approx(13.26, abs=0.01)


@pytest.mark.parametrize("power", [-1.0, -0.5, 0.0, 2.0])
def test_origin_cell_average_against_cartesian_quadrature(power):
    h = 0.7
    val, _ = spi.nquad(lambda x, y, z: (x * x + y * y + z * z) ** (0.5 * power), [[0, h / 2]] * 3,
                       opts={"epsabs": 0.0, "epsrel": 1e-9, "limit": 200})
    assert origin_cell_average(power, h) == pytest.approx(val / (h / 2) ** 3, rel=1e-7)


def _tensor_gauss_cube_average(profile, a, split=8, nodes=6):
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(0.0, a, split + 1)
    pts = ((edges[:-1, None] + edges[1:, None]) / 2 + (edges[1:, None] - edges[:-1, None]) / 2 * x).ravel()
    wts = np.tile((edges[1] - edges[0]) / 2 * w, split)
    X, Y, Z = np.meshgrid(pts, pts, pts, indexing="ij")
    W = wts[:, None, None] * wts[None, :, None] * wts[None, None, :]
    return float(np.sum(W * profile(np.sqrt(X * X + Y * Y + Z * Z)))) / a**3


@pytest.mark.parametrize("h", [0.5, 0.9, 1.6, 3.0])
@pytest.mark.parametrize("power", [-3.0, -1.0])
def test_cutoff_origin_average(h, power):
    spec = KernelSpec(-3.0, cutoff_mode=CUTOFF)
    got = origin_cell_average(power, h, CUTOFF, -3.0)
    ref = _tensor_gauss_cube_average(lambda r: alpha_tilde(r, spec) * r ** (power + 3.0), h / 2)
    # the tensor rule cuts across the spheres r = 1/2 and r = 1 where the third derivative of eta jumps,
    # so it is only good to about 1e-7
    assert got == pytest.approx(ref, rel=1e-6)
    if h * np.sqrt(3) / 2 <= 0.5:
        # whole cell inside r <= 1/2, where alpha_tilde r^(power + 3) = r^(power + 5)
        assert got == pytest.approx(origin_cell_average(power + 5.0, h), rel=1e-12)
