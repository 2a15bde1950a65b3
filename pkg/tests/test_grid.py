import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import maxwellian, maxwellian_values
from landau_fisher.grid import (Density, GridError, WeightedNorm, gradient, hessian, integrate,
                                log_derivatives, make_grid, weighted_lp_norm)


def test_small_grid_geometry():
    g = make_grid(4, 2.0)
    assert g.h == 1.0
    np.testing.assert_array_equal(g.mesh[:, 0, 0, 0], [-1.5, -1.5, -1.5])
    g16 = make_grid(16, 8.0)
    assert g16.h == 1.0 and g16.mesh[0].size == 16**3


@given(st.integers(4, 64), st.floats(0.1, 50.0))
def test_spacing_times_count_is_box(n, L):
    g = make_grid(n, L)
    assert abs(g.h * g.n - 2 * L) <= 4 * np.spacing(2 * L)
    assert g.cell_volume > 0


@pytest.mark.parametrize("n", [4, 6, 8, 16])
def test_even_grids_avoid_origin(n):
    g = make_grid(n, 3.0)
    assert np.min(g.speed_sq) > 0


@pytest.mark.parametrize("n, L", [(3, 1.0), (0, 1.0), (8, float("inf")), (8, -1.0)])
def test_rejects_bad_grids(n, L):
    with pytest.raises(GridError):
        make_grid(n, L)


def test_integrate_constant_and_gaussian(wide_maxwellian):
    g = make_grid(8, 2.0)
    assert integrate(g, np.ones(g.shape)) == 64.0
    assert abs(wide_maxwellian.mass() - 1.0) < 1e-6


def test_integrate_odd_field_vanishes():
    g = make_grid(16, 4.0)
    field = g.mesh[0] * np.exp(-g.speed_sq)
    assert abs(integrate(g, field)) <= 1e-12 * g.cell_volume * np.sum(np.abs(field))


def test_integrate_names_bad_cell():
    g = make_grid(4, 1.0)
    vals = np.ones(g.shape)
    vals[1, 2, 3] = np.nan
    with pytest.raises(GridError, match=r"\(1, 2, 3\)"):
        integrate(g, vals)


def test_integrate_is_deterministic(rng):
    g = make_grid(16, 3.0)
    vals = rng.random(g.shape)
    assert integrate(g, vals) == integrate(g, vals.copy())


def test_density_rejects_negative_cell():
    g = make_grid(4, 1.0)
    vals = np.ones(g.shape)
    vals[0, 1, 2] = -1e-3
    with pytest.raises(GridError, match="negative"):
        Density(g, vals)


def test_stencils_exact_on_polynomials():
    g = make_grid(12, 3.0)
    v = g.mesh
    interior = g.interior_mask(3)
    grad = gradient(g, 2.5 * v[0] - v[2])
    assert np.max(np.abs(grad[0][interior] - 2.5)) < 1e-12
    assert np.max(np.abs(grad[2][interior] + 1.0)) < 1e-12
    H = hessian(g, 0.5 * g.speed_sq)
    np.testing.assert_allclose(H[..., interior].transpose(2, 0, 1), np.broadcast_to(np.eye(3), (interior.sum(), 3, 3)),
                               atol=1e-10)
    np.testing.assert_array_equal(H, np.swapaxes(H, 0, 1))


def test_maxwellian_log_derivatives():
    f = maxwellian(24, 4.5, T=1.0, mean=(0.3, 0.0, 0.0))
    logd = log_derivatives(f)
    inner = f.grid.interior_mask(3)
    v = f.grid.mesh
    assert np.max(np.abs(logd.grad[0][inner] + (v[0][inner] - 0.3))) < 1e-8
    assert np.max(np.abs(logd.hess[0, 0][inner] + 1.0)) < 1e-8


def test_constant_density_has_flat_log():
    g = make_grid(8, 2.0)
    logd = log_derivatives(Density(g, np.full(g.shape, 0.7)))
    assert np.max(np.abs(logd.grad)) < 1e-13 and np.max(np.abs(logd.hess)) < 1e-12


def test_zero_cell_is_floored():
    g = make_grid(8, 2.0)
    vals = maxwellian_values(g)
    vals[0, 0, 0] = 0.0
    vals[4, 4, 4] = 0.0
    logd = log_derivatives(Density(g, vals, floor=1e-3))
    assert logd.floored[0, 0, 0] and logd.floored[4, 4, 4]
    assert logd.floored_mass_fraction > 0


def _gaussian_orders(field, exact_grad, exact_hess, ns, order):
    errs = []
    for n in ns:
        g = make_grid(n, 4.0)
        inner = g.interior_mask(n // 4)
        eg = np.max(np.abs(gradient(g, field(g.mesh), order=order)[0] - exact_grad(g.mesh))[inner])
        eh = np.max(np.abs(hessian(g, field(g.mesh), order=order)[0, 1] - exact_hess(g.mesh))[inner])
        errs.append((eg, eh))
    return [np.log2(errs[0][k] / errs[1][k]) for k in range(2)]


def _bump(v):
    return np.exp(-0.5 * np.sum(v * v, axis=0) + 0.3 * v[1])


@pytest.mark.parametrize("order, ns, rate", [(2, (24, 48), 1.8), (4, (16, 32), 3.6), (6, (12, 24), 1.8)])
def test_stencils_converge(order, ns, rate):
    orders = _gaussian_orders(_bump, lambda v: -v[0] * _bump(v), lambda v: -v[0] * (0.3 - v[1]) * _bump(v), ns, order)
    assert min(orders) >= rate


def test_weighted_norms():
    g = make_grid(8, 2.0)
    ones = Density(g, np.ones(g.shape))
    assert weighted_lp_norm(ones, WeightedNorm(1, 0)) == 64.0
    f = maxwellian(32, 8.0, T=1.3)
    assert abs(weighted_lp_norm(f, WeightedNorm(1, 2)) - (1 + 3 * 1.3)) < 1e-6
    unit = maxwellian(32, 8.0)
    # with n even the nearest centres sit at (h/2)(+-1, +-1, +-1)
    peak = weighted_lp_norm(unit, WeightedNorm(np.inf, 0))
    assert peak == pytest.approx((2 * np.pi) ** -1.5 * np.exp(-3 * unit.grid.h**2 / 8), rel=1e-14)
    assert abs(peak - (2 * np.pi) ** -1.5) < 0.1 * (2 * np.pi) ** -1.5
    with pytest.raises(GridError):
        WeightedNorm(0.5)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.0, 6.0), st.floats(-1.0, 4.0))
def test_norm_homogeneity(p, m):
    f = maxwellian(8, 3.0)
    a = weighted_lp_norm(f.scaled(2.5), WeightedNorm(p, m))
    assert a == pytest.approx(2.5 * weighted_lp_norm(f, WeightedNorm(p, m)), rel=1e-12)
