import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as spi

from conftest import maxwellian, maxwellian_values
from landau_fisher.functionals import (cauchy_schwarz_chain, fisher, gaussian_tail_constant, hydrodynamics,
                                       l_log_l_bound_check, weighted_hessian_functional)
from landau_fisher.grid import Density, integrate, make_grid

H1 = -1.5 * (1 + np.log(2 * np.pi))


def test_maxwellian_moments_and_entropy(wide_maxwellian):
    s = hydrodynamics(wide_maxwellian)
    assert abs(s.mass - 1) < 1e-6
    assert np.max(np.abs(s.momentum)) < 1e-8
    assert abs(s.energy - 3) < 1e-4
    assert abs(s.entropy - H1) < 5e-3
    assert s.l_log_l >= s.entropy


def test_entropy_scaling_identity(wide_maxwellian):
    c = 2.0
    s1 = hydrodynamics(wide_maxwellian)
    s2 = hydrodynamics(wide_maxwellian.scaled(c))
    assert s2.mass == pytest.approx(2 * s1.mass, rel=1e-14)
    assert s2.energy == pytest.approx(2 * s1.energy, rel=1e-14)
    assert s2.entropy == pytest.approx(c * s1.entropy + c * np.log(c) * s1.mass, rel=1e-10)


def test_gaussian_constant_matches_closed_form():
    # Cartesian triple quadrature, independent of the radial reduction
    val, _ = spi.nquad(lambda x, y, z: np.exp(-1 - x * x - y * y - z * z) * (1 + x * x + y * y + z * z),
                       [[-8, 8]] * 3, opts={"epsrel": 1e-10})
    assert gaussian_tail_constant() == pytest.approx(2 * val, rel=1e-8)
    assert gaussian_tail_constant() == pytest.approx(5 * np.pi**1.5 / np.e, rel=1e-12)


def test_l_log_l_margin(wide_maxwellian):
    s = hydrodynamics(wide_maxwellian)
    margin, ok = l_log_l_bound_check(s)
    assert ok and margin == pytest.approx(10.243 + 2 + 6 - 2 * 4.2568, abs=5e-3)
    shifted = type(s)(s.mass, s.momentum, s.energy, s.entropy + 1.0, s.l_log_l)
    assert l_log_l_bound_check(shifted)[0] == pytest.approx(margin + 1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_l_log_l_bound_holds_for_random_densities(seed):
    r = np.random.default_rng(seed)
    g = make_grid(8, 3.0)
    vals = r.random(g.shape) ** 3 * r.uniform(0.01, 5.0)
    s = hydrodynamics(Density(g, vals))
    assert l_log_l_bound_check(s)[1]
    assert s.l_log_l >= s.entropy


@pytest.mark.parametrize("T, expected", [(1.0, 3.0), (4.0, 0.75)])
def test_maxwellian_fisher(T, expected):
    f = maxwellian(32, 8.0 * np.sqrt(T), T=T)
    rep = fisher(f)
    assert rep.chosen == pytest.approx(expected, abs=1e-2 * expected / 3)
    assert rep.spread() < 0.01


def test_fisher_forms_homogeneous(wide_maxwellian):
    a, b = fisher(wide_maxwellian), fisher(wide_maxwellian.scaled(3.0))
    for name in ("i_grad_form", "i_ratio_form", "i_sqrt_form"):
        assert getattr(b, name) == pytest.approx(3 * getattr(a, name), rel=1e-12)


def test_fisher_spread_shrinks_under_refinement():
    def density(n):
        g = make_grid(n, 6.0)
        v = g.mesh
        return Density(g, maxwellian_values(g) * np.exp(0.3 * np.sin(v[0]) * np.exp(-g.speed_sq / 8)))

    coarse, fine = fisher(density(16)).spread(), fisher(density(32)).spread()
    assert fine < coarse and fine < 0.01


def test_weighted_hessian_on_maxwellian(wide_maxwellian):
    r = np.linspace(0, 40, 400001)
    dens = (2 * np.pi) ** -1.5 * np.exp(-r * r / 2)
    oracle = 3 * spi.simpson((1 + r * r) ** -2.5 * dens * 4 * np.pi * r * r, x=r)
    val = weighted_hessian_functional(wide_maxwellian, -3.0)
    g = wide_maxwellian.grid
    # Hess log M = -I, so the integrand is 3 <v>^-5 M; the remaining gap is midpoint error in the weight
    assert val == pytest.approx(integrate(g, 3 * g.bracket(-5.0) * wide_maxwellian.values), rel=1e-8)
    assert val == pytest.approx(oracle, rel=1e-3)


def test_weighted_hessian_vanishes_for_constant():
    g = make_grid(8, 2.0)
    assert abs(weighted_hessian_functional(Density(g, np.full(g.shape, 0.3)), -2.5)) < 1e-20


def test_weighted_hessian_rejects_gamma():
    with pytest.raises(ValueError):
        weighted_hessian_functional(maxwellian(8, 2.0), -1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3.0, -2.01))
def test_cauchy_schwarz_links(seed, gamma):
    r = np.random.default_rng(seed)
    g = make_grid(16, 5.0)
    v = g.mesh
    k = r.normal(size=3)
    vals = maxwellian_values(g, T=r.uniform(0.6, 1.5)) * np.exp(0.4 * np.sin(k[0] * v[0] + k[1] * v[1] + k[2] * v[2]))
    chain = cauchy_schwarz_chain(Density(g, vals), gamma)
    assert chain.trace_gap >= -1e-12 * chain.hessian_weighted
    assert weighted_hessian_functional(Density(g, vals), gamma) >= 0
    assert chain.holds()
