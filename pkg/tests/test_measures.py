"""Tests for the log-concave measure catalog and the smoothing scheme."""

import math

import numpy as np
import pytest
from scipy import integrate, optimize, special

from otspec import rng
from otspec.measures import (
    CATALOG_NAMES,
    GaussianMeasure,
    ProductMeasure,
    cdf_and_quantile,
    make_catalog_measure,
    make_radial_measure,
    regularize,
    sample,
)

SMOOTH_MEMBERS = [
    ("gaussian", (0.0, 1.0)),
    ("gaussian", (2.0, 0.5)),
    ("exponential", (1.5,)),
    ("gamma", (3.0, 2.0)),
    ("beta", (2.0, 5.0)),
    ("logistic", (1.0, 0.5)),
    ("subbotin", (4.0,)),
]

ALL_MEMBERS = SMOOTH_MEMBERS + [
    ("uniform", (0.0, 1.0)),
    ("laplace", (0.5, 2.0)),
    ("subbotin", (1.5,)),
]


def interior_grid(m, lo=0.02, hi=0.98, count=25):
    return m.quantile(np.linspace(lo, hi, count))


@pytest.fixture(scope="module")
def reg_uniform_10():
    return regularize(make_catalog_measure("uniform", (0.0, 1.0)), 10)


class TestCatalog:
    def test_names(self):
        assert set(CATALOG_NAMES) == {
            "gaussian",
            "uniform",
            "exponential",
            "gamma",
            "beta",
            "logistic",
            "laplace",
            "subbotin",
        }

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError, match="unknown catalog measure"):
            make_catalog_measure("cauchy", (0.0, 1.0))

    def test_wrong_arity_rejected(self):
        with pytest.raises(ValueError, match="parameter"):
            make_catalog_measure("gaussian", (0.0,))

    def test_log_concavity_ranges_rejected(self):
        with pytest.raises(ValueError, match="log-concavity"):
            make_catalog_measure("gamma", (0.5, 1.0))
        with pytest.raises(ValueError, match="log-concavity"):
            make_catalog_measure("beta", (0.8, 2.0))
        with pytest.raises(ValueError, match="exponent"):
            make_catalog_measure("subbotin", (0.9,))
        with pytest.raises(ValueError, match="positive"):
            make_catalog_measure("exponential", (-1.0,))
        with pytest.raises(ValueError, match="a < b"):
            make_catalog_measure("uniform", (1.0, 1.0))

    @pytest.mark.parametrize("name,params", ALL_MEMBERS)
    def test_density_normalized(self, name, params):
        m = make_catalog_measure(name, params)
        a, b = m.support
        if not np.isfinite(a):
            a = m.quantile(1e-14)
        if not np.isfinite(b):
            b = m.quantile(1.0 - 1e-14)
        cuts = [k for k in m._kink_points if a < k < b]
        mass, _ = integrate.quad(
            lambda t: float(m.pdf(t)), a, b, epsabs=1e-13, limit=200,
            points=cuts or None,
        )
        assert abs(mass - 1.0) < 1e-8

    def test_gaussian_potential_value(self):
        m = make_catalog_measure("gaussian", (0.0, 1.0))
        assert m.potential(0.0) == pytest.approx(0.5 * math.log(2 * math.pi), abs=1e-14)

    @pytest.mark.parametrize("name,params", ALL_MEMBERS)
    def test_first_derivative_matches_potential(self, name, params):
        m = make_catalog_measure(name, params)
        x = interior_grid(m)
        if m._kink_points:
            keep = np.all(
                np.abs(x[:, None] - np.array(m._kink_points)) > 1e-3, axis=1
            )
            x = x[keep]
        h = 1e-6 * (1.0 + np.abs(x))
        fd = (m.potential(x + h) - m.potential(x - h)) / (2 * h)
        assert np.allclose(m.potential_d1(x), fd, rtol=1e-5, atol=1e-7)

    @pytest.mark.parametrize("name,params", SMOOTH_MEMBERS)
    def test_second_derivative_matches_first(self, name, params):
        m = make_catalog_measure(name, params)
        assert m.has_d2
        x = interior_grid(m)
        h = 1e-6 * (1.0 + np.abs(x))
        fd = (m.potential_d1(x + h) - m.potential_d1(x - h)) / (2 * h)
        assert np.allclose(m.potential_d2(x), fd, rtol=1e-4, atol=1e-6)

    def test_nonsmooth_members_refuse_d2(self):
        for name, params in [("laplace", (0.0, 1.0)), ("subbotin", (1.5,))]:
            m = make_catalog_measure(name, params)
            assert not m.has_d2
            with pytest.raises(NotImplementedError):
                m.potential_d2(np.array([0.3]))

    @pytest.mark.parametrize("name,params", ALL_MEMBERS)
    def test_convexity_on_grid(self, name, params):
        m = make_catalog_measure(name, params)
        x = interior_grid(m, count=200)
        d1 = m.potential_d1(x)
        assert np.all(np.diff(d1) >= -1e-9)


class TestCdfQuantile:
    @pytest.mark.parametrize("name,params", ALL_MEMBERS)
    def test_cdf_derivative_is_density(self, name, params):
        m = make_catalog_measure(name, params)
        x = interior_grid(m)
        h = 1e-6 * (1.0 + np.abs(x))
        fd = (m.cdf(x + h) - m.cdf(x - h)) / (2 * h)
        assert np.allclose(fd, m.pdf(x), rtol=5e-5, atol=1e-9)

    def test_gaussian_upper_quantile_against_quadrature_oracle(self):
        m = make_catalog_measure("gaussian", (0.0, 1.0))

        def cdf_oracle(x):
            val, _ = integrate.quad(
                lambda t: math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi),
                -12.0,
                x,
                epsabs=1e-14,
            )
            return val

        root = optimize.brentq(lambda x: cdf_oracle(x) - 0.975, 0.0, 4.0, xtol=1e-12)
        assert root == pytest.approx(1.959964, abs=1e-5)
        assert m.quantile(0.975) == pytest.approx(root, abs=1e-9)

    def test_uniform_variate_passthrough(self):
        m = make_catalog_measure("uniform", (0.0, 1.0))
        assert m.quantile(0.3) == pytest.approx(0.3, abs=1e-14)

    @pytest.mark.parametrize("name,params", ALL_MEMBERS)
    def test_quantile_round_trip(self, name, params):
        m = make_catalog_measure(name, params)
        p = np.geomspace(1e-6, 0.5, 30)
        p = np.concatenate([p, 1.0 - p[::-1]])
        x = m.quantile(p)
        back = m.quantile(m.cdf(x))
        assert np.max(np.abs(back - x)) < 1e-9

    def test_cdf_clamps_outside_support(self):
        u = make_catalog_measure("uniform", (0.0, 1.0))
        assert u.cdf(-3.0) == 0.0 and u.cdf(7.0) == 1.0
        b = make_catalog_measure("beta", (2.0, 2.0))
        assert b.cdf(-0.5) == 0.0 and b.cdf(1.5) == 1.0
        e = make_catalog_measure("exponential", (1.0,))
        assert e.cdf(-1.0) == 0.0

    def test_quantile_rejects_boundary_probabilities(self):
        m = make_catalog_measure("gaussian", (0.0, 1.0))
        for bad in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValueError, match="strictly in"):
                m.quantile(bad)

    def test_quantile_monotone(self):
        m = make_catalog_measure("gamma", (2.0, 1.0))
        q = m.quantile(np.linspace(0.001, 0.999, 250))
        assert np.all(np.diff(q) > 0)

    def test_dispatch_helper(self):
        m = make_catalog_measure("gaussian", (0.0, 1.0))
        assert cdf_and_quantile(m, 0.0, "cdf") == pytest.approx(0.5)
        assert cdf_and_quantile(m, 0.5, "quantile") == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(ValueError, match="direction"):
            cdf_and_quantile(m, 0.5, "pdf")


class TestSampling:
    def test_streams_are_reproducible(self):
        m = make_catalog_measure("logistic", (0.0, 1.0))
        a = sample(m, rng.stream(11, 0), size=100)
        b = sample(m, rng.stream(11, 0), size=100)
        c = sample(m, rng.stream(11, 1), size=100)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_gaussian_sample_mean(self):
        m = make_catalog_measure("gaussian", (0.0, 1.0))
        x = sample(m, rng.stream(2024, 7), size=1_000_000)
        assert abs(x.mean()) < 0.004
        assert abs(x.var() - 1.0) < 0.01

    def test_exponential_sample_moments(self):
        m = make_catalog_measure("exponential", (2.0,))
        x = sample(m, rng.stream(2024, 8), size=200_000)
        assert x.min() > 0
        assert abs(x.mean() - 0.5) < 0.005

    def test_radial_ball_half_radius_mass(self):
        ball = make_radial_measure("uniform-ball", 2)
        assert ball.radial_cdf(0.5) == pytest.approx(0.25, abs=1e-15)
        pts = sample(ball, rng.stream(2024, 9), size=200_000)
        frac = np.mean(np.linalg.norm(pts, axis=1) <= 0.5)
        assert abs(frac - 0.25) < 0.004


class TestGaussianMeasure:
    def setup_method(self):
        self.cov = np.array([[2.0, 0.6], [0.6, 1.0]])
        self.g = GaussianMeasure([0.5, -1.0], self.cov)

    def test_gradient_and_hessian(self):
        x = np.array([0.3, 0.2])
        h = 1e-6
        eye = np.eye(2)
        fd_grad = np.array(
            [
                (self.g.potential(x + h * e) - self.g.potential(x - h * e)) / (2 * h)
                for e in eye
            ]
        )
        assert np.allclose(self.g.potential_grad(x), fd_grad, atol=1e-8)
        assert np.allclose(self.g.potential_hess(x), np.linalg.inv(self.cov))

    def test_box_mass_diagonal_matches_factors(self):
        g = GaussianMeasure([0.0, 0.0], np.diag([1.0, 4.0]))
        got = g.box_mass(((-1.0, 2.0), (0.0, 3.0)))
        want = (special.ndtr(2.0) - special.ndtr(-1.0)) * (
            special.ndtr(1.5) - special.ndtr(0.0)
        )
        assert got == pytest.approx(want, abs=1e-11)

    def test_box_mass_total(self):
        assert self.g.box_mass(((-60, 60), (-60, 60))) == pytest.approx(1.0, abs=1e-10)

    def test_box_mass_against_monte_carlo(self):
        pts = self.g.sample(rng.stream(5, 3), size=400_000)
        inside = np.mean(np.all((pts > -1.0) & (pts < 1.0), axis=1))
        box = self.g.box_mass(((-1.0, 1.0), (-1.0, 1.0)))
        assert abs(inside - box) < 0.004

    def test_sample_covariance(self):
        pts = self.g.sample(rng.stream(5, 4), size=500_000)
        assert np.allclose(pts.mean(axis=0), [0.5, -1.0], atol=0.01)
        assert np.allclose(np.cov(pts.T), self.cov, atol=0.02)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="dimensions disagree"):
            GaussianMeasure([0.0], np.eye(2))


class TestProductMeasure:
    def setup_method(self):
        self.p = ProductMeasure(
            [
                make_catalog_measure("uniform", (0.0, 1.0)),
                make_catalog_measure("exponential", (1.0,)),
                make_catalog_measure("laplace", (0.0, 1.0)),
            ]
        )

    def test_potential_is_sum_of_factors(self):
        x = np.array([0.4, 1.2, -0.3])
        want = sum(f.potential(x[i]) for i, f in enumerate(self.p.factors))
        assert self.p.potential(x) == pytest.approx(float(want))

    def test_box_mass(self):
        box = ((0.0, 0.5), (0.0, np.inf), (-np.inf, 0.0))
        assert self.p.box_mass(box) == pytest.approx(0.5 * 1.0 * 0.5, abs=1e-12)

    def test_sample_shape_and_marginals(self):
        pts = self.p.sample(rng.stream(6, 0), size=100_000)
        assert pts.shape == (100_000, 3)
        assert abs(np.mean(pts[:, 0]) - 0.5) < 0.005
        assert abs(np.mean(pts[:, 1]) - 1.0) < 0.02

    def test_rejects_non_measure_factor(self):
        with pytest.raises(TypeError):
            ProductMeasure([make_catalog_measure("uniform", (0, 1)), "nope"])


class TestRadialMeasure:
    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown radial family"):
            make_radial_measure("cone", 2)

    def test_ball_density_height(self):
        ball = make_radial_measure("uniform-ball", 2)
        assert ball.pdf(np.array([0.1, 0.1])) == pytest.approx(1.0 / math.pi)
        assert ball.pdf(np.array([2.0, 0.0])) == 0.0

    def test_radial_gaussian_matches_full_potential(self):
        rg = make_radial_measure("gaussian", 3)
        g = GaussianMeasure(np.zeros(3), np.eye(3))
        x = np.array([0.3, -0.8, 1.1])
        assert rg.potential(x) == pytest.approx(float(g.potential(x)), abs=1e-12)

    def test_radial_cdf_pdf_consistency(self):
        rg = make_radial_measure("gaussian", 5)
        r = np.linspace(0.3, 3.5, 20)
        h = 1e-6
        fd = (rg.radial_cdf(r + h) - rg.radial_cdf(r - h)) / (2 * h)
        assert np.allclose(fd, rg.radial_pdf(r), rtol=1e-6)

    def test_radial_quantile_round_trip(self):
        ball = make_radial_measure("uniform-ball", 4, 2.0)
        p = np.linspace(0.01, 0.99, 40)
        assert np.allclose(ball.radial_cdf(ball.radial_quantile(p)), p, atol=1e-12)

    def test_sampled_radii_follow_radial_cdf(self):
        rg = make_radial_measure("gaussian", 2)
        pts = rg.sample(rng.stream(6, 5), size=200_000)
        radii = np.linalg.norm(pts, axis=1)
        for r in (0.5, 1.0, 2.0):
            assert abs(np.mean(radii <= r) - rg.radial_cdf(r)) < 0.004


class TestRegularize:
    def test_rejects_bad_inputs(self):
        with pytest.raises(TypeError):
            regularize("nope", 5)
        with pytest.raises(ValueError, match=">= 1"):
            regularize(make_catalog_measure("uniform", (0, 1)), 0)

    def test_gaussian_closed_form(self):
        n = 5
        r = regularize(make_catalog_measure("gaussian", (0.0, 1.0)), n)
        prec = 1.0 / (1.0 + 1.0 / n**2) + 1.0 / n
        sd = prec**-0.5
        x = np.array([-3.0, -1.0, 0.0, 0.7, 2.5])
        assert np.allclose(r.potential_d2(x), prec, atol=1e-10)
        assert np.allclose(r.potential_d1(x), prec * x, atol=1e-10)
        want_v = 0.5 * prec * x**2 + math.log(math.sqrt(2 * math.pi) * sd)
        assert np.allclose(r.potential(x), want_v, atol=1e-10)
        assert np.allclose(r.cdf(x), special.ndtr(x / sd), atol=1e-11)

    def test_uniform_midpoint_density_near_one(self, reg_uniform_10):
        assert abs(reg_uniform_10.pdf(0.5) - 1.0) < 0.01

    def test_normalization(self, reg_uniform_10):
        assert reg_uniform_10._total_mass() == pytest.approx(1.0, abs=1e-8)

    def test_curvature_floor_on_wide_grid(self):
        grid = np.linspace(-10.0, 10.0, 81)
        for base_name, params, n in [
            ("uniform", (0.0, 1.0), 5),
            ("laplace", (0.0, 1.0), 5),
        ]:
            r = regularize(make_catalog_measure(base_name, params), n)
            d2 = r.potential_d2(grid)
            assert np.min(d2) >= 1.0 / n - 1e-6

    def test_smooths_the_kink(self):
        r = regularize(make_catalog_measure("laplace", (0.0, 1.0)), 5)
        x = np.linspace(-0.5, 0.5, 11)
        d1 = r.potential_d1(x)
        assert np.all(np.diff(d1) > 0)
        assert np.all(np.abs(np.diff(d1, 2)) < 10.0)

    def test_density_converges_to_base(self):
        xs = np.linspace(0.25, 0.75, 11)
        sups = []
        for n in (5, 10, 20, 40):
            r = regularize(make_catalog_measure("uniform", (0.0, 1.0)), n)
            sups.append(np.max(np.abs(np.atleast_1d(r.pdf(xs)) - 1.0)))
        assert sups[-1] < sups[0]
        assert np.all(np.diff(np.log(sups)) < 0.0) or sups[-1] < 0.35 * sups[0]

    def test_derivative_consistency(self, reg_uniform_10):
        r = reg_uniform_10
        x = np.array([-0.4, 0.1, 0.5, 0.96, 1.7])
        h = 1e-4
        fd1 = (r.potential(x + h) - r.potential(x - h)) / (2 * h)
        assert np.allclose(r.potential_d1(x), fd1, rtol=1e-5, atol=1e-6)
        fd2 = (r.potential_d1(x + h) - r.potential_d1(x - h)) / (2 * h)
        assert np.allclose(r.potential_d2(x), fd2, rtol=1e-4, atol=1e-4)

    def test_quantile_round_trip(self, reg_uniform_10):
        r = reg_uniform_10
        p = np.array([1e-3, 0.05, 0.3, 0.5, 0.9, 1.0 - 1e-3])
        x = r.quantile(p)
        assert np.max(np.abs(r.quantile(r.cdf(x)) - x)) < 1e-9
        assert np.all(np.diff(x) > 0)

    def test_gradient_fourth_moment_finite(self, reg_uniform_10):
        val = reg_uniform_10.gradient_fourth_moment()
        assert np.isfinite(val) and val > 0
