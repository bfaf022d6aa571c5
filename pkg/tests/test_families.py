"""Model family contracts: densities, power integrals, samplers."""

import numpy as np
import pytest
from scipy import integrate

from rpost import NormalLinearRegression, NormalLocation


def quad_power_integral(family, theta, alpha, i=None):
    """Independent oracle: 1-D quadrature of f^(1+alpha)."""
    def integrand(y):
        return np.exp((1.0 + alpha) * family.log_density(theta, y, i))
    val, _ = integrate.quad(integrand, -60, 60, limit=200)
    return val


class TestNormalLocation:
    def test_density_standard_normal_mode(self):
        fam = NormalLocation(sigma=1.0)
        assert fam.density([0.0], 0.0) == pytest.approx(1.0 / np.sqrt(2 * np.pi))

    def test_density_shifted_point(self):
        # direct evaluation of the normal density formula
        fam = NormalLocation(sigma=1.0)
        expected = np.exp(-4.5) / np.sqrt(2 * np.pi)
        assert fam.density([5.0], 8.0) == pytest.approx(expected, rel=1e-12)

    def test_density_integrates_to_one(self):
        fam = NormalLocation(sigma=1.4)
        theta = np.array([2.0])
        grid = np.linspace(2.0 - 12 * 1.4, 2.0 + 12 * 1.4, 40001)
        mass = np.trapezoid(fam.density(theta, grid), grid)
        assert mass == pytest.approx(1.0, abs=1e-8)

    def test_sigma_must_be_positive(self):
        with pytest.raises(ValueError):
            NormalLocation(sigma=0.0)
        with pytest.raises(ValueError):
            NormalLocation(sigma=-1.0)

    def test_theta_dimension_checked(self):
        fam = NormalLocation()
        with pytest.raises(ValueError):
            fam.density([0.0, 1.0], 0.0)


class TestPowerIntegral:
    def test_alpha_zero_is_one(self):
        assert NormalLocation(sigma=2.3).power_integral(0.0) == 1.0

    def test_alpha_one_standard_normal(self):
        # quadrature of f^2 for the standard normal gives 1/(2 sqrt(pi))
        fam = NormalLocation(sigma=1.0)
        assert fam.power_integral(1.0) == pytest.approx(1.0 / (2 * np.sqrt(np.pi)), rel=1e-12)
        assert fam.power_integral(1.0) == pytest.approx(
            quad_power_integral(fam, [0.0], 1.0), abs=1e-12
        )

    def test_alpha_half_standard_normal(self):
        fam = NormalLocation(sigma=1.0)
        expected = (2 * np.pi) ** (-0.25) * 1.5 ** (-0.5)
        assert fam.power_integral(0.5) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.2, 0.5, 1.0])
    def test_closed_form_matches_quadrature(self, alpha):
        fam = NormalLocation(sigma=0.7)
        assert fam.power_integral(alpha) == pytest.approx(
            quad_power_integral(fam, [1.0], alpha), abs=1e-8
        )

    def test_location_free(self):
        # shift family: the integral cannot depend on the location
        fam = NormalLocation(sigma=1.0)
        vals = [fam.power_integral(0.5, theta=[t]) for t in (-10.0, 0.0, 7.0)]
        assert vals[0] == vals[1] == vals[2]


class TestSampler:
    def test_mean_concentrates(self):
        fam = NormalLocation(sigma=1.0)
        x = fam.sample([5.0], 10**5, np.random.default_rng(0))
        assert abs(x.mean() - 5.0) < 5.0 / np.sqrt(10**5)

    def test_zero_draws_rejected(self):
        with pytest.raises(ValueError):
            NormalLocation().sample([0.0], 0, np.random.default_rng(0))

    def test_seed_determinism(self):
        fam = NormalLocation(sigma=1.0)
        a = fam.sample([1.0], 100, np.random.default_rng(42))
        b = fam.sample([1.0], 100, np.random.default_rng(42))
        np.testing.assert_array_equal(a, b)


class TestNormalLinearRegression:
    def setup_method(self):
        rng = np.random.default_rng(3)
        t1 = rng.normal(5, 1, 12)
        self.design = np.column_stack([np.ones(12), t1])
        self.fam = NormalLinearRegression(self.design, sigma=1.0)

    def test_zero_residual_density(self):
        design = np.array([[1.0, 5.0], [1.0, 6.0]])
        fam = NormalLinearRegression(design, sigma=1.0)
        val = fam.density([5.0, 2.0], 15.0, i=0)  # mean (1,5)@(5,2) = 15
        assert val == pytest.approx(1.0 / np.sqrt(2 * np.pi))

    def test_index_required_and_bounded(self):
        with pytest.raises(ValueError):
            self.fam.density([5.0, 2.0], 1.0)
        with pytest.raises(ValueError):
            self.fam.density([5.0, 2.0], 1.0, i=12)

    def test_rank_deficient_design_rejected(self):
        bad = np.column_stack([np.ones(5), np.ones(5)])
        with pytest.raises(ValueError):
            NormalLinearRegression(bad)

    def test_sample_size_must_match_design(self):
        with pytest.raises(ValueError):
            self.fam.sample([5.0, 2.0], 5, np.random.default_rng(0))

    def test_sample_residual_distribution(self):
        x = self.fam.sample([5.0, 2.0], 12, np.random.default_rng(7))
        resid = x - self.design @ np.array([5.0, 2.0])
        assert np.all(np.abs(resid) < 6.0)

    def test_power_integral_matches_quadrature(self):
        assert self.fam.power_integral(0.5) == pytest.approx(
            quad_power_integral(self.fam, [5.0, 2.0], 0.5, i=3), abs=1e-8
        )

    def test_unknown_scale_variant(self):
        fam = NormalLinearRegression(self.design, sigma_known=False)
        assert fam.param_dim == 3
        lf = fam.log_density([5.0, 2.0, 2.0], 15.0, i=0)
        direct = NormalLinearRegression(self.design, sigma=2.0).log_density(
            [5.0, 2.0], 15.0, i=0
        )
        assert lf == pytest.approx(direct)
        with pytest.raises(ValueError):
            fam.log_density([5.0, 2.0, -1.0], 15.0, i=0)
