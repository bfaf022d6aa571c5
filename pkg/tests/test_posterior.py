"""Posterior engines: closed-form oracles, cross-engine agreement, marginals."""

import numpy as np
import pytest
from scipy.special import logsumexp
from scipy.stats import norm

from rpost import (
    DiscretePrior,
    GridCoverageError,
    ImproperUniform,
    NormalConjugate,
    NormalLocation,
    NumericalError,
    ProposalSpec,
    WeightedPosterior,
    discrete_posterior,
    grid_posterior,
    importance_sample,
    log_unnorm_posterior,
    merging_statistic,
    posterior_expectation,
    q_iid,
    r_marginal_logdensity,
)
from rpost._utils import derive_rng

FAM = NormalLocation(sigma=1.0)


def fixed_sample(n=20, seed=3):
    return derive_rng(seed, 0).normal(5.0, 1.0, n)


class TestLogUnnormPosterior:
    def test_flat_prior_zero_branch_shape(self):
        # differences between theta values match the N(mean, 1/n) shape
        data = fixed_sample()
        xbar, n = data.mean(), data.size
        t1, t2 = 4.8, 5.3
        got = log_unnorm_posterior(FAM, ImproperUniform(), data, [t1], 0.0) - \
            log_unnorm_posterior(FAM, ImproperUniform(), data, [t2], 0.0)
        expected = (-n * (t1 - xbar) ** 2 / 2) - (-n * (t2 - xbar) ** 2 / 2)
        assert got == pytest.approx(expected, rel=1e-9)

    def test_equals_q_plus_log_prior(self):
        data = fixed_sample()
        got = log_unnorm_posterior(FAM, ImproperUniform(), data, [5.1], 0.5)
        assert got == pytest.approx(q_iid(FAM, data, [5.1], 0.5).value, rel=1e-12)

    def test_outside_discrete_support(self):
        prior = DiscretePrior(np.array([[4.0], [5.0]]), np.array([0.5, 0.5]))
        got = log_unnorm_posterior(FAM, prior, fixed_sample(), [4.5], 0.5)
        assert got == -np.inf


class TestGridPosterior:
    def test_zero_branch_closed_form_moments(self):
        data = fixed_sample()
        xbar, n = data.mean(), data.size
        grid = np.linspace(xbar - 10 / np.sqrt(n), xbar + 10 / np.sqrt(n), 4001)
        wp = grid_posterior(FAM, ImproperUniform(), data, 0.0, grid)
        assert wp.mean()[0] == pytest.approx(xbar, abs=1e-6)
        assert wp.var()[0] == pytest.approx(1.0 / n, abs=1e-6)
        assert wp.source == "GridQuadrature"

    def test_symmetric_data_symmetric_grid(self):
        data = np.array([4.0, 6.0, 3.5, 6.5])
        offsets = np.linspace(0.0, 3.0, 1001)
        grid = np.concatenate([(5.0 - offsets)[::-1], 5.0 + offsets[1:]])
        wp = grid_posterior(FAM, ImproperUniform(), data, 0.5, grid)
        # mirror-exact grid: residual asymmetry is float summation order only
        assert wp.mean()[0] == pytest.approx(5.0, abs=1e-9)

    def test_mass_escape_detected(self):
        data = fixed_sample()
        grid = np.linspace(data.mean() - 0.1, data.mean() + 0.1, 501)
        with pytest.raises(GridCoverageError, match="escapes grid"):
            grid_posterior(FAM, ImproperUniform(), data, 0.0, grid)

    def test_flat_improper_tail_detected(self):
        # at alpha > 0 a flat prior leaves constant far-tail mass: the
        # quadrature engine must refuse rather than silently truncate
        data = fixed_sample()
        grid = np.linspace(data.mean() - 8, data.mean() + 8, 4001)
        with pytest.raises(GridCoverageError):
            grid_posterior(FAM, ImproperUniform(), data, 0.5, grid)

    def test_two_dimensional_lattice(self):
        rng = derive_rng(8, 0)
        design = np.column_stack([np.ones(15), rng.normal(5, 1, 15)])
        from rpost import NormalLinearRegression

        fam = NormalLinearRegression(design, sigma=1.0)
        beta = np.array([5.0, 2.0])
        data = design @ beta + rng.normal(0, 1, 15)
        gram = design.T @ design
        bh = np.linalg.solve(gram, design.T @ data)
        sds = np.sqrt(np.diag(np.linalg.inv(gram)))
        axes = (np.linspace(bh[0] - 8 * sds[0], bh[0] + 8 * sds[0], 201),
                np.linspace(bh[1] - 8 * sds[1], bh[1] + 8 * sds[1], 201))
        wp = grid_posterior(fam, ImproperUniform(), data, 0.0, axes)
        np.testing.assert_allclose(wp.mean(), bh, atol=1e-6)
        np.testing.assert_allclose(wp.cov(), np.linalg.inv(gram), atol=1e-6)


class TestImportanceSample:
    def test_flat_prior_mean_recovery(self):
        data = fixed_sample()
        xbar = data.mean()
        prop = ProposalSpec([xbar], [[np.var(data, ddof=1)]], 20000)
        wp = importance_sample(FAM, ImproperUniform(), data, 0.0, prop, derive_rng(1, 0))
        tol = 4.0 * (1.0 / np.sqrt(data.size)) / np.sqrt(wp.ess)
        assert abs(wp.mean()[0] - xbar) <= tol
        assert wp.source == "ImportanceSampling"

    def test_zero_variance_proposal(self):
        # proposal identical to the exact posterior: all weights equal
        data = fixed_sample()
        prop = ProposalSpec([data.mean()], [[1.0 / data.size]], 20000)
        wp = importance_sample(FAM, ImproperUniform(), data, 0.0, prop, derive_rng(1, 1))
        np.testing.assert_allclose(wp.weights * 20000, 1.0, rtol=1e-10)
        assert wp.ess == pytest.approx(20000, rel=1e-10)

    def test_ess_bounds(self):
        data = fixed_sample()
        prop = ProposalSpec([data.mean()], [[2.0]], 5000)
        wp = importance_sample(FAM, ImproperUniform(), data, 0.5, prop, derive_rng(1, 2))
        assert 1.0 <= wp.ess <= wp.n_points

    def test_degenerate_proposal_flagged(self):
        # proposal centered absurdly far: one dominant weight after retry
        data = fixed_sample()
        prop = ProposalSpec([60.0], [[0.01]], 2000)
        wp = importance_sample(FAM, ImproperUniform(), data, 0.0, prop, derive_rng(1, 3))
        assert wp.degenerate
        assert wp.ess < 50

    def test_all_weights_vanish(self):
        prior = DiscretePrior(np.array([[5.0]]), np.array([1.0]))
        data = fixed_sample()
        prop = ProposalSpec([5.0], [[1.0]], 1000)
        with pytest.raises(NumericalError):
            importance_sample(FAM, prior, data, 0.0, prop, derive_rng(1, 4))

    def test_proposal_contract(self):
        with pytest.raises(ValueError):
            ProposalSpec([0.0], [[1.0]], 999)
        with pytest.raises(ValueError):
            ProposalSpec([0.0], [[-1.0]], 2000)
        with pytest.raises(ValueError):
            ProposalSpec([0.0, 1.0], np.array([[1.0, 2.0], [0.5, 1.0]]), 2000)


class TestWeightedPosterior:
    def test_normalization_invariant(self):
        lw = np.array([-1.0, -2.0, -0.5, -4.0])
        a = WeightedPosterior.from_log_weights(np.arange(4.0)[:, None], lw, "GridQuadrature")
        b = WeightedPosterior.from_log_weights(np.arange(4.0)[:, None], lw + 3.25, "GridQuadrature")
        np.testing.assert_array_equal(a.log_weights, b.log_weights)
        assert a.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_expectation_identity(self):
        wp = WeightedPosterior.from_log_weights(
            np.array([[1.0], [3.0]]), np.log([0.5, 0.5]), "GridQuadrature"
        )
        got = posterior_expectation(wp, lambda pts: pts[:, 0])
        assert got == pytest.approx(2.0)

    def test_indicator_probability_monotone(self):
        data = fixed_sample()
        grid = np.linspace(data.mean() - 2, data.mean() + 2, 2001)
        wp = grid_posterior(FAM, ImproperUniform(), data, 0.0, grid)
        inner = posterior_expectation(wp, lambda p: (np.abs(p[:, 0] - 5.0) < 0.2).astype(float))
        outer = posterior_expectation(wp, lambda p: (np.abs(p[:, 0] - 5.0) < 0.5).astype(float))
        assert 0.0 <= inner <= outer <= 1.0

    def test_nonfinite_h_rejected(self):
        wp = WeightedPosterior.from_log_weights(
            np.array([[1.0], [3.0]]), np.log([0.5, 0.5]), "GridQuadrature"
        )
        with pytest.raises(ValueError):
            posterior_expectation(wp, lambda p: np.where(p[:, 0] > 2, np.inf, 1.0))

    def test_coarsen_preserves_moments(self):
        data = fixed_sample()
        prop = ProposalSpec([data.mean()], [[np.var(data, ddof=1)]], 20000)
        wp = importance_sample(FAM, ImproperUniform(), data, 0.5, prop, derive_rng(1, 5))
        wc = wp.coarsen(0.005)
        assert wc.n_points < wp.n_points
        assert wc.mean()[0] == pytest.approx(wp.mean()[0], abs=1e-4)
        assert wc.var()[0] == pytest.approx(wp.var()[0], abs=1e-4)
        assert wc.ess <= wc.n_points

    def test_csv_export(self, tmp_path):
        wp = WeightedPosterior.from_log_weights(
            np.array([[1.0, 2.0], [3.0, 4.0]]), np.log([0.25, 0.75]), "GridQuadrature"
        )
        path = tmp_path / "wp.csv"
        wp.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "theta_1,theta_2,weight"
        assert len(lines) == 3


class TestEngineEquivalence:
    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
    def test_grid_vs_importance(self, alpha):
        data = fixed_sample()
        prior = NormalConjugate(np.array([5.0]), 1.0)
        grid = np.linspace(data.mean() - 8, data.mean() + 8, 8001)
        wg = grid_posterior(FAM, prior, data, alpha, grid)
        prop = ProposalSpec([data.mean()], [[np.var(data, ddof=1)]], 20000)
        wi = importance_sample(FAM, prior, data, alpha, prop, derive_rng(2, int(alpha * 10)))
        w = wi.weights
        z0 = 5.5
        for h in (lambda p: p[:, 0], lambda p: p[:, 0] ** 2,
                  lambda p: np.exp(FAM.log_density_matrix(p, [z0]))[:, 0]):
            mu = float(posterior_expectation(wi, h))
            se = float(np.sqrt(np.sum(w**2 * (h(wi.points) - mu) ** 2)))
            exact = float(posterior_expectation(wg, h))
            assert abs(mu - exact) <= 3.0 * (se + 1e-9)


class TestRMarginal:
    def test_zero_branch_conjugate_closed_form(self):
        data = fixed_sample()
        xbar, n = data.mean(), data.size
        tau = 3.0
        prior = NormalConjugate(np.array([5.0]), tau)
        S = np.sum((data - xbar) ** 2)
        closed = (
            -(n / 2) * np.log(2 * np.pi) - S / 2 + 0.5 * np.log(2 * np.pi / n)
            + norm.logpdf(xbar, 5.0, np.sqrt(tau**2 + 1.0 / n))
        )
        got = r_marginal_logdensity(FAM, prior, data, 0.0)
        assert got == pytest.approx(closed, abs=1e-6)

    def test_discrete_three_point_hand_sum(self):
        pts = np.array([[4.0], [5.0], [6.0]])
        masses = np.array([0.3, 0.4, 0.3])
        prior = DiscretePrior(pts, masses)
        data = np.array([5.2])
        got = r_marginal_logdensity(FAM, prior, data, 0.5)
        q_vals = [q_iid(FAM, data, p, 0.5).value for p in pts]
        from rpost import log_obs_normalizer

        log_q0 = log_obs_normalizer(FAM, [0.0], 0.5)
        hand = logsumexp(np.array(q_vals) + np.log(masses)) - (
            logsumexp(1 * log_q0 + np.log(masses))
        )
        assert got == pytest.approx(hand, rel=1e-10)

    def test_integrates_to_one_over_data_window(self):
        # point-mass prior, n = 1: the marginal is the renormalized model
        # density, a proper density on the bounded data window
        prior = DiscretePrior(np.array([[2.0]]), np.array([1.0]))
        zs = np.linspace(2.0 - 12.0, 2.0 + 12.0, 4001)
        vals = np.array(
            [np.exp(r_marginal_logdensity(FAM, prior, [z], 0.5)) for z in zs[::8]]
        )
        mass = np.trapezoid(vals, zs[::8])
        assert mass == pytest.approx(1.0, abs=1e-5)

    def test_improper_prior_rejected(self):
        with pytest.raises(NumericalError, match="marginal undefined"):
            r_marginal_logdensity(FAM, ImproperUniform(), fixed_sample(), 0.0)


class TestMergingStatistic:
    @staticmethod
    def truth(x):
        return norm.pdf(np.asarray(x), 5.0, 1.0)

    def test_point_prior_at_truth_zero_branch(self):
        prior = DiscretePrior(np.array([[5.0]]), np.array([1.0]))
        data = fixed_sample()
        got = merging_statistic(FAM, prior, data, 0.0, self.truth)
        assert got == pytest.approx(0.0, abs=1e-12)

    def test_zero_branch_decay(self):
        prior = NormalConjugate(np.array([5.0]), 3.0)
        stats = []
        for n in (10, 100, 1000):
            data = derive_rng(11, n).normal(5.0, 1.0, n)
            stats.append(abs(merging_statistic(FAM, prior, data, 0.0, self.truth)))
        assert stats[2] < stats[1] < stats[0]
        # roughly O(log n / n): the n=1000 value is within a factor of the scale
        assert stats[2] < 20 * np.log(1000) / 1000

    def test_half_alpha_golden_trajectory(self):
        # frozen values under the 12-sigma data window convention
        prior = NormalConjugate(np.array([5.0]), 3.0)
        got = []
        for n in (10, 100):
            data = derive_rng(11, n).normal(5.0, 1.0, n)
            got.append(merging_statistic(FAM, prior, data, 0.5, self.truth))
        np.testing.assert_allclose(got, GOLDEN_MERGE_HALF, rtol=1e-7)


GOLDEN_MERGE_HALF = [-0.4902789761244911, -0.9964903592195565]
