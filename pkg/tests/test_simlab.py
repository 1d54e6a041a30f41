import math

import numpy as np
import pytest

from gereg import gedist, model, simlab
from gereg.priors import GammaPrior, PCPrior
from tests.test_model import make_fit


class TestCovariateGrid:
    def test_small_sample_grid(self):
        x = simlab.covariate_grid(24)
        assert x.shape == (24,)
        np.testing.assert_allclose(x, np.arange(1, 25) * 0.04, rtol=1e-12)
        assert x[0] == pytest.approx(0.04) and x[-1] == pytest.approx(0.96)

    def test_large_sample_grid(self):
        x = simlab.covariate_grid(99)
        assert x.shape == (99,)
        np.testing.assert_allclose(x, np.arange(1, 100) * 0.01, rtol=1e-12)

    def test_unsupported_size(self):
        with pytest.raises(ValueError):
            simlab.covariate_grid(50)


class TestGenDataset:
    def test_positive_and_deterministic(self):
        y1, x1 = simlab.gen_dataset("nonlinear", 0.5, 24, seed=3)
        y2, x2 = simlab.gen_dataset("nonlinear", 0.5, 24, seed=3)
        assert np.all(y1 > 0)
        np.testing.assert_array_equal(y1, y2)
        np.testing.assert_array_equal(x1, x2)

    def test_exponential_mean_sanity(self):
        # alpha=1 with zero coefficients is Exp(1) at every point
        ys = np.concatenate([simlab.gen_dataset("linear", 1.0, 99, seed=s,
                                                beta_true=(0.0, 0.0))[0]
                             for s in range(40)])
        se = 1.0 / math.sqrt(ys.size)
        assert abs(ys.mean() - 1.0) < 3 * se

    def test_nonlinear_design_uses_sine(self):
        x = simlab.covariate_grid(24)
        lam = simlab.true_rates("nonlinear", x)
        np.testing.assert_allclose(lam, np.exp(0.5 + np.sin(2 * np.pi * x)), rtol=1e-12)

    def test_unknown_truth(self):
        with pytest.raises(ValueError):
            simlab.gen_dataset("quadratic", 1.0, 24, seed=0)


class TestSettingCatalog:
    def test_eight_settings(self):
        cat = simlab.setting_catalog()
        assert sorted(cat) == list(range(1, 9))

    def test_first_block_varies_priors(self):
        cat = simlab.setting_catalog()
        for sid, truth, fit in [(1, "linear", "parametric"), (2, "nonlinear", "parametric"),
                                (3, "linear", "semiparametric"),
                                (4, "nonlinear", "semiparametric")]:
            s = cat[sid]
            assert s.truth == truth and s.fits == (fit,)
            assert len(s.priors) == 4

    def test_second_block_varies_fits(self):
        cat = simlab.setting_catalog()
        for sid, truth, family in [(5, "linear", GammaPrior), (6, "linear", PCPrior),
                                   (7, "nonlinear", GammaPrior), (8, "nonlinear", PCPrior)]:
            s = cat[sid]
            assert s.truth == truth
            assert s.fits == ("parametric", "semiparametric")
            assert all(isinstance(p, family) for p in s.priors)

    def test_default_replicates(self):
        assert simlab.setting_catalog()[1].replicates == 1000


class TestAbsFitError:
    def test_zero_when_frozen_at_truth(self):
        x = simlab.covariate_grid(24)
        lam_true = simlab.true_rates("linear", x)
        lo, hi = float(x.min()), float(x.max())
        spec = model.ModelSpec.linear((lo, hi), PCPrior(2.5))
        # exact fitted coefficients after the affine covariate rescale
        beta = np.array([0.5 + 1.0 * lo, 1.0 * (hi - lo)])
        fit = make_fit(spec, [2.0, 2.0], [beta, beta])
        assert simlab.abs_fit_error(fit, 2.0, lam_true, x) == pytest.approx(0.0, abs=1e-12)

    def test_positive_when_shape_off(self):
        x = simlab.covariate_grid(24)
        lam_true = simlab.true_rates("linear", x)
        lo, hi = float(x.min()), float(x.max())
        spec = model.ModelSpec.linear((lo, hi), PCPrior(2.5))
        beta = np.array([0.5 + 1.0 * lo, 1.0 * (hi - lo)])
        fit = make_fit(spec, [1.4], [beta])
        assert simlab.abs_fit_error(fit, 2.0, lam_true, x) > 0.0

    def test_three_point_hand_computation(self):
        # stub fit with constant rate 1 and alpha 1; truth alpha 1 rates (1, 2, 4)
        x = np.array([0.25, 0.5, 0.75])
        spec = model.ModelSpec.linear((0.0, 1.0), PCPrior(2.5))
        fit = make_fit(spec, [1.0], [[0.0, 0.0]])
        lam_true = np.array([1.0, 2.0, 4.0])
        expected = np.mean(np.abs(1.0 - 1.0 / lam_true))
        assert simlab.abs_fit_error(fit, 1.0, lam_true, x) == pytest.approx(expected,
                                                                            rel=1e-12)


class TestRunCell:
    def test_deterministic_and_complete(self):
        cat = simlab.setting_catalog()
        r1 = simlab.run_cell(cat[1], PCPrior(2.5), 1.0, 24, replicates=3, base_seed=7)
        r2 = simlab.run_cell(cat[1], PCPrior(2.5), 1.0, 24, replicates=3, base_seed=7)
        assert r1 == r2
        assert len(r1) == 3
        assert all(rec.fit == "parametric" for rec in r1)
        assert all(math.isfinite(rec.waic) for rec in r1)

    def test_both_fits_share_data(self):
        cat = simlab.setting_catalog()
        recs = simlab.run_cell(cat[5], GammaPrior(1, 1), 1.0, 24, replicates=2, base_seed=1)
        assert len(recs) == 4  # 2 replicates x 2 fits
        fits = {(r.replicate, r.fit) for r in recs}
        assert fits == {(0, "parametric"), (0, "semiparametric"),
                        (1, "parametric"), (1, "semiparametric")}

    def test_parallel_matches_serial(self):
        cat = simlab.setting_catalog()
        serial = simlab.run_cell(cat[1], PCPrior(5.0), 2.0, 24, replicates=4, base_seed=2,
                                 jobs=1)
        parallel = simlab.run_cell(cat[1], PCPrior(5.0), 2.0, 24, replicates=4, base_seed=2,
                                   jobs=2)
        assert serial == parallel


class TestAggregate:
    def _rec(self, **kw):
        base = dict(setting=1, truth="linear", fit="parametric", prior="pc:2.5",
                    alpha_true=1.0, n=24, replicate=0, beta0_true=0.5, beta1_true=1.0,
                    alpha_hat=1.0, ci_lo=0.5, ci_hi=1.5, abs_fit_error=0.1, waic=10.0,
                    failed=False)
        base.update(kw)
        return simlab.ReplicateRecord(**base)

    def test_all_covered(self):
        rows = simlab.aggregate([self._rec(replicate=i) for i in range(5)])
        assert len(rows) == 1
        assert rows[0].coverage == 1.0

    def test_nineteen_of_twenty(self):
        recs = [self._rec(replicate=i) for i in range(19)]
        recs.append(self._rec(replicate=19, ci_lo=1.2, ci_hi=1.5))  # misses 1.0
        assert simlab.aggregate(recs)[0].coverage == pytest.approx(0.95)

    def test_fixture_means(self):
        recs = [self._rec(replicate=i, alpha_hat=1.0 + 0.1 * i, waic=10.0 + i,
                          abs_fit_error=0.05 * i) for i in range(10)]
        row = simlab.aggregate(recs)[0]
        assert row.mean_abs_bias == pytest.approx(np.mean([0.1 * i for i in range(10)]))
        assert row.mean_waic == pytest.approx(np.mean([10.0 + i for i in range(10)]))
        assert row.mean_abs_fit_error == pytest.approx(np.mean([0.05 * i for i in range(10)]))
        assert row.replicates == 10 and row.failed == 0

    def test_failed_excluded_but_counted(self):
        recs = [self._rec(replicate=i) for i in range(4)]
        recs.append(self._rec(replicate=4, failed=True, alpha_hat=math.nan,
                              ci_lo=math.nan, ci_hi=math.nan, abs_fit_error=math.nan,
                              waic=math.nan))
        row = simlab.aggregate(recs)[0]
        assert row.replicates == 5 and row.failed == 1
        assert row.coverage == 1.0
        assert math.isfinite(row.mean_waic)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            simlab.aggregate([])


class TestStudyProperties:
    """Replicated-study invariants; a few minutes on two cores, deterministic."""

    def test_semiparametric_coverage_near_nominal(self):
        # linear truth, semiparametric fit, shape prior centered on the truth
        cat = simlab.setting_catalog()
        recs = simlab.run_cell(cat[3], PCPrior(2.5), 1.0, 99, replicates=200,
                               base_seed=77, jobs=2)
        ok = [r for r in recs if not r.failed]
        coverage = np.mean([r.ci_lo <= 1.0 <= r.ci_hi for r in ok])
        assert 0.90 <= coverage <= 0.99

    def test_misspecified_rate_model_degrades_coverage(self):
        # nonlinear truth fitted with the two-coefficient model distorts the
        # shape estimate; the spline fit does not
        cat = simlab.setting_catalog()
        rigid = simlab.run_cell(cat[2], PCPrior(2.5), 2.0, 99, replicates=60,
                                base_seed=55, jobs=2)
        flexible = simlab.run_cell(cat[4], PCPrior(2.5), 2.0, 99, replicates=60,
                                   base_seed=55, jobs=2)
        cov_rigid = np.mean([r.ci_lo <= 2.0 <= r.ci_hi for r in rigid if not r.failed])
        cov_flex = np.mean([r.ci_lo <= 2.0 <= r.ci_hi for r in flexible if not r.failed])
        assert cov_rigid < cov_flex - 0.15


class TestCsvWriters:
    def test_round_trippable_and_stable(self, tmp_path):
        cat = simlab.setting_catalog()
        recs = simlab.run_cell(cat[1], PCPrior(2.5), 1.0, 24, replicates=2, base_seed=3)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        simlab.write_replicates_csv(p1, recs)
        simlab.write_replicates_csv(p2, recs)
        assert p1.read_bytes() == p2.read_bytes()
        header = p1.read_text().splitlines()[0]
        assert header.startswith("setting,truth,fit,prior,alpha_true,n,replicate")
        rows = simlab.aggregate(recs)
        simlab.write_aggregate_csv(tmp_path / "agg.csv", rows)
        text = (tmp_path / "agg.csv").read_text()
        assert "coverage" in text.splitlines()[0]
