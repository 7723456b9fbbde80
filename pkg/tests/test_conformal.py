import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nkpc.backtest import ForecastRecord
from nkpc.conformal import (
    ConformalConfig,
    PredictionInterval,
    conformal_scores,
    conformalize,
    coverage_report,
    windowed_quantile,
)
from nkpc.errors import ColdStart, ScaleDomain
from nkpc.quarters import QuarterIndex


def make_records(preds, actuals, features=None):
    q0 = QuarterIndex(2015, 1)
    out = []
    for i, (p, a) in enumerate(zip(preds, actuals)):
        f = tuple(features[i]) if features is not None else ()
        out.append(ForecastRecord(q0 + i, 1, "m", "hybrid",
                                  float(p), float(a), 40 + i, f))
    return out


class TestScoresAndQuantile:
    def test_scores_definition(self):
        s = conformal_scores([1.0, 2.0], [0.5, 4.0], [1.0, 2.0])
        np.testing.assert_allclose(s, [0.5, 1.0])

    def test_nonpositive_scale_rejected(self):
        with pytest.raises(ScaleDomain):
            conformal_scores([1.0], [1.0], [0.0])

    def test_quantile_oracle_small_window(self):
        scores = np.array([3.0, 1.0, 2.0, 5.0, 4.0])
        # t=5, kappa=5, alpha=0.1: m=5, r=ceil(6*0.9)=6 > 5 -> inf
        assert windowed_quantile(scores, 5, 5, 0.1) == math.inf
        # alpha=0.5: r=ceil(6*0.5)=3 -> 3rd smallest of all five = 3.0
        assert windowed_quantile(scores, 5, 5, 0.5) == 3.0
        # kappa=3 window = [2,5,4]; alpha=0.25: r=ceil(4*0.75)=3 -> 5.0
        assert windowed_quantile(scores, 5, 3, 0.25) == 5.0

    def test_cold_start_raises(self):
        with pytest.raises(ColdStart):
            windowed_quantile(np.array([]), 0, 5, 0.1)

    @settings(deadline=None)
    @given(st.lists(st.floats(0, 100), min_size=1, max_size=30),
           st.integers(2, 20))
    def test_monotone_in_alpha(self, scores, kappa):
        scores = np.asarray(scores)
        t = len(scores)
        qs = [windowed_quantile(scores, t, kappa, a)
              for a in (0.05, 0.1, 0.25, 0.5, 0.9)]
        assert all(a >= b for a, b in zip(qs, qs[1:]))

    def test_rank_formula_exact(self):
        # m=19, alpha=0.1 -> r=ceil(20*0.9)=18
        scores = np.arange(1.0, 20.0)
        got = windowed_quantile(scores, 19, 50, 0.1)
        assert got == 18.0


class TestConformalize:
    def test_first_interval_infinite(self):
        recs = make_records([1.0, 2.0, 3.0], [1.5, 2.5, 2.0])
        # alpha = 0.5 so the conformal rank exists from the second step on
        out = conformalize(recs, ConformalConfig(kappa=5, alpha=0.5))
        assert math.isinf(out[0].width)
        assert all(math.isfinite(iv.width) for iv in out[1:])

    def test_coverage_identity_every_point(self):
        rng = np.random.default_rng(0)
        preds = rng.normal(size=60)
        actuals = preds + rng.normal(size=60)
        recs = make_records(preds, actuals)
        cfg = ConformalConfig(kappa=10, alpha=0.2)
        out = conformalize(recs, cfg)
        scores = [abs(r.actual - r.prediction) for r in recs]
        for t, (iv, r) in enumerate(zip(out, recs)):
            covered = iv.covers(r.actual)
            # actual in interval <=> score <= quantile (scale is 1)
            assert covered == (scores[t] <= iv.quantile)

    def test_online_causality(self):
        rng = np.random.default_rng(1)
        preds = rng.normal(size=30)
        actuals = preds + rng.normal(size=30)
        cfg = ConformalConfig(kappa=8, alpha=0.2)
        base = conformalize(make_records(preds, actuals), cfg)
        actuals2 = actuals.copy()
        actuals2[-1] += 100.0     # only the last realization changes
        pert = conformalize(make_records(preds, actuals2), cfg)
        for a, b in zip(base[:-1], pert[:-1]):
            assert a == b

    def test_constant_scale_width_equivariance(self):
        rng = np.random.default_rng(2)
        preds = rng.normal(size=40)
        resid = rng.normal(size=40)
        cfg = ConformalConfig(kappa=10, alpha=0.2)
        base = conformalize(make_records(preds, preds + resid), cfg)
        c = 3.0
        scaled = conformalize(make_records(c * preds, c * (preds + resid)), cfg)
        for a, b in zip(base[1:], scaled[1:]):
            assert b.width == pytest.approx(c * a.width, rel=1e-12)

    def test_unsorted_records_rejected(self):
        recs = make_records([1.0, 2.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            conformalize([recs[1], recs[0]], ConformalConfig())

    def test_residual_forest_runs_and_is_deterministic(self):
        rng = np.random.default_rng(3)
        feats = rng.normal(size=(40, 3))
        preds = rng.normal(size=40)
        actuals = preds + (1.0 + np.abs(feats[:, 0])) * rng.normal(size=40)
        recs = make_records(preds, actuals, feats)
        cfg = ConformalConfig(kappa=10, alpha=0.2, uncertainty="residual_forest")
        a = conformalize(recs, cfg)
        b = conformalize(recs, cfg)
        assert a == b
        assert all(iv.scale > 0 for iv in a)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ConformalConfig(kappa=1)
        with pytest.raises(ValueError):
            ConformalConfig(alpha=0.0)
        with pytest.raises(ValueError):
            ConformalConfig(uncertainty="gp")


class TestCoverageReport:
    def test_recount_oracle(self):
        rng = np.random.default_rng(4)
        preds = rng.normal(size=80)
        actuals = preds + rng.normal(size=80)
        recs = make_records(preds, actuals)
        out = conformalize(recs, ConformalConfig(kappa=15, alpha=0.1))
        rep = coverage_report(out, actuals)

        finite = [(iv, a) for iv, a in zip(out, actuals)
                  if math.isfinite(iv.width)]
        covered = sum(iv.lower <= a <= iv.upper for iv, a in finite)
        assert rep["n"] == len(finite)
        assert rep["coverage"] == pytest.approx(covered / len(finite))
        assert rep["infinite_intervals"] == 80 - len(finite)
        assert rep["mean_width"] == pytest.approx(
            np.mean([iv.width for iv, _ in finite]))

    def test_all_infinite_flagged_degenerate(self):
        iv = PredictionInterval(0, 0.0, -math.inf, math.inf, math.inf, 1.0)
        rep = coverage_report([iv], [0.0])
        assert rep["degenerate"] and rep["coverage"] == 1.0

    def test_point_intervals_hit_rate(self):
        ivs = [PredictionInterval(i, p, p, p, 0.0, 1.0)
               for i, p in enumerate([1.0, 2.0, 3.0])]
        rep = coverage_report(ivs, [1.0, 5.0, 3.0])
        assert rep["coverage"] == pytest.approx(2 / 3)

    def test_marginal_coverage_close_to_nominal(self):
        """Long i.i.d. run: empirical coverage near 1 - alpha."""
        rng = np.random.default_rng(5)
        n = 500
        preds = np.zeros(n)
        actuals = rng.normal(size=n)
        recs = make_records(preds, actuals)
        out = conformalize(recs, ConformalConfig(kappa=50, alpha=0.1))
        rep = coverage_report(out, actuals)
        assert 0.85 <= rep["coverage"] <= 0.95
