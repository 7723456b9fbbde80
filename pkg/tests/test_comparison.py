import math

import numpy as np
import pytest
from scipy import stats

from nkpc.comparison import (
    gr_critical_value,
    gr_fluctuation_test,
    hac_variance,
    load_gr_critical_values,
    mcb_test,
    studentized_range_cdf,
    studentized_range_critical,
)
from nkpc.errors import (
    DegenerateVariance,
    LengthMismatch,
    NotEnoughModels,
    WindowTooLarge,
)


def rank_oracle(table):
    """Brute-force within-row average ranks via repeated sorting."""
    n_rows, n_models = table.shape
    ranks = np.zeros_like(table, dtype=float)
    for i in range(n_rows):
        for j in range(n_models):
            less = np.sum(table[i] < table[i, j])
            equal = np.sum(table[i] == table[i, j])
            ranks[i, j] = less + (equal + 1) / 2.0
    return ranks.mean(axis=0)


class TestStudentizedRange:
    def test_published_value_k8(self):
        # classical table value for k=8, df=inf, alpha=0.05
        assert studentized_range_critical(8, 0.05) == pytest.approx(4.29, abs=0.02)

    def test_k2_reduces_to_normal_range(self):
        # range of 2 normals: q = sqrt(2) * z_{1-alpha/2}
        want = math.sqrt(2.0) * stats.norm.ppf(0.975)
        assert studentized_range_critical(2, 0.05) == pytest.approx(want, abs=1e-4)

    def test_cdf_monotone(self):
        vals = [studentized_range_cdf(q, 5) for q in (1.0, 2.0, 3.0, 4.0)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        assert studentized_range_cdf(0.0, 5) == 0.0


class TestMcb:
    def test_matches_rank_oracle_12x8(self):
        rng = np.random.default_rng(30)
        table = rng.uniform(size=(12, 8)).round(2)  # rounding forces ties
        res = mcb_test(table, 0.05)
        oracle = rank_oracle(table)
        got = np.array([res.mean_ranks[f"model_{j}"] for j in range(8)])
        np.testing.assert_allclose(got, oracle, atol=1e-12)
        theta = studentized_range_critical(8, 0.05)
        want_cd = theta * math.sqrt(8 * 9 / (6.0 * 12))
        assert res.critical_distance == pytest.approx(want_cd, abs=1e-12)

    def test_dict_input_and_best(self):
        table = {"good": [1.0, 1.0, 1.0], "bad": [2.0, 2.0, 2.0],
                 "worse": [3.0, 3.0, 3.0]}
        res = mcb_test(table)
        assert res.best == "good"
        assert res.mean_ranks["good"] == 1.0
        assert res.mean_ranks["worse"] == 3.0

    def test_ties_average_ranks(self):
        table = np.array([[1.0, 1.0, 2.0], [1.0, 1.0, 2.0]])
        res = mcb_test(table)
        assert res.mean_ranks["model_0"] == 1.5
        assert res.mean_ranks["model_1"] == 1.5
        assert res.ties_flagged

    def test_indistinguishable_close_models(self):
        rng = np.random.default_rng(1)
        base = rng.uniform(size=10)
        table = np.column_stack([base + 1e-4 * rng.uniform(size=10),
                                 base + 1e-4 * rng.uniform(size=10),
                                 base + 10.0])
        res = mcb_test(table)
        other = {"model_0", "model_1"} - {res.best}
        assert set(res.indistinguishable) >= other

    def test_not_enough_models_or_rows(self):
        with pytest.raises(NotEnoughModels):
            mcb_test(np.ones((5, 1)))
        with pytest.raises(NotEnoughModels):
            mcb_test(np.ones((1, 5)))


class TestHac:
    def test_bandwidth_zero_is_plain_variance(self):
        x = np.random.default_rng(2).normal(size=200)
        assert hac_variance(x, 0) == pytest.approx(np.var(x), abs=1e-12)

    def test_direct_recomputation(self):
        x = np.random.default_rng(3).normal(size=50).cumsum()
        bw = 4
        xd = x - x.mean()
        want = float(xd @ xd) / 50
        for lag in range(1, bw + 1):
            w = 1.0 - lag / (bw + 1.0)
            want += 2.0 * w * float(xd[:-lag] @ xd[lag:]) / 50
        assert hac_variance(x, bw) == pytest.approx(want, abs=1e-12)


class TestGrFluctuation:
    def test_rolling_stats_match_direct_recomputation(self):
        rng = np.random.default_rng(8)
        la = rng.normal(size=40) ** 2
        lb = rng.normal(size=40) ** 2
        mu = 0.3
        res = gr_fluctuation_test(la, lb, mu)
        n = 40
        m = math.ceil(mu * n)
        assert res.window_size == m
        bw = math.ceil(m ** (1 / 3))
        d = la - lb
        for i, end in enumerate(range(m, n + 1)):
            w = d[end - m:end]
            want = math.sqrt(m) * w.mean() / math.sqrt(hac_variance(w, bw))
            assert res.rolling_stats[i] == pytest.approx(want, abs=1e-12)

    def test_identical_losses_give_zero_stats(self):
        x = np.random.default_rng(9).normal(size=30) ** 2
        res = gr_fluctuation_test(x, x, 0.5)
        np.testing.assert_allclose(res.rolling_stats, 0.0)
        assert res.rejections == ()

    def test_persistent_gap_rejected_somewhere(self):
        rng = np.random.default_rng(10)
        la = rng.normal(size=60) ** 2 + 5.0
        lb = rng.normal(size=60) ** 2
        res = gr_fluctuation_test(la, lb, 0.3)
        assert len(res.rejections) > 0
        assert all(s > 0 for s in res.rolling_stats)

    def test_constant_nonzero_differential_degenerate(self):
        base = np.random.default_rng(11).normal(size=30) ** 2
        with pytest.raises(DegenerateVariance):
            gr_fluctuation_test(base + 1.0, base, 0.5)

    def test_length_mismatch_and_window_bounds(self):
        with pytest.raises(LengthMismatch):
            gr_fluctuation_test([1.0, 2.0], [1.0], 0.5)
        with pytest.raises(WindowTooLarge):
            gr_fluctuation_test(np.ones(4), np.zeros(4), 0.1)  # m < 4

    def test_result_index_labels(self):
        rng = np.random.default_rng(12)
        la, lb = rng.normal(size=20) ** 2, rng.normal(size=20) ** 2
        labels = [f"t{i}" for i in range(20)]
        res = gr_fluctuation_test(la, lb, 0.5, index=labels)
        m = res.window_size
        assert res.stat_index[0] == labels[m - 1]
        assert res.stat_index[-1] == labels[-1]


class TestCriticalValues:
    def test_bundled_table_loads(self):
        table = load_gr_critical_values()
        assert "mu" in table and "critical_values" in table
        assert len(table["mu"]) == len(table["critical_values"]["0.95"])

    def test_interpolation_between_grid_points(self):
        table = load_gr_critical_values()
        mus = table["mu"]
        cvs = table["critical_values"]["0.95"]
        mid = 0.5 * (mus[0] + mus[1])
        want = 0.5 * (cvs[0] + cvs[1])
        assert gr_critical_value(mid, 0.05) == pytest.approx(want, abs=1e-12)

    def test_smaller_mu_has_larger_critical_value(self):
        assert gr_critical_value(0.1, 0.05) > gr_critical_value(0.9, 0.05)

    def test_out_of_range_mu_rejected(self):
        with pytest.raises(ValueError):
            gr_critical_value(0.01, 0.05)

    def test_unknown_level_rejected(self):
        with pytest.raises(ValueError):
            gr_critical_value(0.5, 0.20)

    def test_override_table(self):
        table = {"mu": [0.1, 0.9], "critical_values": {"0.95": [5.0, 3.0]}}
        assert gr_critical_value(0.5, 0.05, table) == pytest.approx(4.0)
