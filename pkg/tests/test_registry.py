import json

import numpy as np
import pytest

from nkpc.models import (
    DesignMatrix,
    ForestParams,
    GbtParams,
    fit_forest,
    fit_gbt,
    fit_ols,
    registry,
    serialize,
)


@pytest.fixture()
def design():
    rng = np.random.default_rng(21)
    X = rng.normal(size=(60, 3))
    y = X @ np.array([1.0, 0.0, -2.0]) + 0.2 * rng.normal(size=60)
    return DesignMatrix(("a", "b", "c"), X, y)


class TestRegistry:
    def test_all_families_fit_and_predict(self, design):
        for kind in registry.DESIGN_MODELS:
            model = registry.fit(kind, design, {})
            pred = model.predict(design.rows)
            assert pred.shape == (design.n,)
            assert np.all(np.isfinite(pred))

    def test_unknown_kind_rejected(self, design):
        with pytest.raises(ValueError):
            registry.fit("svm", design)

    def test_blocked_folds_are_contiguous_and_cover(self):
        folds = list(registry.blocked_folds(23, 5))
        flat = np.concatenate(folds)
        np.testing.assert_array_equal(flat, np.arange(23))
        for f in folds:
            np.testing.assert_array_equal(f, np.arange(f[0], f[-1] + 1))

    def test_tune_picks_lowest_cv_rmse(self, design):
        grid = [{"lam": 0.001}, {"lam": 1000.0}]
        best = registry.tune("ridge", design, grid)
        scores = {p["lam"]: registry.cv_rmse("ridge", design, p) for p in grid}
        assert best == {"lam": min(scores, key=scores.get)}

    def test_tune_first_wins_ties(self, design):
        grid = [{"lam": 0.5}, {"lam": 0.5}]
        assert registry.tune("ridge", design, grid) is grid[0]

    def test_default_grid_shapes(self):
        assert len(registry.default_grid("rf", 21)) == 12
        assert registry.default_grid("ols", 4) == [{}]
        assert all("lam" in g for g in registry.default_grid("lasso", 4))

    def test_cv_rmse_finite_for_sane_model(self, design):
        assert np.isfinite(registry.cv_rmse("ols", design, {}))


class TestSerialize:
    def test_linear_roundtrip(self, design):
        fit = fit_ols(design)
        back = serialize.loads(serialize.dumps(fit))
        np.testing.assert_allclose(back.coefficients, fit.coefficients)
        assert back.intercept == fit.intercept
        np.testing.assert_allclose(back.predict(design.rows),
                                   fit.predict(design.rows))

    def test_forest_roundtrip(self, design):
        forest = fit_forest(design, ForestParams(n_trees=5, seed=1))
        back = serialize.loads(serialize.dumps(forest))
        np.testing.assert_array_equal(back.predict(design.rows),
                                      forest.predict(design.rows))

    def test_gbt_roundtrip(self, design):
        m = fit_gbt(design, GbtParams(n_rounds=5))
        back = serialize.loads(serialize.dumps(m))
        np.testing.assert_array_equal(back.predict(design.rows),
                                      m.predict(design.rows))

    def test_payload_is_json(self, design):
        payload = serialize.dumps(fit_ols(design))
        assert isinstance(json.loads(payload), dict)
