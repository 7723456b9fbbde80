import numpy as np
import pytest

from nkpc.errors import InsufficientHistory
from nkpc.synth import DgpParams, dgp_description, synth_dgp


def test_deterministic_by_seed():
    a = synth_dgp(7, 80)
    b = synth_dgp(7, 80)
    for name in a.columns:
        assert np.array_equal(a.column(name).values, b.column(name).values)


def test_different_seeds_differ():
    a = synth_dgp(1, 80)
    b = synth_dgp(2, 80)
    assert not np.array_equal(a.column("inflation").values,
                              b.column("inflation").values)


def test_shape_and_columns():
    d = synth_dgp(0, 60)
    assert len(d) == 60
    assert set(d.columns) == {"inflation", "gdp", "fx_growth",
                              "crude_growth", "rain_dev"}
    assert str(d.index[0]) == "2000Q1"


def test_gdp_strictly_positive():
    d = synth_dgp(3, 100)
    assert np.all(d.column("gdp").values > 0)


def test_minimum_length_enforced():
    with pytest.raises(InsufficientHistory):
        synth_dgp(0, 59)


def test_prefix_stability():
    # the same seed at two lengths shares its leading quarters
    a = synth_dgp(5, 60)
    b = synth_dgp(5, 60)
    np.testing.assert_array_equal(a.column("inflation").values[:60],
                                  b.column("inflation").values[:60])


def test_threshold_asymmetry_visible():
    """Inflation responds much more to positive than negative activity."""
    p = DgpParams(sigma_pi=0.0)
    d = synth_dgp(9, 200, p)
    pi = d.column("inflation").values
    g = 100.0 * np.log(d.column("gdp").values) - (100.0 * np.log(100.0)
                                                  + p.trend_growth * np.arange(200))
    gl = g[:-1]
    dpi = pi[1:] - p.persistence * pi[:-1] - p.const \
        - p.interaction * (pi[:-1] - 4.0) * gl
    pos, neg = gl > 0.5, gl < -0.5
    slope_pos = np.mean(dpi[pos] / gl[pos])
    slope_neg = np.mean(dpi[neg] / gl[neg])
    assert slope_pos == pytest.approx(p.slope_pos, abs=1e-8)
    assert slope_neg == pytest.approx(p.slope_neg, abs=1e-8)


def test_rain_dev_carries_activity_signal():
    d = synth_dgp(13, 200)
    g = 100.0 * np.log(d.column("gdp").values) - (100.0 * np.log(100.0)
                                                  + 1.5 * np.arange(200))
    corr_rain = np.corrcoef(d.column("rain_dev").values, g)[0, 1]
    corr_fx = np.corrcoef(d.column("fx_growth").values, g)[0, 1]
    assert corr_rain > 0.25
    assert abs(corr_fx) < 0.25


def test_description_mentions_every_parameter():
    text = dgp_description()
    for name in ("rho", "slope_pos", "slope_neg", "interaction"):
        assert name in text
