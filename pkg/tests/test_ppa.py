import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from neutnn.hwgen.ppa import (PPA_TABLE, Pdk, PpaRow, compare_pdks, fit_line, fit_ppa, fits_csv,
                              forecast, table_csv)

TNN7_ROWS = PPA_TABLE[Pdk.TNN7]


def test_table_shape_and_spot_values():
    for pdk in Pdk:
        assert len(PPA_TABLE[pdk]) == 12
    assert (TNN7_ROWS[0].synapses, TNN7_ROWS[0].leakage) == (130, 0.74)
    assert (TNN7_ROWS[-1].synapses, TNN7_ROWS[-1].leakage) == (6750, 40.27)
    assert PPA_TABLE[Pdk.FREEPDK45][-1].leakage == 19.8


def test_two_point_fit_is_exact():
    a, b = fit_line([0, 1], [2.5, 2.5 + 0.75])
    assert a == pytest.approx(0.75) and b == pytest.approx(2.5)
    m = fit_ppa("TNN7", table=[PpaRow("a", 0, 1.0, 10.0), PpaRow("b", 1, 3.0, 15.0)])
    assert (m.leak_slope, m.leak_intercept) == pytest.approx((2.0, 1.0))
    assert (m.area_slope, m.area_intercept) == pytest.approx((5.0, 10.0))
    assert m.leak_max_rel_error == pytest.approx(0.0, abs=1e-12)


def test_ols_matches_closed_form():
    for pdk in Pdk:
        rows = PPA_TABLE[pdk]
        xs = [r.synapses for r in rows]
        m = fit_ppa(pdk)
        assert (m.leak_slope, m.leak_intercept) == pytest.approx(oracles.ols(xs, [r.leakage for r in rows]))
        assert (m.area_slope, m.area_intercept) == pytest.approx(oracles.ols(xs, [r.area for r in rows]))


def test_tnn7_slope_close_to_extreme_rows():
    two_point = (40.27 - 0.74) / (6750 - 130)
    assert two_point == pytest.approx(5.97e-3, rel=1e-3)
    assert fit_ppa("TNN7").leak_slope == pytest.approx(two_point, rel=0.01)


def test_spot_forecasts():
    assert forecast(fit_ppa("FreePDK45"), 6750).leakage == pytest.approx(19.8, rel=0.15)
    f = forecast(fit_ppa("TNN7"), 2562)
    assert f.leakage == pytest.approx(13.67, rel=0.15)
    assert f.area == pytest.approx(16660.49, rel=0.15)
    assert (f.leak_unit, f.area_unit) == ("uW", "um2")


def test_zero_synapses_gives_intercepts():
    m = fit_ppa("ASAP7")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        f = forecast(m, 0)
    assert (f.leakage, f.area) == (max(m.leak_intercept, 0.0), max(m.area_intercept, 0.0))


@settings(max_examples=100, deadline=None)
@given(st.integers(200, 10**6), st.sampled_from(list(Pdk)))
def test_forecast_is_linear(s, pdk):
    m = fit_ppa(pdk)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        f1, f2, f3 = (forecast(m, k * s) for k in (1, 2, 3))
    assert f2.leakage - f1.leakage == pytest.approx(f3.leakage - f2.leakage)
    assert f2.area - f1.area == pytest.approx(f3.area - f2.area)


def test_far_extrapolation_warns_and_flags():
    with pytest.warns(RuntimeWarning, match="beyond the fitted range"):
        f = forecast(fit_ppa("TNN7"), 1_232_000)
    assert f.extrapolated
    # far outside the table, so the value is informational only
    assert f.leakage_uw > 0


def test_negative_forecast_is_clamped():
    m = fit_ppa("FreePDK45")
    assert m.leak_intercept < 0
    with pytest.warns(RuntimeWarning, match="clamped"):
        f = forecast(m, 0)
    assert f.leakage == 0.0


def test_compare_examples():
    order = [f.pdk for f in compare_pdks(6750)]
    assert order.index(Pdk.TNN7) < order.index(Pdk.ASAP7)
    assert TNN7_ROWS[0].leakage < PPA_TABLE[Pdk.ASAP7][0].leakage
    for s in (500, 5000, 50000):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert [f.pdk for f in compare_pdks(s)] == [Pdk.TNN7, Pdk.ASAP7, Pdk.FREEPDK45]


def _ordered_above_smallest(method):
    fits = {p: fit_ppa(p, method=method) for p in Pdk}
    bad = []
    for s in range(131, 7000):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if [f.pdk for f in compare_pdks(s, fits=fits)] != [Pdk.TNN7, Pdk.ASAP7, Pdk.FREEPDK45]:
                bad.append(s)
    return bad


def test_ordering_above_smallest_benchmark_least_squares():
    # the least-squares 45 nm line goes negative below ~160 synapses
    bad = _ordered_above_smallest("ols")
    assert not bad, f"ordering broken at {len(bad)} counts, first {bad[:3]}"


def test_ordering_above_smallest_benchmark_minimax():
    assert _ordered_above_smallest("minimax") == []


def test_tnn7_below_asap7_at_every_table_count():
    for method in ("ols", "minimax"):
        tnn, asap = fit_ppa("TNN7", method=method), fit_ppa("ASAP7", method=method)
        for r in TNN7_ROWS:
            assert forecast(tnn, r.synapses).leakage < forecast(asap, r.synapses).leakage


def test_minimax_fit_is_within_fifteen_percent():
    for pdk in Pdk:
        m = fit_ppa(pdk, method="minimax")
        assert m.leak_max_rel_error <= 0.15 and m.area_max_rel_error <= 0.15
        assert m.leak_max_rel_error <= fit_ppa(pdk).leak_max_rel_error


def test_minimax_error_is_really_the_max_relative_error():
    rows = PPA_TABLE[Pdk.ASAP7]
    m = fit_ppa("ASAP7", method="minimax")
    rel = [abs(m.leak_slope * r.synapses + m.leak_intercept - r.leakage) / r.leakage for r in rows]
    assert max(rel) == pytest.approx(m.leak_max_rel_error)


def test_fit_errors():
    with pytest.raises(ValueError, match="degenerate"):
        fit_line([5, 5, 5], [1, 2, 3])
    with pytest.raises(ValueError):
        fit_line([1], [1])
    with pytest.raises(ValueError, match="unknown"):
        fit_line([1, 2], [1, 2], "cubic")
    with pytest.raises(ValueError):
        forecast(fit_ppa("TNN7"), -1)


def test_csv_exports():
    lines = table_csv().splitlines()
    assert len(lines) == 1 + 36
    assert lines[1] == "FreePDK45,SonyAIBORobotSurface2,130,0.32,mW,15156.68,um2"
    fits = fits_csv([fit_ppa(p) for p in Pdk]).splitlines()
    assert len(fits) == 4 and fits[3].startswith("TNN7,ols,")
    assert np.isfinite(float(fits[3].split(",")[2]))
