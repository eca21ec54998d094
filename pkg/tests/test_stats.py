import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from userfollow.errors import EmptyWindow
from userfollow.sim.engine import LOG_COLUMNS, SimLog
from userfollow.sim.stats import (ErrorStats, compute_stats, detect_window_start, format_comparison,
                                  format_stats, reduction_percent, reductions)


def make_log(ex, ey=None, f_s=200.0, speed=0.0):
    n = len(ex)
    cols = {c: np.zeros(n) for c in LOG_COLUMNS}
    cols["t"] = np.arange(n) / f_s
    cols["xh"] = speed * cols["t"]
    cols["ex"] = np.asarray(ex, float)
    cols["ey"] = np.zeros(n) if ey is None else np.asarray(ey, float)
    return SimLog(cols, f_s)


def test_constant_error():
    s = compute_stats(make_log(np.full(100, 0.01)), window_start=0.0)
    assert s.avg_abs_e_x == pytest.approx(1.0) and s.max_abs_e_x == pytest.approx(1.0)
    assert s.samples == 100


def test_alternating_error():
    s = compute_stats(make_log(0.02 * (-1.0) ** np.arange(100)), window_start=0.0)
    assert s.avg_abs_e_x == pytest.approx(2.0) and s.max_abs_e_x == pytest.approx(2.0)


def test_window_excludes_early_samples():
    ex = np.concatenate([np.full(100, 0.5), np.full(100, 0.01)])
    s = compute_stats(make_log(ex), window_start=0.5)
    assert s.max_abs_e_x == pytest.approx(1.0)
    assert s.samples == 100


def test_empty_window():
    with pytest.raises(EmptyWindow):
        compute_stats(make_log(np.zeros(10)), window_start=5.0)
    with pytest.raises(EmptyWindow):
        compute_stats(make_log(np.zeros(0)), window_start=0.0)


def test_window_start_detection():
    # human stands for 1 s then walks at 0.5 m/s
    n = 600
    t = np.arange(n) / 200
    log = make_log(np.zeros(n))
    log.columns["xh"] = np.where(t < 1.0, 0.0, 0.5 * (t - 1.0))
    assert detect_window_start(log) == pytest.approx(1.0, abs=0.01)
    # never walks: the whole log counts
    assert detect_window_start(make_log(np.zeros(n))) == 0.0


@given(arrays(float, 50, elements=st.floats(-1, 1)), arrays(float, 50, elements=st.floats(-1, 1)))
def test_max_at_least_avg(ex, ey):
    s = compute_stats(make_log(ex, ey), window_start=0.0)
    assert s.max_abs_e_x >= s.avg_abs_e_x >= 0
    assert s.max_abs_e_y >= s.avg_abs_e_y >= 0


def test_reduction_from_reference_averages():
    assert round(reduction_percent(1.79, 0.28), 2) == 84.36
    assert round(reduction_percent(3.43, 0.50), 2) == 85.42


def test_self_comparison_is_zero():
    s = ErrorStats(1.2, 0.7, 3.0, 2.0, 0.0, 10)
    assert all(v == 0.0 for v in reductions(s, s).values())
    assert "0.00%" in format_comparison("x", s, s)


def test_zero_baseline():
    assert reduction_percent(0.0, 0.0) == 0.0
    assert reduction_percent(0.0, 1.0) == float("-inf")


def test_reports():
    s = ErrorStats(1.0, 2.0, 3.0, 4.0, 0.5, 10)
    text = format_stats(s)
    assert "avg_abs_e_x = 1\n" in text and "samples = 10\n" in text
    table = format_comparison("slalom", ErrorStats(1.79, 3.43, 4.72, 9.16, 0, 1),
                              ErrorStats(0.28, 0.50, 1.39, 1.73, 0, 1))
    assert "84.36%" in table and "85.42%" in table
    assert "n/a" in format_comparison("slalom", None, s)
