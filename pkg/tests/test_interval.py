import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftcomm.channel import ChannelParams, hitting_cdf
from driftcomm.interval import (
    IsiCriteria,
    SearchGrid,
    interval_probabilities,
    isi_conditions_hold,
    optimize_interval_no_isi,
    optimize_interval_one_isi,
)
from driftcomm.modulation import Mode
from driftcomm.scenario import HEXOSE_D, PRESETS

CRIT = IsiCriteria()
GRID = SearchGrid()


def _conditions(ts, ch, crit=CRIT):
    f1, f2, f3 = (float(hitting_cdf(k * ts, ch)) for k in (1, 2, 3))
    return f1 > crit.A and f3 - f2 < crit.epsilon * f1


@pytest.mark.parametrize("name, ts", [("capillaries", 2.0640), ("vena_cava", 1.0390)])
def test_conditions_hold_at_published_intervals(name, ts):
    assert isi_conditions_hold(ts, PRESETS[name].channel, CRIT)


def test_no_drift_published_value_fails_first_condition():
    # about 77% of molecules have arrived by 5.9 s, short of A = 0.8
    ch = PRESETS["no_drift"].channel
    assert float(hitting_cdf(5.9, ch)) < 0.8
    assert not isi_conditions_hold(5.9, ch)


def test_criteria_validation():
    with pytest.raises(ValueError):
        IsiCriteria(A=1.5)
    with pytest.raises(ValueError):
        IsiCriteria(epsilon=0.0)
    with pytest.raises(ValueError):
        SearchGrid(t_min=1.0, t_max=0.5)
    with pytest.raises(ValueError):
        isi_conditions_hold(0.0, PRESETS["capillaries"].channel)


def test_interval_probabilities():
    ch = PRESETS["capillaries"].channel
    p_cur, p_res = interval_probabilities(1.5, ch)
    assert p_cur == pytest.approx(float(hitting_cdf(1.5, ch)))
    assert p_res == pytest.approx(float(hitting_cdf(3.0, ch)) - p_cur)


@pytest.mark.parametrize("name", ["capillaries", "vena_cava", "no_drift", "weak_drift", "strong_drift"])
def test_one_isi_result_satisfies_conditions_and_is_minimal(name):
    ch = PRESETS[name].channel
    res = optimize_interval_one_isi(ch, CRIT, GRID)
    assert res.mode is Mode.ONE_ISI and res.criteria_met
    assert _conditions(res.Ts, ch)
    below = GRID.points()
    below = below[below < res.Ts]
    assert not any(_conditions(t, ch) for t in below)
    # and bisection left no slack beyond the tolerance
    assert not _conditions(res.Ts * (1 - 10 * GRID.rtol), ch)
    assert res.p_hit_current == pytest.approx(float(hitting_cdf(res.Ts, ch)))


def test_known_capillaries_intervals():
    ch = PRESETS["capillaries"].channel
    one = optimize_interval_one_isi(ch)
    no = optimize_interval_no_isi(ch)
    assert one.Ts == pytest.approx(1.02335, rel=1e-5)
    assert no.Ts == pytest.approx(1.14121, rel=1e-5)
    assert 1 - float(hitting_cdf(no.Ts, ch)) == pytest.approx(1e-6, rel=1e-3)


def test_no_isi_without_drift_is_infinite():
    res = optimize_interval_no_isi(PRESETS["no_drift"].channel)
    assert math.isinf(res.Ts) and not res.criteria_met


def test_infeasible_grid_reports_infinity():
    tiny = SearchGrid(t_min=1e-4, t_max=1e-3)
    res = optimize_interval_one_isi(PRESETS["capillaries"].channel, CRIT, tiny)
    assert math.isinf(res.Ts) and not res.criteria_met
    res = optimize_interval_no_isi(PRESETS["capillaries"].channel, 1e-6, tiny)
    assert math.isinf(res.Ts) and not res.criteria_met


def test_no_isi_rejects_bad_delta():
    with pytest.raises(ValueError):
        optimize_interval_no_isi(PRESETS["capillaries"].channel, delta=0.0)


def test_no_isi_monotone_in_delta():
    ch = PRESETS["capillaries"].channel
    ts = [optimize_interval_no_isi(ch, delta).Ts for delta in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert all(a <= b for a, b in zip(ts, ts[1:]))


@settings(max_examples=25, deadline=None)
@given(d=st.floats(10.0, 1e4), v1=st.floats(10.0, 1e4), ratio=st.floats(1.01, 10.0))
def test_faster_drift_never_lengthens_the_interval(d, v1, ratio):
    slow = optimize_interval_one_isi(ChannelParams(d, v1, HEXOSE_D))
    fast = optimize_interval_one_isi(ChannelParams(d, v1 * ratio, HEXOSE_D))
    assert fast.Ts <= slow.Ts * (1 + 1e-8)


@settings(max_examples=25, deadline=None)
@given(v=st.floats(10.0, 1e4), d1=st.floats(10.0, 1e4), ratio=st.floats(1.01, 10.0))
def test_longer_distance_never_shortens_the_interval(v, d1, ratio):
    near = optimize_interval_no_isi(ChannelParams(d1, v, HEXOSE_D))
    far = optimize_interval_no_isi(ChannelParams(d1 * ratio, v, HEXOSE_D))
    assert far.Ts >= near.Ts * (1 - 1e-8)


def test_grid_points_cover_range():
    pts = GRID.points()
    assert pts[0] == pytest.approx(GRID.t_min) and pts[-1] == pytest.approx(GRID.t_max)
    assert np.all(pts[1:] / pts[:-1] <= 1 + GRID.resolution + 1e-12)
