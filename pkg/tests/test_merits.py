import warnings

import numpy as np
import pytest

from heatamp.energetics import terminal_currents
from heatamp.errors import DegenerateRectification, StepTooSmall
from heatamp.merits import (
    ALPHA_CAP,
    amplification,
    amplification_from_slopes,
    find_switch_points,
    grid,
    merit_table,
    rectification,
    rectification_table,
    sensitivity,
    stabilizer_stats,
    threshold_regions,
    zero_crossings,
)
from heatamp.model import BathTemperatures, DeviceConfig

FIG1 = DeviceConfig()
BASE = BathTemperatures(10.0, 5.0, 0.2)
RECTIFIER = DeviceConfig(chiR01=0.0, chiR02=0.2)
RECURRENCE = DeviceConfig(chiL02=16.2)


def fig1_table(cfg=FIG1, step=0.01):
    T_M = grid(0.2, 10.0, step)
    T = np.column_stack([np.full_like(T_M, 10.0), T_M, np.full_like(T_M, 0.2)])
    return T_M, merit_table(cfg, T)


@pytest.mark.parametrize(
    "start,stop,step,n,last",
    [(0.2, 10.0, 0.01, 981, 10.0), (1.0, 10.0, 0.025, 361, 10.0), (0.0, 1.0, 0.3, 4, 0.9), (-9.5, 9.5, 0.05, 381, 9.5)],
)
def test_grid_is_inclusive_and_drift_free(start, stop, step, n, last):
    g = grid(start, stop, step)
    assert g.size == n
    assert g[0] == start and g[-1] == last
    assert g[3] == round(start + 3 * step, 12)


@pytest.mark.parametrize("args", [(0, 1, 0), (0, 1, -0.1), (1, 1, 0.1), (2, 1, 0.1)])
def test_grid_rejects_bad_ranges(args):
    with pytest.raises(ValueError):
        grid(*args)


def test_sensitivity_matches_manual_central_difference():
    h = 1e-2
    lo = terminal_currents(FIG1, BathTemperatures(10, 5 - h, 0.2))
    hi = terminal_currents(FIG1, BathTemperatures(10, 5 + h, 0.2))
    for a in "LMR":
        expected = (hi.of(a) - lo.of(a)) / (2 * h)
        assert sensitivity(FIG1, BASE, a) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("T_M", [3.0, 5.0, 7.5])
def test_central_difference_is_second_order(T_M):
    temps = BathTemperatures(10, T_M, 0.2)
    ref = sensitivity(FIG1, temps, "L", h=1e-4)
    e1 = abs(sensitivity(FIG1, temps, "L", h=2e-2) - ref)
    e2 = abs(sensitivity(FIG1, temps, "L", h=1e-2) - ref)
    assert 3.0 < e1 / e2 < 5.0


def test_sensitivity_rejects_tiny_step():
    with pytest.raises(StepTooSmall):
        sensitivity(FIG1, BASE, "L", h=1e-300)


@pytest.mark.parametrize("h", [0.0, -1e-2, 6.0])
def test_sensitivity_rejects_bad_step(h):
    with pytest.raises(ValueError):
        sensitivity(FIG1, BASE, "M", h=h)


def test_amplification_point_matches_table_row():
    p = amplification(FIG1, BathTemperatures(10, 6.5, 0.2))
    q = fig1_table()[1].point(630)
    assert q.T_M == 6.5
    assert p == q
    assert p.alpha_L == pytest.approx(p.S_L / p.S_M, rel=1e-14)


def test_amplification_caps_divergent_points():
    S = np.array([[2.0, 0.0, -1.0], [2.0, -1e-12, -1.0], [2.0, -1.0, -1.0]])
    alpha, div = amplification_from_slopes(S)
    assert list(div) == [True, True, False]
    assert alpha[0].tolist() == [ALPHA_CAP, -ALPHA_CAP]
    assert alpha[1].tolist() == [-ALPHA_CAP, ALPHA_CAP]
    assert alpha[2].tolist() == [-2.0, 1.0]


def test_sum_rule_over_reference_sweep():
    _, t = fig1_table()
    assert t.ok.all()
    keep = ~t.divergent
    assert np.abs(t.alpha[keep].sum(axis=1) + 1).max() <= 1e-6


def test_transistor_region_and_middle_slope_zero():
    T_M, t = fig1_table()
    regions = threshold_regions(T_M, np.abs(t.alpha[:, 0]), 100.0)
    zeros = zero_crossings(T_M, t.S[:, 1])
    assert len(zeros) == 1 and zeros[0] == pytest.approx(6.96, abs=0.05)
    assert any(lo <= zeros[0] <= hi for lo, hi in regions)


def test_rectification_is_exactly_antisymmetric():
    deltas = grid(-5.0, 5.0, 0.25)
    deltas = deltas[deltas != 0]
    t = rectification_table(RECTIFIER, "fixed_TL", 10.0, deltas)
    assert np.array_equal(t.R, -t.R[::-1])
    assert (np.abs(t.R) <= 1).all()


def test_rectification_sign_is_consistent():
    deltas = grid(1.05, 9.5, 0.05)
    R = rectification_table(RECTIFIER, "fixed_TL", 10.0, deltas).R
    assert (R > 0).all() or (R < 0).all()


def test_fixed_mean_bias_temperatures():
    p = rectification(RECTIFIER, "fixed_mean", 5.0, 2.0)
    lo = terminal_currents(RECTIFIER, BathTemperatures(4.0, 6.0, 0.2))
    hi = terminal_currents(RECTIFIER, BathTemperatures(6.0, 4.0, 0.2))
    assert p.J_forward == pytest.approx(lo.J_M, rel=1e-12)
    assert p.J_reverse == pytest.approx(hi.J_M, rel=1e-12)


def test_rectification_rejects_zero_bias():
    with pytest.raises(DegenerateRectification):
        rectification(RECTIFIER, "fixed_TL", 10.0, 0.0)
    t = rectification_table(RECTIFIER, "fixed_TL", 10.0, [-1.0, 0.0, 1.0])
    assert t.errors[1].startswith("DegenerateRectification") and np.isnan(t.R[1])
    assert not t.errors[0] and not t.errors[2]


def test_rectification_warns_about_leaking_right_bath():
    with pytest.warns(UserWarning, match="leakage"):
        rectification(FIG1, "fixed_TL", 10.0, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        p = rectification(RECTIFIER, "fixed_TL", 10.0, 2.0)
    assert p.leak_ratio < 1e-2


def test_rectification_rejects_unknown_mode():
    with pytest.raises(ValueError):
        rectification_table(RECTIFIER, "sideways", 10.0, [1.0])


def test_switch_point_at_equilibrium():
    points = find_switch_points(FIG1, BathTemperatures(2.0, 1.0, 2.0), (1.05, 3.0), 0.1)
    assert len(points) == 1
    assert points[0].T_M == pytest.approx(2.0, abs=1e-9)


def test_switch_points_are_refined():
    points = find_switch_points(RECURRENCE.replace(delta=9.0), BASE, (0.2, 10.0), 0.05)
    assert len(points) >= 2
    scale = max(abs(terminal_currents(RECURRENCE.replace(delta=9.0), BathTemperatures(10, t, 0.2)).J_M)
                for t in (0.5, 5.0, 9.5))
    for p in points:
        assert abs(p.J_M) <= 1e-12 * scale
        assert 0.2 < p.T_M < 10.0


def test_no_switch_points_without_sign_change():
    assert find_switch_points(FIG1, BASE, (0.2, 2.0), 0.1) == []


def test_stabilizer_statistics():
    stats = stabilizer_stats(DeviceConfig(chiL01=20, chiL02=25, chiR02=20), BASE, "T_M", 0.2, 10.0, 0.01)
    assert stats.points == 981
    for a, mean in zip("LMR", (6.40e-6, -1.38e-6, -5.02e-6)):
        assert stats.mean[a] == pytest.approx(mean, rel=0.05)
    assert stats["L"][1] < 0.01 * abs(stats["L"][0])


def test_stabilizer_rejects_non_temperature_variable():
    with pytest.raises(ValueError):
        stabilizer_stats(FIG1, BASE, "delta", 1, 2, 0.5)


def test_threshold_regions_and_crossings_helpers():
    x = np.arange(8.0)
    y = np.array([0, 5, 6, 0, 0, 7, 0, 9])
    assert threshold_regions(x, y, 5) == [(1.0, 2.0), (5.0, 5.0), (7.0, 7.0)]
    assert zero_crossings([0, 1, 2], [-1.0, 1.0, 3.0]) == [0.5]
    assert zero_crossings([0, 1], [np.nan, 1.0]) == []


def test_merit_table_marks_failed_rows():
    t = merit_table(FIG1, [[10, 5, 0.2], [10, 0.005, 0.2]])
    assert t.ok.tolist() == [True, False]
    assert np.isnan(t.alpha[1]).all() and not t.divergent[1]


def test_stabilizer_statistics_under_right_bath_fluctuations():
    cfg = DeviceConfig(chiL01=20, chiL02=25, chiR02=20)
    stats = stabilizer_stats(cfg, BathTemperatures(10, 2, 0.2), "T_R", 0.2, 10.0, 0.01)
    for a, mean, std in zip("LMR", (6.43e-6, -1.60e-6, -4.83e-6), (2.17e-8, 9.56e-8, 1.17e-7)):
        assert stats.mean[a] == pytest.approx(mean, rel=0.05)
        assert stats.std[a] == pytest.approx(std, rel=0.2)


def test_decoupled_device_has_no_currents_to_average():
    cfg = DeviceConfig(chiL01=0, chiL02=0, chiL12=0, chiR01=0, chiR02=0, chiR12=0)
    stats = stabilizer_stats(cfg, BASE, "T_M", 0.2, 10.0, 0.1)
    for a in "LMR":
        mean, std = stats[a]
        assert abs(mean) < 1e-18 and std < 1e-18
