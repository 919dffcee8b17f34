import numpy as np
import pytest

from heatamp.bath import rates
from heatamp.energetics import steady_currents_batch, terminal_currents, transition_currents
from heatamp.errors import NonUniqueSteadyState
from heatamp.kinetics import PopulationVector, generator, steady_state
from heatamp.merits import grid
from heatamp.model import TRANSITION_LABELS, BathTemperatures, DeviceConfig
from oracles import gibbs, lindblad_currents
from test_model import random_config

FIG1 = DeviceConfig()
STABILIZER = DeviceConfig(chiL01=20.0, chiL02=25.0, chiR02=20.0)


def fig1_sweep(cfg=FIG1):
    T_M = grid(0.2, 10.0, 0.01)
    T = np.column_stack([np.full_like(T_M, 10.0), T_M, np.full_like(T_M, 0.2)])
    return T_M, steady_currents_batch(cfg, T)


def test_report_totals_are_sums_of_labeled_currents():
    r = terminal_currents(FIG1, BathTemperatures(10, 5, 0.2))
    assert r.labels == TRANSITION_LABELS
    for a in "LMR":
        mine = np.array([v for k, v in r.by_label().items() if k.startswith(a + ":")])
        assert r.of(a) == mine.sum()
    assert r.residual == r.J_L + r.J_M + r.J_R


@pytest.mark.parametrize("temps", [BathTemperatures(10, 5, 2), BathTemperatures(3, 9, 0.7)])
def test_currents_match_lindblad_energy_flow(temps):
    r = terminal_currents(FIG1, temps)
    ref = lindblad_currents(FIG1, temps, r.populations.P)
    scale = max(abs(v) for v in ref.values())
    for a in "LMR":
        assert r.of(a) == pytest.approx(ref[a], abs=1e-9 * scale)


def test_gibbs_populations_carry_no_current():
    cfg, T = DeviceConfig(chiL01=11.0), 3.0
    temps = BathTemperatures(T, T, T)
    r = transition_currents(PopulationVector(gibbs(cfg, T)), cfg, temps)
    assert np.abs(r.currents).max() <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_equal_temperatures_silence_all_terminals(seed):
    rng = np.random.default_rng(seed)
    T = rng.uniform(0.5, 10)
    r = terminal_currents(random_config(rng), BathTemperatures(T, T, T))
    assert max(abs(v) for v in r.totals) <= 1e-12


def test_transition_current_changes_sign_at_detailed_balance():
    cfg, temps = FIG1, BathTemperatures(10, 5, 0.2)
    k = TRANSITION_LABELS.index("L:g1g-e1g")
    w = 30.8
    ratio = rates(-w, 0.01, 30.0, 10.0) / rates(w, 0.01, 30.0, 10.0)
    for factor, sign in [(0.5, 1.0), (2.0, -1.0)]:
        P = np.zeros(12)
        P[4] = 1.0  # g1g
        P[6] = factor * ratio  # e1g, below or above the balance point
        P /= P.sum()
        r = transition_currents(P, cfg, temps)
        assert np.sign(r.flux[k]) == sign


def test_energy_balance_over_reference_sweep():
    _, b = fig1_sweep()
    assert b.ok.all()
    assert (np.abs(b.totals.sum(axis=1)) <= 1e-10 * np.abs(b.totals).max(axis=1)).all()


def test_middle_current_stays_small_below_the_transistor_peak():
    T_M, b = fig1_sweep()
    window = (T_M > 1.0) & (T_M < 6.9)
    J_L, J_M, J_R = b.totals[window].T
    assert (np.abs(J_M) < 0.1 * np.abs(J_L)).all()
    assert (np.abs(J_M) < 0.1 * np.abs(J_R)).all()
    assert J_L[-1] > 3 * J_L[0]


def test_level_one_two_channel_is_negligible():
    _, b = fig1_sweep()
    m12 = [i for i, k in enumerate(TRANSITION_LABELS) if k.startswith("M:") and k[3] + k[7] == "12"]
    assert len(m12) == 4
    share = np.abs(b.currents[:, m12].sum(axis=1)) / np.abs(b.totals).max(axis=1)
    assert share.max() < 0.05


def test_left_flux_inequality_at_mid_temperature():
    r = terminal_currents(FIG1, BathTemperatures(10, 5, 0.2))
    big = abs(r.flux[TRANSITION_LABELS.index("L:g0e-e0e")])
    small = abs(r.flux[TRANSITION_LABELS.index("L:g0g-e0g")])
    assert big > small


def test_stabilizer_mean_currents():
    _, b = fig1_sweep(STABILIZER)
    mean = b.totals.mean(axis=0)
    assert mean[0] == pytest.approx(6.40e-6, rel=0.05)
    assert mean[1] == pytest.approx(-1.38e-6, rel=0.05)


def test_high_temperature_reversal():
    r = terminal_currents(FIG1, BathTemperatures(10, 30, 0.2))
    assert r.J_M > 0 and r.J_L < 0 and r.J_R < 0


def test_reducible_config_propagates():
    with pytest.raises(NonUniqueSteadyState):
        terminal_currents(FIG1.replace(nu01=0, nu02=0, nu12=0), BathTemperatures(10, 5, 0.2))


def test_batch_reports_per_row_errors():
    T = np.array([[10, 5, 0.2], [10, -1.0, 0.2], [10, 6, 0.2]])
    b = steady_currents_batch(FIG1, T)
    assert list(b.ok) == [True, False, True]
    assert np.isnan(b.totals[1]).all()
    assert b.errors[1].startswith("ValueError")


def test_batch_agrees_with_single_point_api():
    T = np.array([[10, 5, 0.2], [7, 2, 1.0]])
    b = steady_currents_batch(FIG1, T)
    for row, totals in zip(T, b.totals):
        r = terminal_currents(FIG1, BathTemperatures(*row))
        np.testing.assert_allclose(totals, r.totals, rtol=1e-12, atol=0)
    assert np.allclose(b.P[0], steady_state(generator(FIG1, BathTemperatures(10, 5, 0.2))).P, rtol=1e-12, atol=0)
