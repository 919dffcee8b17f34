import math

import numpy as np
import pytest

from heatamp.bath import decay_rate, occupation, rates, spectral_density
from heatamp.errors import ZeroGapError
from heatamp.model import BathTemperatures, DeviceConfig, bohr_frequencies

# Frozen from a 40-digit mpmath evaluation of mu^2 w exp(-|w|/kappa) (1 + 1/(exp(w/T) - 1))
# with mu = 0.01, kappa = 30.
REFERENCE_RATES = [
    (30.8, 10.0, 0.001156400115280969050858812),
    (-30.8, 10.0, 0.0000531472896871823666760117),
    (-65.0, 10.0, 0.000001121195312721393401534972),
    (65.0, 0.2, 0.0007446324859524701755806238),
    (0.6, 0.2, 0.00006189341192966806800956189),
    (-91.8, 5.0, 4.573565292164241755740555e-12),
]


def test_spectral_density_values():
    assert spectral_density(0.0, 30.0) == 0.0
    assert spectral_density(30.0, 30.0) == pytest.approx(30.0 * math.exp(-1) / (2 * math.pi), rel=1e-15)
    assert spectral_density(60.0, 30.0) / spectral_density(30.0, 30.0) == pytest.approx(2 * math.exp(-1), rel=1e-15)


def test_spectral_density_rejects_bad_cutoff():
    with pytest.raises(ValueError):
        spectral_density(1.0, 0.0)


def test_occupation():
    assert occupation(math.log(2.0), 1.0) == pytest.approx(1.0, rel=1e-15)
    assert occupation(5.0, 1e-3) == 0.0
    assert occupation(-1.0, 1.0) < 0
    with pytest.raises(ZeroGapError):
        occupation(0.0, 1.0)
    with pytest.raises(ValueError):
        occupation(1.0, 0.0)


@pytest.mark.parametrize("w,T,expected", REFERENCE_RATES)
def test_decay_rate_against_high_precision_values(w, T, expected):
    cfg = DeviceConfig()
    got = decay_rate(w, "L", cfg, BathTemperatures(T, T, T)).rate
    assert got == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("w,T", [(30.8, 10.0), (-12.3, 0.7), (91.8, 5.0), (1e-3, 2.0)])
def test_decay_rate_against_live_mpmath(w, T):
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 40
    x = mp.mpf(w)
    exact = mp.mpf("0.01") ** 2 * x * mp.exp(-abs(x) / 30) * (1 + 1 / (mp.exp(x / mp.mpf(T)) - 1))
    got = decay_rate(w, "M", DeviceConfig(), BathTemperatures(T, T, T)).rate
    assert got == pytest.approx(float(exact), rel=1e-13)


def test_zero_temperature_limit():
    cfg = DeviceConfig()
    cold = BathTemperatures(1e-4, 1e-4, 1e-4)
    w = 5.0
    assert decay_rate(w, "R", cfg, cold).rate == pytest.approx(1e-4 * w * math.exp(-w / 30.0), rel=1e-14)
    assert decay_rate(-w, "R", cfg, cold).rate == 0.0


@pytest.mark.parametrize("T", [0.2, 1.0, 10.0])
def test_detailed_balance_over_catalog(T):
    cfg = DeviceConfig()
    temps = BathTemperatures(T, T, T)
    for w in bohr_frequencies(cfg).values():
        w = abs(w)
        down = decay_rate(w, "L", cfg, temps).rate
        up = decay_rate(-w, "L", cfg, temps).rate
        assert abs(up - math.exp(-w / T) * down) <= 1e-12 * down


def test_rates_nonnegative_and_monotone_in_temperature():
    w = np.linspace(-100, 100, 401)
    w = w[w != 0]
    previous = np.zeros_like(w)
    for T in [0.1, 0.5, 1, 2, 5, 10, 50]:
        r = rates(w, 0.01, 30.0, T)
        assert (r >= 0).all()
        assert (r >= previous).all()
        previous = r


def test_rate_scales_as_mu_squared():
    assert rates(3.0, 0.02, 30.0, 2.0) == pytest.approx(4 * rates(3.0, 0.01, 30.0, 2.0), rel=1e-15)


def test_rates_survive_extreme_ratios():
    r = rates(np.array([-500.0, 500.0]), 0.01, 30.0, 0.2)
    assert r[0] == 0.0 and np.isfinite(r[1]) and r[1] > 0


@pytest.mark.parametrize("w", [0.0, 1e-10, -5e-10])
def test_decay_rate_rejects_degenerate_gap(w):
    with pytest.raises(ZeroGapError):
        decay_rate(w, "L", DeviceConfig(), BathTemperatures(1, 1, 1))
