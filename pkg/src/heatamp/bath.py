"""Ohmic bosonic baths: spectral density, Bose occupation and jump rates."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ZeroGapError
from .model import TOL_DEG, BathTemperatures, DeviceConfig


@dataclass(frozen=True)
class DecayRate:
    terminal: str
    bohr: float
    rate: float


def spectral_density(xi, kappa):
    """Ohmic density with exponential cutoff, ``xi * exp(-xi / kappa) / (2 pi)``."""
    if np.any(np.asarray(kappa) <= 0):
        raise ValueError("cutoff kappa must be > 0")
    return xi * np.exp(-xi / kappa) / (2.0 * np.pi)


def occupation(xi: float, T: float) -> float:
    """Bose-Einstein occupation ``1 / (exp(xi / T) - 1)``; negative for ``xi < 0``."""
    if T <= 0:
        raise ValueError(f"temperature must be > 0, got {T!r}")
    if xi == 0:
        raise ZeroGapError("Bose occupation has a pole at zero frequency")
    x = xi / T
    if x > 700.0:
        return 0.0
    return 1.0 / math.expm1(x)


def rates(omega, mu, kappa, T):
    """Vectorised ``mu^2 * omega * exp(-|omega|/kappa) * (1 + N(omega))``.

    ``omega * (1 + N(omega))`` is evaluated as ``-omega / expm1(-omega/T)``, which
    is finite for either sign and underflows cleanly to 0 for strongly
    suppressed absorption. Zero gaps must be screened out by the caller.
    """
    omega = np.asarray(omega, dtype=float)
    with np.errstate(over="ignore"):
        thermal = -omega / np.expm1(-omega / T)
    return mu * mu * np.exp(-np.abs(omega) / kappa) * thermal


def decay_rate(omega: float, terminal: str, cfg: DeviceConfig, temps: BathTemperatures) -> DecayRate:
    if abs(omega) <= TOL_DEG:
        raise ZeroGapError(f"Bohr frequency {omega!r} on terminal {terminal} is degenerate with zero")
    value = rates(omega, cfg.mu(terminal), cfg.kappa(terminal), temps.of(terminal))
    return DecayRate(terminal=terminal, bohr=float(omega), rate=float(value))
