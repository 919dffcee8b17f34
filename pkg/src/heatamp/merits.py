"""Figures of merit on top of steady-state currents.

Sensitivities are central differences in the control temperature T_M. The
amplification factor is the ratio of the left/right sensitivity to the middle
one. Also here: rectification of the L-M heat flow, zeros of J_M (heat-switch
points) and the mean/spread of currents over a temperature range.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .energetics import steady_currents_batch
from .errors import (
    DegenerateRectification,
    HeatampError,
    NonUniqueSteadyState,
    SteadyStateError,
    StepTooSmall,
    ZeroGapError,
)
from .model import TERMINALS, BathTemperatures, DeviceConfig, gap_statistics, validity_flags

DEFAULT_H = 1e-2
TOL_DIV = 1e-9
ALPHA_CAP = 1e9
RECTIFICATION_FLOOR = 1e-14
LEAK_WARNING = 1e-2
RECTIFICATION_MODES = ("fixed_TL", "fixed_mean")


def grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive arithmetic grid ``start, start + step, ...`` up to ``stop``.

    Points are ``start + i * step`` rounded to 12 decimals so that grids do not
    pick up accumulated drift (0.2 + 3 * 0.01 is stored as 0.23, not 0.23000000000000004).
    """
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step!r}")
    if not start < stop:
        raise ValueError(f"start ({start!r}) must be below stop ({stop!r})")
    n = math.floor((stop - start) / step + 1e-9) + 1
    return np.round(start + step * np.arange(n), 12)


def _raise_row_error(message: str):
    kind, _, text = message.partition(": ")
    if kind == "NonUniqueSteadyState":
        raise NonUniqueSteadyState(text)
    if kind == "ZeroGapError":
        raise ZeroGapError(text)
    if kind == "ValueError":
        raise ValueError(text)
    raise SteadyStateError(text)


# -- sensitivity and amplification -------------------------------------------------

@dataclass(frozen=True)
class MeritPoint:
    T_M: float
    J_L: float
    J_M: float
    J_R: float
    S_L: float
    S_M: float
    S_R: float
    alpha_L: float
    alpha_R: float
    divergent: bool
    secular_ok: bool
    weak_coupling_ok: bool
    degenerate: bool
    error: str = ""

    @property
    def alphas(self) -> tuple[float, float]:
        return (self.alpha_L, self.alpha_R)

    @property
    def sum_rule(self) -> float:
        """``alpha_L + alpha_R + 1``; zero up to the energy-balance residual."""
        return self.alpha_L + self.alpha_R + 1.0


@dataclass(frozen=True, eq=False)
class MeritTable:
    """Currents, sensitivities and amplification on N base temperature triples."""

    T: np.ndarray
    J: np.ndarray
    S: np.ndarray
    alpha: np.ndarray
    divergent: np.ndarray
    secular_ok: np.ndarray
    weak_coupling_ok: np.ndarray
    degenerate: bool
    P: np.ndarray
    currents: np.ndarray
    errors: list[str]
    h: float

    def __len__(self) -> int:
        return self.T.shape[0]

    @property
    def ok(self) -> np.ndarray:
        return np.array([not e for e in self.errors], dtype=bool)

    def point(self, i: int) -> MeritPoint:
        return MeritPoint(
            float(self.T[i, 1]), *map(float, self.J[i]), *map(float, self.S[i]),
            float(self.alpha[i, 0]), float(self.alpha[i, 1]), bool(self.divergent[i]),
            bool(self.secular_ok[i]), bool(self.weak_coupling_ok[i]), self.degenerate, self.errors[i],
        )


def amplification_from_slopes(S: np.ndarray):
    """Capped ``(alpha_L, alpha_R)`` and the divergence flag from sensitivities (N, 3)."""
    S_L, S_M, S_R = S[:, 0], S[:, 1], S[:, 2]
    divergent = np.abs(S_M) < TOL_DIV * np.maximum(np.abs(S_L), np.abs(S_R))
    safe = np.where(divergent | (S_M == 0), 1.0, S_M)
    alpha = np.column_stack([S_L / safe, S_R / safe])
    sign_M = np.where(S_M < 0, -1.0, 1.0)
    capped = np.column_stack([np.sign(S_L), np.sign(S_R)]) * sign_M[:, None] * ALPHA_CAP
    alpha = np.where(divergent[:, None], capped, alpha)
    return alpha, divergent


def merit_table(cfg: DeviceConfig, T, h: float = DEFAULT_H) -> MeritTable:
    """Evaluate every base triple of ``T`` (N, 3) and its T_M +- h neighbours in one batch."""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    n = T.shape[0]
    lo, hi = T.copy(), T.copy()
    lo[:, 1] -= h
    hi[:, 1] += h
    batch = steady_currents_batch(cfg, np.vstack([T, lo, hi]))
    J = batch.totals[:n]
    S = (batch.totals[2 * n:] - batch.totals[n:2 * n]) / (2.0 * h)
    errors = [batch.errors[i] or batch.errors[n + i] or batch.errors[2 * n + i] for i in range(n)]
    if not h > 0:
        errors = [f"ValueError: stencil step must be > 0, got {h!r}"] * n
    alpha, divergent = amplification_from_slopes(S)
    min_sep, min_abs, degeneracies = gap_statistics(cfg)
    secular_ok, weak_ok = validity_flags(min_sep, min_abs, batch.max_rate[:n])
    failed = np.array([bool(e) for e in errors], dtype=bool)
    for arr in (J, S, alpha):
        arr[failed] = np.nan
    divergent = divergent & ~failed
    return MeritTable(
        T=T, J=J, S=S, alpha=alpha, divergent=divergent,
        secular_ok=np.asarray(secular_ok, bool) & ~failed, weak_coupling_ok=np.asarray(weak_ok, bool) & ~failed,
        degenerate=bool(degeneracies), P=batch.P[:n], currents=batch.currents[:n], errors=errors, h=h,
    )


def _single(cfg: DeviceConfig, temps: BathTemperatures, h: float) -> MeritPoint:
    if not h > 0:
        raise ValueError(f"stencil step must be > 0, got {h!r}")
    if temps.T_M - h <= 0:
        raise ValueError(f"T_M - h must stay positive (T_M = {temps.T_M!r}, h = {h!r})")
    table = merit_table(cfg, [[temps.T_L, temps.T_M, temps.T_R]], h)
    if table.errors[0]:
        _raise_row_error(table.errors[0])
    return table.point(0)


def sensitivity(cfg: DeviceConfig, temps: BathTemperatures, terminal: str, h: float = DEFAULT_H) -> float:
    """``dJ_terminal / dT_M`` by a central difference with half-width ``h``."""
    if terminal not in TERMINALS:
        raise ValueError(f"unknown terminal {terminal!r}")
    if not h > 0:
        raise ValueError(f"stencil step must be > 0, got {h!r}")
    if temps.T_M - h <= 0:
        raise ValueError(f"T_M - h must stay positive (T_M = {temps.T_M!r}, h = {h!r})")
    batch = steady_currents_batch(
        cfg, [[temps.T_L, temps.T_M - h, temps.T_R], [temps.T_L, temps.T_M + h, temps.T_R]]
    )
    for e in batch.errors:
        if e:
            _raise_row_error(e)
    k = TERMINALS.index(terminal)
    lo, hi = batch.totals[0, k], batch.totals[1, k]
    if abs(hi - lo) <= 10 * np.finfo(float).eps * max(abs(hi), abs(lo)):
        raise StepTooSmall(
            f"J_{terminal} changes by {abs(hi - lo):.3g} across the stencil, below rounding noise; increase h"
        )
    return float((hi - lo) / (2.0 * h))


def amplification(cfg: DeviceConfig, temps: BathTemperatures, h: float = DEFAULT_H) -> MeritPoint:
    """Currents, sensitivities and ``alpha_{L,R} = S_{L,R} / S_M`` at one temperature triple.

    ``alpha`` is capped at ``1e9`` in magnitude and ``divergent`` is set when
    ``|S_M|`` is negligible against the side sensitivities.
    """
    return _single(cfg, temps, h)


# -- rectification ------------------------------------------------------------------

@dataclass(frozen=True)
class RectificationPoint:
    Delta: float
    mode: str
    anchor: float
    J_forward: float
    J_reverse: float
    R: float
    J_R_forward: float
    J_R_reverse: float

    @property
    def leak_ratio(self) -> float:
        """Largest |J_R| relative to the larger of the two rectified currents."""
        scale = max(abs(self.J_forward), abs(self.J_reverse))
        return max(abs(self.J_R_forward), abs(self.J_R_reverse)) / scale if scale else math.inf


def _bias_temperatures(mode: str, anchor: float, delta: np.ndarray, T_R: float) -> np.ndarray:
    if mode == "fixed_TL":
        T_L = np.full_like(delta, anchor)
        T_M = anchor + delta
    elif mode == "fixed_mean":
        T_L = anchor - delta / 2.0
        T_M = anchor + delta / 2.0
    else:
        raise ValueError(f"mode must be one of {RECTIFICATION_MODES}, got {mode!r}")
    return np.column_stack([T_L, T_M, np.full_like(delta, T_R)])


@dataclass(frozen=True, eq=False)
class RectificationTable:
    Delta: np.ndarray
    mode: str
    anchor: float
    T_R: float
    J: np.ndarray  # (N, 2): J_M at +Delta and at -Delta
    J_R: np.ndarray  # (N, 2): leakage through the right terminal at +Delta and -Delta
    R: np.ndarray
    errors: list[str]

    def point(self, i: int) -> RectificationPoint:
        return RectificationPoint(
            float(self.Delta[i]), self.mode, self.anchor, float(self.J[i, 0]), float(self.J[i, 1]),
            float(self.R[i]), float(self.J_R[i, 0]), float(self.J_R[i, 1]),
        )


def rectification_table(cfg: DeviceConfig, mode: str, anchor: float, deltas, T_R: float = 0.2) -> RectificationTable:
    """Rectification factor at every bias in ``deltas``.

    The currents at ``+|Delta|`` and ``-|Delta|`` are evaluated once and shared by
    ``Delta`` and ``-Delta``, so ``R(-Delta) == -R(Delta)`` holds bit for bit.
    """
    deltas = np.asarray(deltas, dtype=float)
    mags = np.unique(np.abs(deltas))
    T = np.vstack([_bias_temperatures(mode, anchor, mags, T_R), _bias_temperatures(mode, anchor, -mags, T_R)])
    bad_T = ~(T > 0).all(axis=1)
    T_eval = np.where(bad_T[:, None], 1.0, T)
    batch = steady_currents_batch(cfg, T_eval)
    m = mags.size
    J_M, J_R = batch.totals[:, 1], batch.totals[:, 2]
    errs = [("ValueError: bias drives a temperature to <= 0" if bad_T[i] else batch.errors[i]) for i in range(2 * m)]
    pos = np.searchsorted(mags, np.abs(deltas))
    fwd = np.where(deltas >= 0, pos, pos + m)
    rev = np.where(deltas >= 0, pos + m, pos)
    J = np.column_stack([J_M[fwd], J_M[rev]])
    leak = np.column_stack([J_R[fwd], J_R[rev]])
    a, b = np.abs(J[:, 0]), np.abs(J[:, 1])
    denom = a + b
    errors = []
    for i, d in enumerate(deltas):
        e = errs[fwd[i]] or errs[rev[i]]
        if not e and (d == 0 or not denom[i] >= RECTIFICATION_FLOOR):
            e = f"DegenerateRectification: |J(D)| + |J(-D)| = {denom[i]:.3g} at Delta = {float(d)!r}"
        errors.append(e)
    failed = np.array([bool(e) for e in errors], dtype=bool)
    with np.errstate(invalid="ignore", divide="ignore"):
        R = np.where(failed, np.nan, (a - b) / np.where(failed, 1.0, denom))
    J[failed] = np.nan
    leak[failed] = np.nan
    return RectificationTable(deltas, mode, float(anchor), float(T_R), J, leak, R, errors)


def rectification(cfg: DeviceConfig, mode: str, anchor: float, delta: float, T_R: float = 0.2) -> RectificationPoint:
    """``R = (|J(D)| - |J(-D)|) / (|J(D)| + |J(-D)|)`` with ``J`` the steady middle-terminal current.

    ``fixed_TL`` holds ``T_L = anchor`` and sets ``T_M = anchor + D``; ``fixed_mean``
    holds ``(T_M + T_L) / 2 = anchor`` with ``T_M - T_L = D``. The right bath sits
    at ``T_R`` and should be nearly decoupled; a warning is issued when its
    current exceeds 1% of the rectified one.
    """
    table = rectification_table(cfg, mode, anchor, [delta], T_R)
    if table.errors[0]:
        kind, _, text = table.errors[0].partition(": ")
        if kind == "DegenerateRectification":
            raise DegenerateRectification(text)
        _raise_row_error(table.errors[0])
    point = table.point(0)
    if point.leak_ratio > LEAK_WARNING:
        warnings.warn(
            f"right-terminal leakage is {point.leak_ratio:.2g} of the rectified current; "
            "the device is not in two-terminal mode",
            stacklevel=2,
        )
    return point


# -- switch points and stabilizer statistics ------------------------------------------

@dataclass(frozen=True)
class SwitchPoint:
    """A zero of J_M and the |J_L| on the grid points either side of it."""

    T_M: float
    J_M: float
    J_L_below: float
    J_L_above: float


def find_switch_points(cfg: DeviceConfig, temps_base: BathTemperatures, T_M_range, step: float) -> list[SwitchPoint]:
    """All sign changes of J_M(T_M) on the grid, each refined by bisection."""
    values = grid(T_M_range[0], T_M_range[1], step)
    T = np.column_stack([np.full_like(values, temps_base.T_L), values, np.full_like(values, temps_base.T_R)])
    batch = steady_currents_batch(cfg, T)
    J_M, J_L = batch.totals[:, 1], batch.totals[:, 0]
    finite = np.isfinite(J_M)
    if not finite.any():
        return []
    target = 1e-13 * float(np.abs(J_M[finite]).max())

    def j_m(t: float) -> tuple[float, float]:
        row = steady_currents_batch(cfg, [[temps_base.T_L, t, temps_base.T_R]])
        return float(row.totals[0, 1]), float(row.totals[0, 0])

    points: list[SwitchPoint] = []
    for i in range(values.size - 1):
        a, b = J_M[i], J_M[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            points.append(SwitchPoint(float(values[i]), 0.0, abs(J_L[max(i - 1, 0)]), abs(J_L[i + 1])))
            continue
        if a * b >= 0.0:
            continue
        lo, hi, f_lo = float(values[i]), float(values[i + 1]), a
        best_t, best_j = (lo, a) if abs(a) < abs(b) else (hi, b)
        while abs(best_j) >= min(target, RECTIFICATION_FLOOR):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            f_mid, _ = j_m(mid)
            if abs(f_mid) < abs(best_j):
                best_t, best_j = mid, f_mid
            if not np.isfinite(f_mid) or f_mid == 0.0:
                break
            if (f_mid < 0) == (f_lo < 0):
                lo, f_lo = mid, f_mid
            else:
                hi = mid
        points.append(SwitchPoint(best_t, best_j, float(abs(J_L[i])), float(abs(J_L[i + 1]))))
    return points


@dataclass(frozen=True)
class StabilizerStats:
    variable: str
    points: int
    mean: dict[str, float]
    std: dict[str, float]

    def __getitem__(self, terminal: str) -> tuple[float, float]:
        return self.mean[terminal], self.std[terminal]


def stabilizer_stats(
    cfg: DeviceConfig, temps_base: BathTemperatures, variable: str, start: float, stop: float, step: float
) -> StabilizerStats:
    """Mean and population standard deviation of each terminal current over a temperature grid."""
    if variable not in ("T_L", "T_M", "T_R"):
        raise ValueError(f"variable must be a temperature (T_L, T_M or T_R), got {variable!r}")
    values = grid(start, stop, step)
    T = np.tile([temps_base.T_L, temps_base.T_M, temps_base.T_R], (values.size, 1))
    T[:, ("T_L", "T_M", "T_R").index(variable)] = values
    batch = steady_currents_batch(cfg, T)
    good = batch.totals[batch.ok]
    if good.shape[0] == 0:
        raise HeatampError("no grid point produced a steady state")
    mean = {a: float(good[:, k].mean()) for k, a in enumerate(TERMINALS)}
    std = {a: float(good[:, k].std()) for k, a in enumerate(TERMINALS)}
    return StabilizerStats(variable, int(good.shape[0]), mean, std)


# -- helpers for reading sweep results -------------------------------------------------

def threshold_regions(x, y, threshold: float) -> list[tuple[float, float]]:
    """Maximal runs of consecutive grid points with ``y >= threshold``, as ``(x_first, x_last)``."""
    x = np.asarray(x, dtype=float)
    hit = np.asarray(y, dtype=float) >= threshold
    regions = []
    i = 0
    while i < hit.size:
        if hit[i]:
            j = i
            while j + 1 < hit.size and hit[j + 1]:
                j += 1
            regions.append((float(x[i]), float(x[j])))
            i = j + 1
        else:
            i += 1
    return regions


def zero_crossings(x, y) -> list[float]:
    """Sign changes of ``y`` located by linear interpolation between grid points."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    out = []
    for i in range(x.size - 1):
        a, b = y[i], y[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            out.append(float(x[i]))
        elif a * b < 0:
            out.append(float(x[i] - a * (x[i + 1] - x[i]) / (b - a)))
    return out
