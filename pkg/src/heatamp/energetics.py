"""Heat currents: per-transition contributions and terminal totals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ZeroGapError
from .kinetics import (
    PopulationVector,
    is_connected,
    active_states,
    check_gaps,
    generator,
    generator_matrices,
    rate_tables,
    steady_batch,
    steady_state,
)
from .model import (
    CATALOG_SOURCE,
    CATALOG_TARGET,
    CATALOG_TERMINAL,
    TERMINALS,
    TRANSITION_LABELS,
    BathTemperatures,
    DeviceConfig,
    catalog_arrays,
)


@dataclass(frozen=True, eq=False)
class CurrentReport:
    """Steady or instantaneous heat currents.

    ``flux`` is the net probability flow source -> target of each catalog
    transition, ``currents`` is that flow times its Bohr frequency, and the
    terminal totals are sums of the matching ``currents`` entries. Positive
    values mean heat flowing from the bath into the device.
    """

    labels: tuple[str, ...]
    flux: np.ndarray
    currents: np.ndarray
    J_L: float
    J_M: float
    J_R: float
    populations: PopulationVector | None = None

    @property
    def residual(self) -> float:
        return self.J_L + self.J_M + self.J_R

    @property
    def totals(self) -> tuple[float, float, float]:
        return (self.J_L, self.J_M, self.J_R)

    def of(self, terminal: str) -> float:
        return getattr(self, f"J_{terminal}")

    def current(self, label: str) -> float:
        return float(self.currents[self.labels.index(label)])

    def by_label(self) -> dict[str, float]:
        return dict(zip(self.labels, map(float, self.currents)))


def currents_batch(omegas: np.ndarray, up: np.ndarray, down: np.ndarray, P: np.ndarray):
    """Net fluxes (N, 24), currents (N, 24) and terminal totals (N, 3)."""
    flux = up * P[:, CATALOG_SOURCE] - down * P[:, CATALOG_TARGET]
    cur = omegas * flux
    totals = np.stack([cur[:, CATALOG_TERMINAL == k].sum(axis=1) for k in range(len(TERMINALS))], axis=1)
    return flux, cur, totals


def transition_currents(P, cfg: DeviceConfig, temps: BathTemperatures) -> CurrentReport:
    pop = P if isinstance(P, PopulationVector) else PopulationVector(np.asarray(P, dtype=float))
    omegas, weights = catalog_arrays(cfg)
    problem = check_gaps(omegas, weights)
    if problem:
        raise ZeroGapError(problem)
    up, down = rate_tables(cfg, omegas, weights, np.array([[temps.T_L, temps.T_M, temps.T_R]]))
    flux, cur, totals = currents_batch(omegas[None], up, down, pop.P[None])
    J_L, J_M, J_R = map(float, totals[0])
    return CurrentReport(TRANSITION_LABELS, flux[0], cur[0], J_L, J_M, J_R, pop)


def terminal_currents(cfg: DeviceConfig, temps: BathTemperatures) -> CurrentReport:
    return transition_currents(steady_state(generator(cfg, temps)), cfg, temps)


@dataclass(frozen=True, eq=False)
class SteadyBatch:
    """Steady states and currents of one device at N temperature triples.

    Rows whose solve failed hold NaN and a non-empty entry in ``errors``.
    """

    T: np.ndarray
    P: np.ndarray
    flux: np.ndarray
    currents: np.ndarray
    totals: np.ndarray
    residual: np.ndarray
    max_rate: np.ndarray
    errors: list[str]

    @property
    def ok(self) -> np.ndarray:
        return np.array([not e for e in self.errors], dtype=bool)


def steady_currents_batch(cfg: DeviceConfig, T) -> SteadyBatch:
    """Solve the steady state and currents for each row ``(T_L, T_M, T_R)`` of ``T``."""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    n = T.shape[0]
    omegas, weights = catalog_arrays(cfg)
    active = active_states(weights)
    problem = check_gaps(omegas, weights)
    if not problem and not is_connected(active, weights):
        problem = "NonUniqueSteadyState: the active states are not a single communicating class"
    if problem:
        nan = np.full((n, 12), np.nan)
        wide = np.full((n, len(omegas)), np.nan)
        return SteadyBatch(T, nan, wide, wide.copy(), np.full((n, 3), np.nan),
                           np.full(n, np.nan), np.full(n, np.nan), [problem] * n)
    cold = ~(T > 0).all(axis=1)
    up, down = rate_tables(cfg, omegas, weights, np.where(cold[:, None], 1.0, T))
    X = generator_matrices(up, down)
    P, residual, errors = steady_batch(X, active)
    flux, cur, totals = currents_batch(omegas[None], up, down, P)
    for k in np.flatnonzero(cold):
        errors[k] = "ValueError: temperatures must be positive"
    failed = np.array([bool(e) for e in errors])
    for arr in (P, flux, cur, totals, residual):
        arr[failed] = np.nan
    return SteadyBatch(T, P, flux, cur, totals, residual, np.maximum(up, down).max(axis=1), errors)
