"""Population-sector dynamics: rate matrix, steady state and RK4 transients.

The populations obey ``dP/dt = X P`` with a 12x12 generator ``X`` whose
off-diagonal entries are jump rates and whose columns sum to zero.

Every routine here has a batched core working on a leading axis of size N, so
a sweep can build and solve thousands of generators in one numpy call. The
single-point API is the batched path with N = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bath import rates
from .errors import NonUniqueSteadyState, SteadyStateError, StepTooLarge, ZeroGapError
from .model import (
    CATALOG_SOURCE,
    CATALOG_TARGET,
    CATALOG_TERMINAL,
    CHANNELS,
    STATE_LABELS,
    TERMINALS,
    TOL_DEG,
    BathTemperatures,
    DeviceConfig,
    catalog_arrays,
)

NEGATIVE_CLAMP = 1e-14
RESIDUAL_RTOL = 1e-12
STABILITY_LIMIT = 0.1


@dataclass(frozen=True, eq=False)
class Generator:
    X: np.ndarray
    active: np.ndarray  # bool mask of states in the coupled class

    @property
    def column_sums(self) -> np.ndarray:
        return self.X.sum(axis=0)


@dataclass(frozen=True, eq=False)
class PopulationVector:
    P: np.ndarray
    residual: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return dict(zip(STATE_LABELS, map(float, self.P)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    populations: np.ndarray
    max_drift: float

    @property
    def final(self) -> PopulationVector:
        return PopulationVector(self.populations[-1])


# -- batched core ------------------------------------------------------------

def active_states(weights: np.ndarray) -> np.ndarray:
    """States on qutrit levels that still exchange energy with the M bath.

    A level whose every M channel has zero weight is detached: the L and R baths
    can still shuffle its four states among themselves, but it never trades
    population with the rest, so it is excluded and held at zero population.
    """
    m_weights = weights[CATALOG_TERMINAL == 1].reshape(3, 4)
    coupled = [any(m_weights[c].any() for c, ch in enumerate(CHANNELS) if j in ch) for j in range(3)]
    return np.repeat(np.array(coupled), 4)


def is_connected(active: np.ndarray, weights: np.ndarray) -> bool:
    nodes = np.flatnonzero(active)
    if nodes.size == 0:
        return False
    parent = {int(n): int(n) for n in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s, t, w in zip(CATALOG_SOURCE, CATALOG_TARGET, weights):
        if w != 0 and active[s] and active[t]:
            parent[find(int(s))] = find(int(t))
    return len({find(int(n)) for n in nodes}) == 1


def rate_tables(cfg: DeviceConfig, omegas: np.ndarray, weights: np.ndarray, T: np.ndarray):
    """Upward (source -> target) and downward jump rates, shape (N, 24).

    ``T`` is (N, 3) in terminal order L, M, R. Inert transitions get rate 0.
    """
    mu = np.array([cfg.mu(a) for a in TERMINALS])[CATALOG_TERMINAL]
    kappa = np.array([cfg.kappa(a) for a in TERMINALS])[CATALOG_TERMINAL]
    temps = T[:, CATALOG_TERMINAL]
    w2 = weights * weights
    safe = np.where(weights != 0, omegas, 1.0)
    up = w2 * rates(-safe, mu, kappa, temps)
    down = w2 * rates(safe, mu, kappa, temps)
    return up, down


def generator_matrices(up: np.ndarray, down: np.ndarray) -> np.ndarray:
    # every state pair carries at most one catalog transition, so plain assignment suffices
    X = np.zeros((up.shape[0], 12, 12))
    X[:, CATALOG_TARGET, CATALOG_SOURCE] = up
    X[:, CATALOG_SOURCE, CATALOG_TARGET] = down
    idx = np.arange(12)
    X[:, idx, idx] = -X.sum(axis=1)
    return X


def _gth(R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Grassmann-Taksar-Heyman state reduction on jump-rate matrices ``R[n, i, j]`` (i -> j).

    Only additions, multiplications and divisions of nonnegative numbers occur,
    so every stationary probability carries a small relative error even when the
    populations span hundreds of orders of magnitude. A zero exit sum means the
    chain is reducible; those rows are flagged in the returned mask.
    """
    R = R.copy()
    m = R.shape[1]
    idx = np.arange(m)
    R[:, idx, idx] = 0.0
    reducible = np.zeros(R.shape[0], dtype=bool)
    for k in range(m - 1, 0, -1):
        s = R[:, k, :k].sum(axis=1)
        dead = ~(s > 0)
        reducible |= dead
        s[dead] = 1.0
        col = R[:, :k, k] / s[:, None]
        R[:, :k, k] = col
        R[:, :k, :k] += col[:, :, None] * R[:, k, None, :k]
    pi = np.zeros(R.shape[:2])
    pi[:, 0] = 1.0
    for k in range(1, m):
        pi[:, k] = np.einsum("ni,ni->n", pi[:, :k], R[:, :k, k])
    return pi / pi.sum(axis=1, keepdims=True), reducible


def steady_batch(X: np.ndarray, active: np.ndarray):
    """Stationary populations of every generator in ``X`` on the ``active`` states.

    Returns populations (N, 12), residuals ``max|X P|`` (N,) and a list of
    error strings (empty where the solve succeeded).
    """
    n = X.shape[0]
    idx = np.flatnonzero(active)
    P = np.zeros((n, 12))
    errors = [""] * n
    # X[to, from] holds the rate from -> to, so the jump matrix is its transpose
    R = np.swapaxes(X[:, idx[:, None], idx[None, :]], 1, 2)
    pi, reducible = _gth(R)
    P[:, idx] = pi
    bad = reducible | ~np.isfinite(P).all(axis=1)
    for k in np.flatnonzero(bad):
        errors[k] = "NonUniqueSteadyState: the active states are not a single communicating class"
    P[bad] = np.nan
    negative = P.min(axis=1, initial=0.0, where=np.isfinite(P))
    for k in np.flatnonzero(negative < -NEGATIVE_CLAMP):
        errors[k] = errors[k] or f"SteadyStateError: negative population {negative[k]:.3g}"
    P = np.where(P < 0, 0.0, P)
    P /= P.sum(axis=1, keepdims=True)
    residual = np.abs(np.einsum("nij,nj->ni", X, P)).max(axis=1)
    scale = np.abs(X).sum(axis=2).max(axis=1)
    for k in np.flatnonzero(~(residual <= RESIDUAL_RTOL * scale)):
        errors[k] = errors[k] or f"SteadyStateError: residual {residual[k]:.3g} exceeds tolerance"
    return P, residual, errors


def check_gaps(omegas: np.ndarray, weights: np.ndarray) -> str:
    bad = (np.abs(omegas) <= TOL_DEG) & (weights != 0)
    if bad.any():
        return f"ZeroGapError: {int(bad.sum())} active transition(s) with zero Bohr frequency"
    return ""


# -- single-point API ----------------------------------------------------------

def _temperature_row(temps: BathTemperatures) -> np.ndarray:
    return np.array([[temps.T_L, temps.T_M, temps.T_R]])


def generator(cfg: DeviceConfig, temps: BathTemperatures) -> Generator:
    omegas, weights = catalog_arrays(cfg)
    problem = check_gaps(omegas, weights)
    if problem:
        raise ZeroGapError(problem)
    up, down = rate_tables(cfg, omegas, weights, _temperature_row(temps))
    return Generator(X=generator_matrices(up, down)[0], active=active_states(weights))


def _generator_weights(gen: Generator) -> np.ndarray:
    # recover the connectivity pattern from the off-diagonal structure
    return np.array([gen.X[t, s] != 0 or gen.X[s, t] != 0 for s, t in zip(CATALOG_SOURCE, CATALOG_TARGET)], float)


def steady_state(gen: Generator) -> PopulationVector:
    if not is_connected(gen.active, _generator_weights(gen)):
        raise NonUniqueSteadyState("the active states do not form a single communicating class")
    P, residual, errors = steady_batch(gen.X[None], gen.active)
    if errors[0]:
        kind, _, message = errors[0].partition(": ")
        raise (NonUniqueSteadyState if kind == "NonUniqueSteadyState" else SteadyStateError)(message)
    return PopulationVector(P[0], float(residual[0]))


def evolve(P0, gen: Generator, t_final: float, dt: float, stride: int = 1) -> Trajectory:
    """Fixed-step RK4 integration of ``dP/dt = X P`` from ``P0`` to ``t_final``.

    The step count is ``ceil(t_final / dt)``. Every ``stride``-th state (and the
    last one) is recorded; at each recorded state the deviation of ``sum(P)``
    from 1 is logged as drift and then removed by renormalizing. For a constant
    linear generator one RK4 step is the degree-4 Taylor polynomial of
    ``exp(dt X)``, which is precomputed once.
    """
    if not dt > 0:
        raise StepTooLarge(f"dt must be positive, got {dt!r}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride!r}")
    stiffness = dt * float(np.abs(np.diag(gen.X)).max(initial=0.0))
    if stiffness >= STABILITY_LIMIT:
        raise StepTooLarge(f"dt * max|diag X| = {stiffness:.3g} >= {STABILITY_LIMIT}")
    hX = dt * gen.X
    step = np.eye(12)
    term = np.eye(12)
    for k in range(1, 5):
        term = term @ hX / k
        step = step + term
    n_steps = max(0, math.ceil(t_final / dt - 1e-9))
    P = np.array(getattr(P0, "P", P0), dtype=float)
    other = np.empty_like(P)
    times = [0.0]
    samples = [P.copy()]
    drift = 0.0
    k = 0
    while k < n_steps:
        block = min(stride, n_steps - k)
        for _ in range(block):
            np.dot(step, P, out=other)
            P, other = other, P
        k += block
        total = P.sum()
        drift = max(drift, abs(total - 1.0))
        P /= total
        times.append(k * dt)
        samples.append(P.copy())
    return Trajectory(np.array(times), np.array(samples), drift)
