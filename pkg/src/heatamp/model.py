"""Device description: configuration, closed-form spectrum, Bohr frequencies and jump catalog.

The device is a two-level system (L), a three-level system (M) and a second
two-level system (R). The TLS-qutrit coupling is diagonal in the product basis
``|l>_L |j> |r>_R``, so every eigenstate is a product state and every jump
operator is a single dyad. Units are hbar = k_B = 1.

Basis ordering is j-major: ``g0g, g0e, e0g, e0e, g1g, ..., e2e``, i.e.
``index = 4*j + 2*[l == e] + [r == e]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from itertools import combinations

import numpy as np

# Degeneracy tolerance (absolute, energy units) and validity heuristics.
TOL_DEG = 1e-9
C_SEC = 10.0
C_WC = 0.1

TERMINALS = ("L", "M", "R")
CHANNELS = ((0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class BasisState:
    l: str
    j: int
    r: str

    def __post_init__(self):
        if self.l not in "ge" or self.r not in "ge" or self.j not in (0, 1, 2):
            raise ValueError(f"invalid basis state ({self.l!r}, {self.j!r}, {self.r!r})")

    @property
    def index(self) -> int:
        return 4 * self.j + 2 * (self.l == "e") + (self.r == "e")

    @property
    def label(self) -> str:
        return f"{self.l}{self.j}{self.r}"

    @classmethod
    def from_index(cls, index: int) -> "BasisState":
        j, rest = divmod(index, 4)
        return cls("ge"[rest >> 1], j, "ge"[rest & 1])


BASIS = tuple(BasisState.from_index(i) for i in range(12))
STATE_LABELS = tuple(s.label for s in BASIS)


@dataclass(frozen=True)
class DeviceConfig:
    """Static device parameters. Defaults reproduce the reference transistor device."""

    omega_L: float = 1.0
    omega_R: float = 2.0
    Omega: float = 3.0
    delta: float = 3.0
    chiL01: float = 15.0
    chiL02: float = 18.0
    chiL12: float = 0.1
    chiR01: float = 16.0
    chiR02: float = 15.0
    chiR12: float = 0.1
    nu01: float = 1.0
    nu02: float = 1.0
    nu12: float = 1.0
    muL: float = 0.01
    muM: float = 0.01
    muR: float = 0.01
    kappaL: float = 30.0
    kappaM: float = 30.0
    kappaR: float = 30.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ValueError(f"{f.name} must be finite, got {value!r}")
        for name in ("omega_L", "omega_R", "Omega", "muL", "muM", "muR", "kappaL", "kappaM", "kappaR"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta!r}")

    def replace(self, **changes) -> "DeviceConfig":
        return replace(self, **changes)

    def chi(self, side: str) -> tuple[float, float, float]:
        """Couplings ``(chi01, chi02, chi12)`` for ``side`` in {"L", "R"}."""
        return (getattr(self, f"chi{side}01"), getattr(self, f"chi{side}02"), getattr(self, f"chi{side}12"))

    def offsets(self, side: str) -> tuple[float, float, float]:
        """Level shifts ``(q0, q1, q2)`` induced on the qutrit by TLS ``side``."""
        c01, c02, c12 = self.chi(side)
        return (c01 + c02, c12 - c01, -c02 - c12)

    def mu(self, terminal: str) -> float:
        return getattr(self, f"mu{terminal}")

    def kappa(self, terminal: str) -> float:
        return getattr(self, f"kappa{terminal}")

    def nu(self, i: int, j: int) -> float:
        return getattr(self, f"nu{i}{j}")

    @property
    def levels(self) -> tuple[float, float, float]:
        return (0.0, self.Omega, self.Omega + self.delta)

    def mirrored(self) -> "DeviceConfig":
        """Swap the roles of the left and right TLS."""
        return replace(
            self,
            omega_L=self.omega_R, omega_R=self.omega_L,
            chiL01=self.chiR01, chiL02=self.chiR02, chiL12=self.chiR12,
            chiR01=self.chiL01, chiR02=self.chiL02, chiR12=self.chiL12,
            muL=self.muR, muR=self.muL, kappaL=self.kappaR, kappaR=self.kappaL,
        )


@dataclass(frozen=True)
class BathTemperatures:
    T_L: float
    T_M: float
    T_R: float

    def __post_init__(self):
        for name in ("T_L", "T_M", "T_R"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite temperature, got {value!r}")

    def of(self, terminal: str) -> float:
        return getattr(self, f"T_{terminal}")

    def beta(self, terminal: str) -> float:
        return 1.0 / self.of(terminal)

    @property
    def reversed_gradient(self) -> bool:
        """True when T_L < T_R (allowed, but opposite to the usual convention)."""
        return self.T_L < self.T_R

    def replace(self, **changes) -> "BathTemperatures":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class Spectrum:
    energies: np.ndarray
    offsets: dict[str, tuple[float, float, float]]

    def energy(self, state: BasisState) -> float:
        return float(self.energies[state.index])


@dataclass(frozen=True)
class Transition:
    """One bath-induced jump between ``source`` (lower label) and ``target`` (upper label).

    ``bohr`` is E(target) - E(source) and may be negative: "upward" refers to the
    label (g -> e, or i -> j with j > i), not to the energy.
    """

    terminal: str
    source: BasisState
    target: BasisState
    bohr: float
    weight: float = 1.0

    @property
    def inert(self) -> bool:
        return self.weight == 0.0

    @property
    def label(self) -> str:
        return f"{self.terminal}:{self.source.label}-{self.target.label}"


@dataclass(frozen=True)
class ValidationReport:
    min_gap_separation: float
    max_decay_rate: float
    min_abs_bohr: float
    degeneracies: tuple[str, ...] = field(default_factory=tuple)
    secular_ok: bool = True
    weak_coupling_ok: bool = True
    reversed_gradient: bool = False

    @property
    def degenerate(self) -> bool:
        return bool(self.degeneracies)

    @property
    def ok(self) -> bool:
        return not self.degenerate and self.secular_ok and self.weak_coupling_ok


def _sign(level: str) -> int:
    # sigma_z eigenvalue: +1 on |g>, -1 on |e>
    return 1 if level == "g" else -1


def energy_spectrum(cfg: DeviceConfig) -> Spectrum:
    qL, qR = cfg.offsets("L"), cfg.offsets("R")
    eps = cfg.levels
    energies = np.empty(12)
    for s in BASIS:
        energies[s.index] = (
            cfg.omega_L * (s.l == "e")
            + cfg.omega_R * (s.r == "e")
            + eps[s.j]
            + _sign(s.l) * qL[s.j]
            + _sign(s.r) * qR[s.j]
        )
    return Spectrum(energies=energies, offsets={"L": qL, "R": qR})


def bohr_frequencies(cfg: DeviceConfig) -> dict[str, float]:
    """The 18 distinct gap formulas, keyed ``L_ge0 ... R_ge2`` and ``M_01_gg ... M_12_ee``.

    Evaluated from the offset formulas directly, not as energy differences, so the
    two routes can be checked against each other.
    """
    table: dict[str, float] = {}
    for side in ("L", "R"):
        w = cfg.omega_L if side == "L" else cfg.omega_R
        for j, q in enumerate(cfg.offsets(side)):
            table[f"{side}_ge{j}"] = w - 2.0 * q
    qL, qR = cfg.offsets("L"), cfg.offsets("R")
    eps = cfg.levels
    for i, j in CHANNELS:
        for l in "ge":
            for r in "ge":
                table[f"M_{i}{j}_{l}{r}"] = (
                    (eps[j] - eps[i])
                    + _sign(l) * (qL[j] - qL[i])
                    + _sign(r) * (qR[j] - qR[i])
                )
    return table


def transition_catalog(cfg: DeviceConfig) -> list[Transition]:
    """All 24 upward transitions: 6 on L, 12 on M (3 channels x 4 TLS sectors), 6 on R."""
    gaps = bohr_frequencies(cfg)
    catalog: list[Transition] = []
    for j in range(3):
        for r in "ge":
            catalog.append(Transition("L", BasisState("g", j, r), BasisState("e", j, r), gaps[f"L_ge{j}"]))
    for i, j in CHANNELS:
        for l in "ge":
            for r in "ge":
                catalog.append(
                    Transition("M", BasisState(l, i, r), BasisState(l, j, r), gaps[f"M_{i}{j}_{l}{r}"], cfg.nu(i, j))
                )
    for j in range(3):
        for l in "ge":
            catalog.append(Transition("R", BasisState(l, j, "g"), BasisState(l, j, "e"), gaps[f"R_ge{j}"]))
    return catalog


def _catalog_structure():
    cat = transition_catalog(DeviceConfig())
    source = np.array([t.source.index for t in cat])
    target = np.array([t.target.index for t in cat])
    terminal = np.array([TERMINALS.index(t.terminal) for t in cat])
    labels = tuple(t.label for t in cat)
    return source, target, terminal, labels


# Index arrays shared by every configuration; only the gaps and weights vary.
CATALOG_SOURCE, CATALOG_TARGET, CATALOG_TERMINAL, TRANSITION_LABELS = _catalog_structure()


def catalog_arrays(cfg: DeviceConfig) -> tuple[np.ndarray, np.ndarray]:
    """Bohr frequencies and channel weights of the catalog, in catalog order."""
    cat = transition_catalog(cfg)
    return np.array([t.bohr for t in cat]), np.array([t.weight for t in cat])


def gap_statistics(cfg: DeviceConfig) -> tuple[float, float, tuple[str, ...]]:
    """Temperature-independent part of :func:`validate`.

    Works on the 18 distinct gap formulas, skipping M channels with zero weight.
    Returns the smallest separation between two gaps of the same terminal, the
    smallest ``|gap|`` and the degeneracy warnings. Pairs with ``w_a = -w_b`` are
    not collisions: they only link coherences, never populations.
    """
    table = {
        name: w for name, w in bohr_frequencies(cfg).items()
        if not name.startswith("M") or cfg.nu(int(name[2]), int(name[3])) != 0
    }
    warnings: list[str] = []
    min_sep = math.inf
    for terminal in TERMINALS:
        mine = [(n, w) for n, w in table.items() if n[0] == terminal]
        for (na, wa), (nb, wb) in combinations(mine, 2):
            sep = abs(wa - wb)
            min_sep = min(min_sep, sep)
            if sep < TOL_DEG:
                warnings.append(f"{na} ~ {nb} (|dw| = {sep:.3g})")
    min_abs = min((abs(w) for w in table.values()), default=math.inf)
    warnings.extend(f"{n} is a zero gap" for n, w in table.items() if abs(w) <= TOL_DEG)
    return min_sep, min_abs, tuple(warnings)


def validity_flags(min_sep: float, min_abs: float, max_rate) -> tuple:
    """Secular and weak-coupling checks; ``max_rate`` may be an array."""
    return min_sep > C_SEC * max_rate, max_rate < C_WC * min_abs


def validate(cfg: DeviceConfig, temps: BathTemperatures) -> ValidationReport:
    from .bath import decay_rate

    min_sep, min_abs, warnings = gap_statistics(cfg)
    max_rate = 0.0
    for t in transition_catalog(cfg):
        if t.inert or abs(t.bohr) <= TOL_DEG:
            continue
        for w in (t.bohr, -t.bohr):
            max_rate = max(max_rate, t.weight**2 * decay_rate(w, t.terminal, cfg, temps).rate)
    secular_ok, weak_ok = validity_flags(min_sep, min_abs, max_rate)
    return ValidationReport(
        min_gap_separation=min_sep,
        max_decay_rate=max_rate,
        min_abs_bohr=min_abs,
        degeneracies=warnings,
        secular_ok=bool(secular_ok),
        weak_coupling_ok=bool(weak_ok),
        reversed_gradient=temps.reversed_gradient,
    )
