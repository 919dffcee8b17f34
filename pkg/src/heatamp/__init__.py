"""Steady-state heat transport through a qubit-qutrit-qubit thermal device.

Two two-level systems (L, R) couple to a three-level system (M) through
diagonal interactions; each subsystem touches its own Ohmic thermal bath. The
package builds the closed-form spectrum, the population-sector rate equations
of the global master equation, steady-state heat currents and figures of merit
(sensitivity, amplification, rectification, switch points), plus a sweep engine
and CLI that write deterministic CSV tables.
"""
from .bath import DecayRate, decay_rate, occupation, spectral_density
from .energetics import CurrentReport, terminal_currents, transition_currents
from .errors import (
    DegenerateRectification,
    HeatampError,
    NonUniqueSteadyState,
    ScenarioError,
    SteadyStateError,
    StepTooLarge,
    StepTooSmall,
    ZeroGapError,
)
from .kinetics import Generator, PopulationVector, Trajectory, evolve, generator, steady_state
from .merits import (
    MeritPoint,
    RectificationPoint,
    amplification,
    find_switch_points,
    rectification,
    sensitivity,
    stabilizer_stats,
)
from .model import (
    BASIS,
    BasisState,
    BathTemperatures,
    DeviceConfig,
    Spectrum,
    Transition,
    ValidationReport,
    bohr_frequencies,
    energy_spectrum,
    transition_catalog,
    validate,
)
from .sweep import Scenario, SweepRow, emit_csv, load_scenario, run_sweep

__all__ = [
    "BASIS", "BasisState", "BathTemperatures", "CurrentReport", "DecayRate", "DegenerateRectification",
    "DeviceConfig", "Generator", "HeatampError", "MeritPoint", "NonUniqueSteadyState", "PopulationVector",
    "RectificationPoint", "Scenario", "ScenarioError", "Spectrum", "SteadyStateError", "StepTooLarge",
    "StepTooSmall", "SweepRow", "Trajectory", "Transition", "ValidationReport", "ZeroGapError", "amplification",
    "bohr_frequencies", "decay_rate", "emit_csv", "energy_spectrum", "evolve", "find_switch_points", "generator",
    "load_scenario", "occupation", "rectification", "run_sweep", "sensitivity", "spectral_density",
    "stabilizer_stats", "steady_state", "terminal_currents", "transition_catalog", "transition_currents", "validate",
]
