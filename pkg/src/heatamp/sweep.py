"""Scenario documents, grid sweeps and CSV output.

A scenario is a JSON object::

    {
      "schema_version": 1,
      "name": "fig1",
      "description": "...",
      "device": {"chiL02": 16.2, ...},            # DeviceConfig field overrides
      "temperatures": {"T_L": 10, "T_M": 5, "T_R": 0.2},
      "sweep": {"variable": "T_M", "start": 0.2, "stop": 10, "step": 0.01,
                "second": {"variable": "delta", "start": 1, "stop": 10, "step": 0.025}},
      "merits": ["currents", "amplification"],
      "h": 0.01,
      "rectification": {"mode": "fixed_TL", "anchor": 10, "T_R": 0.2},
      "output": "fig1.csv"
    }

Only ``sweep`` is required. The README documents every field and CSV column.
"""
from __future__ import annotations

import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from typing import Any, Mapping

import numpy as np

from .energetics import steady_currents_batch
from .errors import ScenarioError
from .merits import (
    DEFAULT_H,
    RECTIFICATION_MODES,
    grid,
    merit_table,
    rectification_table,
    threshold_regions,
    zero_crossings,
)
from .model import (
    STATE_LABELS,
    TRANSITION_LABELS,
    BathTemperatures,
    DeviceConfig,
    gap_statistics,
    validity_flags,
)

SCHEMA_VERSION = 1
TEMPERATURE_FIELDS = ("T_L", "T_M", "T_R")
CONFIG_FIELDS = tuple(f.name for f in fields(DeviceConfig))
SWEEPABLE = TEMPERATURE_FIELDS + CONFIG_FIELDS + ("Delta",)
MERIT_GROUPS = ("currents", "amplification", "populations", "transitions")
DEFAULT_MERITS = ("currents", "amplification")
DEFAULT_TEMPERATURES = {"T_L": 10.0, "T_M": 5.0, "T_R": 0.2}
CHUNK_ROWS = 4096
FLAG_COLUMNS = frozenset({"divergent", "secular_ok", "weak_coupling_ok", "degenerate", "reversed_gradient"})

_TOP_KEYS = {"schema_version", "name", "description", "device", "temperatures", "sweep", "merits", "h",
             "rectification", "output"}


@dataclass(frozen=True)
class Axis:
    variable: str
    start: float
    stop: float
    step: float

    def values(self) -> np.ndarray:
        return grid(self.start, self.stop, self.step)


@dataclass(frozen=True)
class RectificationSpec:
    mode: str
    anchor: float
    T_R: float = 0.2


@dataclass(frozen=True)
class Scenario:
    sweep: Axis
    device: DeviceConfig = field(default_factory=DeviceConfig)
    temperatures: BathTemperatures = field(default_factory=lambda: BathTemperatures(**DEFAULT_TEMPERATURES))
    second: Axis | None = None
    merits: tuple[str, ...] = DEFAULT_MERITS
    h: float = DEFAULT_H
    rectification: RectificationSpec | None = None
    name: str = "scenario"
    description: str = ""
    output: str = ""

    @property
    def axes(self) -> tuple[Axis, ...]:
        return (self.sweep,) if self.second is None else (self.second, self.sweep)

    @property
    def output_path(self) -> str:
        return self.output or f"{self.name}.csv"

    @property
    def size(self) -> int:
        n = self.sweep.values().size
        return n if self.second is None else n * self.second.values().size

    def with_step(self, variable: str | None, step: float) -> "Scenario":
        """Copy with the step of the named axis (the primary one when ``variable`` is None) replaced."""
        if variable in (None, self.sweep.variable):
            return replace(self, sweep=replace(self.sweep, step=step))
        if self.second is not None and variable == self.second.variable:
            return replace(self, second=replace(self.second, step=step))
        raise ScenarioError("sweep", f"no axis named {variable!r}")

    @property
    def columns(self) -> tuple[str, ...]:
        coords = tuple(a.variable for a in self.axes if a.variable in CONFIG_FIELDS)
        if self.rectification is not None:
            return coords + ("Delta",) + TEMPERATURE_FIELDS + (
                "J_forward", "J_reverse", "R", "J_R_forward", "J_R_reverse", "degenerate", "reversed_gradient", "status",
            )
        cols = coords + TEMPERATURE_FIELDS
        if "currents" in self.merits:
            cols += ("J_L", "J_M", "J_R", "J_sum")
        if "amplification" in self.merits:
            cols += ("S_L", "S_M", "S_R", "alpha_L", "alpha_R")
        if "populations" in self.merits:
            cols += tuple(f"P_{s}" for s in STATE_LABELS)
        if "transitions" in self.merits:
            cols += tuple(transition_column(t) for t in TRANSITION_LABELS)
        flags = ("divergent",) if "amplification" in self.merits else ()
        return cols + flags + ("secular_ok", "weak_coupling_ok", "degenerate", "reversed_gradient", "status")


def transition_column(label: str) -> str:
    """``"L:g0g-e0g"`` -> ``"I_L_g0g_e0g"``."""
    terminal, pair = label.split(":")
    return f"I_{terminal}_{pair.replace('-', '_')}"


# -- loading ----------------------------------------------------------------------

def _path(parent: str, key: str) -> str:
    return f"{parent}.{key}" if parent else key


def _check_keys(obj: Any, allowed: set[str], path: str, required: tuple[str, ...] = ()) -> Mapping:
    if not isinstance(obj, Mapping):
        raise ScenarioError(path, f"expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            raise ScenarioError(_path(path, str(key)), "unknown key")
    for key in required:
        if key not in obj:
            raise ScenarioError(_path(path, key), "missing required key")
    return obj


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ScenarioError(path, f"expected a finite number, got {value!r}")
    return value


def _string(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise ScenarioError(path, f"expected a string, got {value!r}")
    return value


def _axis(obj: Any, path: str, allow_second: bool) -> tuple[Axis, Any]:
    allowed = {"variable", "start", "stop", "step"} | ({"second"} if allow_second else set())
    obj = _check_keys(obj, allowed, path, ("variable", "start", "stop", "step"))
    variable = _string(obj["variable"], _path(path, "variable"))
    if variable not in SWEEPABLE:
        raise ScenarioError(_path(path, "variable"), f"{variable!r} is not a sweepable field")
    start = _number(obj["start"], _path(path, "start"))
    stop = _number(obj["stop"], _path(path, "stop"))
    step = _number(obj["step"], _path(path, "step"))
    if step <= 0:
        raise ScenarioError(_path(path, "step"), f"must be > 0, got {step!r}")
    if start >= stop:
        raise ScenarioError(_path(path, "start"), f"must be below stop ({start!r} >= {stop!r})")
    return Axis(variable, start, stop, step), obj.get("second")


def scenario_from_dict(doc: Any) -> Scenario:
    doc = _check_keys(doc, _TOP_KEYS, "", ("sweep",))
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError("schema_version", f"unsupported version {version!r} (expected {SCHEMA_VERSION})")

    device_doc = _check_keys(doc.get("device", {}), set(CONFIG_FIELDS), "device")
    try:
        device = DeviceConfig(**{k: _number(v, f"device.{k}") for k, v in device_doc.items()})
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError("device", str(exc)) from None

    temps_doc = _check_keys(doc.get("temperatures", {}), set(TEMPERATURE_FIELDS), "temperatures")
    temps = dict(DEFAULT_TEMPERATURES)
    temps.update({k: _number(v, f"temperatures.{k}") for k, v in temps_doc.items()})
    try:
        temperatures = BathTemperatures(**temps)
    except ValueError as exc:
        raise ScenarioError("temperatures", str(exc)) from None

    sweep, second_doc = _axis(doc["sweep"], "sweep", allow_second=True)
    second = None
    if second_doc is not None:
        second, _ = _axis(second_doc, "sweep.second", allow_second=False)
        if second.variable == sweep.variable:
            raise ScenarioError("sweep.second.variable", "must differ from the primary variable")
        if second.variable == "Delta":
            raise ScenarioError("sweep.second.variable", "Delta can only be the primary variable")

    merits_doc = doc.get("merits", list(DEFAULT_MERITS))
    if not isinstance(merits_doc, list):
        raise ScenarioError("merits", "expected a list")
    for i, m in enumerate(merits_doc):
        if m not in MERIT_GROUPS:
            raise ScenarioError(f"merits[{i}]", f"unknown merit {m!r}; choose from {', '.join(MERIT_GROUPS)}")
    merits = tuple(m for m in MERIT_GROUPS if m in merits_doc)

    h = _number(doc.get("h", DEFAULT_H), "h")
    if h <= 0:
        raise ScenarioError("h", f"must be > 0, got {h!r}")

    rect = None
    if "rectification" in doc:
        r = _check_keys(doc["rectification"], {"mode", "anchor", "T_R"}, "rectification", ("mode", "anchor"))
        mode = _string(r["mode"], "rectification.mode")
        if mode not in RECTIFICATION_MODES:
            raise ScenarioError("rectification.mode", f"must be one of {RECTIFICATION_MODES}, got {mode!r}")
        T_R = _number(r.get("T_R", 0.2), "rectification.T_R")
        if T_R <= 0:
            raise ScenarioError("rectification.T_R", "must be > 0")
        rect = RectificationSpec(mode, _number(r["anchor"], "rectification.anchor"), T_R)
    if (rect is None) != (sweep.variable != "Delta"):
        raise ScenarioError(
            "rectification", "a Delta sweep needs a rectification block, and the block is only valid for Delta sweeps"
        )
    if rect is not None and second is not None and second.variable in TEMPERATURE_FIELDS:
        raise ScenarioError("sweep.second.variable", "rectification sweeps fix all temperatures through Delta")

    name = _string(doc.get("name", "scenario"), "name")
    return Scenario(
        sweep=sweep, device=device, temperatures=temperatures, second=second, merits=merits, h=h,
        rectification=rect, name=name, description=_string(doc.get("description", ""), "description"),
        output=_string(doc.get("output", ""), "output"),
    )


def load_scenario(document) -> Scenario:
    """Build a validated :class:`Scenario` from a mapping, a JSON string or a file path.

    Schema problems raise :class:`ScenarioError` naming the offending field.
    File-system problems propagate as :class:`OSError`.
    """
    if isinstance(document, Mapping):
        return scenario_from_dict(document)
    text = str(document)
    if isinstance(document, str) and text.lstrip().startswith("{"):
        source = text
    else:
        with open(document, encoding="utf-8") as fh:
            source = fh.read()
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"invalid JSON: {exc}") from None
    return scenario_from_dict(doc)


def bundled_names() -> list[str]:
    root = resources.files("heatamp") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_scenario(name: str) -> Scenario:
    path = resources.files("heatamp") / "scenarios" / f"{name}.json"
    if not path.is_file():
        raise KeyError(f"no bundled scenario {name!r}; available: {', '.join(bundled_names())}")
    return load_scenario(json.loads(path.read_text(encoding="utf-8")))


# -- running ------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    columns: tuple[str, ...]
    values: tuple

    def __getitem__(self, key: str):
        return self.values[self.columns.index(key)]

    @property
    def ok(self) -> bool:
        return self["status"] == "ok"

    def as_dict(self) -> dict[str, Any]:
        return dict(zip(self.columns, self.values))


@dataclass(frozen=True, eq=False)
class SweepResult:
    scenario: Scenario
    columns: tuple[str, ...]
    rows: list[SweepRow]

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r.values[k] for r in self.rows])

    @property
    def failures(self) -> int:
        return sum(not r.ok for r in self.rows)


@dataclass(frozen=True, eq=False)
class _Chunk:
    cfg: DeviceConfig
    positions: np.ndarray  # row indices in the final table
    coords: np.ndarray  # (n, n_axes) swept values in axis order (second, primary)


def _plan(s: Scenario) -> tuple[list[_Chunk], int]:
    axes = s.axes
    if len(axes) == 1:
        points = axes[0].values()[:, None]
    else:
        outer, inner = axes[0].values(), axes[1].values()
        points = np.column_stack([np.repeat(outer, inner.size), np.tile(inner, outer.size)])
    cfg_axes = [k for k, a in enumerate(axes) if a.variable in CONFIG_FIELDS]
    groups: dict[tuple, list[int]] = {}
    for i, row in enumerate(points):
        groups.setdefault(tuple(row[cfg_axes]), []).append(i)
    chunks = []
    for key, members in groups.items():
        try:
            cfg = s.device.replace(**{axes[k].variable: float(v) for k, v in zip(cfg_axes, key)})
        except ValueError as exc:
            cfg = exc  # invalid device at this grid point; reported per row
        for start in range(0, len(members), CHUNK_ROWS):
            idx = np.array(members[start:start + CHUNK_ROWS])
            chunks.append(_Chunk(cfg, idx, points[idx]))
    return chunks, points.shape[0]


def _temperatures(s: Scenario, chunk: _Chunk) -> np.ndarray:
    T = np.tile([s.temperatures.T_L, s.temperatures.T_M, s.temperatures.T_R], (chunk.positions.size, 1))
    for k, axis in enumerate(s.axes):
        if axis.variable in TEMPERATURE_FIELDS:
            T[:, TEMPERATURE_FIELDS.index(axis.variable)] = chunk.coords[:, k]
    return T


def _pack(floats: list[np.ndarray], flags: list[np.ndarray], status: list[str]) -> list[tuple]:
    # one float block and one bool block per chunk, converted to Python scalars in bulk
    F = np.column_stack(floats).tolist()
    B = np.column_stack(flags).astype(bool).tolist()
    return [tuple(f) + tuple(g) + (e or "ok",) for f, g, e in zip(F, B, status)]


def _evaluate(s: Scenario, chunk: _Chunk) -> list[tuple]:
    n = chunk.positions.size
    cfg_coords = [k for k, a in enumerate(s.axes) if a.variable in CONFIG_FIELDS]
    coords = chunk.coords[:, cfg_coords].astype(float).reshape(n, len(cfg_coords))
    n_flags = sum(c in FLAG_COLUMNS for c in s.columns)
    n_floats = len(s.columns) - len(cfg_coords) - n_flags - 1

    if isinstance(chunk.cfg, Exception):
        status = [f"ValueError: {chunk.cfg}"] * n
        return _pack([coords, np.full((n, n_floats), np.nan)], [np.zeros((n, n_flags))], status)

    if s.rectification is not None:
        spec = s.rectification
        deltas = chunk.coords[:, s.axes.index(s.sweep)]
        table = rectification_table(chunk.cfg, spec.mode, spec.anchor, deltas, spec.T_R)
        if spec.mode == "fixed_TL":
            T_L, T_M = np.full(n, spec.anchor), spec.anchor + deltas
        else:
            T_L, T_M = spec.anchor - deltas / 2.0, spec.anchor + deltas / 2.0
        degenerate = np.full(n, bool(gap_statistics(chunk.cfg)[2]))
        return _pack(
            [coords, deltas, T_L, T_M, np.full(n, spec.T_R), table.J, table.R, table.J_R],
            [degenerate, T_L < spec.T_R],
            table.errors,
        )

    T = _temperatures(s, chunk)
    if "amplification" in s.merits:
        table = merit_table(chunk.cfg, T, s.h)
        J, P, cur, errors = table.J, table.P, table.currents, table.errors
        secular, weak, degenerate = table.secular_ok, table.weak_coupling_ok, table.degenerate
    else:
        batch = steady_currents_batch(chunk.cfg, T)
        J, P, cur, errors = batch.totals, batch.P, batch.currents, batch.errors
        min_sep, min_abs, degs = gap_statistics(chunk.cfg)
        secular, weak = validity_flags(min_sep, min_abs, batch.max_rate)
        failed = ~batch.ok
        secular, weak = np.asarray(secular) & ~failed, np.asarray(weak) & ~failed
        degenerate = bool(degs)
    floats = [coords, T]
    flags = []
    if "currents" in s.merits:
        floats += [J, J.sum(axis=1)]
    if "amplification" in s.merits:
        floats += [table.S, table.alpha]
        flags.append(table.divergent)
    if "populations" in s.merits:
        floats.append(P)
    if "transitions" in s.merits:
        floats.append(cur)
    flags += [secular, weak, np.full(n, degenerate), T[:, 0] < T[:, 2]]
    return _pack(floats, flags, errors)


def run_sweep(s: Scenario, threads: int = 1) -> SweepResult:
    """Evaluate every grid point of ``s``; rows come back in ascending grid order.

    2-D grids are row-major with the second variable outermost. Points sharing a
    device configuration are solved together in fixed-size chunks; chunking does
    not depend on ``threads``, so the output is identical for any worker count.
    Failed points are kept, with NaN values and the error in ``status``.
    """
    chunks, total = _plan(s)
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: _evaluate(s, c), chunks))
    else:
        results = [_evaluate(s, c) for c in chunks]
    ordered: list[tuple | None] = [None] * total
    for chunk, rows in zip(chunks, results):
        for pos, row in zip(chunk.positions, rows):
            ordered[pos] = row
    columns = s.columns
    return SweepResult(s, columns, [SweepRow(columns, row) for row in ordered])


# -- CSV ------------------------------------------------------------------------------

def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _quote(text: str) -> str:
    if any(c in text for c in ',"\n\r'):
        return '"' + text.replace('"', '""') + '"'
    return text


def write_csv(rows, stream, columns=None) -> None:
    if isinstance(rows, SweepResult):
        columns, rows = rows.columns, rows.rows
    if columns is None:
        if not rows:
            raise ValueError("columns are required to write an empty table")
        columns = rows[0].columns
    stream.write(",".join(_quote(c) for c in columns) + "\n")
    template = None
    if columns and columns[-1] == "status":
        # sweep tables: a fixed float/flag/status layout, formatted one line at a time
        template = ",".join("%d" if c in FLAG_COLUMNS else "%.17g" for c in columns[:-1]) + ",%s\n"
    lines = []
    for row in rows:
        values = row.values if isinstance(row, SweepRow) else tuple(row)
        if template is not None:
            lines.append(template % (values[:-1] + (_quote(str(values[-1])),)))
        else:
            lines.append(",".join(_quote(_cell(v)) for v in values) + "\n")
        if len(lines) >= 8192:
            stream.write("".join(lines))
            lines.clear()
    stream.write("".join(lines))


def emit_csv(rows, destination, columns=None) -> None:
    """Write a header line and one line per row, floats with 17 significant digits.

    ``destination`` is a path, ``"-"`` for standard output, or a text stream.
    """
    if destination == "-":
        write_csv(rows, sys.stdout, columns)
    elif isinstance(destination, io.TextIOBase) or hasattr(destination, "write"):
        write_csv(rows, destination, columns)
    else:
        parent = os.path.dirname(os.fspath(destination))
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            write_csv(rows, fh, columns)


# -- summaries -----------------------------------------------------------------------

def _crossings(x: np.ndarray, y: np.ndarray) -> list[float]:
    return [round(v, 6) for v in zero_crossings(x, y)]


def summarize(result: SweepResult, threshold: float = 100.0) -> dict[str, Any]:
    """Headline numbers of a sweep, one entry per value of the second variable.

    For current sweeps: mean and population std of each current, zeros of J_M
    and S_M, and the runs of grid points with |alpha_L| >= ``threshold``. For
    rectification sweeps: the range of R.
    """
    s = result.scenario
    cols = result.columns
    primary = s.sweep.variable
    outer = s.second.values() if s.second is not None else [None]
    n_inner = s.sweep.values().size
    groups = []
    for g, value in enumerate(outer):
        rows = result.rows[g * n_inner:(g + 1) * n_inner]
        ok = [r for r in rows if r.ok]
        entry: dict[str, Any] = {"points": len(rows), "failed": len(rows) - len(ok)}
        if value is not None:
            entry[s.second.variable] = float(value)
        if ok:
            x = np.array([r[primary] for r in ok])
            if "R" in cols:
                R = np.array([r["R"] for r in ok])
                entry["R_min"], entry["R_max"] = float(R.min()), float(R.max())
            if "J_M" in cols:
                for a in ("L", "M", "R"):
                    J = np.array([r[f"J_{a}"] for r in ok])
                    entry[f"J_{a}_mean"], entry[f"J_{a}_std"] = float(J.mean()), float(J.std())
                entry["J_M_zeros"] = _crossings(x, np.array([r["J_M"] for r in ok]))
            if "alpha_L" in cols:
                alpha = np.abs(np.array([r["alpha_L"] for r in ok]))
                entry["alpha_L_regions"] = [list(p) for p in threshold_regions(x, alpha, threshold)]
                entry["S_M_zeros"] = _crossings(x, np.array([r["S_M"] for r in ok]))
        groups.append(entry)
    return {"name": s.name, "variable": primary, "rows": len(result), "groups": groups}
