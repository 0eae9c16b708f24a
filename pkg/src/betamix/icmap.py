"""Initial-condition landscape: effect/change metrics over a grid of ICs.

For a candidate variation initial condition, `effect` counts how many
sequence positions the nearest-neighbor assignment moves, and `change`
is the mean index displacement of the moved positions. Sweeping a grid
of candidates around the reference IC produces a map a setter can
browse to pick "a little different" or "very different" starting
points. Metrics depend only on assignment indices, so the sweep uses
the index sequence 0..n-1 rather than any concrete route.

The grid evaluator is vectorized over cells and may be chunked across
worker threads; every per-cell quantity depends only on that cell's
column, so serial and parallel builds are bit-identical.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chaos import NnaMode, NonFiniteState, State3, Trajectory, VariationConfig, integrate, nearest_neighbor

MAP_FORMAT = "betamix.icmap"
MAP_VERSION = 1
_CHUNK = 512


class MapError(ValueError):
    pass


class VersionMismatch(MapError):
    pass


class CorruptFile(MapError):
    pass


_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class GridSpec:
    """Grid of candidate ICs: center + spacing*(i - N//2) per free axis.

    With slice_axis set, that axis is pinned to slice_value and the grid
    is the 2D plane of the remaining axes; otherwise the grid is the
    full 3D cube.
    """

    center: State3
    n_per_axis: int = 100
    spacing: float = 0.1
    slice_axis: str | None = "z"
    slice_value: float | None = None

    def __post_init__(self):
        if self.n_per_axis < 1:
            raise MapError("n_per_axis must be >= 1")
        if self.spacing <= 0:
            raise MapError("spacing must be positive")
        if self.slice_axis is not None and self.slice_axis not in _AXES:
            raise MapError(f"slice_axis must be one of x, y, z; got {self.slice_axis!r}")

    @property
    def free_axes(self) -> tuple[int, ...]:
        if self.slice_axis is None:
            return (0, 1, 2)
        pinned = _AXES[self.slice_axis]
        return tuple(a for a in (0, 1, 2) if a != pinned)

    def cell_count(self) -> int:
        return self.n_per_axis ** len(self.free_axes)

    def ics(self) -> list[State3]:
        """All grid ICs in row-major order (first free axis outermost)."""
        n = self.n_per_axis
        offsets = [self.spacing * (i - n // 2) for i in range(n)]
        base = list(self.center)
        if self.slice_axis is not None:
            value = self.slice_value
            base[_AXES[self.slice_axis]] = float(
                value if value is not None else self.center[_AXES[self.slice_axis]]
            )
        out: list[State3] = []
        axes = self.free_axes
        if len(axes) == 2:
            a0, a1 = axes
            for off0 in offsets:
                for off1 in offsets:
                    ic = base[:]
                    ic[a0] = self.center[a0] + off0
                    ic[a1] = self.center[a1] + off1
                    out.append(State3(*ic))
        else:
            for off0 in offsets:
                for off1 in offsets:
                    for off2 in offsets:
                        out.append(
                            State3(
                                self.center.x + off0,
                                self.center.y + off1,
                                self.center.z + off2,
                            )
                        )
        return out


@dataclass(frozen=True)
class CellMetrics:
    ic: State3
    effect: int | None
    change: float | None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class ICMap:
    spec: GridSpec
    sequence_length: int
    config: VariationConfig  # ic_v is irrelevant here; each cell supplies its own
    cells: tuple[CellMetrics, ...]


def assignment_metrics(ks: Sequence[int | None]) -> tuple[int, float]:
    """(effect, change) for an assignment k_0..k_{n-1}.

    effect counts positions where the assigned index differs from the
    position (a missing assignment counts as changed); change is the
    mean |k - j| over changed positions that have an index, 0 if none.
    """
    displacements = []
    gaps = 0
    for j, k in enumerate(ks):
        if k is None:
            gaps += 1
        elif k != j:
            displacements.append(abs(k - j))
    effect = len(displacements) + gaps
    change = sum(displacements) / len(displacements) if displacements else 0.0
    return effect, change


def effect_change(ic_v: State3, cfg: VariationConfig, n: int) -> CellMetrics:
    """Metrics for a single candidate IC, via the scalar trajectory path."""
    ref = integrate(cfg.ic_r, n, cfg)
    var = integrate(ic_v, n, cfg)
    ks = [nearest_neighbor(var.points[j], ref, cfg.nna_mode, cfg.plane, cfg.dabby_rule) for j in range(n)]
    effect, change = assignment_metrics(ks)
    return CellMetrics(ic=State3(*map(float, ic_v)), effect=effect, change=change)


def _batch_rk4(states: np.ndarray, h: float, p) -> np.ndarray:
    """One RK4 step for an (m, 3) batch; mirrors chaos.rk4_step exactly."""

    def deriv(s):
        x, y, z = s[:, 0], s[:, 1], s[:, 2]
        return np.stack([p.a * (y - x), x * (p.r - z) - y, x * y - p.b * z], axis=1)

    k1 = deriv(states)
    k2 = deriv(states + 0.5 * h * k1)
    k3 = deriv(states + 0.5 * h * k2)
    k4 = deriv(states + h * k3)
    return states + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _batch_trajectories(ics: np.ndarray, n: int, cfg: VariationConfig) -> np.ndarray:
    """(n, m, 3) trajectory array for an (m, 3) batch of ICs."""
    with np.errstate(over="ignore", invalid="ignore"):
        s = ics.astype(np.float64, copy=True)
        for _ in range(cfg.skip):
            s = _batch_rk4(s, cfg.h, cfg.params)
        out = np.empty((n, s.shape[0], 3), dtype=np.float64)
        out[0] = s
        for i in range(1, n):
            s = _batch_rk4(s, cfg.h, cfg.params)
            out[i] = s
    return out


def _assign_batch(var: np.ndarray, ref: np.ndarray, cfg: VariationConfig) -> np.ndarray:
    """Assignment indices, shape (n, m); -1 marks a Dabby gap."""
    n, m, _ = var.shape
    ks = np.empty((n, m), dtype=np.int64)
    if cfg.nna_mode is NnaMode.DABBY_X:
        rx = ref[:, 0]
        for j in range(n):
            vx = var[j, :, 0]
            d = np.abs(rx[None, :] - vx[:, None])
            if cfg.dabby_rule == "ge":
                invalid = rx[None, :] < vx[:, None]
            else:
                invalid = rx[None, :] > vx[:, None]
            d = np.where(invalid, np.inf, d)
            ks[j] = np.argmin(d, axis=1)
            ks[j, np.all(invalid, axis=1)] = -1
        return ks
    if cfg.nna_mode is NnaMode.EUCLID3D:
        axes: tuple[int, ...] = (0, 1, 2)
    else:
        axes = cfg.plane.axes
    for j in range(n):
        d = None
        for a in axes:
            diff = ref[None, :, a] - var[j, :, a, None]
            term = diff * diff
            d = term if d is None else d + term
        ks[j] = np.argmin(d, axis=1)
    return ks


def _evaluate_cells(ics: Sequence[State3], ref: np.ndarray, cfg: VariationConfig, n: int) -> list[CellMetrics]:
    arr = np.array(ics, dtype=np.float64)
    var = _batch_trajectories(arr, n, cfg)
    finite = np.isfinite(var).all(axis=(0, 2))
    cells: list[CellMetrics] = []
    if finite.any():
        ks = _assign_batch(var, ref, cfg)
    else:
        ks = np.zeros((n, len(ics)), dtype=np.int64)
    positions = np.arange(n)
    for c, ic in enumerate(ics):
        if not finite[c]:
            cells.append(CellMetrics(ic=ic, effect=None, change=None, error="trajectory diverged"))
            continue
        col = ks[:, c]
        gaps = col == -1
        moved = (col != positions) & ~gaps
        displaced = np.abs(col - positions)[moved]
        effect = int(moved.sum() + gaps.sum())
        change = float(displaced.sum() / displaced.size) if displaced.size else 0.0
        cells.append(CellMetrics(ic=ic, effect=effect, change=change))
    return cells


def build_map(
    spec: GridSpec,
    cfg: VariationConfig,
    n: int,
    workers: int = 1,
    allow_3d: bool = False,
) -> ICMap:
    """Evaluate every grid cell; embarrassingly parallel over cells.

    Full 3D sweeps can reach millions of cells, so they must be asked
    for explicitly via allow_3d. Divergent cells are recorded with an
    error instead of failing the sweep.
    """
    if spec.slice_axis is None and not allow_3d:
        raise MapError("full 3D sweep requested; pass allow_3d=True if you mean it")
    if n < 1:
        raise MapError("sequence length must be >= 1")
    ref = np.array(integrate(cfg.ic_r, n, cfg).points, dtype=np.float64)
    ics = spec.ics()
    chunks = [ics[i : i + _CHUNK] for i in range(0, len(ics), _CHUNK)]
    if workers <= 1:
        results = [_evaluate_cells(chunk, ref, cfg, n) for chunk in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda chunk: _evaluate_cells(chunk, ref, cfg, n), chunks))
    cells: list[CellMetrics] = []
    for part in results:
        cells.extend(part)
    return ICMap(spec=spec, sequence_length=n, config=cfg, cells=tuple(cells))


def pick_ic(
    icmap: ICMap,
    want_effect: tuple[float, float],
    want_change: tuple[float, float],
    limit: int = 10,
) -> list[CellMetrics]:
    """Cells whose metrics fall inside both inclusive ranges.

    Sorted by Euclidean distance of (effect, change) to the range
    midpoints; ties resolve in grid order. Failed cells never qualify.
    """
    e_lo, e_hi = want_effect
    c_lo, c_hi = want_change
    mid_e = (e_lo + e_hi) / 2.0
    mid_c = (c_lo + c_hi) / 2.0
    matches = []
    for index, cell in enumerate(icmap.cells):
        if cell.failed:
            continue
        if not (e_lo <= cell.effect <= e_hi and c_lo <= cell.change <= c_hi):
            continue
        dist = math.hypot(cell.effect - mid_e, cell.change - mid_c)
        matches.append((dist, index, cell))
    matches.sort(key=lambda t: (t[0], t[1]))
    return [cell for _, _, cell in matches[: max(limit, 0)]]


# --- persistence -----------------------------------------------------------


def _spec_to_dict(spec: GridSpec) -> dict:
    return {
        "center": list(spec.center),
        "n_per_axis": spec.n_per_axis,
        "spacing": spec.spacing,
        "slice_axis": spec.slice_axis,
        "slice_value": spec.slice_value,
    }


def _spec_from_dict(data: dict) -> GridSpec:
    return GridSpec(
        center=State3(*map(float, data["center"])),
        n_per_axis=int(data["n_per_axis"]),
        spacing=float(data["spacing"]),
        slice_axis=data["slice_axis"],
        slice_value=data["slice_value"],
    )


def map_to_dict(icmap: ICMap) -> dict:
    from .chaos import config_to_dict

    config = config_to_dict(icmap.config)
    config.pop("ic_v", None)  # each cell supplies its own
    return {
        "format": MAP_FORMAT,
        "version": MAP_VERSION,
        "spec": _spec_to_dict(icmap.spec),
        "sequence_length": icmap.sequence_length,
        "config": config,
        "cells": [
            [cell.ic.x, cell.ic.y, cell.ic.z, cell.effect, cell.change, cell.error]
            for cell in icmap.cells
        ],
    }


def map_from_dict(data: dict) -> ICMap:
    from .chaos import config_from_dict

    try:
        if data.get("format") != MAP_FORMAT:
            raise CorruptFile("not an IC map document")
        if data.get("version") != MAP_VERSION:
            raise VersionMismatch(f"unsupported map version {data.get('version')!r}")
        spec = _spec_from_dict(data["spec"])
        cells = []
        for row in data["cells"]:
            x, y, z, effect, change, error = row
            cells.append(
                CellMetrics(
                    ic=State3(float(x), float(y), float(z)),
                    effect=None if effect is None else int(effect),
                    change=None if change is None else float(change),
                    error=error,
                )
            )
        icmap = ICMap(
            spec=spec,
            sequence_length=int(data["sequence_length"]),
            config=config_from_dict(data["config"]),
            cells=tuple(cells),
        )
    except MapError:
        raise
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise CorruptFile(f"malformed IC map document: {exc}") from exc
    if len(icmap.cells) != spec.cell_count():
        raise CorruptFile(
            f"cell count {len(icmap.cells)} does not match spec ({spec.cell_count()})"
        )
    return icmap


def save_map(icmap: ICMap, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(map_to_dict(icmap), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_map(path) -> ICMap:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise CorruptFile("top-level JSON value is not an object")
    return map_from_dict(data)


def export_csv(icmap: ICMap) -> str:
    """Cells as CSV for external plotting; failed cells have empty metrics."""
    lines = ["ic_x,ic_y,ic_z,effect,change"]
    for cell in icmap.cells:
        effect = "" if cell.effect is None else str(cell.effect)
        change = "" if cell.change is None else repr(cell.change)
        lines.append(f"{cell.ic.x!r},{cell.ic.y!r},{cell.ic.z!r},{effect},{change}")
    return "\n".join(lines) + "\n"
