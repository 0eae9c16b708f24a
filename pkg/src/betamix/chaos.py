"""Chaotic variation engine.

A route's move sequence is laid along a reference Lorenz trajectory,
one move per integration step. A second trajectory started from a
nearby initial condition visits the same attractor in a different
order; mapping each of its points back to the nearest reference point
reads the moves back out in that new order. Because both trajectories
live on the same attractor, the variation is a reordering of the input
moves: nothing is invented, only rearranged.

Match moves ("use the same hold with the other hand") are replaced by
the most recent preceding move of the opposite hand before mapping, and
the replacement is flagged so the plan can render a "(match?)" note
wherever that symbol lands.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

from .crdl import SEPARATOR, Hand, RawMove, Route

PLAN_FORMAT = "betamix.plan"
PLAN_VERSION = 1


class ChaosError(ValueError):
    pass


class NonFiniteState(ChaosError):
    """A trajectory coordinate overflowed; the parameters are divergent."""


class LeadingMatch(ChaosError):
    """A match move with no preceding opposite-hand move to copy."""


class EmptyInput(ChaosError):
    pass


class LorenzParams(NamedTuple):
    a: float = 16.0
    r: float = 45.0
    b: float = 4.0


class State3(NamedTuple):
    x: float
    y: float
    z: float


class NnaMode(str, Enum):
    """Which distance drives the nearest-neighbor assignment."""

    EUCLID2D = "euclid2d"
    EUCLID3D = "euclid3d"
    DABBY_X = "dabbyx"


class Plane(str, Enum):
    XY = "xy"
    XZ = "xz"
    YZ = "yz"

    @property
    def axes(self) -> tuple[int, int]:
        return {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}[self.value]


IC_R_DEFAULT = State3(-13.0, -12.0, 52.0)
IC_V_DEFAULT = State3(-16.0, -12.0, 52.0)
IC_V_MORE = State3(-16.0, -13.5, 52.0)


@dataclass(frozen=True)
class VariationConfig:
    """Everything that determines a variation besides the input moves."""

    params: LorenzParams = LorenzParams()
    h: float = 0.015
    ic_r: State3 = IC_R_DEFAULT
    ic_v: State3 = IC_V_DEFAULT
    skip: int = 0
    nna_mode: NnaMode = NnaMode.EUCLID2D
    plane: Plane = Plane.XY
    dabby_rule: str = "ge"  # "ge" (>= target) or "le" (<= target)

    def __post_init__(self):
        if self.h <= 0:
            raise ChaosError("step size must be positive")
        if self.skip < 0:
            raise ChaosError("skip must be nonnegative")
        if self.dabby_rule not in ("ge", "le"):
            raise ChaosError("dabby_rule must be 'ge' or 'le'")


PRESETS: dict[str, VariationConfig] = {
    "default": VariationConfig(),
    "more variation": VariationConfig(ic_v=IC_V_MORE, skip=100),
}


@dataclass(frozen=True)
class Trajectory:
    points: tuple[State3, ...]
    ic: State3
    step: float
    skipped: int


def lorenz_deriv(s: State3, p: LorenzParams = LorenzParams()) -> State3:
    return State3(
        p.a * (s.y - s.x),
        s.x * (p.r - s.z) - s.y,
        s.x * s.y - p.b * s.z,
    )


def rk4_step(s: State3, h: float, p: LorenzParams = LorenzParams()) -> State3:
    """One classical fourth-order Runge-Kutta step."""
    k1 = lorenz_deriv(s, p)
    k2 = lorenz_deriv(State3(s.x + 0.5 * h * k1.x, s.y + 0.5 * h * k1.y, s.z + 0.5 * h * k1.z), p)
    k3 = lorenz_deriv(State3(s.x + 0.5 * h * k2.x, s.y + 0.5 * h * k2.y, s.z + 0.5 * h * k2.z), p)
    k4 = lorenz_deriv(State3(s.x + h * k3.x, s.y + h * k3.y, s.z + h * k3.z), p)
    return State3(
        s.x + (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        s.y + (h / 6.0) * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
        s.z + (h / 6.0) * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z),
    )


def integrate(ic: State3, n: int, cfg: VariationConfig) -> Trajectory:
    """Record n consecutive states, after discarding cfg.skip steps.

    The first recorded point is the state after the skip (the initial
    condition itself when skip is 0). Raises NonFiniteState if the
    trajectory overflows.
    """
    if n < 1:
        raise ChaosError("need at least one trajectory point")
    s = State3(*map(float, ic))
    for _ in range(cfg.skip):
        s = rk4_step(s, cfg.h, cfg.params)
    points = [s]
    for _ in range(n - 1):
        s = rk4_step(s, cfg.h, cfg.params)
        points.append(s)
    last = points[-1]
    if not (math.isfinite(last.x) and math.isfinite(last.y) and math.isfinite(last.z)):
        raise NonFiniteState(f"trajectory from {tuple(ic)} diverged")
    return Trajectory(points=tuple(points), ic=State3(*map(float, ic)), step=cfg.h, skipped=cfg.skip)


def nearest_neighbor(
    target: State3,
    reference: Sequence[State3] | Trajectory,
    mode: NnaMode = NnaMode.EUCLID2D,
    plane: Plane = Plane.XY,
    dabby_rule: str = "ge",
) -> int | None:
    """Index of the reference point nearest to target, or None.

    Euclidean modes measure full 3D distance or distance projected onto
    `plane`; ties go to the lowest index. The Dabby mode considers only
    reference points whose x is >= target.x ("ge", the default) or
    <= target.x ("le") and minimizes |x - target.x|; with no candidate
    it returns None.
    """
    points = reference.points if isinstance(reference, Trajectory) else reference
    if not points:
        raise ChaosError("reference trajectory is empty")

    if mode is NnaMode.DABBY_X:
        best = None
        best_d = math.inf
        for i, p in enumerate(points):
            if dabby_rule == "ge":
                ok = p.x >= target.x
            else:
                ok = p.x <= target.x
            if not ok:
                continue
            d = abs(p.x - target.x)
            if d < best_d:
                best, best_d = i, d
        return best

    if mode is NnaMode.EUCLID3D:
        ax: tuple[int, ...] = (0, 1, 2)
    else:
        ax = plane.axes
    best = 0
    best_d = math.inf
    for i, p in enumerate(points):
        d = 0.0
        for a in ax:
            diff = p[a] - target[a]
            d += diff * diff
        if d < best_d:
            best, best_d = i, d
    return best


@dataclass(frozen=True)
class PlannedMove:
    """One output move with its provenance in the concatenated input."""

    hand: Hand | None
    text: str
    source_route: str | None
    source_index: int | None
    changed: bool
    match_note: bool = False
    gap: bool = False  # Dabby mode found no neighbor; setter fills in


class PlanSummary(NamedTuple):
    changed: int
    total: int
    gaps: int


@dataclass(frozen=True)
class VariationPlan:
    inputs: tuple[str, ...]
    config: VariationConfig
    moves: tuple[PlannedMove, ...]
    summary: PlanSummary


def _effective_moves(inputs: Sequence[Route]) -> tuple[list[RawMove], list[bool], list[str]]:
    """Concatenate input moves, resolving match moves to concrete holds.

    Returns (moves with match text substituted, match flags, source
    route ids). Substitution runs left to right over the concatenated
    sequence and uses post-substitution texts, so chained matches
    resolve to real holds.
    """
    flat: list[RawMove] = []
    notes: list[bool] = []
    sources: list[str] = []
    for idx, route in enumerate(inputs):
        rid = route.id if route.id is not None else f"input{idx}"
        for move in route.moves:
            flat.append(move)
            sources.append(rid)
            notes.append(False)

    resolved: list[RawMove] = []
    for j, move in enumerate(flat):
        if not move.is_match:
            resolved.append(move)
            continue
        want = move.hand.opposite
        source = next((m for m in reversed(resolved[:j]) if m.hand is want), None)
        if source is None:
            raise LeadingMatch(f"move {j + 1} is a match with no prior {want.value} move")
        resolved.append(RawMove(move.hand, source.text))
        notes[j] = True
    return resolved, notes, sources


def generate_variation(inputs: Sequence[Route], cfg: VariationConfig) -> VariationPlan:
    """Map the concatenated input moves through paired Lorenz trajectories.

    Raises EmptyInput, LeadingMatch, or NonFiniteState. In Dabby mode a
    point with no admissible neighbor yields a gap marker move.
    """
    if not inputs or not any(r.moves for r in inputs):
        raise EmptyInput("no input moves")
    moves, notes, sources = _effective_moves(inputs)
    n = len(moves)

    ref = integrate(cfg.ic_r, n, cfg)
    var = integrate(cfg.ic_v, n, cfg)

    planned: list[PlannedMove] = []
    changed_count = 0
    gap_count = 0
    for j in range(n):
        k = nearest_neighbor(var.points[j], ref, cfg.nna_mode, cfg.plane, cfg.dabby_rule)
        if k is None:
            planned.append(
                PlannedMove(hand=None, text="", source_route=None, source_index=None, changed=True, gap=True)
            )
            changed_count += 1
            gap_count += 1
            continue
        changed = k != j
        changed_count += int(changed)
        planned.append(
            PlannedMove(
                hand=moves[k].hand,
                text=moves[k].text,
                source_route=sources[k],
                source_index=k,
                changed=changed,
                match_note=notes[k],
            )
        )

    route_ids = []
    for idx, route in enumerate(inputs):
        route_ids.append(route.id if route.id is not None else f"input{idx}")
    return VariationPlan(
        inputs=tuple(route_ids),
        config=cfg,
        moves=tuple(planned),
        summary=PlanSummary(changed=changed_count, total=n, gaps=gap_count),
    )


# --- serialization ---------------------------------------------------------


def config_to_dict(cfg: VariationConfig) -> dict:
    return {
        "params": {"a": cfg.params.a, "r": cfg.params.r, "b": cfg.params.b},
        "h": cfg.h,
        "ic_r": list(cfg.ic_r),
        "ic_v": list(cfg.ic_v),
        "skip": cfg.skip,
        "nna_mode": cfg.nna_mode.value,
        "plane": cfg.plane.value,
        "dabby_rule": cfg.dabby_rule,
    }


def config_from_dict(data: dict) -> VariationConfig:
    params = data.get("params", {})
    return VariationConfig(
        params=LorenzParams(float(params.get("a", 16.0)), float(params.get("r", 45.0)), float(params.get("b", 4.0))),
        h=float(data.get("h", 0.015)),
        ic_r=State3(*map(float, data.get("ic_r", IC_R_DEFAULT))),
        ic_v=State3(*map(float, data.get("ic_v", IC_V_DEFAULT))),
        skip=int(data.get("skip", 0)),
        nna_mode=NnaMode(data.get("nna_mode", "euclid2d")),
        plane=Plane(data.get("plane", "xy")),
        dabby_rule=data.get("dabby_rule", "ge"),
    )


def plan_to_dict(plan: VariationPlan) -> dict:
    return {
        "format": PLAN_FORMAT,
        "version": PLAN_VERSION,
        "inputs": list(plan.inputs),
        "config": config_to_dict(plan.config),
        "moves": [
            {
                "hand": m.hand.value if m.hand is not None else None,
                "text": m.text,
                "source_route": m.source_route,
                "source_index": m.source_index,
                "changed": m.changed,
                "match_note": m.match_note,
                "gap": m.gap,
            }
            for m in plan.moves
        ],
        "summary": {"changed": plan.summary.changed, "total": plan.summary.total, "gaps": plan.summary.gaps},
    }


def plan_from_dict(data: dict) -> VariationPlan:
    if data.get("format") != PLAN_FORMAT:
        raise ChaosError("not a variation plan document")
    if data.get("version") != PLAN_VERSION:
        raise ChaosError(f"unsupported plan version {data.get('version')!r}")
    moves = tuple(
        PlannedMove(
            hand=Hand(m["hand"]) if m["hand"] is not None else None,
            text=m["text"],
            source_route=m["source_route"],
            source_index=m["source_index"],
            changed=m["changed"],
            match_note=m.get("match_note", False),
            gap=m.get("gap", False),
        )
        for m in data["moves"]
    )
    summary = data["summary"]
    return VariationPlan(
        inputs=tuple(data["inputs"]),
        config=config_from_dict(data["config"]),
        moves=moves,
        summary=PlanSummary(changed=summary["changed"], total=summary["total"], gaps=summary.get("gaps", 0)),
    )


def render_plan(plan: VariationPlan, format: str = "text") -> str:
    """Render a plan as stable human-readable text or canonical JSON."""
    if format == "json":
        return json.dumps(plan_to_dict(plan), sort_keys=True, separators=(",", ":")) + "\n"
    if format != "text":
        raise ChaosError(f"unknown plan format {format!r}")

    lines = ["chaotic route plan"]
    lines.append("inputs: " + ", ".join(plan.inputs))
    lines.append(f"moves: {plan.summary.total}  changed: {plan.summary.changed}")
    lines.append(SEPARATOR)
    width = len(str(len(plan.moves)))
    for j, m in enumerate(plan.moves, start=1):
        if m.gap:
            lines.append(f"{j:>{width}} ? (no neighbor; fill in the blank)")
            continue
        note = " (match?)" if m.match_note else ""
        annot = ""
        if m.changed:
            annot = f"  [was move {m.source_index + 1} of {m.source_route}]"
        lines.append(f"{j:>{width}} {m.hand.value} {m.text}{note}{annot}")
    return "\n".join(lines) + "\n"
