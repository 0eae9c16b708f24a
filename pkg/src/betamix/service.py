"""HTTP JSON API over the workbench modules.

Every endpoint is a thin wrapper: parse the request, call the module
operation, persist through the store, return JSON. No computation
lives here. Responses carry api_version; errors come back as
{code, message, detail} with 400 for malformed requests, 404 for
unknown ids, and 422 for domain errors (the code field holds the
module error name, e.g. "LeadingMatch").

Identical POST bodies are idempotent: re-posting content the store
already holds returns the existing id. Map sweeps run as background
jobs on a small worker pool; POST /icmaps returns a job id to poll.
"""

from __future__ import annotations

import dataclasses
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable

from fastapi import FastAPI
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import chaos, crdl, grammar, icmap, store, symbols, vomm

API_VERSION = 1
DEFAULT_PORT = 8765

_DOMAIN_ERRORS = (
    crdl.CrdlError,
    chaos.ChaosError,
    icmap.MapError,
    grammar.GrammarError,
    symbols.SymbolError,
    vomm.VommError,
    store.ValidationFailed,
)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: Any = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


def _error_body(code: str, message: str, detail: Any = None) -> dict:
    return {
        "api_version": API_VERSION,
        "code": code,
        "message": message,
        "detail": detail if detail is not None else {},
    }


def _exception_detail(exc: Exception) -> dict:
    detail = {}
    for attr in ("line_no", "symbol", "record_id", "name"):
        value = getattr(exc, attr, None)
        if value is not None:
            detail[attr] = value
    return detail


# --- request bodies --------------------------------------------------------


class RouteBody(BaseModel):
    document: str
    owner: str | None = None


class VariationBody(BaseModel):
    inputs: list[str] = Field(min_length=1)
    preset: str | None = None
    config: dict | None = None
    owner: str | None = None


class ParseBody(BaseModel):
    text: str


class TrainBody(BaseModel):
    route_ids: list[str] | None = None
    sequences: list[list[str]] | None = None
    symbol_set: str = "s1"
    max_order: int = vomm.DEFAULT_ORDER
    alphabet: list[str] | None = None
    trained_on: str = "all"
    owner: str | None = None


class SmoothBody(BaseModel):
    plan_id: str
    model_id: str
    j_max: int = 2


class MapBody(BaseModel):
    center: list[float] = Field(min_length=3, max_length=3)
    n_per_axis: int = 50
    spacing: float = 0.1
    slice_axis: str | None = "z"
    slice_value: float | None = None
    moves: int = 30
    preset: str | None = None
    config: dict | None = None
    workers: int = Field(default=1, ge=1, le=8)
    allow_3d: bool = False
    owner: str | None = None


# --- shared plumbing --------------------------------------------------------


def _fetch(st: store.Store, record_id: str, kind: str) -> store.StoredRecord:
    record = st.get(record_id)
    if record.kind != kind:
        raise store.NotFound(record_id)
    return record


def _put_idempotent(st: store.Store, kind: str, payload, owner: str | None) -> str:
    try:
        return st.put(kind, payload, owner=owner).id
    except store.DuplicateId as exc:
        return exc.record_id


def _resolve_config(preset: str | None, config: dict | None) -> chaos.VariationConfig:
    if preset is not None and config is not None:
        raise ApiError(400, "validation", "give either a preset or a config, not both")
    if preset is not None:
        try:
            return chaos.PRESETS[preset]
        except KeyError:
            raise ApiError(
                422,
                "UnknownPreset",
                f"unknown preset {preset!r}",
                {"known": sorted(chaos.PRESETS)},
            ) from None
    if config is not None:
        return chaos.config_from_dict(config)
    return chaos.PRESETS["default"]


def _parse_range(text: str | None, fallback: tuple[float, float]) -> tuple[float, float]:
    """'lo:hi' or a single number (exact match); None keeps the fallback."""
    if text is None or text == "":
        return fallback
    try:
        if ":" in text:
            lo_text, hi_text = text.split(":", 1)
            lo, hi = float(lo_text), float(hi_text)
        else:
            lo = hi = float(text)
    except ValueError:
        raise ApiError(400, "validation", f"bad range {text!r}; expected 'lo:hi'") from None
    if lo > hi:
        raise ApiError(400, "validation", f"empty range {text!r}")
    return lo, hi


def _frame_json(frame: grammar.MoveFrame) -> dict:
    action = None
    if frame.action is not None:
        action = {
            "verb": frame.action.verb,
            "verb_class": frame.action.verb_class,
            "size": frame.action.size,
            "is_cross": frame.action.is_cross,
        }
    return {
        "is_match": frame.is_match,
        "hybrid_label": frame.hybrid_label,
        "action": action,
        "holds": [
            {
                "type": hold.type_text,
                "subtype": hold.subtype,
                "size": hold.size,
                "shape": hold.shape,
                "descriptors": list(hold.descriptors),
                "negated": hold.negated,
            }
            for hold in frame.holds
        ],
    }


def symbolize_route(route: crdl.Route, symbol_set: symbols.SymbolSet) -> tuple[list[str], int]:
    """Symbol sequence for a route's moves; also how many moves were skipped."""
    sequence: list[str] = []
    skipped = 0
    for move in route.moves:
        symbol = symbols.symbolize_text(move.text, symbol_set)
        if symbol is None:
            skipped += 1
            continue
        sequence.append(symbol.text)
    return sequence, skipped


class _MapJobs:
    """Background map sweeps with polled status."""

    def __init__(self, workers: int):
        self.pool = ThreadPoolExecutor(max_workers=workers)
        self.lock = threading.Lock()
        self.jobs: dict[str, dict] = {}
        self.counter = 0

    def submit(self, build: Callable[[], str]) -> str:
        with self.lock:
            self.counter += 1
            job_id = f"job-{self.counter:04d}"
            self.jobs[job_id] = {"status": "queued", "icmap_id": None, "error": None}
        self.pool.submit(self._run, job_id, build)
        return job_id

    def _run(self, job_id: str, build: Callable[[], str]) -> None:
        with self.lock:
            self.jobs[job_id]["status"] = "running"
        try:
            icmap_id = build()
        except Exception as exc:  # job errors surface via polling, not logs
            with self.lock:
                self.jobs[job_id]["status"] = "failed"
                self.jobs[job_id]["error"] = {
                    "code": type(exc).__name__,
                    "message": str(exc),
                }
            return
        with self.lock:
            self.jobs[job_id]["status"] = "done"
            self.jobs[job_id]["icmap_id"] = icmap_id

    def status(self, job_id: str) -> dict | None:
        with self.lock:
            state = self.jobs.get(job_id)
            return dict(state) if state is not None else None


# --- app factory ------------------------------------------------------------


def create_app(store_dir=None, map_workers: int = 2) -> FastAPI:
    """Build the API app over a store directory (default ./betamix-store)."""
    app = FastAPI(title="betamix", version="1")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    st = store.Store(store_dir if store_dir is not None else "betamix-store")
    jobs = _MapJobs(map_workers)
    app.state.store = st
    app.state.jobs = jobs

    @app.exception_handler(ApiError)
    async def _api_error(request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content=_error_body(exc.code, exc.message, exc.detail)
        )

    @app.exception_handler(store.NotFound)
    async def _not_found(request, exc: store.NotFound):
        return JSONResponse(
            status_code=404,
            content=_error_body("NotFound", str(exc), _exception_detail(exc)),
        )

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content=_error_body("validation", "invalid request", jsonable_encoder(exc.errors())),
        )

    async def _domain_error(request, exc: Exception):
        return JSONResponse(
            status_code=422,
            content=_error_body(type(exc).__name__, str(exc), _exception_detail(exc)),
        )

    for error_type in _DOMAIN_ERRORS:
        app.add_exception_handler(error_type, _domain_error)

    # --- meta ---

    @app.get("/health")
    def health():
        return {"api_version": API_VERSION, "status": "ok"}

    @app.get("/presets")
    def presets():
        return {
            "api_version": API_VERSION,
            "presets": {name: chaos.config_to_dict(cfg) for name, cfg in chaos.PRESETS.items()},
        }

    # --- routes ---

    def _route_summary(record: store.StoredRecord) -> dict:
        route = crdl.parse_crdl(record.payload)
        return {
            "id": record.id,
            "created_at": record.created_at,
            "owner": record.owner,
            "grade": route.grade,
            "header": route.header,
            "moves": len(route.moves),
        }

    @app.post("/routes")
    def post_route(body: RouteBody):
        crdl.parse_crdl(body.document)
        record_id = _put_idempotent(st, "route", body.document, body.owner)
        return {"api_version": API_VERSION, **_route_summary(st.get(record_id))}

    @app.get("/routes")
    def get_routes(owner: str | None = None, grade: str | None = None):
        records = st.list(kind="route", owner=owner, grade=grade)
        return {
            "api_version": API_VERSION,
            "routes": [_route_summary(record) for record in records],
        }

    @app.get("/routes/{record_id}")
    def get_route(record_id: str):
        record = _fetch(st, record_id, "route")
        route = crdl.parse_crdl(record.payload)
        return {
            "api_version": API_VERSION,
            **_route_summary(record),
            "document": record.payload,
            "move_list": [{"hand": m.hand.value, "text": m.text} for m in route.moves],
        }

    # --- variations ---

    @app.post("/variations")
    def post_variation(body: VariationBody):
        routes = []
        for route_id in body.inputs:
            record = _fetch(st, route_id, "route")
            route = crdl.parse_crdl(record.payload)
            routes.append(dataclasses.replace(route, id=record.id))
        cfg = _resolve_config(body.preset, body.config)
        plan = chaos.generate_variation(routes, cfg)
        payload = chaos.plan_to_dict(plan)
        record_id = _put_idempotent(st, "variation", payload, body.owner)
        return {
            "api_version": API_VERSION,
            "id": record_id,
            "plan": payload,
            "rendered": chaos.render_plan(plan),
        }

    @app.get("/variations/{record_id}")
    def get_variation(record_id: str):
        record = _fetch(st, record_id, "variation")
        plan = chaos.plan_from_dict(record.payload)
        return {
            "api_version": API_VERSION,
            "id": record.id,
            "created_at": record.created_at,
            "owner": record.owner,
            "plan": record.payload,
            "rendered": chaos.render_plan(plan),
        }

    # --- map sweeps ---

    @app.post("/icmaps")
    def post_icmap(body: MapBody):
        spec = icmap.GridSpec(
            center=chaos.State3(*body.center),
            n_per_axis=body.n_per_axis,
            spacing=body.spacing,
            slice_axis=body.slice_axis,
            slice_value=body.slice_value,
        )
        cfg = _resolve_config(body.preset, body.config)
        if spec.slice_axis is None and not body.allow_3d:
            raise icmap.MapError("full 3D sweep requested; pass allow_3d true if you mean it")
        if body.moves < 1:
            raise icmap.MapError("moves must be >= 1")
        moves, workers, owner = body.moves, body.workers, body.owner

        def build() -> str:
            built = icmap.build_map(spec, cfg, moves, workers=workers, allow_3d=body.allow_3d)
            return _put_idempotent(st, "icmap", icmap.map_to_dict(built), owner)

        job_id = jobs.submit(build)
        return {"api_version": API_VERSION, "job_id": job_id, "status": "queued"}

    @app.get("/icmaps/jobs/{job_id}")
    def get_icmap_job(job_id: str):
        state = jobs.status(job_id)
        if state is None:
            raise store.NotFound(job_id)
        return {"api_version": API_VERSION, "job_id": job_id, **state}

    @app.get("/icmaps/{record_id}")
    def get_icmap(record_id: str):
        record = _fetch(st, record_id, "icmap")
        return {
            "api_version": API_VERSION,
            "id": record.id,
            "created_at": record.created_at,
            "owner": record.owner,
            "map": record.payload,
        }

    @app.get("/icmaps/{record_id}/pick")
    def pick_from_icmap(
        record_id: str,
        effect: str | None = None,
        change: str | None = None,
        limit: int = 10,
    ):
        record = _fetch(st, record_id, "icmap")
        loaded = icmap.map_from_dict(record.payload)
        n = loaded.sequence_length
        effect_range = _parse_range(effect, (0.0, float(n)))
        change_range = _parse_range(change, (0.0, float(n)))
        cells = icmap.pick_ic(loaded, effect_range, change_range, limit=limit)
        return {
            "api_version": API_VERSION,
            "id": record.id,
            "effect": list(effect_range),
            "change": list(change_range),
            "candidates": [
                {"ic": [cell.ic.x, cell.ic.y, cell.ic.z], "effect": cell.effect, "change": cell.change}
                for cell in cells
            ],
        }

    # --- parsing and symbols ---

    @app.post("/parse")
    def post_parse(body: ParseBody):
        return {"api_version": API_VERSION, **parse_report(body.text)}

    # --- models and smoothing ---

    @app.post("/models/train")
    def post_train(body: TrainBody):
        if (body.route_ids is None) == (body.sequences is None):
            raise ApiError(400, "validation", "give exactly one of route_ids or sequences")
        try:
            symbol_set = symbols.SymbolSet(body.symbol_set)
        except ValueError:
            raise ApiError(400, "validation", f"unknown symbol set {body.symbol_set!r}") from None
        skipped = 0
        if body.route_ids is not None:
            sequences = []
            for route_id in body.route_ids:
                record = _fetch(st, route_id, "route")
                sequence, missed = symbolize_route(crdl.parse_crdl(record.payload), symbol_set)
                skipped += missed
                if sequence:
                    sequences.append(sequence)
            stored_set: str | None = symbol_set.value
        else:
            sequences = [list(seq) for seq in body.sequences]
            stored_set = None
        alphabet = body.alphabet
        if alphabet is None:
            alphabet = vomm.derive_alphabet(sequences)
        model = vomm.train(
            sequences,
            body.max_order,
            alphabet=alphabet,
            trained_on=body.trained_on,
            symbol_set=stored_set,
        )
        record_id = _put_idempotent(st, "model", vomm.model_to_dict(model), body.owner)
        return {
            "api_version": API_VERSION,
            "id": record_id,
            "alphabet": list(model.alphabet),
            "max_order": model.max_order,
            "sequences": len(sequences),
            "symbols": sum(len(seq) for seq in sequences),
            "skipped_moves": skipped,
        }

    @app.post("/smooth")
    def post_smooth(body: SmoothBody):
        plan_record = _fetch(st, body.plan_id, "variation")
        model_record = _fetch(st, body.model_id, "model")
        plan = chaos.plan_from_dict(plan_record.payload)
        model = vomm.model_from_dict(model_record.payload)
        symbol_set = symbols.SymbolSet(model.symbol_set) if model.symbol_set else symbols.SymbolSet.S1
        suggestions = smooth_plan(plan, model, symbol_set, body.j_max)
        return {
            "api_version": API_VERSION,
            "plan_id": body.plan_id,
            "model_id": body.model_id,
            "j_max": body.j_max,
            "symbol_set": symbol_set.value,
            "suggestions": suggestions,
        }

    return app


def parse_report(text: str) -> dict:
    """Frames, merged frame, and per-set symbols for one description."""
    frames = grammar.parse_move(text)
    if not frames:
        return {
            "text": text,
            "frames": [],
            "merged": None,
            "symbols": {s.value: None for s in symbols.SymbolSet},
        }
    merged = grammar.merge_parses(frames)
    features = symbols.quality_booleans(merged)
    out_symbols: dict[str, str | None] = {}
    for symbol_set in symbols.SymbolSet:
        try:
            out_symbols[symbol_set.value] = symbols.extract_symbol(merged, symbol_set).text
        except symbols.NoHold:
            out_symbols[symbol_set.value] = None
    return {
        "text": text,
        "frames": [
            {
                "paths": frame.paths(),
                "start": frame.start,
                "end": frame.end,
                "consumed": len(frame.consumed),
            }
            for frame in frames
        ],
        "merged": {
            **_frame_json(merged),
            "booleans": {
                "is_cross": features.is_cross,
                "is_good": features.is_good,
                "is_big": features.is_big,
            },
        },
        "symbols": out_symbols,
    }


def smooth_plan(
    plan: chaos.VariationPlan,
    model: vomm.VommModel,
    symbol_set: symbols.SymbolSet,
    j_max: int,
) -> list[dict]:
    """One suggestion per gap move, scored by the model.

    Context is the contiguous run of symbolizable moves on each side of
    the gap (another gap ends the run; moves the grammar cannot
    symbolize are skipped). Suggested moves alternate hands starting
    opposite the previous move's hand, as a presentation default only.
    """
    move_symbols: list[str | None] = []
    for move in plan.moves:
        if move.gap:
            move_symbols.append(None)
            continue
        symbol = symbols.symbolize_text(move.text, symbol_set)
        move_symbols.append(symbol.text if symbol is not None else None)

    suggestions = []
    for position, move in enumerate(plan.moves):
        if not move.gap:
            continue
        prefix: list[str] = []
        for earlier, symbol in zip(plan.moves[:position], move_symbols[:position]):
            if earlier.gap:
                prefix = []
            elif symbol is not None:
                prefix.append(symbol)
        suffix: list[str] = []
        for later, symbol in zip(plan.moves[position + 1 :], move_symbols[position + 1 :]):
            if later.gap:
                break
            if symbol is not None:
                suffix.append(symbol)
        result = vomm.interpolate(model, prefix, suffix, j_max=j_max)
        previous_hand = None
        for earlier in reversed(plan.moves[:position]):
            if earlier.hand is not None:
                previous_hand = earlier.hand
                break
        inserted = []
        for symbol_text in result.insertion:
            hand = previous_hand.opposite if previous_hand is not None else crdl.Hand.LEFT
            inserted.append({"hand": hand.value, "text": symbol_text, "suggested": True})
            previous_hand = hand
        suggestions.append(
            {
                "position": position,
                "insertion": list(result.insertion),
                "bits": result.bits,
                "candidates": result.candidates,
                "moves": inserted,
            }
        )
    return suggestions


def run(host: str = "127.0.0.1", port: int = DEFAULT_PORT, store_dir=None, map_workers: int = 2):
    """Serve over HTTP; betamix serve wraps this."""
    import uvicorn

    uvicorn.run(create_app(store_dir=store_dir, map_workers=map_workers), host=host, port=port)
