"""Command line entry points.

Each subcommand mirrors one API operation but reads and writes plain
files instead of the store: parse, vary, map, pick-ic, train, score,
smooth, serve. Pass --json for machine-readable output (one canonical
JSON document on stdout). Errors print a structured line on stderr and
exit 1; usage mistakes exit 2 via argparse.

Token files (train --tokens, score --tokens) hold one sequence per
line. Symbols are tab-separated when the line contains a tab, else
whitespace-separated; symbols containing spaces therefore need tabs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import chaos, crdl, grammar, icmap, store, symbols, vomm
from .service import DEFAULT_PORT, parse_report, smooth_plan, symbolize_route

_DOMAIN_ERRORS = (
    crdl.CrdlError,
    chaos.ChaosError,
    icmap.MapError,
    grammar.GrammarError,
    symbols.SymbolError,
    vomm.VommError,
    store.StoreError,
    OSError,
)


def _print_json(payload) -> None:
    print(json.dumps(payload, sort_keys=True, separators=(",", ":")))


def _emit(args, payload, lines) -> int:
    if args.json:
        _print_json(payload)
    else:
        for line in lines:
            print(line)
    return 0


def _parse_triple(text: str, flag: str) -> chaos.State3:
    parts = text.split(",")
    if len(parts) != 3:
        raise chaos.ChaosError(f"{flag} expects x,y,z, got {text!r}")
    try:
        return chaos.State3(*(float(p) for p in parts))
    except ValueError:
        raise chaos.ChaosError(f"{flag} expects numbers, got {text!r}") from None


def _parse_range(text: str | None, fallback: tuple[float, float], flag: str) -> tuple[float, float]:
    if text is None:
        return fallback
    try:
        if ":" in text:
            lo_text, hi_text = text.split(":", 1)
            lo, hi = float(lo_text), float(hi_text)
        else:
            lo = hi = float(text)
    except ValueError:
        raise icmap.MapError(f"{flag} expects lo:hi, got {text!r}") from None
    if lo > hi:
        raise icmap.MapError(f"{flag} range is empty: {text!r}")
    return lo, hi


def _load_config(args) -> chaos.VariationConfig:
    """Base preset/config file plus any per-flag overrides."""
    if getattr(args, "preset", None) and getattr(args, "config", None):
        raise chaos.ChaosError("give either --preset or --config, not both")
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            cfg = chaos.config_from_dict(json.load(fh))
    else:
        name = getattr(args, "preset", None) or "default"
        try:
            cfg = chaos.PRESETS[name]
        except KeyError:
            raise chaos.ChaosError(f"unknown preset {name!r}") from None
    overrides = {}
    if getattr(args, "ic_v", None):
        overrides["ic_v"] = _parse_triple(args.ic_v, "--ic-v")
    if getattr(args, "skip", None) is not None:
        overrides["skip"] = args.skip
    if getattr(args, "mode", None):
        overrides["nna_mode"] = chaos.NnaMode(args.mode)
    if getattr(args, "plane", None):
        overrides["plane"] = chaos.Plane(args.plane)
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _read_token_sequences(path) -> list[list[str]]:
    sequences = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        sequences.append([p for p in (part.strip() for part in parts) if p])
    return sequences


# --- subcommands -------------------------------------------------------------


def _cmd_parse(args) -> int:
    report = parse_report(args.text)
    lines = [f"frames: {len(report['frames'])}"]
    for frame in report["frames"]:
        for path in frame["paths"]:
            lines.append(f"  {path}")
    if report["merged"] is not None:
        booleans = report["merged"]["booleans"]
        flags = ", ".join(name for name, on in booleans.items() if on) or "none"
        lines.append(f"booleans: {flags}")
    for set_name, symbol in report["symbols"].items():
        lines.append(f"{set_name}: {symbol if symbol is not None else '(no symbol)'}")
    return _emit(args, report, lines)


def _cmd_vary(args) -> int:
    routes = []
    for path in args.inputs:
        route = crdl.load_route(path)
        routes.append(dataclasses.replace(route, id=Path(path).stem))
    cfg = _load_config(args)
    plan = chaos.generate_variation(routes, cfg)
    document = chaos.render_plan(plan, format="json")
    if args.out:
        Path(args.out).write_text(document, encoding="utf-8")
    rendered = chaos.render_plan(plan, format="text")
    if args.json:
        sys.stdout.write(document)
        return 0
    sys.stdout.write(rendered)
    if args.out:
        print(f"plan written to {args.out}")
    return 0


def _cmd_map(args) -> int:
    cfg = _load_config(args)
    center = _parse_triple(args.center, "--center") if args.center else cfg.ic_r
    slice_axis: str | None
    slice_value: float | None
    if args.slice == "none":
        slice_axis, slice_value = None, None
    elif "=" in args.slice:
        axis, _, value = args.slice.partition("=")
        slice_axis = axis.strip()
        try:
            slice_value = float(value)
        except ValueError:
            raise icmap.MapError(f"--slice expects axis=value, got {args.slice!r}") from None
    else:
        slice_axis, slice_value = args.slice, None
    spec = icmap.GridSpec(
        center=center,
        n_per_axis=args.n,
        spacing=args.s,
        slice_axis=slice_axis,
        slice_value=slice_value,
    )
    built = icmap.build_map(spec, cfg, args.moves, workers=args.workers, allow_3d=args.allow_3d)
    icmap.save_map(built, args.out)
    if args.csv:
        Path(args.csv).write_text(icmap.export_csv(built), encoding="utf-8")
    failed = sum(1 for cell in built.cells if cell.failed)
    payload = {
        "out": str(args.out),
        "csv": str(args.csv) if args.csv else None,
        "cells": len(built.cells),
        "failed": failed,
        "moves": built.sequence_length,
    }
    lines = [
        f"{args.n}x{args.n} sweep, {len(built.cells)} cells ({failed} failed), "
        f"{built.sequence_length} moves each",
        f"map written to {args.out}",
    ]
    if args.csv:
        lines.append(f"csv written to {args.csv}")
    return _emit(args, payload, lines)


def _cmd_pick_ic(args) -> int:
    loaded = icmap.load_map(args.map)
    n = float(loaded.sequence_length)
    effect = _parse_range(args.effect, (0.0, n), "--effect")
    change = _parse_range(args.change, (0.0, n), "--change")
    cells = icmap.pick_ic(loaded, effect, change, limit=args.limit)
    payload = {
        "effect": list(effect),
        "change": list(change),
        "candidates": [
            {"ic": [c.ic.x, c.ic.y, c.ic.z], "effect": c.effect, "change": c.change}
            for c in cells
        ],
    }
    if not cells:
        return _emit(args, payload, ["no cells match"])
    lines = [
        f"ic=({c.ic.x:g}, {c.ic.y:g}, {c.ic.z:g})  effect={c.effect}  change={c.change:.3f}"
        for c in cells
    ]
    return _emit(args, payload, lines)


def _cmd_train(args) -> int:
    if bool(args.inputs) == bool(args.tokens):
        raise vomm.VommError("give route files with --in or a token file with --tokens")
    skipped = 0
    symbol_set_name: str | None = None
    if args.tokens:
        sequences = _read_token_sequences(args.tokens)
    else:
        symbol_set = symbols.SymbolSet(args.set)
        symbol_set_name = symbol_set.value
        sequences = []
        for path in args.inputs:
            sequence, missed = symbolize_route(crdl.load_route(path), symbol_set)
            skipped += missed
            if sequence:
                sequences.append(sequence)
    model = vomm.train(
        sequences,
        args.order,
        alphabet=vomm.derive_alphabet(sequences),
        trained_on=args.trained_on,
        symbol_set=symbol_set_name,
    )
    vomm.save_model(model, args.out)
    payload = {
        "out": str(args.out),
        "alphabet": list(model.alphabet),
        "max_order": model.max_order,
        "sequences": len(sequences),
        "symbols": sum(len(s) for s in sequences),
        "skipped_moves": skipped,
    }
    lines = [
        f"trained on {payload['symbols']} symbols in {len(sequences)} sequences"
        + (f" ({skipped} moves skipped)" if skipped else ""),
        f"alphabet ({len(model.alphabet)}): " + ", ".join(model.alphabet),
        f"model written to {args.out}",
    ]
    return _emit(args, payload, lines)


def _cmd_score(args) -> int:
    model = vomm.load_model(args.model)
    sequences = _read_token_sequences(args.tokens)
    if not sequences:
        raise vomm.EmptyCorpus(f"no sequences in {args.tokens}")
    results = [vomm.likelihood(model, seq) for seq in sequences]
    total = sum(r.total_bits for r in results)
    count = sum(len(s) for s in sequences)
    payload = {
        "sequences": [
            {"total_bits": r.total_bits, "per_symbol_bits": r.per_symbol_bits} for r in results
        ],
        "total_bits": total,
        "per_symbol_bits": total / count if count else 0.0,
    }
    lines = [
        f"sequence {i}: {r.total_bits:.3f} bits ({r.per_symbol_bits:.3f}/symbol)"
        for i, r in enumerate(results)
    ]
    lines.append(f"total: {total:.3f} bits ({payload['per_symbol_bits']:.3f}/symbol)")
    return _emit(args, payload, lines)


def _cmd_smooth(args) -> int:
    with open(args.plan, encoding="utf-8") as fh:
        plan = chaos.plan_from_dict(json.load(fh))
    model = vomm.load_model(args.model)
    symbol_set = symbols.SymbolSet(model.symbol_set) if model.symbol_set else symbols.SymbolSet.S1
    suggestions = smooth_plan(plan, model, symbol_set, args.jmax)
    payload = {"symbol_set": symbol_set.value, "j_max": args.jmax, "suggestions": suggestions}
    if not suggestions:
        return _emit(args, payload, ["plan has no gaps to smooth"])
    lines = []
    for s in suggestions:
        what = " then ".join(s["insertion"]) if s["insertion"] else "nothing"
        lines.append(
            f"move {s['position'] + 1}: insert {what}"
            f"  ({s['bits']:.3f} bits, {s['candidates']} candidates)"
        )
    return _emit(args, payload, lines)


def _cmd_serve(args) -> int:
    from . import service

    service.run(
        host=args.host,
        port=args.port,
        store_dir=args.store,
        map_workers=args.map_workers,
    )
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="betamix", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = add("parse", _cmd_parse, "parse one move description")
    p.add_argument("text", help="free-form move description")

    p = add("vary", _cmd_vary, "generate a chaotic variation of one or more routes")
    p.add_argument("--in", dest="inputs", action="append", required=True, metavar="ROUTE.crdl")
    p.add_argument("--preset", help="named preset (default, more variation)")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--ic-v", dest="ic_v", help="variation IC override x,y,z")
    p.add_argument("--skip", type=int, help="transient steps to drop from both trajectories")
    p.add_argument("--mode", choices=[m.value for m in chaos.NnaMode])
    p.add_argument("--plane", choices=[pl.value for pl in chaos.Plane])
    p.add_argument("--out", help="write the plan JSON here")

    p = add("map", _cmd_map, "sweep a grid of variation ICs and record effect/change")
    p.add_argument("--n", type=int, default=50, help="cells per axis")
    p.add_argument("--s", type=float, default=0.1, help="grid spacing")
    p.add_argument("--center", help="grid center x,y,z (default: the reference IC)")
    p.add_argument("--slice", default="z", help="axis or axis=value to pin; 'none' for full 3D")
    p.add_argument("--moves", type=int, default=30, help="sequence length per cell")
    p.add_argument("--preset", help="named preset (default, more variation)")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--allow-3d", action="store_true", dest="allow_3d")
    p.add_argument("--out", required=True, help="write the map JSON here")
    p.add_argument("--csv", help="also export cells as CSV")

    p = add("pick-ic", _cmd_pick_ic, "query a map for ICs in an effect/change range")
    p.add_argument("--map", required=True, help="map JSON file")
    p.add_argument("--effect", help="lo:hi (changed-move count)")
    p.add_argument("--change", help="lo:hi (mean displacement)")
    p.add_argument("--limit", type=int, default=10)

    p = add("train", _cmd_train, "train a style model from routes or token sequences")
    p.add_argument("--in", dest="inputs", action="append", metavar="ROUTE.crdl")
    p.add_argument("--tokens", help="token file: one sequence per line")
    p.add_argument("--set", default="s1", choices=[s.value for s in symbols.SymbolSet])
    p.add_argument("--order", type=int, default=vomm.DEFAULT_ORDER, help="max context length")
    p.add_argument("--trained-on", dest="trained_on", default="all")
    p.add_argument("--out", required=True, help="write the model JSON here")

    p = add("score", _cmd_score, "bits of token sequences under a model")
    p.add_argument("--model", required=True)
    p.add_argument("--tokens", required=True)

    p = add("smooth", _cmd_smooth, "suggest insertions for the gaps in a plan")
    p.add_argument("--plan", required=True, help="plan JSON file")
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--jmax", type=int, default=2, help="max insertion length (1 or 2)")

    p = add("serve", _cmd_serve, "run the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=int(os.environ.get("BETAMIX_PORT", DEFAULT_PORT)))
    p.add_argument("--store", default=os.environ.get("BETAMIX_STORE"))
    p.add_argument("--map-workers", dest="map_workers", type=int, default=2)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _DOMAIN_ERRORS as exc:
        body = {"code": type(exc).__name__, "message": str(exc)}
        if getattr(args, "json", False):
            print(json.dumps(body, sort_keys=True, separators=(",", ":")), file=sys.stderr)
        else:
            print(f"error: {body['code']}: {body['message']}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
