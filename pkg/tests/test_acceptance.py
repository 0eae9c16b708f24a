"""End-to-end checks for the workbench's core guarantees.

Each test exercises one guarantee at its stated tolerance and asserts a
wall-clock budget, so a single verbose run of this file gives one line
per guarantee.
"""

import dataclasses
import json
import math
import random
import time
from pathlib import Path

from betamix import chaos, cli, crdl, grammar, icmap, store, symbols, vomm
from conftest import DATA, GOLDEN
import oracles

SEED = 20260819


def test_identity_ic_reproduces_the_input_exactly():
    words = ["jug", "crimp", "sloper", "pinch", "gaston", "sidepull", "rail", "edge",
             "slopey ledge", "incut crimp", "big jug", "small pinch"]
    rng = random.Random(SEED)
    started = time.monotonic()
    for case in range(50):
        hand = rng.choice(list(crdl.Hand))
        moves = []
        for _ in range(rng.randint(1, 12)):
            moves.append(crdl.RawMove(hand=hand, text=rng.choice(words)))
            hand = hand.opposite
        route = crdl.Route(header=f"case {case}", moves=tuple(moves))
        preset = chaos.PRESETS[rng.choice(sorted(chaos.PRESETS))]
        cfg = dataclasses.replace(preset, ic_v=preset.ic_r)

        plan = chaos.generate_variation([route], cfg)

        assert plan.summary.changed == 0
        assert [m.text for m in plan.moves] == [m.text for m in route.moves]
        assert [m.hand for m in plan.moves] == [m.hand for m in route.moves]
    assert time.monotonic() - started < 1.0


def test_integrator_converges_at_fourth_order():
    ic = chaos.State3(-13.0, -12.0, 52.0)
    started = time.monotonic()
    reference = oracles.reference_endpoint(ic, 0.99)
    errors = []
    for h, steps in ((0.015, 66), (0.0075, 132), (0.00375, 264)):
        endpoint = chaos.integrate(ic, steps + 1, chaos.VariationConfig(h=h)).points[-1]
        errors.append(math.dist(endpoint, reference))
    for halving in range(2):
        order = math.log2(errors[halving] / errors[halving + 1])
        assert 3.7 <= order <= 4.3, (halving, order)
    assert time.monotonic() - started < 5.0


def test_neighbor_assignment_matches_exhaustive_scan():
    rng = random.Random(SEED)
    modes = list(chaos.NnaMode)
    planes = list(chaos.Plane)
    started = time.monotonic()
    for _ in range(1000):
        points = [
            chaos.State3(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50))
            for _ in range(rng.randint(1, 200))
        ]
        target = chaos.State3(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50))
        mode = rng.choice(modes)
        plane = rng.choice(planes)
        rule = rng.choice(["ge", "le"])

        got = chaos.nearest_neighbor(target, points, mode, plane, rule)
        want = oracles.nna_scan(target, points, mode.value, plane.value, rule)
        assert got == want
    assert time.monotonic() - started < 10.0


def test_landscape_spans_no_change_to_every_move_changed():
    spec = icmap.GridSpec(center=chaos.IC_V_DEFAULT, n_per_axis=50, spacing=0.1,
                          slice_axis="z", slice_value=52.0)
    cfg = chaos.VariationConfig()
    moves = 30
    started = time.monotonic()
    serial = icmap.build_map(spec, cfg, moves, workers=1)
    assert time.monotonic() - started < 120.0

    effects = [c.effect for c in serial.cells if not c.failed and c.effect is not None]
    assert len(serial.cells) == 2500
    assert any(e == 0 for e in effects)
    assert any(e >= 0.8 * moves for e in effects)

    parallel = icmap.build_map(spec, cfg, moves, workers=4)
    assert icmap.map_to_dict(parallel) == icmap.map_to_dict(serial)


def test_grammar_covers_the_description_corpus():
    lines = [
        line
        for line in (DATA / "descriptions.txt").read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    assert len(lines) >= 100
    started = time.monotonic()
    parsed = sum(1 for line in lines if grammar.parse_move(line))
    assert parsed / len(lines) >= 0.95

    entries = json.loads((GOLDEN / "messy_examples.json").read_text(encoding="utf-8"))
    assert len(entries) == 7
    for entry in entries:
        frames = grammar.parse_move(entry["text"])
        assert [list(f.paths()) for f in frames] == entry["frames"], entry["text"]
        merged = grammar.merge_parses(frames)
        assert merged.hybrid_label == entry["hybrid_label"], entry["text"]
    assert entries[0]["hybrid_label"] == "right-right-angle-crimp-rail"
    assert time.monotonic() - started < 5.0


def test_symbol_projection_commutes_with_direct_extraction():
    verbs = ["", "move to the", "cross to the", "throw to the", "dyno to the",
             "reach the", "match on the"]
    sizes = ["", "big", "small", "tiny", "huge", "medium"]
    shapes = ["", "slopey", "positive", "incut", "rounded"]
    holds = ["jug", "crimp", "sloper", "pinch", "rail", "edge", "sidepull",
             "gaston", "horn", "ledge", "crimp rail"]
    rng = random.Random(SEED)
    started = time.monotonic()
    frames = []
    while len(frames) < 500:
        text = " ".join(
            part
            for part in (rng.choice(verbs), rng.choice(sizes), rng.choice(shapes), rng.choice(holds))
            if part
        )
        parsed = grammar.parse_move(text)
        if parsed:
            frames.append(grammar.merge_parses(parsed))

    refinements = (
        (symbols.SymbolSet.S4, (symbols.SymbolSet.S1, symbols.SymbolSet.S2, symbols.SymbolSet.S3)),
        (symbols.SymbolSet.S3, (symbols.SymbolSet.S1,)),
        (symbols.SymbolSet.S2, (symbols.SymbolSet.S1,)),
    )
    for frame in frames:
        direct = {s: symbols.extract_symbol(frame, s) for s in symbols.SymbolSet}
        for fine, coarser_sets in refinements:
            for coarse in coarser_sets:
                assert symbols.project(direct[fine], coarse).text == direct[coarse].text

    sizes_by_set = {s: len(symbols.alphabet(frames, s)) for s in symbols.SymbolSet}
    assert sizes_by_set[symbols.SymbolSet.S1] <= sizes_by_set[symbols.SymbolSet.S2]
    assert sizes_by_set[symbols.SymbolSet.S2] <= sizes_by_set[symbols.SymbolSet.S4]
    assert sizes_by_set[symbols.SymbolSet.S1] <= sizes_by_set[symbols.SymbolSet.S3]
    assert sizes_by_set[symbols.SymbolSet.S3] <= sizes_by_set[symbols.SymbolSet.S4]
    assert time.monotonic() - started < 5.0


def test_model_recovers_statistics_and_matches_interpolation_oracle():
    started = time.monotonic()

    # (a) first-order chain: predicted rows close to the generating matrix
    alphabet = ["a", "b", "c", "d"]
    matrix = {
        "a": [0.70, 0.10, 0.10, 0.10],
        "b": [0.05, 0.60, 0.25, 0.10],
        "c": [0.20, 0.20, 0.40, 0.20],
        "d": [0.10, 0.30, 0.30, 0.30],
    }
    rng = random.Random(SEED)
    sequence = ["a"]
    for _ in range(9999):
        sequence.append(rng.choices(alphabet, weights=matrix[sequence[-1]])[0])
    chain_model = vomm.train([sequence], 1, alphabet=alphabet)
    for symbol in alphabet:
        predicted = vomm.predict(chain_model, [symbol])
        variation = 0.5 * sum(
            abs(predicted[t] - matrix[symbol][i]) for i, t in enumerate(alphabet)
        )
        assert variation <= 0.05, (symbol, variation)

    # (b) nothing to learn from uniform noise: cost stays near log2(N)
    rng = random.Random(99)
    train_seq = [rng.choice(alphabet) for _ in range(5000)]
    held_out = [rng.choice(alphabet) for _ in range(2000)]
    noise_model = vomm.train([train_seq], 3, alphabet=alphabet)
    bits = vomm.likelihood(noise_model, held_out).per_symbol_bits
    assert abs(bits - math.log2(len(alphabet))) <= 0.1, bits

    # (c) interpolation equals brute force and visits every candidate
    pair_model = vomm.train([["jug", "crimp", "jug"]] * 10, 2, alphabet=["crimp", "jug"])
    trio_model = vomm.train([["jug", "crimp", "sloper"]] * 10, 2,
                            alphabet=["crimp", "jug", "sloper"])
    for model, prefix, suffix in (
        (pair_model, ["jug"], ["jug"]),
        (trio_model, ["jug"], ["sloper"]),
        (trio_model, [], ["crimp"]),
    ):
        got = vomm.interpolate(model, prefix, suffix, 2)
        insertion, bits, candidates = oracles.brute_interpolate(model, prefix, suffix, 2)
        assert got.insertion == insertion
        assert got.bits == bits
        assert got.candidates == candidates
        n = len(model.alphabet)
        assert got.candidates == 1 + n + n * n

    assert time.monotonic() - started < 30.0


def test_variation_and_store_are_deterministic(tmp_path, capsys):
    started = time.monotonic()
    route_path = str(DATA / "problem13.crdl")
    assert cli.main(["vary", "--in", route_path, "--preset", "default", "--json"]) == 0
    first = capsys.readouterr().out
    assert cli.main(["vary", "--in", route_path, "--preset", "default", "--json"]) == 0
    second = capsys.readouterr().out
    assert first == second

    st = store.Store(tmp_path / "store")
    document = (DATA / "problem13.crdl").read_text(encoding="utf-8")
    record = st.put("route", document)
    assert st.get(record.id).payload == document

    route = dataclasses.replace(crdl.parse_crdl(document), id=record.id)
    plan = chaos.generate_variation([route], chaos.PRESETS["default"])
    plan_record = st.put("variation", chaos.plan_to_dict(plan))
    reopened = store.Store(tmp_path / "store")
    round_tripped = chaos.plan_from_dict(reopened.get(plan_record.id).payload)
    assert chaos.render_plan(round_tripped, format="json") == chaos.render_plan(plan, format="json")
    assert reopened.get(record.id).payload == document
    assert time.monotonic() - started < 5.0
