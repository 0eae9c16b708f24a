import json

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from betamix import chaos, icmap
from betamix.chaos import NnaMode, State3


# --- grid geometry ----------------------------------------------------------


def test_spec_validation():
    with pytest.raises(icmap.MapError):
        icmap.GridSpec(center=State3(0, 0, 0), n_per_axis=0)
    with pytest.raises(icmap.MapError):
        icmap.GridSpec(center=State3(0, 0, 0), spacing=0.0)
    with pytest.raises(icmap.MapError):
        icmap.GridSpec(center=State3(0, 0, 0), slice_axis="w")


def test_slice_grid_offsets_are_centered():
    spec = icmap.GridSpec(center=State3(10.0, 20.0, 30.0), n_per_axis=3, spacing=0.5, slice_axis="z")
    ics = spec.ics()
    assert len(ics) == spec.cell_count() == 9
    # row-major, x outermost; middle cell sits exactly on the center
    assert ics[4] == State3(10.0, 20.0, 30.0)
    assert ics[0] == State3(9.5, 19.5, 30.0)
    assert ics[8] == State3(10.5, 20.5, 30.0)
    assert all(p.z == 30.0 for p in ics)


def test_slice_value_pins_the_sliced_axis():
    spec = icmap.GridSpec(center=State3(1.0, 2.0, 3.0), n_per_axis=2, spacing=0.1, slice_axis="y", slice_value=7.5)
    assert all(p.y == 7.5 for p in spec.ics())
    assert {p.x for p in spec.ics()} == {0.9, 1.0}


def test_full_grid_has_cubed_cells():
    spec = icmap.GridSpec(center=State3(0.0, 0.0, 0.0), n_per_axis=2, spacing=1.0, slice_axis=None)
    ics = spec.ics()
    assert len(ics) == 8 == spec.cell_count()
    assert ics[0] == State3(-1.0, -1.0, -1.0)
    assert ics[-1] == State3(0.0, 0.0, 0.0)


# --- metrics ----------------------------------------------------------------


def test_identity_assignment_scores_zero():
    assert icmap.assignment_metrics([0, 1, 2, 3]) == (0, 0.0)


def test_swap_counts_both_positions():
    effect, change = icmap.assignment_metrics([1, 0, 2])
    assert effect == 2
    assert change == 1.0


def test_gaps_count_toward_effect_but_not_change():
    effect, change = icmap.assignment_metrics([None, 1, 2])
    assert effect == 1
    assert change == 0.0
    effect, change = icmap.assignment_metrics([None, 0, 2])
    assert effect == 2
    assert change == 1.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.one_of(st.none(), st.integers(min_value=0, max_value=30)), max_size=30))
def test_assignment_metrics_match_plain_scan(ks):
    assert icmap.assignment_metrics(ks) == oracles.assignment_metrics_scan(ks)


def test_reference_ic_has_zero_effect():
    cfg = chaos.VariationConfig()
    cell = icmap.effect_change(cfg.ic_r, cfg, 25)
    assert cell.effect == 0 and cell.change == 0.0 and not cell.failed


def test_nearby_ic_has_nonzero_effect():
    cfg = chaos.VariationConfig()
    cell = icmap.effect_change(chaos.IC_V_DEFAULT, cfg, 25)
    assert cell.effect > 0


# --- grid sweeps ------------------------------------------------------------


def test_batch_sweep_matches_scalar_evaluation():
    for cfg in (chaos.VariationConfig(), chaos.VariationConfig(nna_mode=NnaMode.DABBY_X)):
        spec = icmap.GridSpec(center=chaos.IC_R_DEFAULT, n_per_axis=5, spacing=0.3)
        built = icmap.build_map(spec, cfg, 12)
        scalar = [icmap.effect_change(ic, cfg, 12) for ic in spec.ics()]
        assert list(built.cells) == scalar
        assert built.cells[12].effect == 0  # grid center is the reference IC


def test_parallel_build_is_bit_identical_to_serial():
    spec = icmap.GridSpec(center=chaos.IC_R_DEFAULT, n_per_axis=30, spacing=0.1)
    cfg = chaos.VariationConfig()
    serial = icmap.build_map(spec, cfg, 15, workers=1)
    parallel = icmap.build_map(spec, cfg, 15, workers=4)
    assert serial.cells == parallel.cells


def test_full_3d_sweep_requires_explicit_consent():
    spec = icmap.GridSpec(center=chaos.IC_R_DEFAULT, n_per_axis=3, spacing=0.2, slice_axis=None)
    cfg = chaos.VariationConfig()
    with pytest.raises(icmap.MapError):
        icmap.build_map(spec, cfg, 5)
    built = icmap.build_map(spec, cfg, 5, allow_3d=True)
    assert len(built.cells) == 27


def test_sequence_length_must_be_positive():
    spec = icmap.GridSpec(center=chaos.IC_R_DEFAULT, n_per_axis=2, spacing=0.1)
    with pytest.raises(icmap.MapError):
        icmap.build_map(spec, chaos.VariationConfig(), 0)


def test_divergent_cells_recorded_not_raised():
    spec = icmap.GridSpec(center=State3(1e7, 1e7, 1e7), n_per_axis=2, spacing=0.1)
    built = icmap.build_map(spec, chaos.VariationConfig(), 10)
    assert all(cell.failed for cell in built.cells)
    assert built.cells[0].error == "trajectory diverged"
    assert built.cells[0].effect is None and built.cells[0].change is None


# --- picking ----------------------------------------------------------------


def _toy_map(cells):
    spec = icmap.GridSpec(center=State3(0.0, 0.0, 0.0), n_per_axis=2, spacing=1.0)
    padded = list(cells)
    while len(padded) < 4:
        padded.append(icmap.CellMetrics(ic=State3(9, 9, 9), effect=None, change=None, error="x"))
    return icmap.ICMap(spec=spec, sequence_length=5, config=chaos.VariationConfig(), cells=tuple(padded))


def test_pick_filters_to_both_ranges():
    m = _toy_map(
        [
            icmap.CellMetrics(State3(0, 0, 0), effect=0, change=0.0),
            icmap.CellMetrics(State3(1, 0, 0), effect=5, change=2.0),
            icmap.CellMetrics(State3(2, 0, 0), effect=5, change=9.0),
            icmap.CellMetrics(State3(3, 0, 0), effect=20, change=2.0),
        ]
    )
    picked = icmap.pick_ic(m, (4, 6), (0.0, 4.0))
    assert [c.ic for c in picked] == [State3(1, 0, 0)]


def test_pick_orders_by_distance_to_range_midpoint():
    m = _toy_map(
        [
            icmap.CellMetrics(State3(0, 0, 0), effect=10, change=5.0),
            icmap.CellMetrics(State3(1, 0, 0), effect=12, change=5.0),
            icmap.CellMetrics(State3(2, 0, 0), effect=11, change=5.0),
            icmap.CellMetrics(State3(3, 0, 0), effect=8, change=5.0),
        ]
    )
    # midpoints are (10, 5); distances 0, 2, 1, 2 with the tie broken by grid order
    picked = icmap.pick_ic(m, (0, 20), (0.0, 10.0))
    assert [c.ic.x for c in picked] == [0.0, 2.0, 1.0, 3.0]


def test_pick_ties_resolve_in_grid_order():
    m = _toy_map(
        [
            icmap.CellMetrics(State3(0, 0, 0), effect=12, change=5.0),
            icmap.CellMetrics(State3(1, 0, 0), effect=8, change=5.0),
        ]
    )
    picked = icmap.pick_ic(m, (0, 20), (0.0, 10.0))
    assert [c.ic.x for c in picked] == [0.0, 1.0]


def test_pick_respects_limit_and_skips_failed_cells():
    m = _toy_map([icmap.CellMetrics(State3(i, 0, 0), effect=i, change=0.0) for i in range(4)])
    picked = icmap.pick_ic(m, (0, 99), (0.0, 99.0), limit=2)
    assert len(picked) == 2
    everything = icmap.pick_ic(m, (-99, 99), (-99.0, 99.0), limit=100)
    assert len(everything) == 4  # the padded failed cells never appear


# --- persistence ------------------------------------------------------------


def _small_map(**cfg_kwargs):
    spec = icmap.GridSpec(center=chaos.IC_R_DEFAULT, n_per_axis=3, spacing=0.2)
    return icmap.build_map(spec, chaos.VariationConfig(**cfg_kwargs), 8)


def test_save_load_round_trip(tmp_path):
    built = _small_map()
    path = tmp_path / "landscape.json"
    icmap.save_map(built, path)
    assert icmap.load_map(path) == built


def test_candidate_ic_field_is_not_persisted(tmp_path):
    built = _small_map(ic_v=State3(5.0, 5.0, 5.0))
    path = tmp_path / "landscape.json"
    icmap.save_map(built, path)
    loaded = icmap.load_map(path)
    assert loaded.config.ic_v == chaos.IC_V_DEFAULT
    assert loaded.cells == built.cells


def test_failed_cells_survive_round_trip(tmp_path):
    spec = icmap.GridSpec(center=State3(1e7, 1e7, 1e7), n_per_axis=2, spacing=0.1)
    built = icmap.build_map(spec, chaos.VariationConfig(), 5)
    path = tmp_path / "landscape.json"
    icmap.save_map(built, path)
    assert icmap.load_map(path) == built


def test_version_and_format_checks():
    good = icmap.map_to_dict(_small_map())
    with pytest.raises(icmap.VersionMismatch):
        icmap.map_from_dict({**good, "version": 99})
    with pytest.raises(icmap.CorruptFile):
        icmap.map_from_dict({**good, "format": "something.else"})


def test_corrupt_documents_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{ not json", encoding="utf-8")
    with pytest.raises(icmap.CorruptFile):
        icmap.load_map(path)
    path.write_text("[1,2,3]", encoding="utf-8")
    with pytest.raises(icmap.CorruptFile):
        icmap.load_map(path)

    good = icmap.map_to_dict(_small_map())
    with pytest.raises(icmap.CorruptFile):
        icmap.map_from_dict({**good, "cells": good["cells"][:-1]})
    mangled = {**good, "cells": [row[:3] for row in good["cells"]]}
    with pytest.raises(icmap.CorruptFile):
        icmap.map_from_dict(mangled)


def test_csv_export_shape():
    built = _small_map()
    lines = icmap.export_csv(built).splitlines()
    assert lines[0] == "ic_x,ic_y,ic_z,effect,change"
    assert len(lines) == 1 + len(built.cells)
    first = lines[1].split(",")
    assert State3(float(first[0]), float(first[1]), float(first[2])) == built.cells[0].ic
    assert int(first[3]) == built.cells[0].effect


def test_csv_leaves_failed_metrics_empty():
    spec = icmap.GridSpec(center=State3(1e7, 1e7, 1e7), n_per_axis=2, spacing=0.1)
    built = icmap.build_map(spec, chaos.VariationConfig(), 5)
    row = icmap.export_csv(built).splitlines()[1]
    assert row.endswith(",,")
