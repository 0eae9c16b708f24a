"""Sweep variation initial conditions and read the effect landscape.

Every grid cell runs the same reference trajectory against a slightly
different variation trajectory and records how many of n moves would be
reassigned (effect) and how far they travel on average (change). The
landscape is fractal-ish: tiny IC nudges flip between "nothing happens"
and "everything happens", which is exactly what makes it worth mapping
before committing to a variation.

Run from anywhere: python3 demos/02_initial_condition_landscape.py
"""

import dataclasses
import tempfile
from importlib import resources
from pathlib import Path

from betamix import chaos, crdl, icmap

MOVES = 9  # match the route below so cell metrics transfer exactly
SHADES = " .:-=+*#%@"

doc = (resources.files("betamix") / "data" / "problem13.crdl").read_text(encoding="utf-8")
route = dataclasses.replace(crdl.parse_crdl(doc), id="problem13")
assert len(route.moves) == MOVES

spec = icmap.GridSpec(
    center=chaos.IC_V_DEFAULT, n_per_axis=25, spacing=0.1, slice_axis="z", slice_value=52.0
)
cfg = chaos.VariationConfig()
built = icmap.build_map(spec, cfg, MOVES, workers=2)

print(f"{spec.n_per_axis}x{spec.n_per_axis} cells around {tuple(spec.center)}, z pinned at 52")
print(f"effect shading, 0 -> {MOVES}:  '{SHADES}'")
for row_start in range(0, len(built.cells), spec.n_per_axis):
    row = built.cells[row_start:row_start + spec.n_per_axis]
    line = "".join(
        "?" if c.failed else SHADES[min(c.effect * len(SHADES) // (MOVES + 1), len(SHADES) - 1)]
        for c in row
    )
    print("   " + line)
print()

out = Path(tempfile.mkdtemp(prefix="betamix-demo-"))
icmap.save_map(built, out / "landscape.json")
(out / "landscape.csv").write_text(icmap.export_csv(built), encoding="utf-8")
print(f"saved map + csv under {out}")
reloaded = icmap.load_map(out / "landscape.json")
assert icmap.map_to_dict(reloaded) == icmap.map_to_dict(built)
print()

# Pick cells in a mild band: some moves change, most of the line survives.
band = icmap.pick_ic(reloaded, (2.0, 5.0), (0.0, float(MOVES)), limit=3)
print("candidates with 2..5 changed moves:")
for cell in band:
    picked = dataclasses.replace(cfg, ic_v=cell.ic)
    plan = chaos.generate_variation([route], picked)
    print(
        f"  ic=({cell.ic.x:g}, {cell.ic.y:g}, {cell.ic.z:g})"
        f"  predicted effect {cell.effect}, realized changed {plan.summary.changed}"
    )

chosen = band[0]
plan = chaos.generate_variation([route], dataclasses.replace(cfg, ic_v=chosen.ic))
print()
print(chaos.render_plan(plan))
