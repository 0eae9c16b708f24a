"""Transcribe a short boulder problem and generate chaotic variations of it.

Run from anywhere: python3 demos/01_transcribe_and_vary.py
"""

import dataclasses

from betamix import chaos, crdl

DOC = """\
traverse wall, left side
set by dana, spring session
grade: V3
- - -
L slopey ledge
R match
R undercling flake
L high crimp
R gaston
L match
L sloper
R crack sidepull
L wide pinch
"""

route = crdl.parse_crdl(DOC)
route = dataclasses.replace(route, id="traverse-left")
print(f"parsed {len(route.moves)} moves, grade {route.grade}")
print("hands:", "".join(m.hand.value for m in route.moves))
print("matches at:", [i + 1 for i, m in enumerate(route.moves) if m.is_match])
print()

assert crdl.parse_crdl(crdl.serialize_crdl(route)) == route  # lossless round trip

# Identical initial conditions pin the variation to the input: nothing moves.
identity = dataclasses.replace(chaos.VariationConfig(), ic_v=chaos.IC_R_DEFAULT)
plan = chaos.generate_variation([route], identity)
print(f"identity run changed {plan.summary.changed} moves (matches are still resolved:")
print(f"  move 2 reads {plan.moves[1].text!r} instead of 'match')")
print()

for name in ("default", "more variation"):
    plan = chaos.generate_variation([route], chaos.PRESETS[name])
    print(f"--- preset {name!r}: {plan.summary.changed} of {plan.summary.total} moves changed")
    print(chaos.render_plan(plan))

# Variations can draw from several routes at once; provenance names the source.
partner = crdl.parse_crdl("warmup\n- - -\nR jug\nL jug\nR incut crimp\n")
partner = dataclasses.replace(partner, id="warmup")
combined = chaos.generate_variation([route, partner], chaos.PRESETS["more variation"])
sources = {m.source_route for m in combined.moves if m.source_route}
print(f"--- two inputs, {combined.summary.total} moves drawn from {sorted(sources)}")
print(chaos.render_plan(combined))
