"""Train a style model on a route and use it to repair a rough variation.

The directional x-axis assignment rule is allowed to give up on a move
when no reference point qualifies; the plan then carries an explicit
gap. A variable-order model trained on the original route can score
every short insertion and either fill the gap or say that leaving it
open is cheapest.

Run from anywhere: python3 demos/04_style_model_smoothing.py
"""

from betamix import chaos, crdl, symbols, vomm
from betamix.service import smooth_plan, symbolize_route

texts = ["jug", "crimp", "sloper", "jug", "crimp", "sloper", "jug"]
route = crdl.Route(
    header="ladder circuit",
    moves=tuple(
        crdl.RawMove(hand=crdl.Hand.LEFT if i % 2 == 0 else crdl.Hand.RIGHT, text=t)
        for i, t in enumerate(texts)
    ),
    id="ladder",
)

# --- the model: what does this climber do next? ---
sequence, skipped = symbolize_route(route, symbols.SymbolSet.S1)
print("route as s1 symbols:", " -> ".join(sequence), f"({skipped} moves skipped)")

# One route is a small corpus, so the probabilities stay soft; the code
# 0 symbol is reserved for the rarest entry because short histories are
# zero-padded and would otherwise shadow it.
model = vomm.train([sequence], max_order=2, alphabet=["crimp", "jug", "sloper"])

for context in (["jug"], ["jug", "crimp"]):
    dist = vomm.predict(model, context)
    ranked = ", ".join(f"{s} {p:.2f}" for s, p in sorted(dist.items(), key=lambda kv: -kv[1]))
    print(f"after {' '.join(context):<11} -> {ranked}")
print("greedy continuation of 'jug':", " -> ".join(vomm.forward_simulate(model, ["jug"], 5)))
print("sampled (seed 7):            ", " -> ".join(
    vomm.forward_simulate(model, ["jug"], 5, mode="sample", seed=7)))

in_style = vomm.likelihood(model, ["jug", "crimp", "sloper", "jug"])
off_style = vomm.likelihood(model, ["sloper", "sloper", "jug", "crimp"])
print(f"bits/symbol, in-style {in_style.per_symbol_bits:.2f}"
      f" vs off-style {off_style.per_symbol_bits:.2f}")
print()

# --- a variation with real gaps ---
cfg = chaos.VariationConfig(
    ic_v=chaos.State3(-15.8, -9.0, 52.0),
    nna_mode=chaos.NnaMode.DABBY_X,
    dabby_rule="le",
)
plan = chaos.generate_variation([route], cfg)
print(chaos.render_plan(plan))

# --- smoothing: one suggestion per gap ---
for s in smooth_plan(plan, model, symbols.SymbolSet.S1, j_max=2):
    where = f"gap at move {s['position'] + 1}"
    if not s["insertion"]:
        print(f"{where}: leave it open ({s['candidates']} candidates scored)")
        continue
    filled = ", ".join(f"{m['hand']} {m['text']}" for m in s["moves"])
    print(f"{where}: insert {filled}"
          f"  ({s['bits']:.2f} bits over {s['candidates']} candidates)")
