"""Parse free-form move descriptions into frames and symbols.

Setters write whatever they write; the grammar recovers the structured
part of each line and skips the rest. Each parse below shows the frame
paths, the merged hybrid label, the quality booleans, and the move's
symbol in all four alphabets (s1 bare hold type .. s4 everything).

Run from anywhere: python3 demos/03_parse_descriptions.py
"""

import warnings
from importlib import resources

from betamix import grammar, symbols

LINES = [
    "moving right to a right angle crimp rail",
    "bicycle on start and foot chip then match on crimp",
    "Now move out left 5 feet to huge pinch which looks worse than it is",
    "cross topostive jug medium to large",
    "dyno to the big slopey sloper",
    "crimp-jug",
    "not big jug",
    "walk the dog",
]

for text in LINES:
    print(f"--- {text!r}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        frames = grammar.parse_move(text)
        if frames:
            for frame in frames:
                span = " ".join(grammar.tokenize(text)[i] for i in frame.consumed)
                for path in frame.paths():
                    print(f"    {path}")
                print(f"    consumed: {span!r}")
            merged = grammar.merge_parses(frames)
            booleans = symbols.quality_booleans(merged)
            flags = ", ".join(n for n, on in zip(booleans._fields, booleans) if on) or "none"
            print(f"    label: {merged.hybrid_label}   booleans: {flags}")
            rendered = []
            for symbol_set in symbols.SymbolSet:
                got = symbols.symbolize_text(text, symbol_set)
                rendered.append(f"{symbol_set.value}={got.text if got else '-'}")
            print("    " + "  ".join(rendered))
    if not frames:
        print("    no parse: nothing here is a climbing move")
    for message in sorted({str(w.message) for w in caught}):
        print(f"    (note: {message})")
    print()

# Coverage over the bundled fixture corpus of setter descriptions.
corpus = (resources.files("betamix") / "data" / "descriptions.txt").read_text(encoding="utf-8")
lines = [line for line in corpus.splitlines() if line.strip()]
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    parsed = sum(1 for line in lines if grammar.parse_move(line))
print(f"bundled corpus: {parsed}/{len(lines)} lines parse ({parsed / len(lines):.1%})")
