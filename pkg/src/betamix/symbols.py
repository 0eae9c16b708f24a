"""Symbol extraction: reduce merged move frames to model alphabet symbols.

Four symbol sets trade specificity against alphabet size. Set 1 keeps
only the hold types ("sloper"; hybrid holds join up: "crimp-rail").
Set 2 adds the parsed size/shape descriptors after each type
("edge-small-sloping"). Sets 3 and 4 append three quality booleans to
sets 1 and 2 respectively, rendered as parenthesized suffixes in the
fixed order (cross), (big move), (good hold). A move that is a match
maps to the reserved symbol "match" in every set.

Finer sets project onto coarser ones by dropping components, and the
projection agrees with extracting at the coarser set directly, so
alphabet sizes are monotone along S1 <= {S2, S3} <= S4.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple

from .grammar import Grammar, MoveFrame, merge_parses, parse_move

MATCH_SYMBOL = "match"


class SymbolError(ValueError):
    pass


class NoHold(SymbolError):
    """The frame has no hold and is not a match; nothing to symbolize."""


class NotCoarser(SymbolError):
    pass


class SymbolSet(str, Enum):
    S1 = "s1"  # hold types
    S2 = "s2"  # hold types with descriptors
    S3 = "s3"  # hold types with quality booleans
    S4 = "s4"  # hold types with descriptors and quality booleans

    @property
    def with_descriptors(self) -> bool:
        return self in (SymbolSet.S2, SymbolSet.S4)

    @property
    def with_booleans(self) -> bool:
        return self in (SymbolSet.S3, SymbolSet.S4)


# legal strict coarsenings
_PROJECTIONS = {
    SymbolSet.S4: {SymbolSet.S1, SymbolSet.S2, SymbolSet.S3},
    SymbolSet.S3: {SymbolSet.S1},
    SymbolSet.S2: {SymbolSet.S1},
    SymbolSet.S1: set(),
}


class QualityBooleans(NamedTuple):
    is_cross: bool
    is_good: bool
    is_big: bool


def quality_booleans(frame: MoveFrame) -> QualityBooleans:
    """The three difficulty booleans of a merged frame.

    is_cross: a cross action matched. is_good: positive descriptors
    (big sizes, good shapes) strictly outnumber negative ones. is_big:
    the action verb has a big size modifier or is itself a big verb.
    """
    is_cross = bool(frame.action and frame.action.is_cross)
    positives = sum(1 for h in frame.holds if h.size == "big") + sum(
        1 for h in frame.holds if h.shape == "good"
    )
    negatives = sum(1 for h in frame.holds if h.size == "small") + sum(
        1 for h in frame.holds if h.shape == "bad"
    )
    is_big = bool(frame.action and (frame.action.size == "big" or frame.action.verb_class == "big"))
    return QualityBooleans(is_cross=is_cross, is_good=positives > negatives, is_big=is_big)


def _component(text: str) -> str:
    return text.replace(" ", "-")


@dataclass(frozen=True)
class MoveSymbol:
    """A canonical symbol: hold structure plus quality features.

    `text` is the stable cross-module key; the structured fields exist
    so finer symbols can project onto coarser sets.
    """

    set: SymbolSet
    holds: tuple[tuple[str, tuple[str, ...]], ...]  # (type, descriptors) pairs
    is_match: bool
    features: QualityBooleans

    @property
    def text(self) -> str:
        if self.is_match:
            return MATCH_SYMBOL
        parts: list[str] = []
        for type_text, descriptors in self.holds:
            parts.append(_component(type_text))
            if self.set.with_descriptors:
                parts.extend(_component(d) for d in descriptors)
        if self.set.with_booleans:
            if self.features.is_cross:
                parts.append("(cross)")
            if self.features.is_big:
                parts.append("(big move)")
            if self.features.is_good:
                parts.append("(good hold)")
        return "-".join(parts)

    def __str__(self) -> str:
        return self.text


def extract_symbol(frame: MoveFrame, symbol_set: SymbolSet) -> MoveSymbol:
    """Reduce a merged frame to its symbol in the given set.

    Raises NoHold for frames with an action but neither hold nor match.
    """
    features = quality_booleans(frame)
    if frame.is_match:
        return MoveSymbol(set=symbol_set, holds=(), is_match=True, features=features)
    holds = tuple(
        (hold.type_text, hold.descriptors) for hold in frame.holds if hold.type_text
    )
    if not holds:
        raise NoHold("frame has no hold type and is not a match")
    return MoveSymbol(set=symbol_set, holds=holds, is_match=False, features=features)


def symbolize_text(
    text: str, symbol_set: SymbolSet, gram: Grammar | None = None
) -> MoveSymbol | None:
    """Parse free text and extract its symbol; None if nothing usable."""
    frames = parse_move(text, gram)
    if not frames:
        return None
    try:
        return extract_symbol(merge_parses(frames), symbol_set)
    except NoHold:
        return None


def project(symbol: MoveSymbol, coarser: SymbolSet) -> MoveSymbol:
    """Reinterpret a finer symbol in a strictly coarser set."""
    if coarser not in _PROJECTIONS[symbol.set]:
        raise NotCoarser(f"{symbol.set.value} does not project onto {coarser.value}")
    return MoveSymbol(
        set=coarser, holds=symbol.holds, is_match=symbol.is_match, features=symbol.features
    )


def alphabet(
    corpus: Iterable[MoveFrame], symbol_set: SymbolSet
) -> list[tuple[MoveSymbol, int]]:
    """Distinct symbols with counts, sorted by count desc then text.

    Frames that cannot be symbolized (no hold, no match) are skipped;
    the alphabet reflects the symbolizable part of the corpus.
    """
    counts: dict[str, tuple[MoveSymbol, int]] = {}
    total = 0
    for frame in corpus:
        try:
            symbol = extract_symbol(frame, symbol_set)
        except NoHold:
            continue
        total += 1
        prev = counts.get(symbol.text)
        counts[symbol.text] = (symbol, 1 if prev is None else prev[1] + 1)
    if total == 0:
        raise SymbolError("no symbolizable frames in corpus")
    return sorted(counts.values(), key=lambda pair: (-pair[1], pair[0].text))


def alphabet_csv(entries: list[tuple[MoveSymbol, int]]) -> str:
    """Alphabet as CSV with columns symbol, set, count."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["symbol", "set", "count"])
    for symbol, count in entries:
        writer.writerow([symbol.text, symbol.set.value, count])
    return buffer.getvalue()
