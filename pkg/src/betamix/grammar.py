"""Semantic frame parsing for free-form move descriptions.

The grammar is a recursive transition network written in a small text
format: "[Name]" opens a rule, each "( ... )" line is one production
(terminal words and/or [Nonterminal] references), ";" closes the rule.
Parsing is robust and partial: the input is lowercased and tokenized,
and the parser extracts maximal non-overlapping [Move] matches left to
right, skipping tokens nothing consumes. Within a production, later
elements may skip ahead over unmatched tokens ("move to the jug" reads
as a verb plus a hold even though nothing consumes "to the"), which is
what makes noisy human descriptions parseable at all.

A description line usually yields one frame, but several frames per
line are normal ("...crimp rail" produces a second [Move] for "rail");
merge_parses folds them into a single MoveFrame with a hybrid hold
list.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Union

START_SYMBOL = "Move"
GRAMMAR_EXTENSION = ".gra"

# quoted-printable style transcription junk sometimes found in grammar dumps
_ARTIFACT_RE = re.compile(r"^=\d+$")
_RULE_HEAD_RE = re.compile(r"^\[([A-Za-z][A-Za-z0-9_]*)\]$")
_STRIP_CHARS = ".,!?;:()[]{}<>\"'`“”‘’"


class GrammarError(ValueError):
    pass


class GrammarSyntaxError(GrammarError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class UndefinedNonterminal(GrammarError):
    def __init__(self, name: str):
        super().__init__(f"reference to undefined nonterminal [{name}]")
        self.name = name


class DuplicateNonterminal(GrammarError):
    pass


class LeftRecursion(GrammarError):
    pass


class EmptyParse(GrammarError):
    """merge_parses was handed an empty frame list."""


@dataclass(frozen=True)
class TerminalSeq:
    """A terminal: one or more words matched as contiguous tokens."""

    words: tuple[str, ...]


@dataclass(frozen=True)
class NonterminalRef:
    name: str


Element = Union[TerminalSeq, NonterminalRef]
Production = tuple[Element, ...]


@dataclass(frozen=True)
class Grammar:
    rules: dict[str, tuple[Production, ...]]
    start: str = START_SYMBOL

    @property
    def vocabulary(self) -> frozenset[str]:
        """Every word that appears in any terminal."""
        return self._vocab()

    def _vocab(self) -> frozenset[str]:
        words = set()
        for productions in self.rules.values():
            for prod in productions:
                for el in prod:
                    if isinstance(el, TerminalSeq):
                        words.update(el.words)
        return frozenset(words)


def load_grammar(text: str, start: str = START_SYMBOL) -> Grammar:
    """Parse grammar text; validates references and recursion shape.

    Raises GrammarSyntaxError, DuplicateNonterminal, UndefinedNonterminal,
    or LeftRecursion. Lines matching the "=NN" transcription artifact are
    skipped with a warning.
    """
    rules: dict[str, list[Production]] = {}
    current: str | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if _ARTIFACT_RE.match(line):
            warnings.warn(f"skipping transcription artifact {line!r} at line {line_no}")
            continue
        head = _RULE_HEAD_RE.match(line)
        if head:
            if current is not None:
                raise GrammarSyntaxError(f"rule [{current}] not closed before new rule", line_no)
            name = head.group(1)
            if name in rules:
                raise DuplicateNonterminal(f"nonterminal [{name}] defined twice")
            rules[name] = []
            current = name
            continue
        if line == ";":
            if current is None:
                raise GrammarSyntaxError("';' outside a rule", line_no)
            if not rules[current]:
                raise GrammarSyntaxError(f"rule [{current}] has no productions", line_no)
            current = None
            continue
        if line.startswith("(") and line.endswith(")"):
            if current is None:
                raise GrammarSyntaxError("production outside a rule", line_no)
            rules[current].append(_parse_production(line[1:-1], line_no))
            continue
        raise GrammarSyntaxError(f"unrecognized line {line!r}", line_no)
    if current is not None:
        raise GrammarSyntaxError(f"rule [{current}] not closed at end of input", len(text.splitlines()))
    if not rules:
        raise GrammarError("grammar has no rules")

    grammar = Grammar(rules={name: tuple(prods) for name, prods in rules.items()}, start=start)
    _validate(grammar)
    return grammar


def _parse_production(body: str, line_no: int) -> Production:
    elements: list[Element] = []
    pending_words: list[str] = []

    def flush():
        if pending_words:
            elements.append(TerminalSeq(tuple(pending_words)))
            pending_words.clear()

    for token in body.split():
        ref = _RULE_HEAD_RE.match(token)
        if ref:
            flush()
            elements.append(NonterminalRef(ref.group(1)))
        elif "[" in token or "]" in token:
            raise GrammarSyntaxError(f"malformed element {token!r}", line_no)
        else:
            pending_words.append(token.lower())
    flush()
    if not elements:
        raise GrammarSyntaxError("empty production", line_no)
    return tuple(elements)


def _validate(grammar: Grammar) -> None:
    for name, productions in grammar.rules.items():
        for prod in productions:
            for el in prod:
                if isinstance(el, NonterminalRef) and el.name not in grammar.rules:
                    raise UndefinedNonterminal(el.name)
    if grammar.start not in grammar.rules:
        raise UndefinedNonterminal(grammar.start)

    # a cycle through first elements would let the matcher recurse forever
    first_edges: dict[str, set[str]] = {}
    for name, productions in grammar.rules.items():
        first_edges[name] = {
            prod[0].name for prod in productions if isinstance(prod[0], NonterminalRef)
        }
    state: dict[str, int] = {}

    def visit(node: str, trail: list[str]):
        state[node] = 1
        for nxt in first_edges[node]:
            if state.get(nxt) == 1:
                cycle = " -> ".join(trail + [node, nxt])
                raise LeftRecursion(f"left-recursive cycle: {cycle}")
            if state.get(nxt, 0) == 0:
                visit(nxt, trail + [node])
        state[node] = 2

    for name in grammar.rules:
        if state.get(name, 0) == 0:
            visit(name, [])


@lru_cache(maxsize=1)
def default_grammar_text() -> str:
    return resources.files("betamix").joinpath("data/climbing.gra").read_text(encoding="utf-8")


@lru_cache(maxsize=1)
def load_default_grammar() -> Grammar:
    """The bundled climbing-move grammar."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # the bundled file contains a known artifact line
        return load_grammar(default_grammar_text())


# --- tokenization ----------------------------------------------------------


def tokenize(text: str, vocabulary: frozenset[str] = frozenset()) -> list[str]:
    """Lowercase and split; punctuation is stripped from word edges.

    Hyphenated words stay whole when the grammar knows them, otherwise
    they split into their parts ("crimp-jug" -> "crimp", "jug").
    """
    out: list[str] = []
    for raw in text.lower().split():
        word = raw.strip(_STRIP_CHARS)
        if not word:
            continue
        if "-" in word and word not in vocabulary:
            for part in word.split("-"):
                part = part.strip(_STRIP_CHARS)
                if part:
                    out.append(part)
        else:
            out.append(word)
    return out


# --- matching --------------------------------------------------------------


@dataclass(frozen=True)
class TerminalMatch:
    text: str
    positions: tuple[int, ...]


@dataclass(frozen=True)
class ParseNode:
    name: str
    children: tuple["ParseNode | TerminalMatch", ...]


@dataclass(frozen=True)
class FrameParse:
    """One [Move] match: its parse tree and the token positions it consumed."""

    tree: ParseNode
    consumed: tuple[int, ...]
    tokens: tuple[str, ...]

    @property
    def start(self) -> int:
        return self.consumed[0]

    @property
    def end(self) -> int:
        return self.consumed[-1] + 1

    def paths(self) -> tuple[str, ...]:
        """One dotted path per matched terminal, root to surface text."""
        found: list[str] = []

        def walk(node: ParseNode, prefix: str):
            label = f"{prefix}[{node.name}]"
            for child in node.children:
                if isinstance(child, TerminalMatch):
                    found.append(f"{label}.{child.text}")
                else:
                    walk(child, label + ".")

        walk(self.tree, "")
        return tuple(found)


class _Matcher:
    """Backtracking matcher over one token list.

    A nonterminal anchors its first element at an exact position;
    each later element scans forward and settles on the earliest
    position from which the rest of the production can complete.
    """

    def __init__(self, grammar: Grammar, tokens: list[str]):
        self.grammar = grammar
        self.tokens = tokens
        self._memo: dict[tuple[str, int], tuple[tuple[tuple[int, ...], ParseNode], ...]] = {}

    def match_nt(self, name: str, i: int) -> tuple[tuple[tuple[int, ...], ParseNode], ...]:
        key = (name, i)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        candidates: list[tuple[tuple[int, ...], ParseNode]] = []
        for production in self.grammar.rules[name]:
            for consumed, children in self._match_seq(production, i, anchored=True):
                candidates.append((consumed, ParseNode(name, children)))
        result = tuple(candidates)
        self._memo[key] = result
        return result

    def _match_seq(self, elements: Production, pos: int, anchored: bool):
        if not elements:
            return [((), ())]
        first, rest = elements[0], elements[1:]
        positions: Iterable[int] = (pos,) if anchored else range(pos, len(self.tokens))
        for q in positions:
            if q >= len(self.tokens):
                break
            completions = []
            for consumed, node in self._match_element(first, q):
                for rest_consumed, rest_children in self._match_seq(rest, consumed[-1] + 1, anchored=False):
                    completions.append((consumed + rest_consumed, (node,) + rest_children))
            if completions:
                return completions
        return []

    def _match_element(self, element: Element, q: int):
        if isinstance(element, TerminalSeq):
            k = len(element.words)
            if tuple(self.tokens[q : q + k]) == element.words:
                positions = tuple(range(q, q + k))
                return [(positions, TerminalMatch(" ".join(element.words), positions))]
            return []
        return self.match_nt(element.name, q)

    def best_at(self, i: int):
        """Best start-symbol match anchored at i: most tokens, then earliest end."""
        best = None
        best_key = None
        for consumed, node in self.match_nt(self.grammar.start, i):
            key = (-len(consumed), consumed[-1])
            if best_key is None or key < best_key:
                best, best_key = (consumed, node), key
        return best


def parse_move(text: str, grammar: Grammar | None = None) -> list[FrameParse]:
    """All maximal non-overlapping [Move] frames in the text, left to right.

    An unparseable text returns an empty list; there is no parse error.
    """
    if grammar is None:
        grammar = load_default_grammar()
    tokens = tokenize(text, grammar.vocabulary)
    matcher = _Matcher(grammar, tokens)
    frames: list[FrameParse] = []
    pos = 0
    while pos < len(tokens):
        found = None
        for i in range(pos, len(tokens)):
            found = matcher.best_at(i)
            if found is not None:
                break
        if found is None:
            break
        consumed, node = found
        frames.append(FrameParse(tree=node, consumed=consumed, tokens=tuple(tokens)))
        pos = consumed[-1] + 1
    return frames


def coverage(corpus: Iterable[str], grammar: Grammar | None = None) -> float:
    """Fraction of texts with at least one frame."""
    texts = list(corpus)
    if not texts:
        raise GrammarError("empty corpus")
    if grammar is None:
        grammar = load_default_grammar()
    parsed = sum(1 for text in texts if parse_move(text, grammar))
    return parsed / len(texts)


# --- frame merging ---------------------------------------------------------

_HOLD_SUBTYPES = {
    "SidePull": "sidepull",
    "UnderCling": "undercling",
    "FootHook": "foothook",
    "Layback": "layback",
    "Mantle": "mantle",
    "Jib": "jib",
    "GenericHold": "generic",
}


@dataclass(frozen=True)
class HoldInfo:
    type_text: str
    subtype: str | None = None
    size: str | None = None  # "big" | "small"
    shape: str | None = None  # "good" | "bad"
    descriptors: tuple[str, ...] = ()
    negated: bool = False


@dataclass(frozen=True)
class ActionInfo:
    verb: str
    verb_class: str  # "big" | "small"
    size: str | None = None  # "big" | "small"
    is_cross: bool = False


@dataclass(frozen=True)
class MoveFrame:
    """The merged semantic content of one described move."""

    action: ActionInfo | None
    holds: tuple[HoldInfo, ...]
    is_match: bool
    hybrid_label: str


def _terminal_matches(node: ParseNode) -> list[TerminalMatch]:
    out: list[TerminalMatch] = []
    for child in node.children:
        if isinstance(child, TerminalMatch):
            out.append(child)
        else:
            out.extend(_terminal_matches(child))
    return out


def _find_nodes(node: ParseNode, name: str) -> list[ParseNode]:
    found = []
    if node.name == name:
        found.append(node)
    for child in node.children:
        if isinstance(child, ParseNode):
            found.extend(_find_nodes(child, name))
    return found


def _surface(node: ParseNode) -> str:
    return " ".join(t.text for t in _terminal_matches(node))


def _hold_info(hold: ParseNode) -> HoldInfo:
    size = None
    shape = None
    descriptors: list[str] = []
    negated = False
    type_text = ""
    subtype = None
    for child in hold.children:
        if not isinstance(child, ParseNode):
            continue
        if child.name == "HoldSize":
            top = child.children[0]
            if isinstance(top, ParseNode):
                size = "big" if top.name == "HoldSizeBig" else "small"
                negated = negated or bool(_find_nodes(top, "Not"))
            descriptors.extend(t.text for t in _terminal_matches(child))
        elif child.name == "HoldShape":
            top = child.children[0]
            if isinstance(top, ParseNode):
                shape = "good" if top.name == "HoldShapeGood" else "bad"
                negated = negated or bool(_find_nodes(top, "Not"))
            descriptors.extend(t.text for t in _terminal_matches(child))
        elif child.name == "HoldType":
            type_text = _surface(child)
            top = child.children[0]
            if isinstance(top, ParseNode):
                subtype = _HOLD_SUBTYPES.get(top.name)
    return HoldInfo(
        type_text=type_text,
        subtype=subtype,
        size=size,
        shape=shape,
        descriptors=tuple(descriptors),
        negated=negated,
    )


def _action_info(action: ParseNode) -> ActionInfo:
    size = None
    verb = ""
    verb_class = "small"
    for child in action.children:
        if not isinstance(child, ParseNode):
            continue
        if child.name == "ActionSize":
            top = child.children[0]
            if isinstance(top, ParseNode):
                size = "big" if top.name == "ActionSizeBig" else "small"
        elif child.name == "ActionVerb":
            verb = _surface(child)
            top = child.children[0]
            if isinstance(top, ParseNode):
                verb_class = "big" if top.name == "ActionVerbBig" else "small"
    is_cross = bool(_find_nodes(action, "Cross"))
    return ActionInfo(verb=verb, verb_class=verb_class, size=size, is_cross=is_cross)


def merge_parses(frames: list[FrameParse]) -> MoveFrame:
    """Fold all frames from one description line into a single MoveFrame.

    Hold types concatenate in order into a hybrid hold list; the first
    action provides the verb attributes (cross is OR-ed across frames);
    any [Match] sets is_match. The hybrid label strings together every
    matched terminal in input order.
    """
    if not frames:
        raise EmptyParse("no frames to merge")
    action: ActionInfo | None = None
    holds: list[HoldInfo] = []
    is_match = False
    labeled: list[tuple[int, str]] = []
    any_negated = False
    for frame in frames:
        for term in _terminal_matches(frame.tree):
            labeled.append((term.positions[0], term.text))
        for node in _find_nodes(frame.tree, "Match"):
            is_match = True
        for hold_node in _find_nodes(frame.tree, "Hold"):
            info = _hold_info(hold_node)
            any_negated = any_negated or info.negated
            holds.append(info)
        for action_node in _find_nodes(frame.tree, "Action"):
            info = _action_info(action_node)
            if action is None:
                action = info
            elif info.is_cross and not action.is_cross:
                action = ActionInfo(action.verb, action.verb_class, action.size, True)
    if any_negated:
        warnings.warn("negated descriptor: counted as the class the grammar reached")
    labeled.sort(key=lambda pair: pair[0])
    hybrid = "-".join(text.replace(" ", "-") for _, text in labeled)
    return MoveFrame(action=action, holds=tuple(holds), is_match=is_match, hybrid_label=hybrid)
