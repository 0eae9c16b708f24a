"""Variable-order Markov models over symbol sequences.

The model is a decomposed context-tree-weighting mixture: each symbol
is binarized by its alphabet index (⌈log₂N⌉ bits, most significant
first), a binary decision tree over those codes routes each bit to a
decision point, and every decision point owns a binary context tree of
depth D·⌈log₂N⌉ whose context is the bit image of the last D symbols,
most recent bit first (zero-padded at the start of a sequence). Every
context-tree node holds Krichevsky-Trofimov counts; node weights mix
the local estimate with the children's product, so the model adapts
its effective order per context.

Decision points where only one child prefix is populated (non-power-
of-two alphabets) pass through with probability one, which keeps the
per-context distribution summing to one over the alphabet.

All probabilities live in log2 space. A trained model is immutable:
scoring and prediction never update counts.
"""

from __future__ import annotations

import json
import math
from itertools import product
from typing import Iterable, NamedTuple, Sequence

MODEL_FORMAT = "betamix.vomm"
MODEL_VERSION = 1
DEFAULT_ORDER = 3

_LN2 = math.log(2.0)
_LGAMMA_HALF = math.lgamma(0.5)


class VommError(ValueError):
    pass


class UnknownSymbol(VommError):
    def __init__(self, symbol: str, where: str = ""):
        suffix = f" ({where})" if where else ""
        super().__init__(f"symbol {symbol!r} is not in the model alphabet{suffix}")
        self.symbol = symbol


class EmptyCorpus(VommError):
    pass


class JTooLarge(VommError):
    """Insertion search is exponential; lengths above 2 are refused."""


class Likelihood(NamedTuple):
    total_bits: float
    per_symbol_bits: float


class Interpolation(NamedTuple):
    insertion: tuple[str, ...]
    bits: float
    candidates: int


def _kt_log2(a: int, b: int) -> float:
    """log2 KT-estimator probability of a zeros and b ones, any order."""
    if a == 0 and b == 0:
        return 0.0
    return (
        math.lgamma(a + 0.5) + math.lgamma(b + 0.5) - 2.0 * _LGAMMA_HALF - math.lgamma(a + b + 1.0)
    ) / _LN2


def _log2_avg(u: float, v: float) -> float:
    """log2(0.5 * 2^u + 0.5 * 2^v), stable in log space."""
    if u < v:
        u, v = v, u
    return u + math.log2(1.0 + 2.0 ** (v - u)) - 1.0


class _CtwNode:
    __slots__ = ("a", "b", "children", "log_pe", "log_pw")

    def __init__(self):
        self.a = 0  # zeros seen
        self.b = 0  # ones seen
        self.children: list[_CtwNode | None] = [None, None]
        self.log_pe = 0.0
        self.log_pw = 0.0


class _CtwTree:
    """One binary CTW tree: predicts a single decision bit in context."""

    def __init__(self, depth: int):
        self.depth = depth
        self.root = _CtwNode()

    def update(self, context: Sequence[int], bit: int) -> None:
        path = [self.root]
        node = self.root
        for d in range(self.depth):
            child = node.children[context[d]]
            if child is None:
                child = _CtwNode()
                node.children[context[d]] = child
            path.append(child)
            node = child
        for depth_index in range(len(path) - 1, -1, -1):
            node = path[depth_index]
            if bit:
                node.b += 1
            else:
                node.a += 1
            node.log_pe = _kt_log2(node.a, node.b)
            if depth_index == self.depth:
                node.log_pw = node.log_pe
            else:
                c0, c1 = node.children
                pw_children = (c0.log_pw if c0 else 0.0) + (c1.log_pw if c1 else 0.0)
                node.log_pw = _log2_avg(node.log_pe, pw_children)

    def predict_log2(self, context: Sequence[int], bit: int) -> float:
        """log2 P(next bit = bit | context), without updating."""
        path: list[_CtwNode | None] = [self.root]
        node: _CtwNode | None = self.root
        for d in range(self.depth):
            node = node.children[context[d]] if node is not None else None
            path.append(node)
        new_pw = 0.0
        for depth_index in range(self.depth, -1, -1):
            node = path[depth_index]
            a = node.a if node else 0
            b = node.b if node else 0
            if bit:
                b += 1
            else:
                a += 1
            log_pe = _kt_log2(a, b)
            if depth_index == self.depth:
                new_pw = log_pe
            else:
                on_bit = context[depth_index]
                other = node.children[1 - on_bit].log_pw if node and node.children[1 - on_bit] else 0.0
                new_pw = _log2_avg(log_pe, new_pw + other)
        old_pw = self.root.log_pw
        return new_pw - old_pw


def _codes(n: int) -> tuple[int, list[str]]:
    """(bit width, index codes) for an n-symbol alphabet."""
    if n < 1:
        raise EmptyCorpus("alphabet is empty")
    k = max(1, (n - 1).bit_length()) if n > 1 else 0
    return k, [bin(i)[2:].zfill(k) if k else "" for i in range(n)]


class VommModel:
    """A trained model; treat as immutable after training."""

    def __init__(
        self,
        alphabet: Sequence[str],
        max_order: int = DEFAULT_ORDER,
        trained_on: str = "all",
        symbol_set: str | None = None,
    ):
        if not alphabet:
            raise EmptyCorpus("alphabet is empty")
        if len(set(alphabet)) != len(alphabet):
            raise VommError("alphabet contains duplicate symbols")
        if max_order < 1:
            raise VommError("max order must be >= 1")
        self.alphabet = tuple(alphabet)
        self.index = {s: i for i, s in enumerate(self.alphabet)}
        self.max_order = max_order
        self.trained_on = trained_on
        self.symbol_set = symbol_set
        self.code_bits, self.codes = _codes(len(self.alphabet))
        self.context_bits = self.max_order * self.code_bits
        # decision points: code prefixes where both next bits occur
        self.trees: dict[str, _CtwTree] = {}
        for code in self.codes:
            for cut in range(len(code)):
                prefix = code[:cut]
                if prefix in self.trees:
                    continue
                has = {c[cut] for c in self.codes if len(c) > cut and c.startswith(prefix)}
                if len(has) == 2:
                    self.trees[prefix] = _CtwTree(self.context_bits)

    # --- internals ---

    def _index_of(self, symbol: str, where: str) -> int:
        try:
            return self.index[symbol]
        except KeyError:
            raise UnknownSymbol(symbol, where) from None

    def _context(self, history: Sequence[int]) -> tuple[int, ...]:
        """Bit image of the last max_order symbols, most recent bit first."""
        recent = history[-self.max_order :] if self.max_order else []
        bits = "".join(self.codes[i] for i in recent)
        bits = "0" * (self.context_bits - len(bits)) + bits
        return tuple(1 if ch == "1" else 0 for ch in reversed(bits))

    def _learn(self, history: Sequence[int], idx: int) -> None:
        context = self._context(history)
        code = self.codes[idx]
        for cut in range(len(code)):
            tree = self.trees.get(code[:cut])
            if tree is not None:
                tree.update(context, 1 if code[cut] == "1" else 0)

    def _log2_symbol(self, history: Sequence[int], idx: int) -> float:
        context = self._context(history)
        code = self.codes[idx]
        total = 0.0
        for cut in range(len(code)):
            tree = self.trees.get(code[:cut])
            if tree is not None:
                total += tree.predict_log2(context, 1 if code[cut] == "1" else 0)
        return total


def derive_alphabet(sequences: Iterable[Sequence[str]]) -> list[str]:
    """Distinct symbols ordered by count descending, then text.

    Matches the ordering of symbol alphabets built from parsed corpora,
    so models trained either way agree on symbol codes.
    """
    counts: dict[str, int] = {}
    for seq in sequences:
        for symbol in seq:
            counts[symbol] = counts.get(symbol, 0) + 1
    return [text for text, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))]


def train(
    sequences: Iterable[Sequence[str]],
    max_order: int = DEFAULT_ORDER,
    alphabet: Sequence[str] | None = None,
    trained_on: str = "all",
    symbol_set: str | None = None,
) -> VommModel:
    """Train a model on symbol sequences.

    The alphabet defaults to the distinct symbols of the corpus in
    first-seen order; pass it explicitly to fix codes across models.
    Context resets at each sequence boundary. Raises EmptyCorpus or
    UnknownSymbol.
    """
    material = [list(seq) for seq in sequences]
    if alphabet is None:
        seen: dict[str, None] = {}
        for seq in material:
            for symbol in seq:
                seen.setdefault(symbol)
        alphabet = list(seen)
    model = VommModel(alphabet, max_order, trained_on=trained_on, symbol_set=symbol_set)
    for seq_no, seq in enumerate(material):
        history: list[int] = []
        for pos, symbol in enumerate(seq):
            idx = model._index_of(symbol, f"sequence {seq_no}, position {pos}")
            model._learn(history, idx)
            history.append(idx)
    return model


def predict(model: VommModel, context: Sequence[str]) -> dict[str, float]:
    """P(next symbol | context) over the whole alphabet.

    Strictly positive, sums to one (within float error); uses only the
    last max_order context symbols.
    """
    history = [model._index_of(s, "context") for s in context]
    return {
        symbol: 2.0 ** model._log2_symbol(history, i) for i, symbol in enumerate(model.alphabet)
    }


def likelihood(model: VommModel, sequence: Sequence[str]) -> Likelihood:
    """Bits of the sequence under the frozen model (chain rule)."""
    history: list[int] = []
    total = 0.0
    for pos, symbol in enumerate(sequence):
        idx = model._index_of(symbol, f"position {pos}")
        total -= model._log2_symbol(history, idx)
        history.append(idx)
    count = len(history)
    return Likelihood(total_bits=total, per_symbol_bits=total / count if count else 0.0)


def forward_simulate(
    model: VommModel,
    context: Sequence[str],
    length: int,
    mode: str = "greedy",
    seed: int | None = None,
) -> list[str]:
    """Continue a context for `length` symbols.

    Greedy mode takes the most likely next symbol each step (ties to
    the earliest alphabet entry) and is deterministic; sample mode
    draws from the predictive distribution using `seed`.
    """
    if mode not in ("greedy", "sample"):
        raise VommError(f"unknown simulation mode {mode!r}")
    rng = None
    if mode == "sample":
        import random

        rng = random.Random(seed)
    history = [model._index_of(s, "context") for s in context]
    out: list[str] = []
    for _ in range(max(length, 0)):
        logps = [model._log2_symbol(history, i) for i in range(len(model.alphabet))]
        if rng is None:
            best = 0
            for i in range(1, len(logps)):
                if logps[i] > logps[best]:
                    best = i
        else:
            weights = [2.0**lp for lp in logps]
            total = sum(weights)
            roll = rng.random() * total
            acc = 0.0
            best = len(weights) - 1
            for i, w in enumerate(weights):
                acc += w
                if roll < acc:
                    best = i
                    break
        out.append(model.alphabet[best])
        history.append(best)
    return out


def interpolate(
    model: VommModel,
    prefix: Sequence[str],
    suffix: Sequence[str],
    j_max: int = 2,
) -> Interpolation:
    """Cheapest insertion (0 to j_max symbols) between prefix and suffix.

    Exhaustive search over all insertions, scoring the bits of
    trimmed-prefix + insertion + trimmed-suffix (trimming keeps the
    max_order symbols adjacent to the gap). Ties prefer the shorter
    insertion, then alphabet order. The candidate count is returned for
    instrumentation: 1 + N + N^2 at j_max=2.
    """
    if not 1 <= j_max <= 2:
        raise JTooLarge(f"insertion length bound must be 1 or 2, got {j_max}")
    for s in prefix:
        model._index_of(s, "prefix")
    for s in suffix:
        model._index_of(s, "suffix")
    head = list(prefix[-model.max_order :])
    tail = list(suffix[: model.max_order])
    best: tuple[str, ...] | None = None
    best_bits = math.inf
    candidates = 0
    for length in range(j_max + 1):
        for combo in product(model.alphabet, repeat=length):
            candidates += 1
            bits = likelihood(model, head + list(combo) + tail).total_bits
            if bits < best_bits:
                best, best_bits = combo, bits
    assert best is not None
    return Interpolation(insertion=best, bits=best_bits, candidates=candidates)


# --- persistence -----------------------------------------------------------


def _tree_counts(tree: _CtwTree) -> dict[str, list[int]]:
    out: dict[str, list[int]] = {}

    def walk(node: _CtwNode, path: str):
        out[path] = [node.a, node.b]
        for bit, child in enumerate(node.children):
            if child is not None:
                walk(child, path + str(bit))

    if tree.root.a or tree.root.b:
        walk(tree.root, "")
    return out


def model_to_dict(model: VommModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "alphabet": list(model.alphabet),
        "max_order": model.max_order,
        "trained_on": model.trained_on,
        "symbol_set": model.symbol_set,
        "trees": {prefix: _tree_counts(tree) for prefix, tree in model.trees.items()},
    }


def model_from_dict(data: dict) -> VommModel:
    if data.get("format") != MODEL_FORMAT:
        raise VommError("not a model document")
    if data.get("version") != MODEL_VERSION:
        raise VommError(f"unsupported model version {data.get('version')!r}")
    model = VommModel(
        alphabet=data["alphabet"],
        max_order=int(data["max_order"]),
        trained_on=data.get("trained_on", "all"),
        symbol_set=data.get("symbol_set"),
    )
    for prefix, nodes in data["trees"].items():
        tree = model.trees.get(prefix)
        if tree is None:
            raise VommError(f"tree prefix {prefix!r} does not match the alphabet")
        for path in sorted(nodes, key=len):  # parents before children
            a, b = nodes[path]
            node = tree.root
            for ch in path:
                bit = 1 if ch == "1" else 0
                if node.children[bit] is None:
                    node.children[bit] = _CtwNode()
                node = node.children[bit]
            node.a, node.b = int(a), int(b)
            node.log_pe = _kt_log2(node.a, node.b)

        def weigh(node: _CtwNode, depth: int):
            if depth == tree.depth:
                node.log_pw = node.log_pe
                return
            for child in node.children:
                if child is not None:
                    weigh(child, depth + 1)
            c0, c1 = node.children
            pw_children = (c0.log_pw if c0 else 0.0) + (c1.log_pw if c1 else 0.0)
            node.log_pw = _log2_avg(node.log_pe, pw_children)

        weigh(tree.root, 0)
    return model


def save_model(model: VommModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> VommModel:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise VommError("model file is not a JSON object")
    return model_from_dict(data)
