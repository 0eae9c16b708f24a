"""Climbing route description language (CRDL): parsing and serialization.

A CRDL document is an optional free-text header, a separator line of
three or more hyphens ("---" or "- - -"), then one move per line: a
hand token (L or R, case-insensitive) followed by a free-form
description. The header may carry an optional "grade:" line that is
surfaced as soft metadata. Documents with no header may omit the
separator entirely as long as the first nonblank line starts with a
hand token.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

MATCH_TOKEN = "match"
SEPARATOR = "- - -"
FILE_EXTENSION = ".crdl"

# a line of >=3 hyphens, optionally whitespace-separated
_SEPARATOR_RE = re.compile(r"^\s*-(?:\s*-){2,}\s*$")


class CrdlError(ValueError):
    """Malformed CRDL document."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class MissingSeparator(CrdlError):
    pass


class BadHandToken(CrdlError):
    pass


class EmptyDescription(CrdlError):
    pass


class EmptyRoute(CrdlError):
    pass


class Hand(str, Enum):
    LEFT = "L"
    RIGHT = "R"

    @property
    def opposite(self) -> "Hand":
        return Hand.RIGHT if self is Hand.LEFT else Hand.LEFT

    @classmethod
    def parse(cls, token: str) -> "Hand":
        """Parse a hand token, case-insensitively. Raises BadHandToken."""
        normalized = token.strip().upper()
        if normalized == "L":
            return cls.LEFT
        if normalized == "R":
            return cls.RIGHT
        raise BadHandToken(f"expected hand token L or R, got {token!r}")


@dataclass(frozen=True)
class RawMove:
    """One transcribed move: which hand, and the setter's description."""

    hand: Hand
    text: str

    def __post_init__(self):
        if self.text != self.text.strip() or not self.text:
            raise ValueError("move text must be nonempty and trimmed")
        if "\n" in self.text or "\r" in self.text:
            raise ValueError("move text must be a single line")

    @property
    def is_match(self) -> bool:
        """True iff the description is exactly the match token."""
        return self.text.lower() == MATCH_TOKEN


@dataclass(frozen=True)
class Route:
    """A transcribed route: header context plus an ordered move list.

    `id` is assigned by the store; routes parsed from text carry None.
    `grade` is read from an optional "grade:" header line.
    """

    header: str = ""
    moves: tuple[RawMove, ...] = ()
    id: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.moves:
            raise EmptyRoute("a route needs at least one move")
        for line in self.header.splitlines():
            if _SEPARATOR_RE.match(line):
                raise ValueError("header may not contain a separator line")

    @property
    def grade(self) -> str | None:
        for line in self.header.splitlines():
            key, sep, value = line.partition(":")
            if sep and key.strip().lower() == "grade" and value.strip():
                return value.strip()
        return None


def _normalize_header(lines: list[str]) -> str:
    """Strip trailing whitespace per line and trim blank edge lines."""
    trimmed = [ln.rstrip() for ln in lines]
    while trimmed and not trimmed[0]:
        trimmed.pop(0)
    while trimmed and not trimmed[-1]:
        trimmed.pop()
    return "\n".join(trimmed)


def _parse_move_line(line: str, line_no: int) -> RawMove:
    parts = line.strip().split(None, 1)
    hand = Hand.parse(parts[0]) if parts else None
    if hand is None:  # unreachable for nonblank lines; defensive
        raise BadHandToken("blank move line", line_no)
    if len(parts) < 2 or not parts[1].strip():
        raise EmptyDescription(f"move line has a hand token but no description", line_no)
    return RawMove(hand, parts[1].strip())


def _looks_like_move(line: str) -> bool:
    token = line.strip().split(None, 1)[0]
    return token.upper() in ("L", "R")


def parse_crdl(document: str) -> Route:
    """Parse a CRDL document into a Route.

    Everything before the first separator line becomes the header; each
    following nonblank line must read "<hand> <description>". Blank
    lines between moves are skipped. Raises MissingSeparator,
    BadHandToken, EmptyDescription, or EmptyRoute.
    """
    lines = document.splitlines()
    sep_index = None
    for i, line in enumerate(lines):
        if _SEPARATOR_RE.match(line):
            sep_index = i
            break

    if sep_index is None:
        first_nonblank = next((ln for ln in lines if ln.strip()), None)
        if first_nonblank is None or not _looks_like_move(first_nonblank):
            raise MissingSeparator("no separator line and no leading hand token")
        header_lines: list[str] = []
        move_lines = list(enumerate(lines, start=1))
    else:
        header_lines = lines[:sep_index]
        move_lines = list(enumerate(lines, start=1))[sep_index + 1 :]

    moves = []
    for line_no, line in move_lines:
        if not line.strip():
            continue
        hand_token = line.strip().split(None, 1)[0]
        if hand_token.upper() not in ("L", "R"):
            raise BadHandToken(f"expected hand token L or R, got {hand_token!r}", line_no)
        moves.append(_parse_move_line(line, line_no))

    if not moves:
        raise EmptyRoute("document contains no moves")
    return Route(header=_normalize_header(header_lines), moves=tuple(moves))


def serialize_crdl(route: Route) -> str:
    """Render a Route back to CRDL text (LF line endings, trailing newline)."""
    lines: list[str] = []
    if route.header:
        lines.extend(route.header.splitlines())
    lines.append(SEPARATOR)
    for move in route.moves:
        lines.append(f"{move.hand.value} {move.text}")
    return "\n".join(lines) + "\n"


def load_route(path) -> Route:
    with open(path, encoding="utf-8") as fh:
        return parse_crdl(fh.read())


def save_route(route: Route, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_crdl(route))
