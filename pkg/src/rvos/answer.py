"""Structured-answer grammar: tag validation, payload parsing, serialization.

The answer payload grammar (whitespace allowed between all tokens)::

    answer  = "[" [ object { "," object } ] "]"
    object  = "{" member { "," member } "}"
    member  = key ":" numbers
    key     = quoted "bbox_2d" | quoted "point_pos" | quoted "point_neg"
    numbers = "[" number { "," number } "]"
    quoted  = "'" ... "'" | '"' ... '"'
    number  = ["-"] digits ["." digits] [("e"|"E") ["+"|"-"] digits]

Each object must carry all three keys exactly once. ``bbox_2d`` holds four
numbers, the points hold three (x, y, label). Numbers are rounded half-up
to integers.
"""

from __future__ import annotations

import math
import re
import string
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import BoxError, LabelError, ParseError
from .geometry import BBox, LabeledPoint

__all__ = [
    "RolloutText",
    "ObjectPrediction",
    "FormatFlags",
    "validate_format",
    "parse_answer",
    "format_answer",
    "format_rollout",
    "split_sentences",
    "whitespace_tokens",
]

THINK_OPEN, THINK_CLOSE = "<think>", "</think>"
ANSWER_OPEN, ANSWER_CLOSE = "<answer>", "</answer>"

_KEY_ARITY = {"bbox_2d": 4, "point_pos": 3, "point_neg": 3}


@dataclass(frozen=True)
class ObjectPrediction:
    bbox: BBox
    point_pos: LabeledPoint
    point_neg: LabeledPoint

    def __post_init__(self):
        if self.point_pos.label != 1:
            raise LabelError("point_pos must carry label 1")
        if self.point_neg.label != 0:
            raise LabelError("point_neg must carry label 0")


@dataclass(frozen=True)
class FormatFlags:
    think_ok: bool
    answer_ok: bool


def _block(raw: str, open_tag: str, close_tag: str) -> tuple[int, int] | None:
    start = raw.find(open_tag)
    if start < 0:
        return None
    end = raw.find(close_tag, start + len(open_tag))
    if end < 0:
        return None
    return start + len(open_tag), end


@dataclass(frozen=True)
class RolloutText:
    """A raw completion plus the character ranges of its tag contents."""

    raw: str
    think_span: tuple[int, int] | None = None
    answer_span: tuple[int, int] | None = None

    @classmethod
    def from_raw(cls, raw: str) -> "RolloutText":
        think = _block(raw, THINK_OPEN, THINK_CLOSE)
        answer = _block(raw, ANSWER_OPEN, ANSWER_CLOSE)
        if think and answer and not (think[1] < answer[0] or answer[1] < think[0]):
            answer = None
        return cls(raw, think, answer)

    @property
    def think(self) -> str | None:
        return None if self.think_span is None else self.raw[slice(*self.think_span)]

    @property
    def answer(self) -> str | None:
        return None if self.answer_span is None else self.raw[slice(*self.answer_span)]


def _single_block_positions(raw: str, open_tag: str, close_tag: str):
    if raw.count(open_tag) != 1 or raw.count(close_tag) != 1:
        return None
    start, end = raw.index(open_tag), raw.index(close_tag)
    if end < start:
        return None
    return start, end


def validate_format(t: RolloutText | str) -> FormatFlags:
    raw = t.raw if isinstance(t, RolloutText) else t
    think = _single_block_positions(raw, THINK_OPEN, THINK_CLOSE)
    answer = _single_block_positions(raw, ANSWER_OPEN, ANSWER_CLOSE)

    answer_ok = False
    if answer is not None:
        try:
            parse_answer(raw[answer[0] + len(ANSWER_OPEN):answer[1]])
            answer_ok = True
        except (ParseError, LabelError, BoxError):
            pass

    think_ok = False
    if think is not None and answer is not None and think[1] < answer[0]:
        outside = (raw[:think[0]], raw[think[1] + len(THINK_CLOSE):answer[0]],
                   raw[answer[1] + len(ANSWER_CLOSE):])
        think_ok = all(not s.strip() for s in outside)
    return FormatFlags(think_ok, answer_ok)


# --- payload parser ---------------------------------------------------------

_NUMBER = re.compile(r"-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def fail(self, message: str, pos: int | None = None):
        at = self.pos if pos is None else pos
        raise ParseError(message, len(self.text[:at].encode("utf-8")))

    def ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            found = self.text[self.pos] if self.pos < len(self.text) else "end of input"
            self.fail(f"expected {ch!r}, found {found!r}")
        self.pos += 1

    def answer(self) -> list[ObjectPrediction]:
        self.expect("[")
        out = []
        if self.peek() == "]":
            self.pos += 1
        else:
            while True:
                out.append(self.obj())
                if self.peek() == ",":
                    self.pos += 1
                    continue
                self.expect("]")
                break
        if self.peek():
            self.fail("trailing characters after answer list")
        return out

    def key(self) -> str:
        quote = self.peek()
        if quote not in ("'", '"'):
            self.fail("expected a quoted key")
        start = self.pos
        end = self.text.find(quote, self.pos + 1)
        if end < 0:
            self.fail("unterminated string")
        name = self.text[self.pos + 1:end]
        if name not in _KEY_ARITY:
            self.fail(f"unknown key {name!r}", start)
        self.pos = end + 1
        return name

    def number(self) -> int:
        self.ws()
        match = _NUMBER.match(self.text, self.pos)
        if not match:
            self.fail("expected a number")
        self.pos = match.end()
        return math.floor(Fraction(match.group()) + Fraction(1, 2))

    def numbers(self, arity: int, key: str) -> list[int]:
        start = self.pos
        self.expect("[")
        values = [self.number()]
        while self.peek() == ",":
            self.pos += 1
            values.append(self.number())
        self.expect("]")
        if len(values) != arity:
            self.fail(f"{key} needs {arity} numbers, got {len(values)}", start)
        return values

    def obj(self) -> ObjectPrediction:
        start = self.pos
        self.expect("{")
        fields: dict[str, list[int]] = {}
        while True:
            key_pos = self.pos
            name = self.key()
            if name in fields:
                self.fail(f"duplicate key {name!r}", key_pos)
            self.expect(":")
            fields[name] = self.numbers(_KEY_ARITY[name], name)
            if self.peek() == ",":
                self.pos += 1
                continue
            self.expect("}")
            break
        missing = [k for k in _KEY_ARITY if k not in fields]
        if missing:
            self.fail(f"object missing keys {missing}", start)
        return _build(fields)


def _build(fields: dict[str, list[int]]) -> ObjectPrediction:
    x1, y1, x2, y2 = fields["bbox_2d"]
    if x1 > x2 or y1 > y2:
        raise BoxError(f"inverted bbox {fields['bbox_2d']}")
    if min(x1, y1) < 0:
        raise BoxError(f"negative bbox coordinate {fields['bbox_2d']}")
    px, py, pl = fields["point_pos"]
    nx, ny, nl = fields["point_neg"]
    if pl != 1:
        raise LabelError(f"point_pos label must be 1, got {pl}")
    if nl != 0:
        raise LabelError(f"point_neg label must be 0, got {nl}")
    return ObjectPrediction(BBox(x1, y1, x2, y2), LabeledPoint(px, py, 1), LabeledPoint(nx, ny, 0))


def parse_answer(payload: str) -> list[ObjectPrediction]:
    """Parse an answer payload into predictions, preserving source order."""
    return _Parser(payload).answer()


def format_answer(preds: Sequence[ObjectPrediction], quote: str = "'") -> str:
    q = quote
    items = [
        f"{{{q}bbox_2d{q}: {p.bbox.as_list()}, {q}point_pos{q}: {p.point_pos.as_list()}, "
        f"{q}point_neg{q}: {p.point_neg.as_list()}}}"
        for p in preds
    ]
    return "[" + ", ".join(items) + "]"


def format_rollout(think: str, preds: Sequence[ObjectPrediction]) -> str:
    return f"{THINK_OPEN}{think}{THINK_CLOSE}{ANSWER_OPEN}{format_answer(preds)}{ANSWER_CLOSE}"


_SENTENCE_SPLIT = re.compile(r"[.!?\n]")
_STRIP = string.punctuation + string.whitespace


def split_sentences(think_text: str) -> list[str]:
    out = []
    for piece in _SENTENCE_SPLIT.split(think_text or ""):
        norm = " ".join(piece.lower().split()).strip(_STRIP)
        if norm:
            out.append(norm)
    return out


def whitespace_tokens(text: str | None) -> int:
    return len(text.split()) if text else 0
