"""Task-difficulty aggregation, level bucketing and token-budget lookup."""

from __future__ import annotations

import ast
import enum
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .assets import load_template
from .errors import MissingDict, MissingKey, ScoreOutOfRange

DIMENSIONS = ("scene", "segmentation", "temporal", "motion", "language")


class Level(str, enum.Enum):
    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"


@dataclass(frozen=True)
class DifficultyConfig:
    tau_easy: float = 3.0
    tau_hard: float = 6.0
    budgets: Mapping[str, int] = field(default_factory=lambda: {"easy": 96, "medium": 176, "hard": 256})

    def __post_init__(self):
        if not self.tau_easy < self.tau_hard:
            raise ValueError("tau_easy must be < tau_hard")
        budgets = {Level(k).value: int(v) for k, v in self.budgets.items()}
        if set(budgets) != {lv.value for lv in Level}:
            raise ValueError("budgets needs exactly the keys easy, medium, hard")
        if not budgets["easy"] < budgets["medium"] < budgets["hard"]:
            raise ValueError("budgets must be strictly increasing with difficulty")
        object.__setattr__(self, "budgets", budgets)


@dataclass(frozen=True)
class DifficultyProfile:
    scene: int
    segmentation: int
    temporal: int
    motion: int
    language: int
    d_score: float
    level: Level

    @property
    def scores(self) -> tuple[int, ...]:
        return tuple(getattr(self, d) for d in DIMENSIONS)

    def to_json(self) -> dict:
        out = {d: getattr(self, d) for d in DIMENSIONS}
        out.update(d_score=self.d_score, level=self.level.value)
        return out


def level_for(d_score: float, cfg: DifficultyConfig = DifficultyConfig()) -> Level:
    # inclusive upper bounds: D == tau_easy is easy, D == tau_hard is medium
    if d_score <= cfg.tau_easy:
        return Level.EASY
    if d_score <= cfg.tau_hard:
        return Level.MEDIUM
    return Level.HARD


def _check_score(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScoreOutOfRange(f"{name} must be an integer in [1, 10], got {value!r}")
    if not 1 <= value <= 10:
        raise ScoreOutOfRange(f"{name}={value} outside [1, 10]")
    return value


def aggregate_difficulty(scores: Sequence[int] | Mapping[str, int],
                         cfg: DifficultyConfig = DifficultyConfig()) -> DifficultyProfile:
    if isinstance(scores, Mapping):
        scores = [scores[d] for d in DIMENSIONS]
    scores = list(scores)
    if len(scores) != len(DIMENSIONS):
        raise ValueError(f"expected {len(DIMENSIONS)} scores, got {len(scores)}")
    checked = [_check_score(d, s) for d, s in zip(DIMENSIONS, scores)]
    # exact mean so that threshold comparisons see 3.0, not 2.9999...
    mean = Fraction(sum(checked), len(checked))
    d_score = float(mean)
    return DifficultyProfile(*checked, d_score=d_score, level=level_for(mean, cfg))


def token_budget(p: DifficultyProfile, cfg: DifficultyConfig = DifficultyConfig()) -> int:
    return cfg.budgets[Level(p.level).value]


def render_scoring_prompt(query: str, visual_desc: str, textual_desc: str) -> str:
    return load_template("difficulty_prompt").format(
        question=query, visual_description=visual_desc, textual_description=textual_desc)


_BRACED = re.compile(r"\{[^{}]*\}")


def _load_dict(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return None


def parse_difficulty_response(text: str) -> tuple[int, ...]:
    """Scores from the last ``{...}`` block in a scorer response."""
    blocks = _BRACED.findall(text or "")
    if not blocks:
        raise MissingDict("no dictionary found in scorer response")
    obj = _load_dict(blocks[-1])
    if not isinstance(obj, dict):
        raise MissingDict(f"last braced block is not a dictionary: {blocks[-1]!r}")
    missing = [d for d in DIMENSIONS if d not in obj]
    if missing:
        raise MissingKey(f"scorer dictionary lacks {missing}")
    return tuple(_check_score(d, obj[d]) for d in DIMENSIONS)


def render_scores(scores: Sequence[int]) -> str:
    return json.dumps(dict(zip(DIMENSIONS, scores)))
