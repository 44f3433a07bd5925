"""Detection score sets: CSV I/O, canonical orientation, coverage checks.

Canonical orientation is "higher means more bona fide". Files declaring
``higher_is_attack`` are negated on load so that all downstream metric code
compares in one direction only.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

from .errors import DuplicateSample, MalformedRow, NonFiniteScore
from .fileio import atomic_write_text

SCORE_HEADER = "sample_id,score"
_SUBSETS = ("train", "validation", "test")


class Orientation(Enum):
    HIGHER_IS_BONA_FIDE = "higher_is_bonafide"
    HIGHER_IS_ATTACK = "higher_is_attack"


@dataclass(frozen=True)
class ScoreSet:
    algorithm_id: str
    orientation: Orientation
    scores: Mapping[str, float]

    def __post_init__(self):
        for sample_id, value in self.scores.items():
            if not math.isfinite(value):
                raise NonFiniteScore(sample_id)
        object.__setattr__(self, "scores", MappingProxyType(dict(self.scores)))

    def __len__(self) -> int:
        return len(self.scores)


def canonicalize(scoreset: ScoreSet) -> ScoreSet:
    """Normal form: already-canonical sets pass through unchanged."""
    if scoreset.orientation is Orientation.HIGHER_IS_BONA_FIDE:
        return scoreset
    flipped = {sid: -value for sid, value in scoreset.scores.items()}
    return replace(scoreset, orientation=Orientation.HIGHER_IS_BONA_FIDE, scores=flipped)


def _parse_meta(line: str) -> tuple[str, Orientation]:
    if not line.startswith("#"):
        raise MalformedRow(1, "missing metadata line '# algorithm=<id> orientation=<...>'")
    fields = dict(
        token.split("=", 1) for token in line[1:].strip().split() if "=" in token
    )
    if "algorithm" not in fields or "orientation" not in fields:
        raise MalformedRow(1, "metadata line must declare algorithm and orientation")
    try:
        orientation = Orientation(fields["orientation"])
    except ValueError:
        raise MalformedRow(1, f"unknown orientation {fields['orientation']!r}") from None
    return fields["algorithm"], orientation


def load_scores(path: str | Path) -> ScoreSet:
    """Parse a score CSV and return it in canonical orientation."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        meta = fh.readline().rstrip("\n")
        algorithm_id, orientation = _parse_meta(meta)
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or ",".join(h.strip() for h in header) != SCORE_HEADER:
            raise MalformedRow(2, f"header must be exactly {SCORE_HEADER!r}")
        scores: dict[str, float] = {}
        for line_no, row in enumerate(reader, start=3):
            if not row:
                continue
            if len(row) != 2:
                raise MalformedRow(line_no, f"expected 2 columns, got {len(row)}")
            sample_id = row[0].strip()
            if not sample_id:
                raise MalformedRow(line_no, "empty sample_id")
            if sample_id in scores:
                raise DuplicateSample(sample_id)
            try:
                value = float(row[1])
            except ValueError:
                raise MalformedRow(line_no, f"not a decimal literal: {row[1]!r}") from None
            if not math.isfinite(value):
                raise NonFiniteScore(sample_id)
            scores[sample_id] = value
    return canonicalize(ScoreSet(algorithm_id, orientation, scores))


def save_scores(scoreset: ScoreSet, path: str | Path) -> None:
    scoreset = canonicalize(scoreset)
    buf = io.StringIO()
    buf.write(f"# algorithm={scoreset.algorithm_id} orientation={scoreset.orientation.value}\n")
    buf.write(SCORE_HEADER + "\n")
    for sample_id in sorted(scoreset.scores):
        buf.write(f"{sample_id},{scoreset.scores[sample_id]!r}\n")
    atomic_write_text(path, buf.getvalue())


def check_coverage(scoreset: ScoreSet, partition, subset: str) -> list[str]:
    """Ids of the given partition subset that have no score, sorted."""
    if subset not in _SUBSETS:
        raise ValueError(f"subset must be one of {_SUBSETS}")
    wanted = getattr(partition, subset)
    return sorted(sid for sid in wanted if sid not in scoreset.scores)
