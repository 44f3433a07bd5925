"""ISO/IEC 30107-3 error rates, DET curves, and fixed-BPCER operating points.

Scores are canonical (higher means more bona fide) and the decision rule is
"attack iff score < threshold", so the bona fide side of a tie is closed.
This makes BPCER non-decreasing and APCER non-increasing in the threshold,
which every sweep below relies on. Rates are kept as integer counts next to
their denominators; floats are derived views.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import EmptyClass, MissingScores, UnknownSample
from .manifest import Manifest, Material, VisualGroup, material_group_of
from .scores import ScoreSet


class Decision(Enum):
    ATTACK = "attack"
    BONA_FIDE = "bonafide"


def decide(score: float, threshold: float) -> Decision:
    """Attack iff score < threshold; ties are classified bona fide."""
    return Decision.BONA_FIDE if score >= threshold else Decision.ATTACK


@dataclass(frozen=True)
class OperatingPoint:
    threshold: float
    apce_count: int
    bf_error_count: int
    n_attacks: int
    n_bonafides: int

    @property
    def apcer(self) -> float:
        return self.apce_count / self.n_attacks

    @property
    def bpcer(self) -> float:
        return self.bf_error_count / self.n_bonafides


@dataclass(frozen=True)
class DetCurve:
    points: tuple[OperatingPoint, ...]


def format_percent(numerator: int, denominator: int) -> str:
    """Exact rational percentage rounded half-up to two decimals, e.g. '1.81%'."""
    value = Decimal(numerator * 100) / Decimal(denominator)
    return f"{value.quantize(Decimal('0.01'), rounding=ROUND_HALF_UP)}%"


def decimal_fraction(x: float) -> Fraction:
    """The decimal value a float literal was written as (0.15 -> 3/20 exactly)."""
    return Fraction(Decimal(str(float(x))))


def _split_scores(scoreset: ScoreSet, manifest: Manifest, test_ids: Iterable[str]):
    """Sorted attack and bona fide score arrays for the given ids."""
    attack_scores: list[float] = []
    bf_scores: list[float] = []
    missing: list[str] = []
    for sample_id in test_ids:
        record = manifest.get(sample_id)
        if record is None:
            raise UnknownSample(sample_id)
        value = scoreset.scores.get(sample_id)
        if value is None:
            missing.append(sample_id)
            continue
        (attack_scores if record.is_attack else bf_scores).append(value)
    if missing:
        raise MissingScores(missing)
    if not attack_scores or not bf_scores:
        raise EmptyClass("test ids must contain at least one attack and one bona fide")
    return np.sort(np.asarray(attack_scores)), np.sort(np.asarray(bf_scores))


def _point(attacks: np.ndarray, bonafides: np.ndarray, threshold: float) -> OperatingPoint:
    # attacks scoring >= threshold are accepted as bona fide (APCEs);
    # bona fides scoring < threshold are rejected as attacks
    apce = int(len(attacks) - np.searchsorted(attacks, threshold, side="left"))
    bf_err = int(np.searchsorted(bonafides, threshold, side="left"))
    return OperatingPoint(float(threshold), apce, bf_err, len(attacks), len(bonafides))


def error_rates(scoreset: ScoreSet, manifest: Manifest, test_ids: Iterable[str],
                threshold: float) -> OperatingPoint:
    attacks, bonafides = _split_scores(scoreset, manifest, test_ids)
    return _point(attacks, bonafides, threshold)


def candidate_thresholds(attacks: np.ndarray, bonafides: np.ndarray) -> np.ndarray:
    """-inf, the midpoints between consecutive distinct scores, and +inf."""
    distinct = np.unique(np.concatenate([attacks, bonafides]))
    mids = (distinct[:-1] + distinct[1:]) / 2.0
    return np.concatenate([[-np.inf], mids, [np.inf]])


def _sweep(attacks: np.ndarray, bonafides: np.ndarray) -> list[OperatingPoint]:
    thresholds = candidate_thresholds(attacks, bonafides)
    apce = len(attacks) - np.searchsorted(attacks, thresholds, side="left")
    bf_err = np.searchsorted(bonafides, thresholds, side="left")
    return [
        OperatingPoint(float(t), int(a), int(b), len(attacks), len(bonafides))
        for t, a, b in zip(thresholds, apce, bf_err)
    ]


def det_curve(scoreset: ScoreSet, manifest: Manifest, test_ids: Iterable[str]) -> DetCurve:
    """Full threshold sweep, anchored at (apcer=1, bpcer=0) and (0, 1)."""
    attacks, bonafides = _split_scores(scoreset, manifest, test_ids)
    return DetCurve(tuple(_sweep(attacks, bonafides)))


def apcer_at_bpcer(scoreset: ScoreSet, manifest: Manifest, test_ids: Iterable[str],
                   target_bpcer: float = 0.002) -> OperatingPoint:
    """Operating point minimising APCER subject to BPCER <= target.

    Among minimisers the lowest BPCER wins, then the lowest threshold. The
    feasibility comparison is exact: bf_error_count <= target * n_bonafides
    evaluated in rational arithmetic, so no float rounding can flip a point
    in or out of the feasible set.
    """
    attacks, bonafides = _split_scores(scoreset, manifest, test_ids)
    limit = decimal_fraction(target_bpcer) * len(bonafides)
    best: OperatingPoint | None = None
    for point in _sweep(attacks, bonafides):
        if point.bf_error_count > limit:
            continue
        if best is None or (point.apce_count, point.bf_error_count, point.threshold) < (
            best.apce_count,
            best.bf_error_count,
            best.threshold,
        ):
            best = point
    assert best is not None  # threshold -inf has bpcer == 0
    return best


def apce_set(scoreset: ScoreSet, manifest: Manifest, test_ids: Iterable[str],
             threshold: float) -> set[str]:
    """Attack ids classified bona fide at the given threshold."""
    apces: set[str] = set()
    missing: list[str] = []
    saw_attack = saw_bona_fide = False
    for sample_id in test_ids:
        record = manifest.get(sample_id)
        if record is None:
            raise UnknownSample(sample_id)
        value = scoreset.scores.get(sample_id)
        if value is None:
            missing.append(sample_id)
            continue
        if record.is_attack:
            saw_attack = True
            if decide(value, threshold) is Decision.BONA_FIDE:
                apces.add(sample_id)
        else:
            saw_bona_fide = True
    if missing:
        raise MissingScores(missing)
    if not (saw_attack and saw_bona_fide):
        raise EmptyClass("test ids must contain at least one attack and one bona fide")
    return apces


def breakdown(apces: set[str], manifest: Manifest, by: str) -> dict[str, int]:
    """APCE counts per species, material, or visual group.

    The key domain covers every value present among the manifest's attacks,
    so an empty APCE set yields an all-zero mapping.
    """
    if by not in ("species", "material", "visual_group"):
        raise ValueError("by must be species, material, or visual_group")

    def key_of(record) -> str:
        if by == "species":
            return record.pai.species
        if by == "material":
            return record.pai.material.value
        return record.pai.visual_group.value

    counts: dict[str, int] = {}
    for record in manifest.attacks():
        counts.setdefault(key_of(record), 0)
    for sample_id in apces:
        record = manifest.get(sample_id)
        if record is None:
            raise UnknownSample(sample_id)
        if not record.is_attack:
            raise ValueError(f"APCE id {sample_id!r} is not an attack")
        counts[key_of(record)] += 1
    return dict(sorted(counts.items()))


def visual_group_ids(manifest: Manifest, group: VisualGroup) -> set[str]:
    return {r.sample_id for r in manifest.attacks() if r.pai.visual_group is group}


def material_group_ids(manifest: Manifest, group) -> set[str]:
    return {
        r.sample_id
        for r in manifest.attacks()
        if material_group_of(r.pai.material) is group
    }


def material_ids(manifest: Manifest, material: Material) -> set[str]:
    return {r.sample_id for r in manifest.attacks() if r.pai.material is material}
