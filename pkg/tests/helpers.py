"""Shared fixtures and independent oracles for the test suite.

The brute-force functions re-derive metric results by direct counting per
threshold, deliberately avoiding the sorted-sweep code path they check.
"""

from __future__ import annotations

import math

import numpy as np

from padbench.manifest import (
    Label,
    Manifest,
    Material,
    Modality,
    PaiTag,
    SampleRecord,
    VisualGroup,
)
from padbench.scores import Orientation, ScoreSet

MODALITIES = frozenset({Modality.SWIR, Modality.LASER})


def bf_record(sample_id: str, subject: str = "subjA", session: str = "sess1") -> SampleRecord:
    return SampleRecord(sample_id, subject, session, Label.BONA_FIDE, None, MODALITIES)


def attack_record(
    sample_id: str,
    subject: str = "subjA",
    material: Material = Material.DRAGON_SKIN,
    visual_group: VisualGroup = VisualGroup.FAKEFINGER,
    variation: str = "v1",
    session: str = "sess1",
) -> SampleRecord:
    species = f"{visual_group.value}/{material.value}/{variation}"
    tag = PaiTag(species, material, visual_group, variation)
    return SampleRecord(sample_id, subject, session, Label.ATTACK, tag, MODALITIES)


def two_class_manifest(n_attacks: int, n_bona_fides: int, n_subjects: int = 4) -> Manifest:
    records = [
        attack_record(f"pa-{i:04d}", subject=f"subj{i % n_subjects}") for i in range(n_attacks)
    ]
    records += [
        bf_record(f"bf-{i:04d}", subject=f"subj{i % n_subjects}") for i in range(n_bona_fides)
    ]
    return Manifest(records)


def scoreset_for(manifest: Manifest, values: dict[str, float],
                 algorithm_id: str = "alg") -> ScoreSet:
    return ScoreSet(algorithm_id, Orientation.HIGHER_IS_BONA_FIDE, values)


def make_scored_manifest(attack_scores, bf_scores, algorithm_id: str = "alg"):
    """Manifest + canonical score set for raw per-class score lists."""
    records, values = [], {}
    for i, s in enumerate(attack_scores):
        records.append(attack_record(f"pa-{i:05d}"))
        values[f"pa-{i:05d}"] = float(s)
    for i, s in enumerate(bf_scores):
        records.append(bf_record(f"bf-{i:05d}"))
        values[f"bf-{i:05d}"] = float(s)
    manifest = Manifest(records)
    scoreset = ScoreSet(algorithm_id, Orientation.HIGHER_IS_BONA_FIDE, values)
    return manifest, scoreset, sorted(values)


# --- brute-force oracles -----------------------------------------------------


def brute_counts(attack_scores, bf_scores, threshold: float) -> tuple[int, int]:
    """Direct counting: attacks accepted bona fide, bona fides rejected."""
    apce = sum(1 for s in attack_scores if s >= threshold)
    bf_err = sum(1 for s in bf_scores if s < threshold)
    return apce, bf_err


def brute_candidates(attack_scores, bf_scores) -> list[float]:
    distinct = sorted(set(attack_scores) | set(bf_scores))
    mids = [(a + b) / 2.0 for a, b in zip(distinct, distinct[1:])]
    return [-math.inf] + mids + [math.inf]


def brute_curve(attack_scores, bf_scores) -> list[tuple[float, int, int]]:
    att = np.asarray(attack_scores)
    bf = np.asarray(bf_scores)
    rows = []
    for threshold in brute_candidates(attack_scores, bf_scores):
        rows.append((threshold, int((att >= threshold).sum()), int((bf < threshold).sum())))
    return rows


def brute_apcer_at_bpcer(attack_scores, bf_scores, target: float) -> tuple[float, int, int]:
    """Exhaustive minimisation over every candidate threshold."""
    from fractions import Fraction
    from decimal import Decimal

    limit = Fraction(Decimal(str(target))) * len(bf_scores)
    best = None
    for threshold, apce, bf_err in brute_curve(attack_scores, bf_scores):
        if bf_err > limit:
            continue
        key = (apce, bf_err, threshold)
        if best is None or key < best:
            best = key
    apce, bf_err, threshold = best[0], best[1], best[2]
    return threshold, apce, bf_err
