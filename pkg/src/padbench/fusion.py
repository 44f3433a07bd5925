"""Weighted score-level fusion, complementarity analysis, and weight search.

Fusion is a convex combination of canonical score sets. Complementarity of
two detectors is measured by how many attack misclassifications (APCEs) they
share when each operates at its own fixed-BPCER threshold: detectors with few
identical APCEs cover for each other when fused.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .errors import MissingComponent, MissingScores, WeightSumInvalid
from .fileio import atomic_write_text
from .manifest import Manifest
from .metrics import OperatingPoint, apce_set, apcer_at_bpcer, decimal_fraction
from .scores import Orientation, ScoreSet


class Normalization(Enum):
    NONE = "none"
    MINMAX_TRAINVAL = "minmax_trainval"


@dataclass(frozen=True)
class FusionSpec:
    components: tuple[tuple[str, float], ...]
    normalize: Normalization = Normalization.NONE

    def __post_init__(self):
        if len(self.components) < 2:
            raise WeightSumInvalid("fusion needs at least two components")
        weights = [w for _, w in self.components]
        if any(w < 0 for w in weights):
            raise WeightSumInvalid(f"weights must be non-negative, got {weights}")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise WeightSumInvalid(f"weights must sum to 1, got {sum(weights)!r}")


def fused_algorithm_id(spec: FusionSpec) -> str:
    return "+".join(f"{w:g}*{aid}" for aid, w in spec.components)


def spec_to_json(spec: FusionSpec) -> str:
    payload = {
        "components": [{"algorithm": aid, "weight": w} for aid, w in spec.components],
        "normalize": spec.normalize.value,
    }
    return json.dumps(payload, indent=2) + "\n"


def spec_from_json(text: str) -> FusionSpec:
    data = json.loads(text)
    components = tuple((c["algorithm"], float(c["weight"])) for c in data["components"])
    return FusionSpec(components, Normalization(data.get("normalize", "none")))


def save_fusion_spec(spec: FusionSpec, path: str | Path) -> None:
    atomic_write_text(path, spec_to_json(spec))


def load_fusion_spec(path: str | Path) -> FusionSpec:
    return spec_from_json(Path(path).read_text(encoding="utf-8"))


def _component_sets(spec: FusionSpec, scoresets: Sequence[ScoreSet]) -> list[ScoreSet]:
    by_id = {s.algorithm_id: s for s in scoresets}
    out = []
    for algorithm_id, _ in spec.components:
        if algorithm_id not in by_id:
            raise MissingComponent(algorithm_id)
        out.append(by_id[algorithm_id])
    return out


def _minmax(values: Iterable[float]) -> tuple[float, float]:
    lo = min(values)
    hi = max(values)
    return lo, hi


def fuse(spec: FusionSpec, scoresets: Sequence[ScoreSet], ids: Iterable[str],
         fit_ids: Iterable[str] | None = None) -> ScoreSet:
    """Per-sample weighted sum over the given ids.

    With min-max normalization, the affine map for each component is fitted
    on `fit_ids` only (train plus validation in the intended flow) and then
    applied to every fused id, so test scores never influence the fit.
    """
    ids = sorted(set(ids))
    components = _component_sets(spec, scoresets)
    missing = [
        sid for sid in ids for comp in components if sid not in comp.scores
    ]
    if missing:
        raise MissingScores(missing)

    transforms: list[tuple[float, float]] = []
    if spec.normalize is Normalization.MINMAX_TRAINVAL:
        if fit_ids is None:
            raise ValueError("minmax normalization requires fit_ids")
        fit_ids = sorted(set(fit_ids))
        fit_missing = [
            sid for sid in fit_ids for comp in components if sid not in comp.scores
        ]
        if fit_missing:
            raise MissingScores(fit_missing)
        for comp in components:
            lo, hi = _minmax([comp.scores[sid] for sid in fit_ids])
            transforms.append((lo, hi))
    else:
        transforms = [(0.0, 1.0)] * len(components)

    def component_value(comp: ScoreSet, lo: float, hi: float, sid: str) -> float:
        raw = comp.scores[sid]
        if spec.normalize is Normalization.NONE:
            return raw
        if hi == lo:
            return 0.5
        return (raw - lo) / (hi - lo)

    fused = {}
    for sid in ids:
        fused[sid] = sum(
            w * component_value(comp, lo, hi, sid)
            for (comp, (lo, hi)), (_, w) in zip(zip(components, transforms), spec.components)
        )
    return ScoreSet(fused_algorithm_id(spec), Orientation.HIGHER_IS_BONA_FIDE, fused)


def identical_apces(set_a: ScoreSet, set_b: ScoreSet, manifest: Manifest,
                    test_ids: Iterable[str], target_bpcer: float = 0.002) -> tuple[int, float]:
    """Count of attack errors shared by both detectors, each operating at its
    own fixed-BPCER threshold, plus the count as a fraction of test attacks."""
    test_ids = sorted(set(test_ids))
    point_a = apcer_at_bpcer(set_a, manifest, test_ids, target_bpcer)
    point_b = apcer_at_bpcer(set_b, manifest, test_ids, target_bpcer)
    apces_a = apce_set(set_a, manifest, test_ids, point_a.threshold)
    apces_b = apce_set(set_b, manifest, test_ids, point_b.threshold)
    shared = len(apces_a & apces_b)
    return shared, shared / point_a.n_attacks


def weight_grid(step: float) -> list[Fraction]:
    """Exact grid {0, step, 2*step, ..., 1}; step must divide 1 evenly."""
    frac = decimal_fraction(step)
    if frac <= 0 or (1 / frac).denominator != 1:
        raise ValueError(f"step {step!r} does not divide 1 in rational arithmetic")
    n = int(1 / frac)
    return [Fraction(i, n) for i in range(n + 1)]


def weight_search(alg_a: ScoreSet, alg_b: ScoreSet, manifest: Manifest,
                  tuning_ids: Iterable[str], step: float = 0.01,
                  target_bpcer: float = 0.002) -> list[tuple[tuple[float, float], OperatingPoint]]:
    """Exhaustive sweep of two-way fusion weights, ranked by APCER at the
    fixed-BPCER point on the tuning ids; ties prefer the most balanced
    weights, then the lower first weight."""
    tuning_ids = sorted(set(tuning_ids))
    results = []
    for w in weight_grid(step):
        weights = (float(w), float(1 - w))
        spec = FusionSpec(((alg_a.algorithm_id, weights[0]), (alg_b.algorithm_id, weights[1])))
        fused = fuse(spec, [alg_a, alg_b], tuning_ids)
        point = apcer_at_bpcer(fused, manifest, tuning_ids, target_bpcer)
        results.append((weights, point))
    results.sort(key=lambda item: (item[1].apce_count, abs(item[0][0] - 0.5), item[0][0]))
    return results
