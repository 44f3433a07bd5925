"""Deterministic construction and verification of evaluation partitions.

Two partition families exist. The baseline partition stratifies every PAI
species across train/validation/test, keeps train and validation class
balanced, and keeps bona fide subjects disjoint between train+validation
and test (surplus bona fides are dropped from the partition, mirroring how
the reference protocol removed samples to obtain balanced sets). The nine
leave-one-out partitions hold a complete visual or material group back for
testing, split the remaining attacks 85/15, and reuse one seeded bona fide
assignment for every group so that LOO results stay comparable.

All shuffles run on splitmix64 streams keyed by (seed, purpose), so a
(manifest, spec) pair maps to exactly one partition on every platform.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

from .errors import (
    EmptyTrainingAttacks,
    InfeasibleBalance,
    InfeasibleSubjectSplit,
    UnknownGroup,
    UnknownSample,
)
from .fileio import atomic_write_text
from .manifest import Manifest, MaterialGroup, VisualGroup, material_group_of
from .metrics import decimal_fraction
from .rng import SplitMix64, derive_seed

BASELINE_KIND = "baseline"

VISUAL_TOKENS = {
    "fakefinger": VisualGroup.FAKEFINGER,
    "opaque": VisualGroup.OVERLAY_OPAQUE,
    "transparent": VisualGroup.OVERLAY_TRANSPARENT,
    "semi": VisualGroup.OVERLAY_SEMI,
}
MATERIAL_TOKENS = {g.value: g for g in MaterialGroup}
ALL_OVERLAYS_TOKEN = "overlay"
LOO_TOKENS = tuple(VISUAL_TOKENS) + (ALL_OVERLAYS_TOKEN,) + tuple(MATERIAL_TOKENS)


@dataclass(frozen=True)
class PartitionSpec:
    name: str
    kind: str  # "baseline" or "loo:<group token>"
    seed: int
    pa_train_fraction: float = 0.85
    bf_fractions: tuple[float, float, float] = (0.50, 0.15, 0.35)
    # baseline only: per-class train/validation sizes and an optional bona
    # fide test size; None derives sizes from bf_fractions of the attack count
    balanced_train_size: int | None = None
    balanced_validation_size: int | None = None
    bf_test_size: int | None = None

    def __post_init__(self):
        if self.kind != BASELINE_KIND:
            if not self.kind.startswith("loo:") or self.kind[4:] not in LOO_TOKENS:
                raise UnknownGroup(self.kind)
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if not 0.0 < self.pa_train_fraction < 1.0:
            raise ValueError("pa_train_fraction must lie in (0, 1)")
        if len(self.bf_fractions) != 3 or any(not 0.0 < f < 1.0 for f in self.bf_fractions):
            raise ValueError("bf_fractions must be three ratios in (0, 1)")
        if abs(sum(self.bf_fractions) - 1.0) > 1e-9:
            raise ValueError("bf_fractions must sum to 1")

    @property
    def is_baseline(self) -> bool:
        return self.kind == BASELINE_KIND

    @property
    def group_token(self) -> str | None:
        return None if self.is_baseline else self.kind[4:]


@dataclass(frozen=True)
class Partition:
    spec: PartitionSpec
    train: frozenset[str]
    validation: frozenset[str]
    test: frozenset[str]


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str
    ids: tuple[str, ...] = ()


def loo_holdout_ids(manifest: Manifest, token: str) -> set[str]:
    """Attack ids belonging to the named held-out group."""
    if token == ALL_OVERLAYS_TOKEN:
        return {
            r.sample_id
            for r in manifest.attacks()
            if r.pai.visual_group is not VisualGroup.FAKEFINGER
        }
    if token in VISUAL_TOKENS:
        group = VISUAL_TOKENS[token]
        return {r.sample_id for r in manifest.attacks() if r.pai.visual_group is group}
    if token in MATERIAL_TOKENS:
        group = MATERIAL_TOKENS[token]
        return {
            r.sample_id
            for r in manifest.attacks()
            if material_group_of(r.pai.material) is group
        }
    raise UnknownGroup(token)


def _floor_frac(fraction: Fraction, n: int) -> int:
    return math.floor(fraction * n)


def _half_up(fraction: Fraction, n: int) -> int:
    return math.floor(fraction * n + Fraction(1, 2))


# --- baseline ------------------------------------------------------------


def _species_bounds(count: int) -> tuple[int, int, int, int]:
    """(min_train, max_train, min_val, max_val_ignoring_train) for a species.

    Every species keeps at least one sample in test; species with >= 3
    samples must appear in all three sets; a 2-sample species goes to train
    and test; a singleton goes to test only.
    """
    if count >= 3:
        return 1, count - 2, 1, count - 2
    if count == 2:
        return 1, 1, 0, 0
    return 0, 0, 0, 0


def _largest_remainder(targets: dict[str, Fraction], base: dict[str, int],
                       lo: dict[str, int], hi: dict[str, int], total: int) -> dict[str, int]:
    """Adjust integer allocations to sum to `total` within [lo, hi] bounds,
    moving the units with the largest (resp. smallest) fractional remainder
    first; ties resolve by species name for determinism."""
    alloc = dict(base)
    deficit = total - sum(alloc.values())
    while deficit != 0:
        if deficit > 0:
            order = sorted(alloc, key=lambda s: (-(targets[s] - alloc[s]), s))
            movable = [s for s in order if alloc[s] < hi[s]]
            if not movable:
                raise InfeasibleBalance("species allocation cannot reach the target size")
            for s in movable[:deficit]:
                alloc[s] += 1
        else:
            order = sorted(alloc, key=lambda s: ((targets[s] - alloc[s]), s))
            movable = [s for s in order if alloc[s] > lo[s]]
            if not movable:
                raise InfeasibleBalance("species allocation cannot shrink to the target size")
            for s in movable[:-deficit]:
                alloc[s] -= 1
        deficit = total - sum(alloc.values())
    return alloc


def _allocate_species(counts: dict[str, int], target: int, lo: dict[str, int],
                      hi: dict[str, int]) -> dict[str, int]:
    total = sum(counts.values())
    targets = {s: Fraction(c * target, total) for s, c in counts.items()}
    base = {s: min(max(math.floor(targets[s]), lo[s]), hi[s]) for s in counts}
    return _largest_remainder(targets, base, lo, hi, target)


def _baseline_attacks(manifest: Manifest, spec: PartitionSpec,
                      t_train: int, t_val: int) -> tuple[list[str], list[str], list[str]]:
    by_species: dict[str, list[str]] = {}
    for record in manifest.attacks():
        by_species.setdefault(record.pai.species, []).append(record.sample_id)
    counts = {s: len(ids) for s, ids in by_species.items()}
    n_pa = sum(counts.values())
    if t_train + t_val >= n_pa:
        raise InfeasibleBalance(
            f"need {t_train}+{t_val} attacks for train/validation but only {n_pa} exist"
        )

    lo_tr, hi_tr, lo_va = {}, {}, {}
    for s, c in counts.items():
        mn_tr, mx_tr, mn_va, _ = _species_bounds(c)
        lo_tr[s], hi_tr[s], lo_va[s] = mn_tr, mx_tr, mn_va
    train_alloc = _allocate_species(counts, t_train, lo_tr, hi_tr)
    hi_va = {s: counts[s] - train_alloc[s] - 1 for s in counts}
    if any(hi_va[s] < lo_va[s] for s in counts):
        raise InfeasibleBalance("no room left for validation samples of some species")
    val_alloc = _allocate_species(counts, t_val, lo_va, hi_va)

    train, val, test = [], [], []
    for species in sorted(by_species):
        ids = sorted(by_species[species])
        SplitMix64(derive_seed(spec.seed, "baseline:attacks", species)).shuffle(ids)
        a, b = train_alloc[species], val_alloc[species]
        train += ids[:a]
        val += ids[a:a + b]
        test += ids[a + b:]
    return train, val, test


def _baseline_bona_fides(manifest: Manifest, spec: PartitionSpec,
                         t_train: int, t_val: int) -> tuple[list[str], list[str], list[str]]:
    by_subject: dict[str, list[str]] = {}
    for record in manifest.bona_fides():
        by_subject.setdefault(record.subject_id, []).append(record.sample_id)
    pool_target = t_train + t_val

    subjects = sorted(by_subject)
    SplitMix64(derive_seed(spec.seed, "baseline:bf-subjects")).shuffle(subjects)
    pool_ids: list[str] = []
    test_ids: list[str] = []
    for subject in subjects:
        if len(pool_ids) < pool_target:
            pool_ids += by_subject[subject]
        else:
            test_ids += by_subject[subject]
    if len(pool_ids) < pool_target:
        raise InfeasibleBalance(
            f"need {pool_target} bona fides for train/validation but only {len(pool_ids)} exist"
        )
    if not test_ids:
        raise InfeasibleSubjectSplit(
            "every subject is needed to fill train/validation; none left for test"
        )

    pool_ids.sort()
    SplitMix64(derive_seed(spec.seed, "baseline:bf-pool")).shuffle(pool_ids)
    train = pool_ids[:t_train]
    val = pool_ids[t_train:pool_target]
    # pool overflow beyond the balanced sizes is dropped from the partition

    test_ids.sort()
    if spec.bf_test_size is not None:
        if len(test_ids) < spec.bf_test_size:
            raise InfeasibleBalance(
                f"bona fide test target {spec.bf_test_size} exceeds the "
                f"{len(test_ids)} samples held by test subjects"
            )
        SplitMix64(derive_seed(spec.seed, "baseline:bf-test")).shuffle(test_ids)
        test_ids = test_ids[: spec.bf_test_size]
    return train, val, sorted(test_ids)


def build_baseline(manifest: Manifest, spec: PartitionSpec) -> Partition:
    """Class-balanced, species-stratified, subject-disjoint baseline split."""
    if not spec.is_baseline:
        raise ValueError("spec.kind must be baseline")
    n_pa = len(manifest.attacks())
    if n_pa == 0 or not manifest.bona_fides():
        raise InfeasibleBalance("manifest must contain both classes")
    t_train = spec.balanced_train_size
    if t_train is None:
        t_train = _half_up(decimal_fraction(spec.bf_fractions[0]), n_pa)
    t_val = spec.balanced_validation_size
    if t_val is None:
        t_val = _half_up(decimal_fraction(spec.bf_fractions[1]), n_pa)
    if t_train < 1 or t_val < 0:
        raise InfeasibleBalance("balanced sizes must be positive")

    pa_train, pa_val, pa_test = _baseline_attacks(manifest, spec, t_train, t_val)
    bf_train, bf_val, bf_test = _baseline_bona_fides(manifest, spec, t_train, t_val)
    return Partition(
        spec=spec,
        train=frozenset(pa_train) | frozenset(bf_train),
        validation=frozenset(pa_val) | frozenset(bf_val),
        test=frozenset(pa_test) | frozenset(bf_test),
    )


# --- leave-one-out --------------------------------------------------------


def build_loo(manifest: Manifest, spec: PartitionSpec) -> Partition:
    """Hold one PAI group out for test; bona fide split depends only on seed."""
    if spec.is_baseline:
        raise ValueError("spec.kind must name a leave-one-out group")
    holdout = loo_holdout_ids(manifest, spec.group_token)
    if not holdout:
        raise InfeasibleBalance(f"held-out group {spec.group_token!r} has no samples")

    remaining = sorted(r.sample_id for r in manifest.attacks() if r.sample_id not in holdout)
    if not remaining:
        raise EmptyTrainingAttacks(
            f"group {spec.group_token!r} covers every attack in the manifest"
        )
    SplitMix64(derive_seed(spec.seed, "loo:attacks")).shuffle(remaining)
    cut = _floor_frac(decimal_fraction(spec.pa_train_fraction), len(remaining))
    pa_train, pa_val = remaining[:cut], remaining[cut:]

    bona_fides = sorted(r.sample_id for r in manifest.bona_fides())
    # keyed by seed only: every LOO spec with this seed gets the same split
    SplitMix64(derive_seed(spec.seed, "loo:bonafides")).shuffle(bona_fides)
    n = len(bona_fides)
    f0 = decimal_fraction(spec.bf_fractions[0])
    f1 = decimal_fraction(spec.bf_fractions[1])
    cut1 = _floor_frac(f0, n)
    cut2 = _floor_frac(f0 + f1, n)
    bf_train, bf_val, bf_test = bona_fides[:cut1], bona_fides[cut1:cut2], bona_fides[cut2:]

    return Partition(
        spec=spec,
        train=frozenset(pa_train) | frozenset(bf_train),
        validation=frozenset(pa_val) | frozenset(bf_val),
        test=holdout | frozenset(bf_test),
    )


def build_partition(manifest: Manifest, spec: PartitionSpec) -> Partition:
    return build_baseline(manifest, spec) if spec.is_baseline else build_loo(manifest, spec)


# --- verification ----------------------------------------------------------


def verify_partition(partition: Partition, manifest: Manifest) -> list[Violation]:
    """Empty list iff every partition invariant holds; one entry per
    violated invariant, carrying the offending sample (or subject) ids."""
    violations: list[Violation] = []
    sets = {
        "train": partition.train,
        "validation": partition.validation,
        "test": partition.test,
    }
    for ids in sets.values():
        for sample_id in ids:
            if sample_id not in manifest:
                raise UnknownSample(sample_id)

    for (name_a, ids_a), (name_b, ids_b) in (
        (("train", partition.train), ("validation", partition.validation)),
        (("train", partition.train), ("test", partition.test)),
        (("validation", partition.validation), ("test", partition.test)),
    ):
        overlap = ids_a & ids_b
        if overlap:
            violations.append(
                Violation("OverlappingSets", f"{name_a} and {name_b} share samples",
                          tuple(sorted(overlap)))
            )

    spec = partition.spec
    if spec.is_baseline:
        for name, ids in (("train", partition.train), ("validation", partition.validation)):
            n_bf = sum(1 for sid in ids if not manifest[sid].is_attack)
            n_pa = len(ids) - n_bf
            if n_bf != n_pa:
                violations.append(
                    Violation("ClassImbalance",
                              f"{name} holds {n_bf} bona fides vs {n_pa} attacks")
                )
        trainval_subjects = {
            manifest[sid].subject_id
            for sid in partition.train | partition.validation
            if not manifest[sid].is_attack
        }
        test_subjects = {
            manifest[sid].subject_id for sid in partition.test if not manifest[sid].is_attack
        }
        overlap_subjects = trainval_subjects & test_subjects
        if overlap_subjects:
            violations.append(
                Violation("SubjectOverlap",
                          "bona fide subjects appear on both sides of the test boundary",
                          tuple(sorted(overlap_subjects)))
            )
    else:
        holdout = loo_holdout_ids(manifest, spec.group_token)
        leaked = holdout & (partition.train | partition.validation)
        if leaked:
            violations.append(
                Violation("LeakedHoldout", "held-out samples reachable during training",
                          tuple(sorted(leaked)))
            )
        missing = holdout - partition.test - partition.train - partition.validation
        if missing:
            violations.append(
                Violation("HoldoutMissingFromTest", "held-out samples absent from test",
                          tuple(sorted(missing)))
            )
    return violations


# --- persistence -----------------------------------------------------------


def _spec_to_dict(spec: PartitionSpec) -> dict:
    return {
        "name": spec.name,
        "kind": spec.kind,
        "seed": spec.seed,
        "pa_train_fraction": spec.pa_train_fraction,
        "bf_fractions": list(spec.bf_fractions),
        "balanced_train_size": spec.balanced_train_size,
        "balanced_validation_size": spec.balanced_validation_size,
        "bf_test_size": spec.bf_test_size,
    }


def _spec_from_dict(data: dict) -> PartitionSpec:
    return PartitionSpec(
        name=data["name"],
        kind=data["kind"],
        seed=data["seed"],
        pa_train_fraction=data.get("pa_train_fraction", 0.85),
        bf_fractions=tuple(data.get("bf_fractions", (0.50, 0.15, 0.35))),
        balanced_train_size=data.get("balanced_train_size"),
        balanced_validation_size=data.get("balanced_validation_size"),
        bf_test_size=data.get("bf_test_size"),
    )


def save_partition(partition: Partition, path: str | Path) -> None:
    payload = {
        "spec": _spec_to_dict(partition.spec),
        "train": sorted(partition.train),
        "validation": sorted(partition.validation),
        "test": sorted(partition.test),
    }
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def load_partition(path: str | Path) -> Partition:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return Partition(
        spec=_spec_from_dict(data["spec"]),
        train=frozenset(data["train"]),
        validation=frozenset(data["validation"]),
        test=frozenset(data["test"]),
    )


def replace_sets(partition: Partition, **kwargs) -> Partition:
    """Copy with some of train/validation/test swapped out (fault injection
    and tooling helper)."""
    return replace(partition, **{k: frozenset(v) for k, v in kwargs.items()})
