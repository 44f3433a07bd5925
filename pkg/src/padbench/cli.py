"""Command-line front end wiring the toolkit into the experiment flow:

    synth -> partition -> (oneclass-train -> oneclass-score) -> evaluate

Every command is deterministic given its inputs and seed, never mutates its
inputs, and writes outputs atomically. Data errors exit 1 and usage errors
exit 2, both with one JSON error line on stderr.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from . import fusion as fusion_mod
from . import oneclass, report, synth
from .errors import PadBenchError
from .manifest import load_manifest, save_manifest
from .metrics import apce_set, apcer_at_bpcer, breakdown, det_curve
from .partitions import (
    LOO_TOKENS,
    PartitionSpec,
    build_partition,
    load_partition,
    save_partition,
    verify_partition,
)
from .scores import load_scores, save_scores


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        raise SystemExit(2)


def _error_exit(exc: Exception) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return 1


def _safe_name(algorithm_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", algorithm_id)


# --- subcommands -----------------------------------------------------------


def _cmd_synth(args) -> int:
    config = synth.config_from_dict(json.loads(Path(args.config).read_text(encoding="utf-8")))
    out = Path(args.out)
    manifest = synth.synth_manifest(config)
    save_manifest(manifest, out / "manifest.csv")
    cubes = synth.synth_cubes(manifest, config)
    synth.write_cubes(cubes, out / "cubes.bin", out / "cubes_index.csv")
    scoresets = synth.synth_scores(manifest, config.score_profiles, config.seed)
    for scoreset in scoresets:
        save_scores(scoreset, out / "scores" / f"{_safe_name(scoreset.algorithm_id)}.csv")
    return 0


def _cmd_partition(args) -> int:
    manifest = load_manifest(args.manifest)
    spec = PartitionSpec(
        name=args.name or f"{args.kind}-{args.seed}",
        kind=args.kind,
        seed=args.seed,
        pa_train_fraction=args.pa_train_fraction,
        bf_fractions=tuple(args.bf_fractions),
        balanced_train_size=args.balanced_train,
        balanced_validation_size=args.balanced_validation,
        bf_test_size=args.bf_test,
    )
    partition = build_partition(manifest, spec)
    violations = verify_partition(partition, manifest)
    if violations:  # constructive guarantee; treat any hit as a data error
        raise PadBenchError(f"built partition violates constraints: {violations}")
    save_partition(partition, args.out)
    return 0


def _load_scoresets(paths) -> list:
    return [load_scores(path) for path in paths]


def _cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    partition = load_partition(args.partition)
    scoresets = _load_scoresets(args.scores)

    fusion_info = None
    if args.fusion:
        spec = fusion_mod.load_fusion_spec(args.fusion)
        fit_ids = partition.train | partition.validation
        fused = fusion_mod.fuse(spec, scoresets, partition.test, fit_ids=fit_ids)
        scoresets.append(fused)
        fusion_info = {
            "algorithm_id": fused.algorithm_id,
            "components": [{"algorithm": aid, "weight": w} for aid, w in spec.components],
            "normalize": spec.normalize.value,
        }

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    test_ids = sorted(partition.test)
    experiment = report.ExperimentReport(
        partition_name=partition.spec.name,
        target_bpcer=args.target_bpcer,
        fusion=fusion_info,
    )
    apce_sets: dict[str, set] = {}
    for scoreset in scoresets:
        point = apcer_at_bpcer(scoreset, manifest, test_ids, args.target_bpcer)
        experiment.operating_points[scoreset.algorithm_id] = point
        det_name = f"det_{_safe_name(scoreset.algorithm_id)}.csv"
        report.emit_det(det_curve(scoreset, manifest, test_ids), out / det_name)
        experiment.det_files[scoreset.algorithm_id] = det_name
        apce_sets[scoreset.algorithm_id] = apce_set(scoreset, manifest, test_ids, point.threshold)

    fusion_id = fusion_info["algorithm_id"] if fusion_info else None
    for by in ("species", "material", "visual_group"):
        tables = {
            algorithm_id: breakdown(ids, manifest, by)
            for algorithm_id, ids in apce_sets.items()
        }
        name = f"breakdown_{by}.csv"
        report.emit_breakdown(tables, out / name, fusion_id=fusion_id)
        experiment.breakdown_files[by] = name
    report.emit_summary(experiment, out / "summary.json")
    return 0


def _cmd_fuse(args) -> int:
    spec = fusion_mod.load_fusion_spec(args.spec)
    scoresets = _load_scoresets(args.scores)
    common = set(scoresets[0].scores)
    for scoreset in scoresets[1:]:
        common &= set(scoreset.scores)
    fit_ids = None
    if args.partition:
        partition = load_partition(args.partition)
        fit_ids = partition.train | partition.validation
    fused = fusion_mod.fuse(spec, scoresets, common, fit_ids=fit_ids)
    save_scores(fused, args.out)
    return 0


def _cmd_sweep_weights(args) -> int:
    manifest = load_manifest(args.manifest)
    partition = load_partition(args.partition)
    set_a = load_scores(args.a)
    set_b = load_scores(args.b)
    tuning_ids = partition.validation if args.tune == "validation" else partition.test
    ranked = fusion_mod.weight_search(
        set_a, set_b, manifest, tuning_ids, step=args.step, target_bpcer=args.target_bpcer
    )
    lines = ["rank,weight_a,weight_b,threshold,apce_count,bf_error_count,apcer,bpcer"]
    for rank, (weights, point) in enumerate(ranked, start=1):
        lines.append(
            f"{rank},{weights[0]!r},{weights[1]!r},{point.threshold!r},"
            f"{point.apce_count},{point.bf_error_count},{point.apcer!r},{point.bpcer!r}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        from .fileio import atomic_write_text

        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_oneclass_train(args) -> int:
    manifest = load_manifest(args.manifest)
    partition = load_partition(args.partition)
    cube_dir = Path(args.cubes)
    train_bf = sorted(
        sid for sid in partition.train
        if sid in manifest and not manifest[sid].is_attack
    )
    if not train_bf:
        raise PadBenchError("partition train set holds no bona fide samples")
    cubes = synth.read_cubes_subset(cube_dir / "cubes.bin", cube_dir / "cubes_index.csv", train_bf)
    model = oneclass.train([cubes[sid] for sid in train_bf], args.k)
    oneclass.save_model(model, args.out)
    return 0


def _cmd_oneclass_score(args) -> int:
    model = oneclass.load_model(args.model)
    cubes = synth.read_cubes(Path(args.cubes) / "cubes.bin")
    values = oneclass.score_many(model, cubes)
    from .scores import Orientation, ScoreSet

    save_scores(ScoreSet(args.algorithm_id, Orientation.HIGHER_IS_BONA_FIDE, values), args.out)
    return 0


# --- parser ------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="padbench", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic manifest, cubes, and scores")
    p.add_argument("--config", required=True, help="JSON generator config (must set seed)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("partition", help="build the baseline or a leave-one-out partition")
    p.add_argument("--manifest", required=True)
    p.add_argument("--kind", required=True,
                   choices=["baseline"] + [f"loo:{t}" for t in LOO_TOKENS])
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--name", default=None)
    p.add_argument("--pa-train-fraction", type=float, default=0.85)
    p.add_argument("--bf-fractions", type=float, nargs=3, default=[0.50, 0.15, 0.35],
                   metavar=("TRAIN", "VAL", "TEST"))
    p.add_argument("--balanced-train", type=int, default=None,
                   help="baseline per-class train size")
    p.add_argument("--balanced-validation", type=int, default=None,
                   help="baseline per-class validation size")
    p.add_argument("--bf-test", type=int, default=None,
                   help="baseline bona fide test size (surplus is dropped)")
    p.set_defaults(func=_cmd_partition)

    p = sub.add_parser("evaluate", help="operating points, DET curves, APCE breakdowns")
    p.add_argument("--manifest", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--scores", required=True, nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--fusion", default=None, help="optional fusion spec JSON")
    p.add_argument("--target-bpcer", type=float, default=0.002)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("fuse", help="write the weighted fusion of score files")
    p.add_argument("--spec", required=True)
    p.add_argument("--scores", required=True, nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--partition", default=None,
                   help="needed for min-max normalization (fit on train+validation)")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("sweep-weights", help="grid-search two-way fusion weights")
    p.add_argument("--a", required=True, help="first score file")
    p.add_argument("--b", required=True, help="second score file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--tune", choices=["validation", "test"], default="validation")
    p.add_argument("--target-bpcer", type=float, default=0.002)
    p.add_argument("--out", default=None, help="output CSV; stdout when omitted")
    p.set_defaults(func=_cmd_sweep_weights)

    p = sub.add_parser("oneclass-train", help="fit the subspace detector on train bona fides")
    p.add_argument("--cubes", required=True, help="directory holding cubes.bin + cubes_index.csv")
    p.add_argument("--manifest", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--k", required=True, type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_oneclass_train)

    p = sub.add_parser("oneclass-score", help="score every cube with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--cubes", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--algorithm-id", default="swir-oneclass-subspace")
    p.set_defaults(func=_cmd_oneclass_score)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PadBenchError, OSError, ValueError, KeyError) as exc:
        return _error_exit(exc)


if __name__ == "__main__":
    sys.exit(main())
