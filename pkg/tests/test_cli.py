import json
import subprocess
import sys

import pytest

from padbench.cli import main
from padbench.manifest import load_manifest
from padbench.partitions import load_partition, loo_holdout_ids
from padbench.scores import load_scores

CONFIG = {
    "seed": 97,
    "scale": 0.05,
    "algorithms": ["laser-cnn-vggface", "swir-cnn-mobilenetv2"],
}
FUSION_SPEC = {
    "components": [
        {"algorithm": "laser-cnn-vggface", "weight": 0.16},
        {"algorithm": "swir-cnn-mobilenetv2", "weight": 0.84},
    ],
    "normalize": "none",
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One full pipeline run shared by the checks below."""
    root = tmp_path_factory.mktemp("cli")
    (root / "synth.json").write_text(json.dumps(CONFIG), encoding="utf-8")
    (root / "fusion.json").write_text(json.dumps(FUSION_SPEC), encoding="utf-8")
    data = root / "data"
    assert main(["synth", "--config", str(root / "synth.json"), "--out", str(data)]) == 0

    manifest = str(data / "manifest.csv")
    assert main([
        "partition", "--manifest", manifest, "--kind", "baseline",
        "--seed", "97", "--out", str(root / "baseline.json"),
    ]) == 0
    assert main([
        "partition", "--manifest", manifest, "--kind", "loo:transparent",
        "--seed", "97", "--out", str(root / "transparent.json"),
    ]) == 0

    assert main([
        "oneclass-train", "--cubes", str(data), "--manifest", manifest,
        "--partition", str(root / "baseline.json"), "--k", "4",
        "--out", str(root / "model.bin"),
    ]) == 0
    assert main([
        "oneclass-score", "--model", str(root / "model.bin"), "--cubes", str(data),
        "--out", str(root / "scores_oneclass.csv"),
    ]) == 0

    assert main([
        "evaluate", "--manifest", manifest, "--partition", str(root / "transparent.json"),
        "--scores", str(data / "scores" / "laser-cnn-vggface.csv"),
        str(data / "scores" / "swir-cnn-mobilenetv2.csv"),
        "--fusion", str(root / "fusion.json"), "--out", str(root / "eval"),
    ]) == 0
    return root


def test_synth_outputs_exist(workspace):
    data = workspace / "data"
    for name in ("manifest.csv", "cubes.bin", "cubes_index.csv"):
        assert (data / name).exists()
    assert (data / "scores" / "laser-cnn-vggface.csv").exists()
    assert (data / "scores" / "swir-cnn-mobilenetv2.csv").exists()


def test_loo_partition_holds_group_in_test(workspace):
    manifest = load_manifest(workspace / "data" / "manifest.csv")
    partition = load_partition(workspace / "transparent.json")
    holdout = loo_holdout_ids(manifest, "transparent")
    test_attacks = {sid for sid in partition.test if manifest[sid].is_attack}
    assert holdout == test_attacks


def test_oneclass_scorefile_is_canonical(workspace):
    scoreset = load_scores(workspace / "scores_oneclass.csv")
    assert scoreset.algorithm_id == "swir-oneclass-subspace"
    assert all(v <= 0.0 for v in scoreset.scores.values())


def test_evaluate_emits_referenced_files(workspace):
    out = workspace / "eval"
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["fusion"]["components"][0]["weight"] == 0.16
    for entry in summary["algorithms"].values():
        assert (out / entry["det_file"]).exists()
    for name in summary["breakdown_files"].values():
        assert (out / name).exists()
    fused_id = summary["fusion"]["algorithm_id"]
    assert fused_id in summary["algorithms"]


def test_breakdown_totals_match_summary_counts(workspace):
    out = workspace / "eval"
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    lines = (out / "breakdown_visual_group.csv").read_text().splitlines()
    header = lines[0].split(",")[1:]
    totals = [int(v) for v in lines[-1].split(",")[1:]]
    for algorithm_id, total in zip(header, totals):
        assert summary["algorithms"][algorithm_id]["apce_count"] == total


def test_evaluate_is_idempotent(workspace, tmp_path):
    manifest = str(workspace / "data" / "manifest.csv")
    args = [
        "evaluate", "--manifest", manifest,
        "--partition", str(workspace / "transparent.json"),
        "--scores", str(workspace / "data" / "scores" / "laser-cnn-vggface.csv"),
        str(workspace / "data" / "scores" / "swir-cnn-mobilenetv2.csv"),
        "--out", str(tmp_path / "eval2"),
    ]
    assert main(args) == 0
    first = {p.name: p.read_bytes() for p in (tmp_path / "eval2").iterdir()}
    assert main(args) == 0
    second = {p.name: p.read_bytes() for p in (tmp_path / "eval2").iterdir()}
    assert first == second


def test_fuse_writes_weighted_scores(workspace, tmp_path):
    out = tmp_path / "fused.csv"
    assert main([
        "fuse", "--spec", str(workspace / "fusion.json"),
        "--scores", str(workspace / "data" / "scores" / "laser-cnn-vggface.csv"),
        str(workspace / "data" / "scores" / "swir-cnn-mobilenetv2.csv"),
        "--out", str(out),
    ]) == 0
    fused = load_scores(out)
    a = load_scores(workspace / "data" / "scores" / "laser-cnn-vggface.csv")
    b = load_scores(workspace / "data" / "scores" / "swir-cnn-mobilenetv2.csv")
    sid = sorted(fused.scores)[0]
    assert fused.scores[sid] == pytest.approx(0.16 * a.scores[sid] + 0.84 * b.scores[sid])


def test_sweep_weights_writes_ranked_grid(workspace, tmp_path):
    out = tmp_path / "sweep.csv"
    assert main([
        "sweep-weights", "--a", str(workspace / "data" / "scores" / "laser-cnn-vggface.csv"),
        "--b", str(workspace / "data" / "scores" / "swir-cnn-mobilenetv2.csv"),
        "--manifest", str(workspace / "data" / "manifest.csv"),
        "--partition", str(workspace / "transparent.json"),
        "--step", "0.5", "--tune", "validation", "--out", str(out),
    ]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 4  # header + grid {0, 0.5, 1}
    assert lines[0].startswith("rank,weight_a,weight_b")
    weights = sorted(float(line.split(",")[1]) for line in lines[1:])
    assert weights == [0.0, 0.5, 1.0]


def test_data_error_exits_one_with_json_line(capsys):
    rc = main(["partition", "--manifest", "does-not-exist.csv", "--kind", "baseline",
               "--seed", "1", "--out", "x.json"])
    assert rc == 1
    err = json.loads(capsys.readouterr().err.strip())
    assert "message" in err and err["error"]


def test_usage_error_exits_two_with_json_line(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["partition", "--kind", "baseline"])
    assert exc.value.code == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "usage"


def test_help_exits_zero():
    for args in (["--help"], ["evaluate", "--help"], ["synth", "--help"]):
        with pytest.raises(SystemExit) as exc:
            main(args)
        assert exc.value.code == 0


def test_subprocess_entry_point_smoke(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "padbench.cli", "evaluate", "--manifest", "missing.csv",
         "--partition", "missing.json", "--scores", "none.csv", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 1
    assert json.loads(proc.stderr.strip().splitlines()[-1])["error"]
