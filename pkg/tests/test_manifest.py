import pytest

from helpers import attack_record, bf_record
from padbench.errors import (
    DuplicateId,
    InconsistentLabel,
    MalformedRow,
    UnknownMaterial,
)
from padbench.manifest import (
    CSV_HEADER,
    Label,
    Manifest,
    Material,
    MaterialGroup,
    PaiTag,
    SampleRecord,
    VisualGroup,
    group_counts,
    load_manifest,
    material_group_of,
    save_manifest,
)


def write_manifest(tmp_path, rows, header=CSV_HEADER):
    path = tmp_path / "manifest.csv"
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    return path


class TestLoad:
    def test_round_trip_is_identity(self, tmp_path, tenth_scale_manifest):
        path = tmp_path / "m.csv"
        save_manifest(tenth_scale_manifest, path)
        assert load_manifest(path) == tenth_scale_manifest

    def test_save_is_byte_stable(self, tmp_path, tenth_scale_manifest):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        save_manifest(tenth_scale_manifest, a)
        save_manifest(tenth_scale_manifest, b)
        assert a.read_bytes() == b.read_bytes()

    def test_header_only_file_is_empty_manifest(self, tmp_path):
        manifest = load_manifest(write_manifest(tmp_path, []))
        assert len(manifest) == 0

    def test_attack_without_species_is_inconsistent(self, tmp_path):
        path = write_manifest(
            tmp_path, ["x,subjA,sess1,attack,,dragon_skin,fakefinger,v1,swir+laser"]
        )
        with pytest.raises(InconsistentLabel):
            load_manifest(path)

    def test_bona_fide_with_pai_columns_is_inconsistent(self, tmp_path):
        path = write_manifest(
            tmp_path, ["x,subjA,sess1,bonafide,spec,dragon_skin,fakefinger,v1,swir"]
        )
        with pytest.raises(InconsistentLabel):
            load_manifest(path)

    def test_duplicate_sample_id_rejected(self, tmp_path):
        row = "x,subjA,sess1,bonafide,,,,,swir"
        with pytest.raises(DuplicateId):
            load_manifest(write_manifest(tmp_path, [row, row]))

    def test_unknown_material_rejected(self, tmp_path):
        path = write_manifest(
            tmp_path, ["x,subjA,sess1,attack,sp,plastics,fakefinger,v1,swir"]
        )
        with pytest.raises(UnknownMaterial):
            load_manifest(path)

    def test_wrong_column_count_is_malformed(self, tmp_path):
        with pytest.raises(MalformedRow) as err:
            load_manifest(write_manifest(tmp_path, ["x,subjA,sess1,bonafide"]))
        assert err.value.line == 2

    def test_bad_header_is_malformed(self, tmp_path):
        path = write_manifest(tmp_path, [], header="id,subject")
        with pytest.raises(MalformedRow):
            load_manifest(path)

    def test_missing_subject_is_malformed(self, tmp_path):
        path = write_manifest(tmp_path, ["x,,sess1,bonafide,,,,,swir"])
        with pytest.raises(MalformedRow):
            load_manifest(path)

    def test_combination_outside_reference_table_is_malformed(self, tmp_path):
        # playdoh only exists as a fake finger, never as an overlay
        path = write_manifest(
            tmp_path, ["x,subjA,sess1,attack,sp,playdoh,overlay_opaque,v1,swir"]
        )
        with pytest.raises(MalformedRow):
            load_manifest(path)

    def test_unknown_modality_is_malformed(self, tmp_path):
        path = write_manifest(tmp_path, ["x,subjA,sess1,bonafide,,,,,nir"])
        with pytest.raises(MalformedRow):
            load_manifest(path)


class TestRecords:
    def test_attack_needs_pai(self):
        with pytest.raises(InconsistentLabel):
            SampleRecord("x", "subjA", "sess1", Label.ATTACK, None)

    def test_bona_fide_rejects_pai(self):
        tag = PaiTag("s", Material.DRAGON_SKIN, VisualGroup.FAKEFINGER, "v1")
        with pytest.raises(InconsistentLabel):
            SampleRecord("x", "subjA", "sess1", Label.BONA_FIDE, tag)

    def test_pai_tag_rejects_foreign_combination(self):
        with pytest.raises(ValueError):
            PaiTag("s", Material.PLAYDOH, VisualGroup.OVERLAY_TRANSPARENT, "v1")

    def test_duplicate_ids_rejected_at_construction(self):
        with pytest.raises(DuplicateId):
            Manifest([bf_record("x"), bf_record("x")])


class TestGroupCounts:
    def test_empty_attack_set_gives_zero_counts(self):
        counts = group_counts(Manifest([bf_record("a"), bf_record("b")]))
        assert all(v == 0 for v in counts.visual.values())
        assert all(v == 0 for v in counts.material.values())
        assert counts.total_attacks == 0

    def test_small_hand_built_counts(self):
        manifest = Manifest(
            [
                attack_record("a1"),
                attack_record("a2"),
                attack_record(
                    "a3",
                    material=Material.BANDAGE_PLASTER,
                    visual_group=VisualGroup.OVERLAY_OPAQUE,
                ),
                bf_record("b1"),
            ]
        )
        counts = group_counts(manifest)
        assert counts.visual[VisualGroup.FAKEFINGER] == 2
        assert counts.visual[VisualGroup.OVERLAY_OPAQUE] == 1
        assert counts.material[MaterialGroup.G2] == 2
        assert counts.ungrouped_material == 1  # bandage plaster has no group

    def test_visual_counts_partition_the_attacks(self, tenth_scale_manifest):
        counts = group_counts(tenth_scale_manifest)
        assert sum(counts.visual.values()) == counts.total_attacks
        assert sum(counts.material.values()) + counts.ungrouped_material == counts.total_attacks

    def test_urethane_counts_into_group_one(self):
        assert material_group_of(Material.URETHANE) is MaterialGroup.G1
        assert material_group_of(Material.BANDAGE_PLASTER) is None
