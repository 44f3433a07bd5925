"""Dataset data model: sample records, PAI taxonomy, and manifest CSV I/O.

A manifest is the complete list of presentations in a dataset. Attack
presentations carry a PAI tag (species, material, visual group, variation);
bona fide presentations carry none. Materials and visual groups are closed
enums restricted to the combinations that occur in the reference database;
species strings are free-form.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DuplicateId, InconsistentLabel, MalformedRow, UnknownMaterial
from .fileio import atomic_write_text

CSV_HEADER = "sample_id,subject_id,session_id,label,species,material,visual_group,variation,modalities"


class Label(Enum):
    BONA_FIDE = "bonafide"
    ATTACK = "attack"


class Material(Enum):
    PRINTED_3D = "3d_printed"
    DENTAL_MATERIAL = "dental_material"
    DRAGON_SKIN = "dragon_skin"
    ECOFLEX = "ecoflex"
    LATEX = "latex"
    PLAYDOH = "playdoh"
    SILLY_PUTTY = "silly_putty"
    WAX = "wax"
    BANDAGE_PLASTER = "bandage_plaster"
    GELATIN = "gelatin"
    PRINTOUT_PAPER = "printout_paper"
    PRINTOUT_FOIL = "printout_foil"
    SILICONE = "silicone"
    URETHANE = "urethane"
    GLUE = "glue"


class VisualGroup(Enum):
    FAKEFINGER = "fakefinger"
    OVERLAY_OPAQUE = "overlay_opaque"
    OVERLAY_TRANSPARENT = "overlay_transparent"
    OVERLAY_SEMI = "overlay_semi"


class Modality(Enum):
    SWIR = "swir"
    LASER = "laser"


class MaterialGroup(Enum):
    G1 = "mat1"
    G2 = "mat2"
    G3 = "mat3"
    G4 = "mat4"


# Urethane is folded into the silicone group so that group totals reconcile
# with the overlay counts; bandage plaster belongs to no material group.
MATERIAL_GROUPS: dict[MaterialGroup, frozenset[Material]] = {
    MaterialGroup.G1: frozenset({Material.SILICONE, Material.URETHANE}),
    MaterialGroup.G2: frozenset({Material.DRAGON_SKIN, Material.ECOFLEX}),
    MaterialGroup.G3: frozenset(
        {
            Material.GELATIN,
            Material.GLUE,
            Material.LATEX,
            Material.PRINTOUT_PAPER,
            Material.PRINTOUT_FOIL,
            Material.WAX,
        }
    ),
    MaterialGroup.G4: frozenset(
        {
            Material.PRINTED_3D,
            Material.DENTAL_MATERIAL,
            Material.PLAYDOH,
            Material.SILLY_PUTTY,
        }
    ),
}


def material_group_of(material: Material) -> MaterialGroup | None:
    for group, members in MATERIAL_GROUPS.items():
        if material in members:
            return group
    return None


@dataclass(frozen=True)
class CompositionRow:
    """One (visual group, material) row of the reference database: how many
    fabrication variations exist and how many samples they total."""

    visual_group: VisualGroup
    material: Material
    variations: int
    samples: int


# Reference database composition: 45 PAI species (one per variation),
# 4,339 attack samples in total, alongside 19,711 bona fides.
DATASET_COMPOSITION: tuple[CompositionRow, ...] = (
    CompositionRow(VisualGroup.FAKEFINGER, Material.PRINTED_3D, 2, 72),
    CompositionRow(VisualGroup.FAKEFINGER, Material.DENTAL_MATERIAL, 1, 33),
    CompositionRow(VisualGroup.FAKEFINGER, Material.DRAGON_SKIN, 3, 477),
    CompositionRow(VisualGroup.FAKEFINGER, Material.ECOFLEX, 4, 291),
    CompositionRow(VisualGroup.FAKEFINGER, Material.LATEX, 2, 147),
    CompositionRow(VisualGroup.FAKEFINGER, Material.PLAYDOH, 4, 116),
    CompositionRow(VisualGroup.FAKEFINGER, Material.SILLY_PUTTY, 3, 55),
    CompositionRow(VisualGroup.FAKEFINGER, Material.WAX, 1, 74),
    CompositionRow(VisualGroup.OVERLAY_OPAQUE, Material.BANDAGE_PLASTER, 1, 14),
    CompositionRow(VisualGroup.OVERLAY_OPAQUE, Material.DENTAL_MATERIAL, 1, 51),
    CompositionRow(VisualGroup.OVERLAY_OPAQUE, Material.DRAGON_SKIN, 1, 17),
    CompositionRow(VisualGroup.OVERLAY_OPAQUE, Material.ECOFLEX, 2, 1035),
    CompositionRow(VisualGroup.OVERLAY_OPAQUE, Material.GELATIN, 1, 194),
    CompositionRow(VisualGroup.OVERLAY_OPAQUE, Material.PRINTOUT_PAPER, 1, 49),
    CompositionRow(VisualGroup.OVERLAY_OPAQUE, Material.SILICONE, 4, 752),
    CompositionRow(VisualGroup.OVERLAY_OPAQUE, Material.URETHANE, 1, 72),
    CompositionRow(VisualGroup.OVERLAY_TRANSPARENT, Material.DRAGON_SKIN, 1, 106),
    CompositionRow(VisualGroup.OVERLAY_TRANSPARENT, Material.GELATIN, 1, 107),
    CompositionRow(VisualGroup.OVERLAY_TRANSPARENT, Material.GLUE, 2, 27),
    CompositionRow(VisualGroup.OVERLAY_TRANSPARENT, Material.LATEX, 1, 34),
    CompositionRow(VisualGroup.OVERLAY_TRANSPARENT, Material.PRINTOUT_FOIL, 1, 64),
    CompositionRow(VisualGroup.OVERLAY_TRANSPARENT, Material.SILICONE, 1, 157),
    CompositionRow(VisualGroup.OVERLAY_TRANSPARENT, Material.WAX, 1, 18),
    CompositionRow(VisualGroup.OVERLAY_SEMI, Material.DRAGON_SKIN, 1, 47),
    CompositionRow(VisualGroup.OVERLAY_SEMI, Material.ECOFLEX, 1, 24),
    CompositionRow(VisualGroup.OVERLAY_SEMI, Material.GLUE, 2, 146),
    CompositionRow(VisualGroup.OVERLAY_SEMI, Material.SILICONE, 1, 160),
)

REFERENCE_BONA_FIDE_COUNT = 19_711

ALLOWED_PAI_COMBINATIONS: frozenset[tuple[Material, VisualGroup]] = frozenset(
    (row.material, row.visual_group) for row in DATASET_COMPOSITION
)


@dataclass(frozen=True)
class PaiTag:
    species: str
    material: Material
    visual_group: VisualGroup
    variation: str

    def __post_init__(self):
        if (self.material, self.visual_group) not in ALLOWED_PAI_COMBINATIONS:
            raise ValueError(
                f"material {self.material.value!r} never occurs as {self.visual_group.value!r}"
            )


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    subject_id: str
    session_id: str
    label: Label
    pai: PaiTag | None = None
    modalities: frozenset[Modality] = frozenset({Modality.SWIR, Modality.LASER})

    def __post_init__(self):
        if self.label is Label.ATTACK and self.pai is None:
            raise InconsistentLabel(self.sample_id, "attack without PAI tag")
        if self.label is Label.BONA_FIDE and self.pai is not None:
            raise InconsistentLabel(self.sample_id, "bona fide with PAI tag")

    @property
    def is_attack(self) -> bool:
        return self.label is Label.ATTACK


class Manifest:
    """Immutable, id-indexed collection of sample records."""

    def __init__(self, records: Iterable[SampleRecord]):
        by_id: dict[str, SampleRecord] = {}
        for record in records:
            if record.sample_id in by_id:
                raise DuplicateId(record.sample_id)
            by_id[record.sample_id] = record
        self._by_id = {sid: by_id[sid] for sid in sorted(by_id)}
        self._records = tuple(self._by_id.values())

    @property
    def records(self) -> tuple[SampleRecord, ...]:
        return self._records

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[SampleRecord]:
        return iter(self._records)

    def __contains__(self, sample_id: str) -> bool:
        return sample_id in self._by_id

    def __eq__(self, other) -> bool:
        return isinstance(other, Manifest) and self._records == other._records

    def get(self, sample_id: str) -> SampleRecord | None:
        return self._by_id.get(sample_id)

    def __getitem__(self, sample_id: str) -> SampleRecord:
        return self._by_id[sample_id]

    def ids(self) -> tuple[str, ...]:
        return tuple(self._by_id)

    def attacks(self) -> tuple[SampleRecord, ...]:
        return tuple(r for r in self._records if r.is_attack)

    def bona_fides(self) -> tuple[SampleRecord, ...]:
        return tuple(r for r in self._records if not r.is_attack)


@dataclass
class GroupCounts:
    """Attack-sample counts per visual group and per material group."""

    visual: dict[VisualGroup, int] = field(default_factory=dict)
    material: dict[MaterialGroup, int] = field(default_factory=dict)
    ungrouped_material: int = 0
    total_attacks: int = 0


def group_counts(manifest: Manifest) -> GroupCounts:
    counts = GroupCounts(
        visual={g: 0 for g in VisualGroup},
        material={g: 0 for g in MaterialGroup},
    )
    for record in manifest.attacks():
        counts.total_attacks += 1
        counts.visual[record.pai.visual_group] += 1
        group = material_group_of(record.pai.material)
        if group is None:
            counts.ungrouped_material += 1
        else:
            counts.material[group] += 1
    return counts


_MATERIALS = {m.value: m for m in Material}
_VISUAL_GROUPS = {g.value: g for g in VisualGroup}
_MODALITIES = {m.value: m for m in Modality}


def _parse_row(line_no: int, row: list[str]) -> SampleRecord:
    if len(row) != 9:
        raise MalformedRow(line_no, f"expected 9 columns, got {len(row)}")
    sample_id, subject_id, session_id, label_s, species, material_s, visual_s, variation, modalities_s = (
        value.strip() for value in row
    )
    if not sample_id:
        raise MalformedRow(line_no, "empty sample_id")
    if not subject_id:
        raise MalformedRow(line_no, "empty subject_id")
    if not session_id:
        raise MalformedRow(line_no, "empty session_id")
    if label_s not in ("bonafide", "attack"):
        raise MalformedRow(line_no, f"label must be bonafide or attack, got {label_s!r}")
    label = Label.ATTACK if label_s == "attack" else Label.BONA_FIDE

    if not modalities_s:
        raise MalformedRow(line_no, "empty modalities")
    modalities = set()
    for token in modalities_s.split("+"):
        if token not in _MODALITIES:
            raise MalformedRow(line_no, f"unknown modality {token!r}")
        modalities.add(_MODALITIES[token])

    pai = None
    if label is Label.ATTACK:
        if not species:
            raise InconsistentLabel(sample_id, "attack row without species")
        if material_s not in _MATERIALS:
            raise UnknownMaterial(material_s)
        if visual_s not in _VISUAL_GROUPS:
            raise MalformedRow(line_no, f"unknown visual group {visual_s!r}")
        try:
            pai = PaiTag(species, _MATERIALS[material_s], _VISUAL_GROUPS[visual_s], variation)
        except ValueError as exc:
            raise MalformedRow(line_no, str(exc)) from exc
    else:
        if species or material_s or visual_s or variation:
            raise InconsistentLabel(sample_id, "bona fide row with PAI columns")

    return SampleRecord(sample_id, subject_id, session_id, label, pai, frozenset(modalities))


def load_manifest(path: str | Path) -> Manifest:
    """Parse a manifest CSV; rejects duplicates and label/PAI mismatches."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "missing header") from None
        if ",".join(h.strip() for h in header) != CSV_HEADER:
            raise MalformedRow(1, f"header must be exactly {CSV_HEADER!r}")
        records = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            records.append(_parse_row(line_no, row))
    return Manifest(records)


def _format_row(record: SampleRecord) -> list[str]:
    pai = record.pai
    return [
        record.sample_id,
        record.subject_id,
        record.session_id,
        record.label.value,
        pai.species if pai else "",
        pai.material.value if pai else "",
        pai.visual_group.value if pai else "",
        pai.variation if pai else "",
        "+".join(sorted(m.value for m in record.modalities)),
    ]


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    """Write records sorted by sample_id; load(save(m)) == m."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for record in manifest:
        writer.writerow(_format_row(record))
    atomic_write_text(path, buf.getvalue())
