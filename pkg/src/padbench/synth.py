"""Synthetic manifests, multispectral sample cubes, and detection scores.

The generator mimics the reference database's class and material structure
at a configurable scale so every pipeline stage can run without restricted
data. Reflectance numbers and score distributions are shipped defaults, not
measurements; they are calibrated only to reproduce qualitative orderings:
skin gets darker towards longer wavelengths, orange playdoh is nearly
indistinguishable from skin in the SWIR bands, thin transparent overlays
blend through most of the skin signal, and laser-style detectors struggle
with dragonskin and playdoh rather than with opaque overlays.

Every random draw is keyed by (seed, purpose, sample_id), so generation is
deterministic and independent of iteration order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from . import container
from .errors import MissingDistribution, MissingProfile
from .manifest import (
    DATASET_COMPOSITION,
    REFERENCE_BONA_FIDE_COUNT,
    Label,
    Manifest,
    Material,
    Modality,
    PaiTag,
    SampleRecord,
    VisualGroup,
)
from .rng import derive_seed, normals
from .scores import Orientation, ScoreSet

SWIR_BANDS_NM = (1200, 1300, 1450, 1550)

# Fabrication variation names per material; playdoh variations are colours
# because only some colours resemble skin.
_PLAYDOH_COLOURS = ("orange", "yellow", "green", "red")


@dataclass(frozen=True)
class MaterialProfile:
    """Per-band mean reflectance plus blending and laser behaviour."""

    band_means: tuple[float, float, float, float]
    noise_std: float
    transparency: float = 0.0  # fraction of skin signal blended through
    laser_contrast: float = 0.0

    def __post_init__(self):
        if any(not 0.0 <= m <= 1.0 for m in self.band_means):
            raise ValueError("band means must lie in [0, 1]")
        if self.noise_std <= 0:
            raise ValueError("noise_std must be positive")
        if not 0.0 <= self.transparency <= 1.0:
            raise ValueError("transparency must lie in [0, 1]")


@dataclass(frozen=True)
class ScoreProfile:
    mean: float
    std: float


@dataclass(frozen=True)
class SampleCube:
    """One multispectral image block, shape (bands, height, width)."""

    values: np.ndarray

    @property
    def bands(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


DEFAULT_BONA_FIDE_PROFILE = MaterialProfile(
    band_means=(0.52, 0.42, 0.16, 0.11), noise_std=0.03, transparency=0.0,
    laser_contrast=0.85,
)

# Keys resolve most-specific first: "material:variation", then
# "visual_group:material", then "material".
DEFAULT_MATERIAL_PROFILES: dict[str, MaterialProfile] = {
    "silicone": MaterialProfile((0.80, 0.78, 0.72, 0.70), 0.04, 0.05, 0.30),
    "overlay_transparent:silicone": MaterialProfile((0.80, 0.78, 0.72, 0.70), 0.04, 0.92, 0.80),
    "overlay_semi:silicone": MaterialProfile((0.80, 0.78, 0.72, 0.70), 0.04, 0.50, 0.55),
    "urethane": MaterialProfile((0.75, 0.72, 0.66, 0.63), 0.04, 0.05, 0.30),
    "dragon_skin": MaterialProfile((0.68, 0.64, 0.58, 0.54), 0.04, 0.10, 0.75),
    "overlay_transparent:dragon_skin": MaterialProfile((0.68, 0.64, 0.58, 0.54), 0.04, 0.85, 0.82),
    "overlay_semi:dragon_skin": MaterialProfile((0.68, 0.64, 0.58, 0.54), 0.04, 0.50, 0.78),
    "ecoflex": MaterialProfile((0.72, 0.70, 0.63, 0.60), 0.04, 0.08, 0.45),
    "overlay_semi:ecoflex": MaterialProfile((0.72, 0.70, 0.63, 0.60), 0.04, 0.50, 0.50),
    "latex": MaterialProfile((0.60, 0.57, 0.50, 0.47), 0.04, 0.08, 0.35),
    "overlay_transparent:latex": MaterialProfile((0.60, 0.57, 0.50, 0.47), 0.04, 0.80, 0.60),
    "gelatin": MaterialProfile((0.58, 0.52, 0.38, 0.33), 0.045, 0.10, 0.50),
    "overlay_transparent:gelatin": MaterialProfile((0.58, 0.52, 0.38, 0.33), 0.045, 0.82, 0.70),
    "glue": MaterialProfile((0.62, 0.58, 0.47, 0.43), 0.045, 0.15, 0.45),
    "overlay_transparent:glue": MaterialProfile((0.62, 0.58, 0.47, 0.43), 0.045, 0.80, 0.65),
    "overlay_semi:glue": MaterialProfile((0.62, 0.58, 0.47, 0.43), 0.045, 0.50, 0.55),
    "wax": MaterialProfile((0.70, 0.67, 0.60, 0.57), 0.04, 0.05, 0.35),
    "overlay_transparent:wax": MaterialProfile((0.70, 0.67, 0.60, 0.57), 0.04, 0.75, 0.55),
    "printout_paper": MaterialProfile((0.85, 0.84, 0.80, 0.78), 0.03, 0.02, 0.20),
    "printout_foil": MaterialProfile((0.88, 0.87, 0.84, 0.83), 0.03, 0.30, 0.25),
    "bandage_plaster": MaterialProfile((0.78, 0.76, 0.70, 0.68), 0.04, 0.02, 0.25),
    "dental_material": MaterialProfile((0.82, 0.80, 0.75, 0.73), 0.035, 0.02, 0.22),
    "3d_printed": MaterialProfile((0.76, 0.74, 0.69, 0.67), 0.035, 0.00, 0.20),
    "silly_putty": MaterialProfile((0.66, 0.63, 0.56, 0.52), 0.04, 0.03, 0.40),
    "playdoh": MaterialProfile((0.45, 0.55, 0.48, 0.50), 0.04, 0.00, 0.60),
    "playdoh:orange": MaterialProfile((0.53, 0.43, 0.165, 0.118), 0.03, 0.00, 0.62),
}

# Score distributions per algorithm, canonical orientation (higher is bona
# fide). "attack" is the fallback for materials without their own entry.
DEFAULT_SCORE_PROFILES: dict[str, dict[str, ScoreProfile]] = {
    "swir-cnn-mobilenetv2": {
        "bonafide": ScoreProfile(0.94, 0.025),
        "attack": ScoreProfile(0.08, 0.05),
        "overlay_transparent:silicone": ScoreProfile(0.88, 0.08),
        "overlay_transparent:gelatin": ScoreProfile(0.72, 0.10),
        "overlay_transparent:dragon_skin": ScoreProfile(0.68, 0.10),
        "overlay_semi:silicone": ScoreProfile(0.45, 0.12),
        "playdoh": ScoreProfile(0.20, 0.08),
        "playdoh:orange": ScoreProfile(0.93, 0.04),
    },
    "swir-cnn-vgg16": {
        "bonafide": ScoreProfile(0.95, 0.02),
        "attack": ScoreProfile(0.07, 0.05),
        "overlay_transparent:silicone": ScoreProfile(0.87, 0.08),
        "overlay_transparent:gelatin": ScoreProfile(0.60, 0.12),
        "overlay_transparent:dragon_skin": ScoreProfile(0.70, 0.10),
        "overlay_semi:silicone": ScoreProfile(0.40, 0.12),
        "playdoh": ScoreProfile(0.22, 0.08),
        "playdoh:orange": ScoreProfile(0.94, 0.03),
    },
    "laser-cnn-vggface": {
        "bonafide": ScoreProfile(0.93, 0.03),
        "attack": ScoreProfile(0.12, 0.07),
        "dragon_skin": ScoreProfile(0.70, 0.14),
        "overlay_transparent:silicone": ScoreProfile(0.82, 0.10),
        "overlay_transparent:gelatin": ScoreProfile(0.55, 0.15),
        "playdoh": ScoreProfile(0.50, 0.15),
        "playdoh:orange": ScoreProfile(0.55, 0.15),
        "silly_putty": ScoreProfile(0.45, 0.15),
    },
    "laser-lrcn-vgg16": {
        "bonafide": ScoreProfile(0.92, 0.035),
        "attack": ScoreProfile(0.15, 0.08),
        "dragon_skin": ScoreProfile(0.72, 0.14),
        "overlay_transparent:silicone": ScoreProfile(0.85, 0.10),
        "overlay_transparent:gelatin": ScoreProfile(0.60, 0.14),
        "overlay_transparent:glue": ScoreProfile(0.55, 0.15),
        "playdoh": ScoreProfile(0.60, 0.15),
        "silly_putty": ScoreProfile(0.50, 0.15),
    },
}


@dataclass
class SynthConfig:
    seed: int
    scale: float = 1.0
    bona_fide_count: int | None = None
    n_subjects: int = 50
    n_sessions: int = 4
    cube_height: int = 20
    cube_width: int = 60
    include_laser_band: bool = False
    species_counts: dict[str, int] = field(default_factory=dict)
    material_profiles: dict[str, MaterialProfile] = field(
        default_factory=lambda: dict(DEFAULT_MATERIAL_PROFILES)
    )
    bona_fide_profile: MaterialProfile = DEFAULT_BONA_FIDE_PROFILE
    score_profiles: dict[str, dict[str, ScoreProfile]] = field(
        default_factory=lambda: {k: dict(v) for k, v in DEFAULT_SCORE_PROFILES.items()}
    )

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.n_subjects < 1 or self.n_sessions < 1:
            raise ValueError("need at least one subject and one session")


def _half_up(x: float) -> int:
    return math.floor(x + 0.5)


def variation_names(material: Material, count: int) -> tuple[str, ...]:
    if material is Material.PLAYDOH:
        return _PLAYDOH_COLOURS[:count]
    return tuple(f"v{i}" for i in range(1, count + 1))


def species_name(visual_group: VisualGroup, material: Material, variation: str) -> str:
    return f"{visual_group.value}/{material.value}/{variation}"


def species_plan(config: SynthConfig) -> list[tuple[VisualGroup, Material, str, int]]:
    """(visual group, material, variation, sample count) per species, with
    row totals scaled and split near-evenly across variations."""
    plan = []
    for row in DATASET_COMPOSITION:
        total = _half_up(config.scale * row.samples)
        base, remainder = divmod(total, row.variations)
        for index, variation in enumerate(variation_names(row.material, row.variations)):
            count = base + (1 if index < remainder else 0)
            name = species_name(row.visual_group, row.material, variation)
            count = config.species_counts.get(name, count)
            if count > 0:
                plan.append((row.visual_group, row.material, variation, count))
    return plan


def synth_manifest(config: SynthConfig) -> Manifest:
    """Deterministic manifest following the reference composition."""
    records: list[SampleRecord] = []
    modalities = frozenset({Modality.SWIR, Modality.LASER})

    n_bf = config.bona_fide_count
    if n_bf is None:
        n_bf = _half_up(config.scale * REFERENCE_BONA_FIDE_COUNT)
    for i in range(n_bf):
        records.append(
            SampleRecord(
                sample_id=f"bf-{i:06d}",
                subject_id=f"subj{i % config.n_subjects:03d}",
                session_id=f"sess{i % config.n_sessions + 1}",
                label=Label.BONA_FIDE,
                modalities=modalities,
            )
        )

    attack_index = 0
    for visual_group, material, variation, count in species_plan(config):
        tag = PaiTag(
            species=species_name(visual_group, material, variation),
            material=material,
            visual_group=visual_group,
            variation=variation,
        )
        for i in range(count):
            records.append(
                SampleRecord(
                    sample_id=f"pa-{visual_group.value}-{material.value}-{variation}-{i:04d}",
                    subject_id=f"subj{attack_index % config.n_subjects:03d}",
                    session_id=f"sess{attack_index % config.n_sessions + 1}",
                    label=Label.ATTACK,
                    pai=tag,
                    modalities=modalities,
                )
            )
            attack_index += 1
    return Manifest(records)


def resolve_profile(profiles: Mapping[str, MaterialProfile], record: SampleRecord) -> MaterialProfile:
    """Most-specific profile for an attack record, or MissingProfile."""
    pai = record.pai
    for key in (
        f"{pai.material.value}:{pai.variation}",
        f"{pai.visual_group.value}:{pai.material.value}",
        pai.material.value,
    ):
        if key in profiles:
            return profiles[key]
    raise MissingProfile(pai.material.value)


def _cube_means(record: SampleRecord, config: SynthConfig) -> tuple[np.ndarray, float]:
    skin = config.bona_fide_profile
    if not record.is_attack:
        means = np.asarray(skin.band_means)
        if config.include_laser_band:
            means = np.append(means, skin.laser_contrast)
        return means, skin.noise_std
    profile = resolve_profile(config.material_profiles, record)
    # a full fake finger has no live skin behind it to blend through
    t = 0.0 if record.pai.visual_group is VisualGroup.FAKEFINGER else profile.transparency
    means = t * np.asarray(skin.band_means) + (1.0 - t) * np.asarray(profile.band_means)
    if config.include_laser_band:
        laser = t * skin.laser_contrast + (1.0 - t) * profile.laser_contrast
        means = np.append(means, laser)
    return means, profile.noise_std


def synth_cube(record: SampleRecord, config: SynthConfig) -> SampleCube:
    means, noise_std = _cube_means(record, config)
    bands = len(means)
    h, w = config.cube_height, config.cube_width
    noise = normals(derive_seed(config.seed, "cube", record.sample_id), bands * h * w)
    values = means.reshape(bands, 1, 1) + noise_std * noise.reshape(bands, h, w)
    return SampleCube(np.clip(values, 0.0, 1.0))


def synth_cubes(manifest: Manifest, config: SynthConfig) -> dict[str, SampleCube]:
    """One cube per manifest record, deterministic per (seed, sample_id)."""
    for record in manifest.attacks():
        resolve_profile(config.material_profiles, record)  # fail before generating
    return {record.sample_id: synth_cube(record, config) for record in manifest}


def _score_class_key(record: SampleRecord) -> list[str]:
    if not record.is_attack:
        return ["bonafide"]
    pai = record.pai
    return [
        f"{pai.material.value}:{pai.variation}",
        f"{pai.visual_group.value}:{pai.material.value}",
        pai.material.value,
        "attack",
    ]


def resolve_score_profile(profile_map: Mapping[str, ScoreProfile], algorithm_id: str,
                          record: SampleRecord) -> ScoreProfile:
    for key in _score_class_key(record):
        if key in profile_map:
            return profile_map[key]
    raise MissingDistribution(algorithm_id, _score_class_key(record)[0])


def synth_scores(manifest: Manifest,
                 alg_profiles: Mapping[str, Mapping[str, ScoreProfile]],
                 seed: int) -> list[ScoreSet]:
    """One canonical score set per algorithm; draws keyed per sample."""
    out = []
    for algorithm_id in sorted(alg_profiles):
        profile_map = alg_profiles[algorithm_id]
        scores = {}
        for record in manifest:
            profile = resolve_score_profile(profile_map, algorithm_id, record)
            z = normals(derive_seed(seed, "score", algorithm_id, record.sample_id), 1)[0]
            scores[record.sample_id] = profile.mean + profile.std * float(z)
        out.append(ScoreSet(algorithm_id, Orientation.HIGHER_IS_BONA_FIDE, scores))
    return out


# --- cube container helpers -------------------------------------------------


def write_cubes(cubes: Mapping[str, SampleCube], bin_path: str | Path,
                index_path: str | Path) -> None:
    container.write_container({sid: cube.values for sid, cube in cubes.items()},
                              bin_path, index_path)


def read_cubes(bin_path: str | Path) -> dict[str, SampleCube]:
    return {sid: SampleCube(values) for sid, values in container.read_container(bin_path).items()}


def read_cubes_subset(bin_path: str | Path, index_path: str | Path,
                      ids) -> dict[str, SampleCube]:
    index = container.read_index(index_path)
    out = {}
    for sample_id in sorted(set(ids)):
        if sample_id not in index:
            raise KeyError(f"cube container has no record for {sample_id!r}")
        _, values = container.read_record_at(bin_path, index[sample_id])
        out[sample_id] = SampleCube(values)
    return out


# --- config I/O --------------------------------------------------------------


def _profile_to_dict(profile: MaterialProfile) -> dict:
    return {
        "band_means": list(profile.band_means),
        "noise_std": profile.noise_std,
        "transparency": profile.transparency,
        "laser_contrast": profile.laser_contrast,
    }


def _profile_from_dict(data: dict) -> MaterialProfile:
    return MaterialProfile(
        band_means=tuple(data["band_means"]),
        noise_std=data["noise_std"],
        transparency=data.get("transparency", 0.0),
        laser_contrast=data.get("laser_contrast", 0.0),
    )


def config_from_dict(data: dict) -> SynthConfig:
    """Build a config from the CLI JSON; profile entries merge over defaults."""
    config = SynthConfig(
        seed=data["seed"],
        scale=data.get("scale", 1.0),
        bona_fide_count=data.get("bona_fide_count"),
        n_subjects=data.get("n_subjects", 50),
        n_sessions=data.get("n_sessions", 4),
        cube_height=data.get("cube_height", 20),
        cube_width=data.get("cube_width", 60),
        include_laser_band=data.get("include_laser_band", False),
        species_counts=dict(data.get("species_counts", {})),
    )
    for key, profile in data.get("material_profiles", {}).items():
        config.material_profiles[key] = _profile_from_dict(profile)
    if "bona_fide_profile" in data:
        config.bona_fide_profile = _profile_from_dict(data["bona_fide_profile"])
    if "score_profiles" in data:
        config.score_profiles = {
            algorithm: {key: ScoreProfile(*value) for key, value in mapping.items()}
            for algorithm, mapping in data["score_profiles"].items()
        }
    if "algorithms" in data:
        unknown = set(data["algorithms"]) - set(config.score_profiles)
        if unknown:
            raise MissingDistribution(sorted(unknown)[0], "*")
        config.score_profiles = {
            algorithm: config.score_profiles[algorithm] for algorithm in data["algorithms"]
        }
    return config
