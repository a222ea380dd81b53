"""Run configuration with defaults for every tunable threshold.

Config files are UTF-8 INI-style ``key = value`` sections; every key below
can be overridden. Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields


@dataclass
class ExposureConfig:
    bright: int = 250
    dark: int = 5
    max_fraction: float = 0.20


@dataclass
class SharpnessConfig:
    min: float = 10.0


@dataclass
class FlatnessConfig:
    patch: int = 240
    var_min: float = 750.0
    max_fraction: float = 0.975


@dataclass
class EntropyConfig:
    keep: float = 0.60


@dataclass
class AestheticsConfig:
    keep: float = 0.60
    enabled: bool = True


@dataclass
class SrqaConfig:
    seam_stride: int = 384
    seam_max_ratio: float = 2.5
    region_patch: int = 768
    k_texture: int = 6
    k_random: int = 4
    psnr_min: float = 25.0
    ssim_min: float = 0.80
    perceptual_max: float = 0.30


@dataclass
class GlcmConfig:
    levels: int = 64
    patch: int = 64
    distances: tuple[int, ...] = (1, 2, 3, 4)
    angles: tuple[float, ...] = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4)


@dataclass
class MsfiConfig:
    small_patch: int = 512
    large_patch: int = 1024
    size_boundary: int = 8192


@dataclass
class JudgeConfig:
    endpoint: str = ""
    model: str = ""
    max_in_flight: int = 4
    alpha: float = 0.6
    beta: float = 0.4


@dataclass
class BenchConfig:
    alignment_scale: float = 100.0
    fid_patch: int = 512
    fid_patches_per_image: int = 8
    msfi_patch: int = 0  # 0 = pick by the 8K resolution rule


@dataclass
class PipelineConfig:
    workers: int = 1


@dataclass
class Config:
    exposure: ExposureConfig = field(default_factory=ExposureConfig)
    sharpness: SharpnessConfig = field(default_factory=SharpnessConfig)
    flatness: FlatnessConfig = field(default_factory=FlatnessConfig)
    entropy: EntropyConfig = field(default_factory=EntropyConfig)
    aesthetics: AestheticsConfig = field(default_factory=AestheticsConfig)
    srqa: SrqaConfig = field(default_factory=SrqaConfig)
    glcm: GlcmConfig = field(default_factory=GlcmConfig)
    msfi: MsfiConfig = field(default_factory=MsfiConfig)
    judge: JudgeConfig = field(default_factory=JudgeConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)


def _coerce(current, raw: str):
    if isinstance(current, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, tuple):
        elem = type(current[0]) if current else float
        return tuple(elem(x) for x in raw.replace(",", " ").split())
    return raw


def load_config(path: str | None = None) -> Config:
    """Load a config file over the defaults; ``None`` returns pure defaults."""
    cfg = Config()
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as f:
        parser.read_file(f)
    for section in parser.sections():
        if not hasattr(cfg, section):
            raise ValueError(f"unknown config section [{section}]")
        sub = getattr(cfg, section)
        known = {f.name for f in fields(sub)}
        for key, raw in parser.items(section):
            if key not in known:
                raise ValueError(f"unknown config key {section}.{key}")
            setattr(sub, key, _coerce(getattr(sub, key), raw))
    return cfg
