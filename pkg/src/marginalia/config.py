"""Pipeline configuration: defaults, a key=value config file, overrides.

The config file is a flat TOML-like text format: one ``key = value`` pair
per line, ``#`` comments, values parsed as int, float, true/false, or a
(optionally quoted) string. Command-line flags override file values, and
the effective algorithmic configuration is echoed into every stage
manifest header. Paths never enter the header, so reruns in different
directories stay byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .augment import AugmentParams
from .mser import MserParams

DEFAULT_RESCALE_WIDTH = 350
DEFAULT_RESCALE_HEIGHT = 500
DEFAULT_SPLIT_RATIO = 0.9


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    rescale_width: int = DEFAULT_RESCALE_WIDTH
    rescale_height: int = DEFAULT_RESCALE_HEIGHT
    rescale: bool = True
    split_ratio: float = DEFAULT_SPLIT_RATIO
    augment_sigma: float = 10.0
    augment_alpha_min: float = 0.8
    augment_alpha_max: float = 1.2
    augment_beta_min: float = -30.0
    augment_beta_max: float = 30.0
    mser_delta: int = 3
    mser_max_variation: float = 0.25
    mser_min_area: int = 30
    mser_max_area: int = 0        # 0 -> 0.9 * image area
    mser_tiny_min_area: int = 0   # 0 -> 0.1% of image area
    mser_polarity: str = "both"
    n_negatives: int = 4
    roi_size: int = 227
    eval_iou_threshold: float = 0.5
    jobs: int = 1

    def __post_init__(self) -> None:
        # Delegate range checks to the owning parameter types.
        self.augment_params()
        self.mser_params()
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(f"split_ratio must be in (0, 1), got {self.split_ratio}")
        if self.rescale_width < 1 or self.rescale_height < 1:
            raise ConfigError("rescale target sides must be >= 1")
        if self.roi_size < 1:
            raise ConfigError(f"roi_size must be >= 1, got {self.roi_size}")
        if self.n_negatives < 0:
            raise ConfigError(f"n_negatives must be >= 0, got {self.n_negatives}")
        if not 0.0 <= self.eval_iou_threshold <= 1.0:
            raise ConfigError("eval_iou_threshold must be in [0, 1]")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")

    def augment_params(self) -> AugmentParams:
        try:
            return AugmentParams(
                sigma=self.augment_sigma,
                alpha_range=(self.augment_alpha_min, self.augment_alpha_max),
                beta_range=(self.augment_beta_min, self.augment_beta_max))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def mser_params(self) -> MserParams:
        try:
            return MserParams(
                delta=self.mser_delta,
                max_variation=self.mser_max_variation,
                min_area=self.mser_min_area,
                max_area=self.mser_max_area or None,
                tiny_min_area=self.mser_tiny_min_area or None,
                polarity=self.mser_polarity)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_header(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _parse_value(raw: str, lineno: int):
    raw = raw.strip()
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in ("'", '"'):
        return raw[1:-1]
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    if raw and " " not in raw:
        return raw  # bare string
    raise ConfigError(f"line {lineno}: cannot parse value {raw!r}")


def parse_config_text(text: str) -> dict:
    """Parse the key=value config format into a raw dict."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        values[key] = _parse_value(raw, lineno)
    return values


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    """Build the effective config: defaults <- file <- overrides."""
    values: dict = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        values.update(parse_config_text(text))
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = sorted(set(values) - set(_FIELD_TYPES))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    try:
        return PipelineConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def with_overrides(config: PipelineConfig, **overrides) -> PipelineConfig:
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})
