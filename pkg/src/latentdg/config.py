"""Configuration types: dataset specification, training hyperparameters,
ablation variants, and TOML loading helpers.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from typing import Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

BACKGROUND_FREQUENCIES = ("low", "mid", "high")

VARIANTS = ("full", "w_gt_domains", "wo_domains", "wo_select", "wo_lp", "wo_mmd", "erm")


class SpecValidationError(ValueError):
    """Raised when a configuration field violates its contract."""


@dataclass(frozen=True)
class StyleParams:
    """Per-domain rendering style.

    hue_shift in [0, 1), brightness_gain in [0.5, 1.5],
    background_frequency one of low/mid/high, noise_sigma >= 0. The spoof
    artifact's geometry also varies by domain (capture setups differ):
    cue_frequency is its grid frequency in cycles per image width,
    cue_amplitude its strength before the brightness gain.
    """

    hue_shift: float = 0.0
    brightness_gain: float = 1.0
    background_frequency: str = "low"
    noise_sigma: float = 0.0
    cue_frequency: float = 13.0
    cue_amplitude: float = 0.12

    def validate(self) -> None:
        if not (0.0 <= self.hue_shift < 1.0):
            raise SpecValidationError(f"hue_shift must be in [0, 1), got {self.hue_shift}")
        if not (0.5 <= self.brightness_gain <= 1.5):
            raise SpecValidationError(
                f"brightness_gain must be in [0.5, 1.5], got {self.brightness_gain}"
            )
        if self.background_frequency not in BACKGROUND_FREQUENCIES:
            raise SpecValidationError(
                f"background_frequency must be one of {BACKGROUND_FREQUENCIES}, "
                f"got {self.background_frequency!r}"
            )
        if self.noise_sigma < 0.0:
            raise SpecValidationError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not (2.0 <= self.cue_frequency <= 15.0):
            raise SpecValidationError(
                f"cue_frequency must be in [2, 15] cycles, got {self.cue_frequency}"
            )
        if not (0.0 <= self.cue_amplitude <= 0.5):
            raise SpecValidationError(
                f"cue_amplitude must be in [0, 0.5], got {self.cue_amplitude}"
            )


@dataclass(frozen=True)
class DatasetSpec:
    """Specification of a synthetic mixed-domain live/spoof dataset.

    ``style_params`` defines the training domains (one entry per latent
    domain); ``held_out_domain_styles`` defines additional unseen-domain
    styles used only for the evaluation split.
    """

    num_latent_domains: int
    samples_per_domain: int
    style_params: tuple[StyleParams, ...]
    held_out_domain_styles: tuple[StyleParams, ...] = ()
    held_out_samples_per_domain: int = 600
    image_size: tuple[int, int] = (32, 32)
    depth_size: tuple[int, int] = (8, 8)
    seed: int = 0

    def validate(self) -> None:
        if self.num_latent_domains < 1:
            raise SpecValidationError(
                f"num_latent_domains must be positive, got {self.num_latent_domains}"
            )
        if self.samples_per_domain < 2:
            raise SpecValidationError(
                f"samples_per_domain must be >= 2 so both classes appear, "
                f"got {self.samples_per_domain}"
            )
        if len(self.image_size) != 2 or min(self.image_size) < 16:
            raise SpecValidationError(f"image_size must be >= 16x16, got {self.image_size}")
        if len(self.style_params) != self.num_latent_domains:
            raise SpecValidationError(
                f"style_params must have num_latent_domains={self.num_latent_domains} "
                f"entries, got {len(self.style_params)}"
            )
        if self.held_out_domain_styles and self.held_out_samples_per_domain < 2:
            raise SpecValidationError(
                "held_out_samples_per_domain must be >= 2, "
                f"got {self.held_out_samples_per_domain}"
            )
        all_styles = tuple(self.style_params) + tuple(self.held_out_domain_styles)
        for s in all_styles:
            s.validate()
        seen = set()
        for s in self.style_params:
            key = dataclasses.astuple(s)
            if key in seen:
                raise SpecValidationError(f"style_params must be pairwise distinct; duplicate {s}")
            seen.add(key)
        if not (-(2**63) <= self.seed < 2**63):
            raise SpecValidationError(f"seed must fit in 64 bits, got {self.seed}")

    def with_seed(self, seed: int) -> "DatasetSpec":
        return dataclasses.replace(self, seed=seed)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "DatasetSpec":
        known = {f.name for f in dataclasses.fields(DatasetSpec)}
        d = {k: v for k, v in d.items() if k in known}
        d["style_params"] = tuple(_style_from_dict(s) for s in d.get("style_params", ()))
        d["held_out_domain_styles"] = tuple(
            _style_from_dict(s) for s in d.get("held_out_domain_styles", ())
        )
        if "image_size" in d:
            d["image_size"] = tuple(d["image_size"])
        if "depth_size" in d:
            d["depth_size"] = tuple(d["depth_size"])
        spec = DatasetSpec(**d)
        spec.validate()
        return spec


def _style_from_dict(d: dict) -> StyleParams:
    known = {f.name for f in dataclasses.fields(StyleParams)}
    return StyleParams(**{k: v for k, v in d.items() if k in known})


@dataclass(frozen=True)
class HyperParams:
    """Training hyperparameters.

    Defaults follow the reference settings: inner rate 1e-3, outer rate 1e-4,
    entropy weight 0.1, distribution-matching weight 0.05, three pseudo
    domains.
    """

    inner_lr: float = 1e-3  # alpha: inner (task-level) SGD step
    outer_lr: float = 1e-4  # beta: outer Adam step
    lambda_p: float = 0.1  # channel-gate entropy regularizer weight
    lambda_m: float = 0.05  # distribution-matching (MMD) weight
    lambda_cls: float = 1.0  # classification weight (1.0 = reference setting)
    lambda_dep: float = 1.0  # depth-supervision weight (1.0 = reference setting)
    num_domains: int = 3  # K
    batch_size: int = 32
    epochs: int = 20
    visits_per_epoch: int = 3  # expected samplings of each example per epoch
    first_order: bool = True
    literal_entropy: bool = False  # use the one-sided p*log(p) entropy form
    val_fraction: float = 0.1
    mmd_scales: tuple[float, ...] = (0.5, 1.0, 2.0)
    channels: tuple[int, ...] = (16, 32, 64)
    reduction_ratio: int = 4
    adaptation_width: int = 32
    seed: int = 0

    def validate(self) -> None:
        if self.inner_lr <= 0 or self.outer_lr < 0:
            raise SpecValidationError("inner_lr must be > 0 and outer_lr >= 0")
        if self.lambda_p < 0 or self.lambda_m < 0:
            raise SpecValidationError("lambda_p and lambda_m must be >= 0")
        if self.num_domains < 2:
            raise SpecValidationError(f"num_domains must be >= 2, got {self.num_domains}")
        if self.batch_size < 1 or self.epochs < 1 or self.visits_per_epoch < 1:
            raise SpecValidationError("batch_size, epochs, visits_per_epoch must be >= 1")
        if not (0.0 <= self.val_fraction < 0.5):
            raise SpecValidationError(f"val_fraction must be in [0, 0.5), got {self.val_fraction}")
        for c in self.channels:
            if c % 2 != 0:
                raise SpecValidationError(
                    f"channel counts must be even for half-channel selection, got {c}"
                )
            if c % self.reduction_ratio != 0:
                raise SpecValidationError(
                    f"channel count {c} not divisible by reduction_ratio {self.reduction_ratio}"
                )

    def replace(self, **kw) -> "HyperParams":
        hp = dataclasses.replace(self, **kw)
        hp.validate()
        return hp

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "HyperParams":
        known = {f.name for f in dataclasses.fields(HyperParams)}
        d = {k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items() if k in known}
        hp = HyperParams(**d)
        hp.validate()
        return hp


@dataclass(frozen=True)
class AblationConfig:
    """One ablation variant plus an optional override of the domain count."""

    variant: str = "full"
    k_override: int | None = None

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise SpecValidationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.k_override is not None and self.k_override < 2:
            raise SpecValidationError(f"k_override must be >= 2, got {self.k_override}")


def default_dataset_spec(seed: int = 0) -> DatasetSpec:
    """The default desk-scale benchmark: three separable training domains
    plus one held-out style outside the training hull (new hue/brightness,
    higher noise, and a spoof-cue frequency below the training range)."""
    return DatasetSpec(
        num_latent_domains=3,
        samples_per_domain=800,
        style_params=(
            StyleParams(0.00, 0.85, "low", noise_sigma=0.02, cue_frequency=13.0),
            StyleParams(0.35, 1.15, "mid", noise_sigma=0.02, cue_frequency=11.0),
            StyleParams(0.70, 1.00, "high", noise_sigma=0.02, cue_frequency=9.0),
        ),
        held_out_domain_styles=(
            StyleParams(0.90, 0.60, "high", noise_sigma=0.05, cue_frequency=7.0),
        ),
        held_out_samples_per_domain=600,
        seed=seed,
    )


def _parse_scalar(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def apply_overrides(d: dict, overrides: Sequence[str]) -> dict:
    """Apply ``key=value`` strings on top of a config dict (dotted keys
    descend into sub-tables)."""
    out = dict(d)
    for item in overrides:
        if "=" not in item:
            raise SpecValidationError(f"override must look like key=value, got {item!r}")
        key, _, value = item.partition("=")
        parts = key.strip().split(".")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = _parse_scalar(value.strip())
    return out


def load_toml(path: str) -> dict:
    with open(path, "rb") as f:
        return tomllib.load(f)


def load_dataset_spec(path: str, overrides: Sequence[str] = ()) -> DatasetSpec:
    """Read a dataset spec from a TOML file.

    Layout: top-level scalar keys plus ``[[domains]]`` and ``[[heldout]]``
    tables for the style parameter sets.
    """
    raw = apply_overrides(load_toml(path), overrides)
    d = {k: v for k, v in raw.items() if k not in ("domains", "heldout")}
    d["style_params"] = raw.get("domains", [])
    d["held_out_domain_styles"] = raw.get("heldout", [])
    return DatasetSpec.from_dict(d)


def load_hyper_params(path: str | None, overrides: Sequence[str] = ()) -> HyperParams:
    raw = load_toml(path) if path else {}
    raw = apply_overrides(raw, overrides)
    return HyperParams.from_dict(raw)
