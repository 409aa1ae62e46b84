"""Synthetic mixed-domain live/spoof image generator.

Every sample is a smooth radial "face" blob composited over a striped
background, colorized through a per-domain style (hue shift, brightness
gain, background stripe frequency, sensor noise). Spoof samples carry an
additive high-frequency diagonal grid (a recapture moire stand-in) and an
all-zero depth target; live samples carry a radial depth bump peaking at
1.0 over the blob center.

Generation is a pure function of the spec: every sample draws from its own
RNG stream keyed by (seed, domain, index), so datasets are bit-identical
across runs and independent of generation order.
"""

from __future__ import annotations

import numpy as np

from .color import hsv_to_rgb, rgb_to_hsv
from .config import DatasetSpec, StyleParams
from .dataset import Dataset

BASE_HUE = 0.08
BLOB_RADIUS_FRAC = 0.16
CENTER_JITTER = 2.0
RADIUS_JITTER = 0.1
HUE_JITTER = 0.01
FACE_VALUE_FLOOR = 0.25
BG_LEVEL = 0.35
BG_AMPLITUDE = 0.18
FACE_SATURATION = 0.45
BG_SATURATION = 0.25

BACKGROUND_CYCLES = {"low": 2.0, "mid": 5.0, "high": 9.0}


def _sample_rng(seed: int, domain_index: int, sample_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence([seed & (2**64 - 1), domain_index, sample_index])
    return np.random.default_rng(ss)


def render_sample(
    style: StyleParams,
    rng: np.random.Generator,
    image_size: tuple[int, int],
    depth_size: tuple[int, int],
    live: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Render one (H, W, 6) RGB+HSV image and its depth target."""
    h, w = image_size
    rows = np.arange(h, dtype=np.float64)[:, None]
    cols = np.arange(w, dtype=np.float64)[None, :]

    cy = h / 2.0 + rng.uniform(-CENTER_JITTER, CENTER_JITTER)
    cx = w / 2.0 + rng.uniform(-CENTER_JITTER, CENTER_JITTER)
    radius = BLOB_RADIUS_FRAC * min(h, w) * (1.0 + rng.uniform(-RADIUS_JITTER, RADIUS_JITTER))

    d2 = (rows - cy) ** 2 + (cols - cx) ** 2
    blob = np.exp(-d2 / (2.0 * radius**2))
    mask = np.clip((blob - 0.25) / 0.30, 0.0, 1.0)

    freq = BACKGROUND_CYCLES[style.background_frequency]
    background = BG_LEVEL + BG_AMPLITUDE * np.sin(2.0 * np.pi * freq * cols / w)
    background = np.broadcast_to(background, (h, w))

    gray = mask * (FACE_VALUE_FLOOR + (1.0 - FACE_VALUE_FLOOR) * blob) + (1.0 - mask) * background
    if not live:
        diag_a = np.sin(2.0 * np.pi * style.cue_frequency * (cols + rows) / w)
        diag_b = np.sin(2.0 * np.pi * style.cue_frequency * (cols - rows) / w)
        gray = gray + style.cue_amplitude * 0.5 * (diag_a + diag_b)

    hue = (BASE_HUE + style.hue_shift + rng.uniform(-HUE_JITTER, HUE_JITTER)) % 1.0
    hsv = np.empty((h, w, 3))
    hsv[..., 0] = hue
    hsv[..., 1] = FACE_SATURATION * mask + BG_SATURATION * (1.0 - mask)
    hsv[..., 2] = np.clip(gray * style.brightness_gain, 0.0, 1.0)
    rgb = hsv_to_rgb(hsv)

    rgb = rgb + rng.normal(0.0, style.noise_sigma, size=(h, w, 3))
    # Convert from the exact stored float32 values: hue is ill-conditioned
    # where channels tie, so the stored HSV must match a reconversion of the
    # stored RGB bit-for-bit in spirit.
    rgb = np.clip(rgb, 0.0, 1.0).astype(np.float32)
    hsv = rgb_to_hsv(rgb.astype(np.float64)).astype(np.float32)
    image = np.concatenate([rgb, hsv], axis=-1)

    hd, wd = depth_size
    if live:
        grid_r = (np.arange(hd, dtype=np.float64)[:, None] + 0.5) * h / hd
        grid_c = (np.arange(wd, dtype=np.float64)[None, :] + 0.5) * w / wd
        dd2 = (grid_r - cy) ** 2 + (grid_c - cx) ** 2
        depth = np.exp(-dd2 / (2.0 * radius**2))
        depth = depth / depth.max()
    else:
        depth = np.zeros((hd, wd))
    return image, depth.astype(np.float32)


def _generate(spec: DatasetSpec, styles, counts, first_domain_index: int) -> Dataset:
    h, w = spec.image_size
    total = sum(counts)
    images = np.empty((total, h, w, 6), dtype=np.float32)
    depth = np.empty((total, *spec.depth_size), dtype=np.float32)
    labels = np.empty(total, dtype=np.uint8)
    gt = np.empty(total, dtype=np.int64)

    pos = 0
    for offset, (style, count) in enumerate(zip(styles, counts)):
        domain_index = first_domain_index + offset
        n_live = (count + 1) // 2
        for i in range(count):
            live = i < n_live
            rng = _sample_rng(spec.seed, domain_index, i)
            images[pos], depth[pos] = render_sample(
                style, rng, spec.image_size, spec.depth_size, live
            )
            labels[pos] = 1 if live else 0
            gt[pos] = domain_index
            pos += 1
    return Dataset(spec=spec, images=images, labels=labels, depth=depth, latent_domain_gt=gt)


def generate_dataset(spec: DatasetSpec) -> Dataset:
    """Generate the training mixture: ``samples_per_domain`` samples for each
    latent domain, class-balanced (live gets the extra sample when odd)."""
    spec.validate()
    counts = [spec.samples_per_domain] * spec.num_latent_domains
    return _generate(spec, spec.style_params, counts, first_domain_index=0)


def generate_heldout(spec: DatasetSpec) -> Dataset:
    """Generate the unseen-domain evaluation split from
    ``held_out_domain_styles``; domain ids continue after the training ones."""
    spec.validate()
    if not spec.held_out_domain_styles:
        raise ValueError("spec has no held_out_domain_styles")
    counts = [spec.held_out_samples_per_domain] * len(spec.held_out_domain_styles)
    return _generate(
        spec, spec.held_out_domain_styles, counts, first_domain_index=spec.num_latent_domains
    )
