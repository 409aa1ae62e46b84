"""Vectorized RGB <-> HSV conversion for image tensors in [0, 1].

Hue is scaled to [0, 1) rather than degrees. Conversions operate on arrays
whose last axis holds the three channels.
"""

import warnings

import numpy as np

_warned_out_of_range = False


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Convert RGB values in [0, 1] to HSV with hue in [0, 1).

    Inputs outside [0, 1] are clamped; the first occurrence raises a warning
    (once per process).
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.shape[-1] != 3:
        raise ValueError(f"expected last axis of size 3, got shape {rgb.shape}")
    global _warned_out_of_range
    if rgb.min() < 0.0 or rgb.max() > 1.0:
        if not _warned_out_of_range:
            warnings.warn("rgb_to_hsv: input outside [0, 1], clamping", stacklevel=2)
            _warned_out_of_range = True
        rgb = np.clip(rgb, 0.0, 1.0)

    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = np.max(rgb, axis=-1)
    minc = np.min(rgb, axis=-1)
    delta = maxc - minc

    v = maxc
    s = np.where(maxc > 0.0, delta / np.where(maxc > 0.0, maxc, 1.0), 0.0)

    # Hue sector depends on which channel attains the max; achromatic -> 0.
    safe = np.where(delta > 0.0, delta, 1.0)
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    h = np.where(maxc == r, bc - gc, np.where(maxc == g, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(delta > 0.0, (h / 6.0) % 1.0, 0.0)

    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_to_hsv`; hue taken modulo 1."""
    hsv = np.asarray(hsv, dtype=np.float64)
    if hsv.shape[-1] != 3:
        raise ValueError(f"expected last axis of size 3, got shape {hsv.shape}")
    h, s, v = hsv[..., 0] % 1.0, hsv[..., 1], hsv[..., 2]

    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(np.int64) % 6

    choices_r = [v, q, p, p, t, v]
    choices_g = [t, v, v, q, p, p]
    choices_b = [p, p, t, v, v, q]
    r = np.choose(i, choices_r)
    g = np.choose(i, choices_g)
    b = np.choose(i, choices_b)
    return np.stack([r, g, b], axis=-1)
