"""Desk-scale datasets: synthetic piecewise-constant spheres and
handwritten digits mapped onto the partition.

The digit source is the bundled scikit-learn 8x8 set (no downloads in
this environment); images are upsampled to 28x28 before sampling and
the pool is extended past 1797 items with seeded circular shifts.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch
from .signals import SphericalSignal, sample_equirect
from .sphere import cached_partition


def piecewise_constant_signals(count: int, level: int, coarse: int,
                               seed: int = 0, peak: float = 255.0):
    """Random signals constant on the level-`coarse` blocks.

    Values are uniform in [0, peak] and rescaled so every signal
    attains `peak` exactly; highpass content below the coarse level is
    zero by construction.
    """
    if not 0 <= coarse <= level:
        raise DimensionMismatch(f"need 0 <= coarse {coarse} <= level {level}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    blocks = 6 * 4 ** coarse
    signals = []
    for i in range(count):
        coarse_vals = rng.uniform(0.0, peak, size=blocks)
        coarse_vals *= peak / coarse_vals.max()
        values = np.repeat(coarse_vals, 4 ** (level - coarse))
        signals.append(SphericalSignal(level, values, peak,
                                       provenance=f"synthetic-{i}"))
    return signals


def digit_images(count: int, seed: int = 0, size: int = 28) -> np.ndarray:
    """`count` grayscale digit images in [0, 255], shape (count, size, size)."""
    from PIL import Image
    from sklearn.datasets import load_digits

    raw = load_digits().images  # (1797, 8, 8), values 0..16
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    out = np.empty((count, size, size))
    for i in range(count):
        img = raw[i % raw.shape[0]] * (255.0 / 16.0)
        if i >= raw.shape[0]:
            img = np.roll(img, (int(rng.integers(-2, 3)), int(rng.integers(-2, 3))),
                          axis=(0, 1))
        resized = Image.fromarray(img.astype(np.float32), mode="F").resize(
            (size, size), Image.BILINEAR)
        out[i] = np.asarray(resized, dtype=np.float64)
    return out


def digit_signals(count: int, level: int, seed: int = 0):
    """Spherical signals sampled from digit images at the given level."""
    tree = cached_partition(level)
    images = digit_images(count, seed)
    signals = []
    for i in range(count):
        sig = sample_equirect(images[i], level, tree)
        signals.append(SphericalSignal(sig.level, sig.values, sig.peak,
                                       provenance=f"digit-{i}"))
    return signals
