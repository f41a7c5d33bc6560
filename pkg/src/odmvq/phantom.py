"""Synthetic multiband phantoms with known class structure and controlled noise."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ContractError, LabelMap, MultibandImage

__all__ = ["ClusterSpec", "PhantomSpec", "generate_phantom", "separated_means", "add_noise"]


@dataclass(frozen=True)
class ClusterSpec:
    mean: tuple
    std: float | tuple = 0.0
    fraction: float = 1.0


@dataclass(frozen=True)
class PhantomSpec:
    height: int
    width: int
    bands: int
    clusters: tuple
    noise_percent: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "clusters", tuple(self.clusters))
        if self.height < 1 or self.width < 1 or self.bands < 1:
            raise ContractError("phantom dimensions must be positive")
        if not self.clusters:
            raise ContractError("a phantom needs at least one cluster")
        for c in self.clusters:
            if len(c.mean) != self.bands:
                raise ContractError(f"cluster mean {c.mean} does not have {self.bands} bands")
            if min(c.mean) < 0 or max(c.mean) > 1:
                raise ContractError("cluster means must lie in [0, 1]")
            if np.any(np.asarray(c.std) < 0):
                raise ContractError("cluster std must be non-negative")
        if abs(sum(c.fraction for c in self.clusters) - 1.0) > 1e-9:
            raise ContractError("cluster fractions must sum to 1")
        if self.noise_percent < 0:
            raise ContractError("noise_percent must be non-negative")

    def with_noise(self, noise_percent: float) -> "PhantomSpec":
        return PhantomSpec(self.height, self.width, self.bands, self.clusters, noise_percent)

    @property
    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.clusters], dtype=np.float64)


def _counts(fractions: Sequence[float], total: int) -> np.ndarray:
    """Largest-remainder apportionment of ``total`` pixels."""
    raw = np.asarray(fractions) * total
    counts = np.floor(raw).astype(np.int64)
    short = total - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def generate_phantom(spec: PhantomSpec, seed: int = 0):
    """Return ``(image, ground_truth_labels)``.

    Classes occupy contiguous row-major runs in cluster order. The clean
    pixels and the noise come from independent streams of ``seed``, so the
    same seed at different noise levels gives the same labels and the same
    clean image.
    """
    n = spec.height * spec.width
    counts = _counts([c.fraction for c in spec.clusters], n)
    labels = np.repeat(np.arange(len(spec.clusters)), counts)
    clean_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(clean_ss)
    pixels = np.empty((n, spec.bands))
    for k, c in enumerate(spec.clusters):
        sel = labels == k
        std = np.broadcast_to(np.asarray(c.std, dtype=np.float64), (spec.bands,))
        pixels[sel] = np.asarray(c.mean) + std * rng.standard_normal((int(sel.sum()), spec.bands))
    pixels = np.clip(pixels, 0.0, 1.0)
    if spec.noise_percent > 0:
        noise = np.random.default_rng(noise_ss).standard_normal(pixels.shape)
        pixels = np.clip(pixels + (spec.noise_percent / 100.0) * noise, 0.0, 1.0)
    image = MultibandImage.from_pixels(pixels, spec.height, spec.width)
    return image, LabelMap(labels.reshape(spec.height, spec.width))


def separated_means(k: int, bands: int, seed: int = 0, low: float = 0.15, high: float = 0.85,
                    min_gap: float = 0.3, tries: int = 10000) -> np.ndarray:
    """Draw ``k`` cluster means in ``[low, high]^bands`` at least ``min_gap`` apart."""
    rng = np.random.default_rng(seed)
    means = []
    for _ in range(tries):
        cand = rng.uniform(low, high, bands)
        if all(np.linalg.norm(cand - m) >= min_gap for m in means):
            means.append(cand)
            if len(means) == k:
                return np.array(means)
    raise ContractError(f"could not place {k} means {min_gap} apart in {bands} bands")


def add_noise(image: MultibandImage, noise_percent: float, seed: int = 0) -> MultibandImage:
    """Additive zero-mean Gaussian noise with per-band std ``noise_percent / 100``, clipped to [0, 1]."""
    if noise_percent <= 0:
        return image
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[1])
    noisy = image.data + (noise_percent / 100.0) * rng.standard_normal(image.data.shape)
    return MultibandImage(np.clip(noisy, 0.0, 1.0))
