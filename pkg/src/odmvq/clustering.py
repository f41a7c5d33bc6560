"""Baseline quantizers: online k-means, x-means sweep, fuzzy c-means and a ring SOM."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .core import Codebook, ContractError, LabelMap, MultibandImage, nearest
from .metrics import fuzzy_memberships, omran_index, quantization_error

__all__ = [
    "Neighborhood",
    "Score",
    "TrainConfig",
    "XMeansConfig",
    "XMeansResult",
    "FcmResult",
    "kmeans_train",
    "lloyd",
    "xmeans_select",
    "fcm_train",
    "som_train",
    "ring_distance",
    "linear_rate",
]


class Neighborhood(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RECTANGULAR = "rectangular"


class Score(str, enum.Enum):
    OMRAN_INDEX = "omran_index"
    QUANTIZATION_ERROR = "quantization_error"


@dataclass(frozen=True)
class TrainConfig:
    class_count: int = 13
    max_iterations: int = 200
    initial_rate: float = 0.1
    rng_seed: int = 0
    fuzziness: float = 2.0
    neighborhood: Neighborhood = Neighborhood.GAUSSIAN
    initial_radius: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "neighborhood", Neighborhood(self.neighborhood))
        if self.class_count < 1:
            raise ContractError("class_count must be positive")
        if self.max_iterations < 1:
            raise ContractError("max_iterations must be positive")
        if not 0.0 < self.initial_rate < 1.0:
            raise ContractError("initial_rate must lie in (0, 1)")
        if self.fuzziness <= 1.0:
            raise ContractError("fuzziness q must exceed 1")
        if self.initial_radius is not None and self.initial_radius <= 0:
            raise ContractError("initial_radius must be positive")


@dataclass(frozen=True)
class XMeansConfig:
    min_classes: int = 10
    max_classes: int = 14
    inner: TrainConfig = field(default_factory=TrainConfig)
    score: Score = Score.OMRAN_INDEX

    def __post_init__(self):
        object.__setattr__(self, "score", Score(self.score))
        if not 1 <= self.min_classes <= self.max_classes:
            raise ContractError("need 1 <= min_classes <= max_classes")


@dataclass(frozen=True)
class XMeansResult:
    best_classes: int
    codebook: Codebook
    scores: dict


@dataclass(frozen=True)
class FcmResult:
    codebook: Codebook
    fuzziness: float
    iterations: int

    def memberships(self, pixels: np.ndarray) -> np.ndarray:
        return fuzzy_memberships(np.asarray(pixels, dtype=np.float64), self.codebook.centroids, self.fuzziness)


def linear_rate(eta0: float, epoch: int, epochs: int) -> float:
    """Learning rate for ``epoch`` when decaying linearly from ``eta0`` to 0."""
    return eta0 * (1.0 - epoch / epochs)


def _sample_distinct(pixels: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    distinct = np.unique(pixels, axis=0)
    if k > distinct.shape[0]:
        raise ContractError(f"cannot pick {k} centroids from {distinct.shape[0]} distinct pixel values")
    return distinct[rng.choice(distinct.shape[0], size=k, replace=False)].copy()


def _seed_centroids(pixels: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Distinct pixel values: the first uniformly, the rest by squared-distance weighting."""
    distinct = np.unique(pixels, axis=0)
    if k > distinct.shape[0]:
        raise ContractError(f"cannot pick {k} centroids from {distinct.shape[0]} distinct pixel values")
    chosen = [int(rng.integers(distinct.shape[0]))]
    d2 = np.sum((distinct - distinct[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total == 0.0:
            rest = np.setdiff1d(np.arange(distinct.shape[0]), chosen)
            nxt = int(rng.choice(rest))
        else:
            nxt = int(rng.choice(distinct.shape[0], p=d2 / total))
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((distinct - distinct[nxt]) ** 2, axis=1))
    return distinct[chosen].copy()


def kmeans_train(image: MultibandImage, config: TrainConfig) -> Codebook:
    """Online k-means: each presented pixel drags its nearest centroid by ``eta * (x - v)``."""
    pixels = image.pixels
    rng = np.random.default_rng(config.rng_seed)
    centroids = _seed_centroids(pixels, config.class_count, rng)
    for epoch in range(config.max_iterations):
        order = rng.permutation(pixels.shape[0])
        _kernels.kmeans_epoch(pixels, order, centroids, linear_rate(config.initial_rate, epoch, config.max_iterations))
    return Codebook(centroids)


def lloyd(pixels: np.ndarray, centroids: np.ndarray, iterations: int) -> np.ndarray:
    """Batch k-means iterations.

    An empty cluster is re-seeded at the pixel farthest from its assigned centroid.
    """
    c = np.array(centroids, dtype=np.float64, copy=True)
    k = c.shape[0]
    for _ in range(iterations):
        labels = nearest(pixels, c)
        counts = np.bincount(labels, minlength=k)
        for b in range(c.shape[1]):
            sums = np.bincount(labels, weights=pixels[:, b], minlength=k)
            c[:, b] = np.where(counts > 0, sums / np.maximum(counts, 1), c[:, b])
        for j in np.flatnonzero(counts == 0):
            far = np.sum((pixels - c[labels]) ** 2, axis=1)
            idx = int(np.argmax(far))
            c[j] = pixels[idx]
            labels[idx] = j
    return c


def xmeans_select(image: MultibandImage, config: XMeansConfig) -> XMeansResult:
    """Sweep the class count and keep the k-means codebook with the lowest score.

    Ties go to the smaller class count.
    """
    scores = {}
    books = {}
    for k in range(config.min_classes, config.max_classes + 1):
        inner = TrainConfig(**{**config.inner.__dict__, "class_count": k})
        book = kmeans_train(image, inner)
        if config.score is Score.OMRAN_INDEX:
            scores[k] = omran_index(image, book) if k > 1 else math.inf
        else:
            scores[k] = quantization_error(image, book)[0]
        books[k] = book
    best = min(scores, key=lambda k: (scores[k], k))
    return XMeansResult(best, books[best], scores)


def fcm_train(image: MultibandImage, config: TrainConfig, tol: float = 1e-6) -> FcmResult:
    """Batch fuzzy c-means with fuzziness ``q``; stops when no centroid moves more than ``tol``."""
    pixels = image.pixels
    q = config.fuzziness
    rng = np.random.default_rng(config.rng_seed)
    c = _sample_distinct(pixels, config.class_count, rng)
    it = 0
    for it in range(1, config.max_iterations + 1):
        w = fuzzy_memberships(pixels, c, q) ** q
        new = (w.T @ pixels) / w.sum(axis=0)[:, None]
        moved = np.max(np.linalg.norm(new - c, axis=1))
        c = new
        if moved < tol:
            break
    return FcmResult(Codebook(c), q, it)


def ring_distance(i: int, j: int, n: int) -> int:
    d = abs(i - j)
    return min(d, n - d)


def som_train(image: MultibandImage, config: TrainConfig) -> Codebook:
    """One-dimensional circular Kohonen map with ``class_count`` units.

    The neighbourhood radius decays exponentially from ``initial_radius``
    (default ``n/4``) to 0.5; the rate decays linearly to 0 as in k-means.
    """
    n = config.class_count
    if n < 2:
        raise ContractError("a ring needs at least two units")
    pixels = image.pixels
    rng = np.random.default_rng(config.rng_seed)
    replace = n > pixels.shape[0]
    units = pixels[rng.choice(pixels.shape[0], size=n, replace=replace)].copy()
    sigma0 = config.initial_radius if config.initial_radius is not None else n / 4.0
    sigma_end = 0.5
    epochs = config.max_iterations
    gaussian = config.neighborhood is Neighborhood.GAUSSIAN
    for epoch in range(epochs):
        frac = epoch / (epochs - 1) if epochs > 1 else 1.0
        sigma = sigma0 * (sigma_end / sigma0) ** frac
        order = rng.permutation(pixels.shape[0])
        _kernels.som_epoch(pixels, order, units, linear_rate(config.initial_rate, epoch, epochs), sigma, gaussian)
    return Codebook(units)
