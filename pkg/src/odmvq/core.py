"""Shared domain types and the nearest-centroid quantization rule.

Images are stored as ``(height, width, bands)`` float arrays with every
component in ``[0, 1]``. Pixels are always visited in row-major order, so a
flattened view is ``data.reshape(-1, bands)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ContractError",
    "MultibandImage",
    "SearchBox",
    "Pole",
    "PoleSet",
    "Codebook",
    "LabelMap",
    "classify",
    "quantize",
    "squared_distances",
]

# pixels per block when computing pixel-to-centroid distances
_CHUNK = 65536


class ContractError(ValueError):
    """Raised when an operation is called with inconsistent arguments."""


def _frozen(array, dtype=np.float64):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class MultibandImage:
    """An ``H x W`` raster of ``n``-band pixel vectors in ``[0, 1]^n``."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or min(data.shape) < 1:
            raise ContractError(f"image data must be (height, width, bands), got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ContractError("image contains non-finite values")
        if data.min() < 0.0 or data.max() > 1.0:
            raise ContractError("image components must lie in [0, 1]")
        object.__setattr__(self, "data", _frozen(data))

    @classmethod
    def from_pixels(cls, pixels, height: int, width: int) -> "MultibandImage":
        pixels = np.asarray(pixels, dtype=np.float64)
        if pixels.ndim == 1:
            pixels = pixels[:, None]
        if pixels.shape[0] != height * width:
            raise ContractError(f"expected {height * width} pixels, got {pixels.shape[0]}")
        return cls(pixels.reshape(height, width, pixels.shape[1]))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]

    @property
    def n_pixels(self) -> int:
        return self.height * self.width

    @property
    def pixels(self) -> np.ndarray:
        """Row-major ``(n_pixels, bands)`` view."""
        return self.data.reshape(-1, self.bands)


@dataclass(frozen=True)
class SearchBox:
    """Axis-aligned box ``[r_1, s_1] x ... x [r_n, s_n]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ContractError("lower and upper bounds must be vectors of equal length")
        if not np.all(upper > lower):
            raise ContractError("every upper bound must exceed its lower bound")
        object.__setattr__(self, "lower", _frozen(lower))
        object.__setattr__(self, "upper", _frozen(upper))

    @classmethod
    def unit(cls, dim: int) -> "SearchBox":
        return cls(np.zeros(dim), np.ones(dim))

    @classmethod
    def cube(cls, low: float, high: float, dim: int) -> "SearchBox":
        return cls(np.full(dim, low), np.full(dim, high))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def clamp(self, points: np.ndarray) -> np.ndarray:
        return np.clip(points, self.lower, self.upper)

    def antithesis(self, points: np.ndarray) -> np.ndarray:
        """Reflect points through the box centre: ``s - w + r``.

        The bound sum is formed first, so the map is an exact involution on
        boxes centred at the origin and correct to one rounding elsewhere.
        """
        return (self.upper + self.lower) - points

    def contains(self, points: np.ndarray) -> bool:
        points = np.asarray(points)
        return bool(np.all(points >= self.lower) and np.all(points <= self.upper))


@dataclass(frozen=True)
class Pole:
    weights: np.ndarray
    objective: float

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(np.atleast_1d(self.weights)))
        object.__setattr__(self, "objective", float(self.objective))


@dataclass
class PoleSet:
    """Population of poles, stored as a weight matrix and an objective vector."""

    weights: np.ndarray
    objectives: np.ndarray
    phase_index: int = 0
    iteration_index: int = 0

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64, ndmin=2)
        self.objectives = np.array(self.objectives, dtype=np.float64, ndmin=1)
        if self.weights.shape[0] < 1:
            raise ContractError("a pole set needs at least one pole")
        if self.weights.shape[0] != self.objectives.shape[0]:
            raise ContractError("one objective value per pole is required")

    def __len__(self) -> int:
        return self.weights.shape[0]

    def __getitem__(self, i: int) -> Pole:
        return Pole(self.weights[i], self.objectives[i])

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class Codebook:
    """Ordered class centroids; row ``k`` decodes class ``k``."""

    centroids: np.ndarray

    def __post_init__(self):
        centroids = np.array(self.centroids, dtype=np.float64, ndmin=2)
        if centroids.ndim != 2 or centroids.shape[0] < 1 or centroids.shape[1] < 1:
            raise ContractError(f"codebook must hold at least one centroid, got shape {centroids.shape}")
        if not np.all(np.isfinite(centroids)):
            raise ContractError("codebook contains non-finite values")
        object.__setattr__(self, "centroids", _frozen(centroids))

    def __len__(self) -> int:
        return self.centroids.shape[0]

    @property
    def size(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


@dataclass(frozen=True)
class LabelMap:
    labels: np.ndarray = field()

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ContractError("label map must be two-dimensional")
        if labels.size and labels.min() < 0:
            raise ContractError("labels must be non-negative")
        object.__setattr__(self, "labels", _frozen(labels, dtype=np.int64))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def flat(self) -> np.ndarray:
        return self.labels.reshape(-1)

    def counts(self, n_classes: int) -> np.ndarray:
        return np.bincount(self.flat, minlength=n_classes)


def squared_distances(pixels: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """``(n_pixels, n_centroids)`` squared Euclidean distances.

    Computed from explicit differences rather than the ``|x|^2 - 2x.v + |v|^2``
    expansion so that identical centroids give bit-identical distances.
    """
    diff = pixels[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def nearest(pixels: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Index of the nearest centroid per pixel; ties go to the lowest index."""
    out = np.empty(pixels.shape[0], dtype=np.int64)
    for start in range(0, pixels.shape[0], _CHUNK):
        block = pixels[start:start + _CHUNK]
        out[start:start + _CHUNK] = np.argmin(squared_distances(block, centroids), axis=1)
    return out


def classify(image: MultibandImage, codebook: Codebook) -> LabelMap:
    """Label each pixel with the index of its nearest centroid."""
    if codebook.dim != image.bands:
        raise ContractError(
            f"codebook dimension {codebook.dim} does not match image band count {image.bands}"
        )
    labels = nearest(image.pixels, codebook.centroids)
    return LabelMap(labels.reshape(image.height, image.width))


def quantize(image: MultibandImage, codebook: Codebook, labels: LabelMap) -> MultibandImage:
    """Replace each pixel by the centroid its label points at."""
    if (labels.height, labels.width) != (image.height, image.width):
        raise ContractError("label map and image dimensions differ")
    if codebook.dim != image.bands:
        raise ContractError("codebook dimension does not match image band count")
    if labels.labels.size and labels.labels.max() >= codebook.size:
        raise ContractError("label index exceeds codebook size")
    return MultibandImage(codebook.centroids[labels.labels])
