"""k-means codebooks found by dialectical search over concatenated centroids.

A candidate solution is the vector ``(v_1, v_2, ..., v_k)`` of all
centroids laid end to end. Each objective evaluation classifies the image
(or a fixed pixel subsample) with the decoded codebook and scores it with
the quantization error or the combined Omran index.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .clustering import lloyd
from .core import Codebook, ContractError, MultibandImage, SearchBox
from .metrics import OMRAN_WEIGHTS, omran_index, quantization_error
from .odm import Direction, OdmConfig, OdmResult, optimize

__all__ = [
    "Objective",
    "OptKmConfig",
    "OptKmResult",
    "encode_candidate",
    "decode_candidate",
    "warm_start_candidates",
    "opt_kmeans_train",
]


class Objective(str, enum.Enum):
    QUANTIZATION_ERROR = "quantization_error"
    OMRAN_INDEX = "omran_index"


@dataclass(frozen=True)
class OptKmConfig:
    class_count: int = 13
    odm: OdmConfig = field(default_factory=OdmConfig)
    objective: Objective = Objective.QUANTIZATION_ERROR
    warm_start_iterations: int = 5
    subsample: float = 1.0
    omran_weights: Sequence[float] = OMRAN_WEIGHTS

    def __post_init__(self):
        object.__setattr__(self, "objective", Objective(self.objective))
        if self.class_count < 1:
            raise ContractError("class_count must be positive")
        if self.warm_start_iterations < 0:
            raise ContractError("warm_start_iterations must be non-negative")
        if not 0.0 < self.subsample <= 1.0:
            raise ContractError("subsample must lie in (0, 1]")
        if self.objective is Objective.OMRAN_INDEX and self.class_count < 2:
            raise ContractError("the Omran index needs at least two classes")


@dataclass
class OptKmResult:
    codebook: Codebook
    value: float
    odm: OdmResult
    evaluation_pixels: int
    pixel_evaluations: int


def encode_candidate(codebook: Codebook) -> np.ndarray:
    return codebook.centroids.reshape(-1).copy()


def decode_candidate(x, class_count: int, bands: int) -> Codebook:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if bands < 1 or x.size % bands or x.size // bands != class_count:
        raise ContractError(f"candidate of length {x.size} cannot hold {class_count} centroids of {bands} bands")
    return Codebook(x.reshape(class_count, bands))


def warm_start_candidates(image: MultibandImage, class_count: int, count: int, iterations: int,
                          seed: int) -> np.ndarray:
    """``count`` encoded codebooks, each from ``iterations`` Lloyd steps on its own pixel sample.

    Candidate ``p`` depends only on ``(seed, p)``.
    """
    pixels = image.pixels
    distinct = np.unique(pixels, axis=0)
    replace_ = class_count > distinct.shape[0]
    out = np.empty((count, class_count * image.bands))
    for p in range(count):
        rng = np.random.default_rng([seed, p])
        start = distinct[rng.choice(distinct.shape[0], size=class_count, replace=replace_)]
        out[p] = lloyd(pixels, start, iterations).reshape(-1)
    return out


def _evaluation_image(image: MultibandImage, fraction: float, seed: int) -> MultibandImage:
    if fraction >= 1.0:
        return image
    n = image.n_pixels
    k = max(1, int(round(fraction * n)))
    idx = np.sort(np.random.default_rng([seed, 0x5EED]).choice(n, size=k, replace=False))
    return MultibandImage.from_pixels(image.pixels[idx], k, 1)


def opt_kmeans_train(image: MultibandImage, config: OptKmConfig) -> OptKmResult:
    """Minimize the configured clustering index with the dialectical optimizer.

    Half of the initial poles come from short Lloyd runs, the other half are
    their antitheses in the unit box.
    """
    k, bands = config.class_count, image.bands
    odm_config = replace(config.odm, direction=Direction.MINIMIZE)
    target = _evaluation_image(image, config.subsample, odm_config.rng_seed)

    if config.objective is Objective.QUANTIZATION_ERROR:
        def objective(x):
            return quantization_error(target, decode_candidate(x, k, bands))[0]
    else:
        weights = tuple(config.omran_weights)

        def objective(x):
            return omran_index(target, decode_candidate(x, k, bands), weights=weights)

    seeds = warm_start_candidates(image, k, odm_config.initial_poles // 2, config.warm_start_iterations,
                                  odm_config.rng_seed)
    result = optimize(objective, SearchBox.unit(k * bands), odm_config, initial=seeds)
    warm_cost = seeds.shape[0] * config.warm_start_iterations * image.n_pixels
    return OptKmResult(
        codebook=decode_candidate(result.best_point, k, bands),
        value=result.best_value,
        odm=result,
        evaluation_pixels=target.n_pixels,
        pixel_evaluations=warm_cost + result.evaluations * target.n_pixels,
    )
