"""Objective dialectical classifier: a pixel clusterer that adapts its class count.

Poles are centroids in feature space. Within a historical phase every pixel
pulls each pole towards itself, weighted by the squared anticontradiction
(membership) of the pixel to that pole. At each phase end a crisis fuses
poles that are too close, prunes poles that win too few pixels, shakes the
survivors with Gaussian noise and enforces the pole cap.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .core import Codebook, ContractError, LabelMap, MultibandImage, classify, nearest
from .odm import MembershipKind

__all__ = [
    "DegenerateConfigurationError",
    "OdcConfig",
    "PhaseRecord",
    "OdcModel",
    "anticontradiction_memberships",
    "pole_forces",
    "odc_train",
    "odc_classify",
]

log = logging.getLogger(__name__)


class DegenerateConfigurationError(RuntimeError):
    """Every pole was pruned (minimum force too high for the data)."""


@dataclass(frozen=True)
class OdcConfig:
    initial_poles: int = 14
    historical_phases: int = 2
    phase_length: int = 150
    initial_step: float = 0.1
    step_decay: float = 0.9999
    min_force: float = 0.05
    min_contradiction: float = 0.01
    max_contradiction: float = 0.98
    max_crisis: float = 0.35
    max_poles: int = 12
    membership: MembershipKind = MembershipKind.CANONICAL
    synthesis: bool = False
    # Gibbs memberships use lambda = intensity_scale / m(t) on [0, 1] distances,
    # i.e. lambda = 1/m(t) measured on the 0..intensity_scale grey-level scale
    intensity_scale: float = 255.0
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "membership", MembershipKind(self.membership))
        if self.initial_poles < 2:
            raise ContractError("initial_poles must be at least 2")
        if self.historical_phases < 1 or self.phase_length < 1:
            raise ContractError("historical_phases and phase_length must be positive")
        if not 0.0 < self.initial_step < 1.0:
            raise ContractError("initial_step must lie in (0, 1)")
        if not 0.0 < self.step_decay <= 1.0:
            raise ContractError("step_decay must lie in (0, 1]")
        if not 0.0 <= self.min_force < 1.0:
            raise ContractError("min_force must lie in [0, 1)")
        if not 0.0 <= self.min_contradiction < self.max_contradiction:
            raise ContractError("need 0 <= min_contradiction < max_contradiction")
        if self.max_crisis < 0:
            raise ContractError("max_crisis must be non-negative")
        if self.max_poles < 1:
            raise ContractError("max_poles must be positive")
        if self.intensity_scale <= 0:
            raise ContractError("intensity_scale must be positive")


@dataclass(frozen=True)
class PhaseRecord:
    phase: int
    poles_before: int
    poles_after: int
    mean_anticontradiction: float


@dataclass(frozen=True)
class OdcModel:
    codebook: Codebook
    history: tuple = field(default_factory=tuple)
    forces: Optional[np.ndarray] = None


def _lambda(config: OdcConfig, m: int) -> float:
    return config.intensity_scale / m


def anticontradiction_memberships(pixels: np.ndarray, poles: np.ndarray, kind: MembershipKind,
                                  lam: float = 1.0) -> np.ndarray:
    """``(n_pixels, n_poles)`` memberships, rows summing to 1.

    Canonical: inverse squared distance (fuzzy c-means with q = 2).
    Max-entropy: ``exp(-lam * |x - w_i|)`` normalised over poles.
    """
    diff = pixels[:, None, :] - poles[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if MembershipKind(kind) is MembershipKind.MAX_ENTROPY:
        z = np.exp(-lam * (dist - dist.min(axis=1, keepdims=True)))
        return z / z.sum(axis=1, keepdims=True)
    out = np.empty_like(dist)
    zero = dist == 0.0
    hit = zero.any(axis=1)
    out[hit] = zero[hit] / zero[hit].sum(axis=1, keepdims=True)
    d = dist[~hit]
    ratio = (d.min(axis=1, keepdims=True) / d) ** 2
    out[~hit] = ratio / ratio.sum(axis=1, keepdims=True)
    return out


def pole_forces(pixels: np.ndarray, poles: np.ndarray) -> np.ndarray:
    """Fraction of pixels whose strongest membership falls on each pole.

    Both membership forms decrease with distance, so this is the
    nearest-pole share.
    """
    counts = np.bincount(nearest(pixels, poles), minlength=poles.shape[0])
    return counts / pixels.shape[0]


def _fuse(poles: np.ndarray, forces: np.ndarray, threshold: float, diameter: float):
    """Merge pole pairs closer than ``threshold`` (normalised) into their force-weighted mean."""
    poles = poles.copy()
    forces = forces.copy()
    alive = np.ones(len(poles), dtype=bool)
    for i in range(len(poles)):
        if not alive[i]:
            continue
        for j in range(i + 1, len(poles)):
            if not alive[j]:
                continue
            if np.linalg.norm(poles[i] - poles[j]) / diameter <= threshold:
                total = forces[i] + forces[j]
                if total > 0:
                    poles[i] = (forces[i] * poles[i] + forces[j] * poles[j]) / total
                else:
                    poles[i] = 0.5 * (poles[i] + poles[j])
                forces[i] = total
                alive[j] = False
    return poles[alive]


def _synthesize(poles: np.ndarray, threshold: float, diameter: float) -> np.ndarray:
    extra = []
    for i in range(len(poles)):
        for j in range(i + 1, len(poles)):
            if np.linalg.norm(poles[i] - poles[j]) / diameter > threshold:
                extra.append(0.5 * (poles[i] + poles[j]))
    return np.vstack([poles] + extra) if extra else poles


def _mean_anticontradiction(pixels, poles, config) -> float:
    mu = anticontradiction_memberships(pixels, poles, config.membership, _lambda(config, len(poles)))
    return float(mu.max(axis=1).mean())


def odc_train(image: MultibandImage, config: OdcConfig = OdcConfig()) -> OdcModel:
    """Train the classifier; the surviving poles become the codebook."""
    pixels = image.pixels
    n = pixels.shape[0]
    rng = np.random.default_rng(config.rng_seed)
    poles = pixels[rng.choice(n, size=config.initial_poles, replace=n < config.initial_poles)].copy()
    diameter = math.sqrt(image.bands)
    max_entropy = config.membership is MembershipKind.MAX_ENTROPY
    eta = config.initial_step
    history = []
    for phase in range(config.historical_phases):
        for _ in range(config.phase_length):
            order = rng.permutation(n)
            _kernels.odc_epoch(pixels, order, poles, eta, max_entropy, _lambda(config, len(poles)))
            eta *= config.step_decay

        before = len(poles)
        final = phase == config.historical_phases - 1
        poles = _fuse(poles, pole_forces(pixels, poles), config.min_contradiction, diameter)
        if config.synthesis:
            poles = _synthesize(poles, config.max_contradiction, diameter)
        forces = pole_forces(pixels, poles)
        poles = poles[forces >= config.min_force]
        if len(poles) == 0:
            raise DegenerateConfigurationError(
                f"degenerate configuration: all poles fell below min_force={config.min_force}")
        # the last crisis skips the noise so the codebook is the converged pole set
        if not final and config.max_crisis > 0:
            poles = np.clip(poles + config.max_crisis * rng.standard_normal(poles.shape), 0.0, 1.0)
        if len(poles) > config.max_poles:
            forces = pole_forces(pixels, poles)
            keep = np.sort(np.argsort(-forces, kind="stable")[:config.max_poles])
            poles = poles[keep]
        history.append(PhaseRecord(phase, before, len(poles), _mean_anticontradiction(pixels, poles, config)))
        log.debug("phase %d: %d -> %d poles", phase, before, len(poles))

    return OdcModel(Codebook(poles), tuple(history), pole_forces(pixels, poles))


def odc_classify(image: MultibandImage, model: OdcModel) -> LabelMap:
    return classify(image, model.codebook)
