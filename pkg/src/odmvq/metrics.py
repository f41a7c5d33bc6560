"""Fidelity indices between an image and its reconstruction, and cluster-validity indices."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .core import Codebook, ContractError, LabelMap, MultibandImage, nearest

__all__ = [
    "MetricError",
    "FidelityReport",
    "ValidityReport",
    "fidelity",
    "fuzzy_memberships",
    "quantization_error",
    "separation_cohesion",
    "omran_index",
    "db_index",
    "xb_index",
    "validity",
    "OMRAN_WEIGHTS",
]

OMRAN_WEIGHTS = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)


class MetricError(ValueError):
    """A metric is undefined for the given input (zero signal, coincident centroids, ...)."""


@dataclass(frozen=True)
class FidelityReport:
    me: float
    mae: float
    mse: float
    rmse: float
    nmse: float
    psnr: float
    snr: float
    l_max: float = 1.0

    def rescaled(self, l_max: float) -> "FidelityReport":
        """Express the same report for images whose peak intensity is ``l_max``.

        Errors scale linearly (squared errors quadratically); NMSE, PSNR and
        SNR are scale-free.
        """
        k = l_max / self.l_max
        return replace(self, me=self.me * k, mae=self.mae * k, mse=self.mse * k * k,
                       rmse=self.rmse * k, l_max=l_max)


@dataclass(frozen=True)
class ValidityReport:
    j_e: float
    d_max: float
    d_min: float
    j_o: float
    db: float
    xb: float
    per_cluster_scatter: np.ndarray


def _check_pair(original: MultibandImage, reconstructed: MultibandImage):
    if original.data.shape != reconstructed.data.shape:
        raise ContractError(
            f"image shapes differ: {original.data.shape} vs {reconstructed.data.shape}"
        )


def _db(ratio: float) -> float:
    return math.inf if ratio == math.inf else 10.0 * math.log10(ratio)


def fidelity(original: MultibandImage, reconstructed: MultibandImage, l_max: float = 1.0) -> FidelityReport:
    """Pixel-wise fidelity of ``reconstructed`` against ``original``.

    The per-pixel error is the Euclidean norm of the band-vector difference.
    """
    _check_pair(original, reconstructed)
    diff = original.pixels - reconstructed.pixels
    sq = np.einsum("ij,ij->i", diff, diff)
    norms = np.sqrt(sq)
    n = sq.shape[0]
    err_energy = float(sq.sum())
    signal = float(np.einsum("ij,ij->", original.pixels, original.pixels))
    if signal == 0.0:
        if err_energy > 0.0:
            raise MetricError("zero-signal: NMSE undefined for an all-zero original")
        nmse = 0.0
    else:
        nmse = err_energy / signal
    mse = err_energy / n
    rmse = math.sqrt(mse)
    psnr = math.inf if rmse == 0.0 else 20.0 * math.log10(l_max / rmse)
    snr = math.inf if nmse == 0.0 else _db(1.0 / nmse)
    return FidelityReport(me=float(norms.max()), mae=float(norms.sum() / n), mse=mse, rmse=rmse,
                          nmse=nmse, psnr=psnr, snr=snr, l_max=l_max)


def fuzzy_memberships(pixels: np.ndarray, centroids: np.ndarray, q: float = 2.0) -> np.ndarray:
    """Fuzzy c-means memberships ``|x-v_i|^(2/(1-q)) / sum_j |x-v_j|^(2/(1-q))``.

    A pixel lying exactly on one or more centroids splits its membership
    equally among them.
    """
    if q <= 1.0:
        raise ContractError("fuzziness q must exceed 1")
    diff = pixels[:, None, :] - centroids[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    zero = dist == 0.0
    hit = zero.any(axis=1)
    out = np.empty_like(dist)
    if hit.any():
        out[hit] = zero[hit] / zero[hit].sum(axis=1, keepdims=True)
    rest = ~hit
    if rest.any():
        d = dist[rest]
        # d^(2/(1-q)) normalised; divide by the row minimum first to avoid overflow
        ratio = (d.min(axis=1, keepdims=True) / d) ** (2.0 / (q - 1.0))
        out[rest] = ratio / ratio.sum(axis=1, keepdims=True)
    return out


def _labels_for(image: MultibandImage, codebook: Codebook, labels: Optional[LabelMap]) -> np.ndarray:
    if labels is None:
        return nearest(image.pixels, codebook.centroids)
    flat = labels.flat
    if flat.shape[0] != image.n_pixels:
        raise ContractError("label map size does not match image")
    if flat.size and flat.max() >= codebook.size:
        raise ContractError("label index exceeds codebook size")
    return flat


def _scatter(pixels: np.ndarray, centroids: np.ndarray, flat: np.ndarray) -> np.ndarray:
    k = centroids.shape[0]
    dist = np.linalg.norm(pixels - centroids[flat], axis=1)
    sums = np.bincount(flat, weights=dist, minlength=k)
    counts = np.bincount(flat, minlength=k)
    return np.divide(sums, counts, out=np.zeros(k), where=counts > 0)


def quantization_error(image: MultibandImage, codebook: Codebook, labels: Optional[LabelMap] = None):
    """Return ``(J_e, S)`` where ``S[j]`` is the mean pixel distance to centroid ``j``.

    Empty clusters have ``S[j] = 0`` but still count in the average.
    """
    flat = _labels_for(image, codebook, labels)
    s = _scatter(image.pixels, codebook.centroids, flat)
    return float(s.mean()), s


def _min_centroid_distance(centroids: np.ndarray) -> float:
    k = centroids.shape[0]
    if k < 2:
        raise MetricError("minimum inter-centroid distance needs at least two centroids")
    diff = centroids[:, None, :] - centroids[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return float(dist[np.triu_indices(k, 1)].min())


def separation_cohesion(codebook: Codebook, image: MultibandImage, labels: Optional[LabelMap] = None):
    """Return ``(d_max, d_min)``: largest cluster scatter and smallest centroid gap."""
    _, s = quantization_error(image, codebook, labels)
    return float(s.max()), _min_centroid_distance(codebook.centroids)


def omran_index(image: MultibandImage, codebook: Codebook, labels: Optional[LabelMap] = None,
                weights: Sequence[float] = OMRAN_WEIGHTS, l_max: float = 1.0) -> float:
    """Combined index ``w1*d_max + w2*(L_max - d_min) + w3*J_e`` (lower is better)."""
    w1, w2, w3 = weights
    if min(weights) < 0:
        raise ContractError("Omran weights must be non-negative")
    j_e, s = quantization_error(image, codebook, labels)
    d_min = _min_centroid_distance(codebook.centroids)
    return float(w1 * s.max() + w2 * (l_max - d_min) + w3 * j_e)


def db_index(image: MultibandImage, codebook: Codebook, labels: Optional[LabelMap] = None) -> float:
    """Davies-Bouldin index averaged over all centroids (empty clusters included)."""
    c = codebook.centroids
    k = c.shape[0]
    if k < 2:
        raise MetricError("DB index needs at least two clusters")
    _, s = quantization_error(image, codebook, labels)
    diff = c[:, None, :] - c[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    off = ~np.eye(k, dtype=bool)
    if np.any(dist[off] == 0.0):
        raise MetricError("degenerate DB: coincident centroids")
    ratio = np.where(off, (s[:, None] + s[None, :]) / np.where(off, dist, 1.0), -np.inf)
    return float(ratio.max(axis=1).mean())


def xb_index(image: MultibandImage, codebook: Codebook, q: float = 2.0) -> float:
    """Xie-Beni index with FCM memberships; the denominator uses the pixel count."""
    c = codebook.centroids
    d_min = _min_centroid_distance(c)
    if d_min == 0.0:
        raise MetricError("Xie-Beni index undefined for coincident centroids")
    pixels = image.pixels
    mu = fuzzy_memberships(pixels, c, q)
    diff = pixels[:, None, :] - c[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    return float(np.sum(mu ** 2 * sq) / (pixels.shape[0] * d_min ** 2))


def _or_nan(fn, *args, **kwargs) -> float:
    try:
        return fn(*args, **kwargs)
    except MetricError:
        return math.nan


def validity(image: MultibandImage, codebook: Codebook, labels: Optional[LabelMap] = None,
             q: float = 2.0, l_max: float = 1.0, weights: Sequence[float] = OMRAN_WEIGHTS) -> ValidityReport:
    """All validity quantities at once; undefined ones (single centroid, coincident centroids) are NaN."""
    flat = _labels_for(image, codebook, labels)
    lm = LabelMap(flat.reshape(image.height, image.width))
    j_e, s = quantization_error(image, codebook, lm)
    d_min = _or_nan(_min_centroid_distance, codebook.centroids)
    w1, w2, w3 = weights
    j_o = w1 * s.max() + w2 * (l_max - d_min) + w3 * j_e
    return ValidityReport(j_e=j_e, d_max=float(s.max()), d_min=d_min, j_o=float(j_o),
                          db=_or_nan(db_index, image, codebook, lm), xb=_or_nan(xb_index, image, codebook, q),
                          per_cluster_scatter=s)
