"""Sample-at-a-time training loops compiled with numba.

Each kernel runs one epoch in place over ``pixels[order]``. Distances and
ties follow the same rules as :func:`odmvq.core.nearest` (squared Euclidean,
lowest index wins).
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _winner(x, centroids):
    best = 0
    best_d = np.inf
    for k in range(centroids.shape[0]):
        d = 0.0
        for b in range(centroids.shape[1]):
            t = x[b] - centroids[k, b]
            d += t * t
        if d < best_d:
            best_d = d
            best = k
    return best


@njit(cache=True)
def kmeans_epoch(pixels, order, centroids, eta):
    for idx in order:
        x = pixels[idx]
        k = _winner(x, centroids)
        for b in range(centroids.shape[1]):
            centroids[k, b] += eta * (x[b] - centroids[k, b])


@njit(cache=True)
def som_epoch(pixels, order, units, eta, sigma, gaussian):
    n = units.shape[0]
    h = np.empty(n)
    for idx in order:
        x = pixels[idx]
        win = _winner(x, units)
        for j in range(n):
            d = abs(j - win)
            d = min(d, n - d)
            if gaussian:
                h[j] = math.exp(-(d * d) / (2.0 * sigma * sigma))
            else:
                h[j] = 1.0 if d <= sigma else 0.0
        for j in range(n):
            if h[j] == 0.0:
                continue
            for b in range(units.shape[1]):
                units[j, b] += eta * h[j] * (x[b] - units[j, b])


@njit(cache=True)
def anticontradiction(x, poles, max_entropy, lam, out):
    """Per-pole membership of one pixel (FCM q=2 form, or Gibbs form)."""
    m = poles.shape[0]
    dist = np.empty(m)
    zeros = 0
    for i in range(m):
        d = 0.0
        for b in range(poles.shape[1]):
            t = x[b] - poles[i, b]
            d += t * t
        dist[i] = math.sqrt(d)
        if d == 0.0:
            zeros += 1
    if max_entropy:
        dmin = dist.min()
        total = 0.0
        for i in range(m):
            out[i] = math.exp(-lam * (dist[i] - dmin))
            total += out[i]
        for i in range(m):
            out[i] /= total
        return
    if zeros > 0:
        for i in range(m):
            out[i] = 1.0 / zeros if dist[i] == 0.0 else 0.0
        return
    dmin = dist.min()
    total = 0.0
    for i in range(m):
        r = dmin / dist[i]
        out[i] = r * r
        total += out[i]
    for i in range(m):
        out[i] /= total


@njit(cache=True)
def odc_epoch(pixels, order, poles, eta, max_entropy, lam):
    m = poles.shape[0]
    mu = np.empty(m)
    for idx in order:
        x = pixels[idx]
        anticontradiction(x, poles, max_entropy, lam, mu)
        for i in range(m):
            g = eta * mu[i] * mu[i]
            for b in range(poles.shape[1]):
                poles[i, b] += g * (x[b] - poles[i, b])
