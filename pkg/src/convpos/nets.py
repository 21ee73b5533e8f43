"""Deterministic direction nets on the unit sphere."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.stats import norm, qmc

DEFAULT_NET_SIZE = 4096


def _circle(size: int) -> NDArray:
    t = 2.0 * np.pi * (np.arange(size) + 0.5) / size
    return np.column_stack([np.cos(t), np.sin(t)])


def _fibonacci_sphere(size: int) -> NDArray:
    golden = np.pi * (3.0 - np.sqrt(5.0))
    k = np.arange(size) + 0.5
    z = 1.0 - 2.0 * k / size
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    t = golden * k
    return np.column_stack([r * np.cos(t), r * np.sin(t), z])


def _quasi_random(n: int, size: int, seed: int) -> NDArray:
    pts = qmc.Halton(d=n, scramble=True, seed=seed).random(size)
    g = norm.ppf(np.clip(pts, 1e-12, 1.0 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@lru_cache(maxsize=64)
def _net_cached(n: int, size: int, seed: int) -> NDArray:
    if n == 1:
        base = np.array([[1.0], [-1.0]])
    elif n == 2:
        base = _circle(size)
    elif n == 3:
        base = _fibonacci_sphere(size)
    else:
        base = _quasi_random(n, size, seed)
    eye = np.eye(n)
    net = np.vstack([base, eye, -eye])
    net.setflags(write=False)
    return net


def direction_net(n: int, size: int = DEFAULT_NET_SIZE, seed: int = 0) -> NDArray:
    """Unit directions covering ``S^{n-1}``, always including ``±e_i``.

    Equally spaced angles in the plane, a Fibonacci spiral on ``S^2`` and a
    scrambled Halton sequence pushed through the Gaussian quantile function
    in higher dimensions.  The result is read-only and cached.
    """
    return _net_cached(int(n), int(size), int(seed))


def net_resolution(net: NDArray) -> float:
    """Covering-radius proxy: largest angle from a net point to its nearest neighbour."""
    if net.shape[0] < 2:
        return float(np.pi)
    best = -np.ones(net.shape[0])
    for s in range(0, net.shape[0], 1024):
        g = net[s:s + 1024] @ net.T
        idx = np.arange(s, min(s + 1024, net.shape[0]))
        g[np.arange(idx.size), idx] = -np.inf
        best[idx] = g.max(axis=1)
    return float(np.arccos(np.clip(best.min(), -1.0, 1.0)))
