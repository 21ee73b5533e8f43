"""Hot loops with a numba path and a pure-numpy path.

The numba path is used when numba imports cleanly and the environment
variable ``CONVPOS_DISABLE_NUMBA`` is unset (or ``0``).  Both paths share
one signature per kernel and are tested against each other.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "USING_NUMBA",
    "clip_polygon",
    "polygon_moments",
    "halfspace_mask",
    "clip_polygon_numpy",
    "polygon_moments_numpy",
    "halfspace_mask_numpy",
]


def _numba_requested() -> bool:
    flag = os.environ.get("CONVPOS_DISABLE_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no")


# ---------------------------------------------------------------- numpy path


def clip_polygon_numpy(poly: np.ndarray, normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Clip a convex polygon by halfplanes ``normals @ x <= offsets``.

    Parameters
    ----------
    poly : ndarray, shape (k, 2)
        Vertices in counter-clockwise order.
    normals : ndarray, shape (m, 2)
    offsets : ndarray, shape (m,)

    Returns
    -------
    ndarray, shape (k', 2)
        Clipped polygon, possibly empty.
    """
    out = np.asarray(poly, dtype=float)
    for a, b in zip(normals, offsets):
        if out.shape[0] == 0:
            break
        s = out @ a - b
        nxt = np.roll(out, -1, axis=0)
        s_nxt = np.roll(s, -1)
        keep = s <= 0.0
        cross = (s <= 0.0) != (s_nxt <= 0.0)
        t = np.where(cross, s / np.where(cross, s - s_nxt, 1.0), 0.0)
        hits = out + t[:, None] * (nxt - out)
        # interleave kept vertices and crossing points in boundary order
        rows = []
        for i in range(out.shape[0]):
            if keep[i]:
                rows.append(out[i])
            if cross[i]:
                rows.append(hits[i])
        out = np.array(rows).reshape(-1, 2)
    return out


def polygon_moments_numpy(poly: np.ndarray) -> tuple[float, float, float]:
    """Signed area and first moments (∫x, ∫y) of a simple polygon."""
    p = np.asarray(poly, dtype=float)
    if p.shape[0] < 3:
        return 0.0, 0.0, 0.0
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    c = x * yn - xn * y
    area = 0.5 * c.sum()
    mx = ((x + xn) * c).sum() / 6.0
    my = ((y + yn) * c).sum() / 6.0
    return float(area), float(mx), float(my)


def halfspace_mask_numpy(points: np.ndarray, normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Boolean mask of points satisfying every inequality ``normals @ x <= offsets``."""
    mask = np.ones(points.shape[0], dtype=bool)
    chunk = 65536
    for s in range(0, points.shape[0], chunk):
        block = points[s:s + chunk]
        mask[s:s + chunk] = np.all(block @ normals.T <= offsets, axis=1)
    return mask


# ---------------------------------------------------------------- numba path


def _build_numba():
    from numba import njit

    @njit(cache=True)
    def clip_polygon_nb(poly, normals, offsets):
        cur = poly.copy()
        n_cur = cur.shape[0]
        for j in range(normals.shape[0]):
            if n_cur == 0:
                break
            buf = np.empty((2 * n_cur + 1, 2))
            a0 = normals[j, 0]
            a1 = normals[j, 1]
            b = offsets[j]
            k = 0
            for i in range(n_cur):
                i2 = (i + 1) % n_cur
                s = a0 * cur[i, 0] + a1 * cur[i, 1] - b
                s2 = a0 * cur[i2, 0] + a1 * cur[i2, 1] - b
                if s <= 0.0:
                    buf[k, 0] = cur[i, 0]
                    buf[k, 1] = cur[i, 1]
                    k += 1
                if (s <= 0.0) != (s2 <= 0.0):
                    t = s / (s - s2)
                    buf[k, 0] = cur[i, 0] + t * (cur[i2, 0] - cur[i, 0])
                    buf[k, 1] = cur[i, 1] + t * (cur[i2, 1] - cur[i, 1])
                    k += 1
            cur = buf[:k].copy()
            n_cur = k
        return cur

    @njit(cache=True)
    def polygon_moments_nb(poly):
        k = poly.shape[0]
        if k < 3:
            return 0.0, 0.0, 0.0
        area = 0.0
        mx = 0.0
        my = 0.0
        for i in range(k):
            i2 = (i + 1) % k
            c = poly[i, 0] * poly[i2, 1] - poly[i2, 0] * poly[i, 1]
            area += c
            mx += (poly[i, 0] + poly[i2, 0]) * c
            my += (poly[i, 1] + poly[i2, 1]) * c
        return 0.5 * area, mx / 6.0, my / 6.0

    @njit(cache=True)
    def halfspace_mask_nb(points, normals, offsets):
        npts = points.shape[0]
        m = normals.shape[0]
        d = points.shape[1]
        mask = np.ones(npts, dtype=np.bool_)
        for i in range(npts):
            for j in range(m):
                s = 0.0
                for k in range(d):
                    s += normals[j, k] * points[i, k]
                if s > offsets[j]:
                    mask[i] = False
                    break
        return mask

    return clip_polygon_nb, polygon_moments_nb, halfspace_mask_nb


USING_NUMBA = False
if _numba_requested():
    try:
        _clip_nb, _moments_nb, _mask_nb = _build_numba()
        USING_NUMBA = True
    except ImportError:  # numba missing: numpy path only
        USING_NUMBA = False


def clip_polygon(poly: np.ndarray, normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Clip a convex CCW polygon by halfplanes; dispatches to the active backend."""
    poly = np.ascontiguousarray(poly, dtype=float).reshape(-1, 2)
    normals = np.ascontiguousarray(normals, dtype=float).reshape(-1, 2)
    offsets = np.ascontiguousarray(offsets, dtype=float).reshape(-1)
    if USING_NUMBA:
        return _clip_nb(poly, normals, offsets)
    return clip_polygon_numpy(poly, normals, offsets)


def polygon_moments(poly: np.ndarray) -> tuple[float, float, float]:
    """Signed area and first moments of a polygon; dispatches to the active backend."""
    poly = np.ascontiguousarray(poly, dtype=float).reshape(-1, 2)
    if USING_NUMBA:
        a, mx, my = _moments_nb(poly)
        return float(a), float(mx), float(my)
    return polygon_moments_numpy(poly)


def halfspace_mask(points: np.ndarray, normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Membership mask for an H-polytope; dispatches to the active backend."""
    points = np.ascontiguousarray(points, dtype=float)
    normals = np.ascontiguousarray(normals, dtype=float)
    offsets = np.ascontiguousarray(offsets, dtype=float)
    if USING_NUMBA:
        return _mask_nb(points, normals, offsets)
    return halfspace_mask_numpy(points, normals, offsets)
