"""Adaptive quadrature on the unit flat torus for integrands with point singularities.

Each singular or concentrated point (a "center") gets a square patch that is
integrated in polar coordinates about the center: Gauss-Legendre in angle on
the four triangles of the square, composite Gauss-Legendre in ``log r`` over
unit panels, and a Gauss-Jacobi panel with weight ``r**beta`` next to the
center.  The complement of the patches is cut into rectangles along the patch
edges and the cut-locus lines of every center, then integrated by adaptive
tensor Gauss-Legendre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from ._validation import PreconditionError, UnderResolvedError

Integrand = Callable[[np.ndarray, np.ndarray], np.ndarray]

#: smallest core scale the polar rules resolve in absolute torus coordinates
MIN_CORE = 1e-9


def wrap(d):
    """Minimal-image representative of a displacement, in ``[-0.5, 0.5)``."""
    d = np.asarray(d, dtype=float)
    return d - np.floor(d + 0.5)


def torus_dist(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = wrap(x - y)
    return np.hypot(d[..., 0], d[..., 1])


def cheb_dist(x, y) -> float:
    d = np.abs(wrap(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    return float(d.max())


@lru_cache(maxsize=None)
def _legendre(n: int):
    x, w = roots_legendre(n)
    return x, w


@lru_cache(maxsize=None)
def _jacobi(n: int, beta: float):
    # weight (1 + x)**beta on [-1, 1]
    x, w = roots_jacobi(n, 0.0, beta)
    return x, w


@dataclass(frozen=True)
class Center:
    """A point around which the integrand may be singular or sharply peaked.

    Parameters
    ----------
    pos : tuple of float
        Location on the torus.
    beta : float
        Leading radial exponent of ``r * f`` at the center, ``> -1``.
    core : float
        Smallest length scale of the integrand near the center.
    """

    pos: tuple[float, float]
    beta: float = 1.0
    core: float = 1.0


def _check_core(core: float) -> None:
    if core < MIN_CORE:
        raise UnderResolvedError(
            f"core scale {core:.3g} is below {MIN_CORE:g}; points that close to a center are not "
            f"representable in double precision")


def merge_centers(centers: Sequence[Center], tol: float = 1e-12) -> list[Center]:
    out: list[Center] = []
    for c in centers:
        for i, o in enumerate(out):
            if cheb_dist(c.pos, o.pos) <= tol:
                out[i] = Center(o.pos, min(o.beta, c.beta), min(o.core, c.core))
                break
        else:
            out.append(c)
    return out


def _radial_rule(r_max: float, r_min: float, beta: float, n: int, n_tail: int):
    """Nodes and weights for ``int_0^r_max g(r) dr`` with ``g ~ r**beta`` near 0."""
    if r_min >= r_max:
        r_min = r_max
    xj, wj = _jacobi(n_tail, float(beta))
    nodes = [0.5 * r_min * (1.0 + xj)]
    # weight absorbs r**beta: g(r) = r**beta * (g(r) / r**beta)
    weights = [wj * (0.5 * r_min) ** (beta + 1.0) / np.maximum(nodes[0], 1e-300) ** beta]
    if r_max > r_min:
        span = math.log(r_max / r_min)
        panels = max(1, math.ceil(span))
        edges = np.linspace(math.log(r_min), math.log(r_max), panels + 1)
        xl, wl = _legendre(n)
        for a, b in zip(edges[:-1], edges[1:]):
            s = 0.5 * (a + b) + 0.5 * (b - a) * xl
            r = np.exp(s)
            nodes.append(r)
            weights.append(0.5 * (b - a) * wl * r)
    return np.concatenate(nodes), np.concatenate(weights)


def _patch_integral(f: Integrand, center: Center, half: float, *, n_r: int = 16, n_theta: int = 24,
                    n_tail: int = 12, theta_panels: int = 2) -> np.ndarray:
    """Polar integral over the square ``|x - c|_inf <= half``."""
    cx, cy = center.pos
    r_min = min(center.core * 1e-3, half * 1e-3)
    xl, wl = _legendre(n_theta)
    xs, ys, ws = [], [], []
    edges = np.linspace(-math.pi / 4, math.pi / 4, theta_panels + 1)
    for side in range(4):
        rot = side * math.pi / 2
        for ta, tb in zip(edges[:-1], edges[1:]):
            t = 0.5 * (ta + tb) + 0.5 * (tb - ta) * xl
            wt = 0.5 * (tb - ta) * wl
            for ti, wti in zip(t, wt):
                r, wr = _radial_rule(half / math.cos(ti), r_min, center.beta, n_r, n_tail)
                xs.append(cx + r * math.cos(ti + rot))
                ys.append(cy + r * math.sin(ti + rot))
                ws.append(wti * wr * r)
    vals = f(np.concatenate(xs), np.concatenate(ys))
    return np.tensordot(np.concatenate(ws), vals, axes=(0, 0))


def _adaptive_rect(f: Integrand, rects: np.ndarray, *, rtol: float, atol: float, n: int = 8,
                   max_depth: int = 10) -> np.ndarray:
    """Adaptive tensor Gauss-Legendre over a batch of rectangles ``[x0, x1, y0, y1]``."""
    xl, wl = _legendre(n)
    W = np.outer(wl, wl).ravel()

    def rule(rs):
        x0, x1, y0, y1 = rs.T
        hx = 0.5 * (x1 - x0)
        hy = 0.5 * (y1 - y0)
        X = (0.5 * (x0 + x1))[:, None, None] + hx[:, None, None] * xl[None, :, None]
        Y = (0.5 * (y0 + y1))[:, None, None] + hy[:, None, None] * xl[None, None, :]
        X, Y = np.broadcast_arrays(X, Y)
        vals = f(X.reshape(-1), Y.reshape(-1))
        vals = vals.reshape((len(rs), n * n) + vals.shape[1:])
        return np.tensordot(W, np.moveaxis(vals, 1, 0), axes=(0, 0)) * (hx * hy).reshape(
            (-1,) + (1,) * (vals.ndim - 2))

    def split(rs):
        x0, x1, y0, y1 = rs.T
        xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        return np.concatenate([
            np.stack([x0, xm, y0, ym], 1), np.stack([xm, x1, y0, ym], 1),
            np.stack([x0, xm, ym, y1], 1), np.stack([xm, x1, ym, y1], 1)])

    total = 0.0
    active = np.asarray(rects, dtype=float).reshape(-1, 4)
    coarse = rule(active)
    scale = max(float(np.max(np.abs(np.sum(coarse, axis=0)))), atol)
    total_area = float(np.sum((active[:, 1] - active[:, 0]) * (active[:, 3] - active[:, 2])))
    for depth in range(max_depth + 1):
        if len(active) == 0:
            break
        kids = split(active)
        fine = rule(kids)
        m = len(active)
        fine_sum = fine[:m] + fine[m:2 * m] + fine[2 * m:3 * m] + fine[3 * m:]
        err = np.abs(fine_sum - coarse)
        err = err.reshape(m, -1).max(axis=1)
        area = (active[:, 1] - active[:, 0]) * (active[:, 3] - active[:, 2]) / total_area
        ok = (err <= np.maximum(rtol * scale * area, atol * area)) | (depth == max_depth)
        total = total + np.sum(fine_sum[ok], axis=0)
        keep = np.repeat(~ok[None, :], 4, axis=0).ravel()
        active = kids[keep]
        coarse = fine[keep]
    return total


def integrate_torus(f: Integrand, centers: Sequence[Center] = (), *, extra_breaks: Sequence[float] = (),
                    patch: float = 0.2, rtol: float = 1e-10, atol: float = 1e-14, n_r: int = 16,
                    n_theta: int = 24) -> np.ndarray:
    """Integrate ``f(x, y)`` over the unit torus.

    Parameters
    ----------
    f : callable
        Vectorized integrand taking coordinate arrays (already unwrapped; ``f``
        must be periodic) and returning an array whose leading axis matches.
        Trailing axes are integrated componentwise.
    centers : sequence of Center
        Points that receive polar patches.
    extra_breaks : sequence of float
        Coordinates (applied to both axes) where the integrand has kinks,
        such as cut-locus lines of the minimal-image distance.
    patch : float
        Maximal half-width of the square patches.

    Returns
    -------
    ndarray or float
    """
    centers = merge_centers(centers)
    for c in centers:
        _check_core(c.core)
    halfs = []
    for i, c in enumerate(centers):
        sep = min((cheb_dist(c.pos, o.pos) for j, o in enumerate(centers) if j != i), default=1.0)
        halfs.append(min(patch, 0.45 * sep))
    total = 0.0
    for c, a in zip(centers, halfs):
        total = total + _patch_integral(f, c, a, n_r=n_r, n_theta=n_theta)

    bx = {0.0, 1.0}
    by = {0.0, 1.0}
    for c, a in zip(centers, halfs):
        for v, s in ((c.pos[0], bx), (c.pos[1], by)):
            for e in (v - a, v + a, v + 0.5):
                s.add(float(e % 1.0))
    for e in extra_breaks:
        bx.add(float(e % 1.0))
        by.add(float(e % 1.0))
    xs = np.array(sorted(bx))
    ys = np.array(sorted(by))
    rects = []
    for x0, x1 in zip(xs[:-1], xs[1:]):
        if x1 - x0 < 1e-15:
            continue
        for y0, y1 in zip(ys[:-1], ys[1:]):
            if y1 - y0 < 1e-15:
                continue
            mid = (0.5 * (x0 + x1), 0.5 * (y0 + y1))
            if any(cheb_dist(mid, c.pos) < a for c, a in zip(centers, halfs)):
                continue
            rects.append((x0, x1, y0, y1))
    if rects:
        total = total + _adaptive_rect(f, np.array(rects), rtol=rtol, atol=atol)
    return total


def integrate_disk(f: Integrand, center, radius: float, *, beta: float = 1.0, core: float = 1.0,
                   n_r: int = 16, n_theta: int = 64) -> np.ndarray:
    """Integrate ``f`` over the geodesic disk ``B_radius(center)``.

    The angular rule is the periodic trapezoid rule; radially the rule of
    :func:`integrate_torus` patches is used.  ``radius`` must stay below 0.5.
    """
    if not 0 < radius < 0.5:
        raise PreconditionError(f"disk radius must lie in (0, 0.5), got {radius}")
    _check_core(core)
    cx, cy = center
    r_min = min(core * 1e-3, radius * 1e-3)
    r, wr = _radial_rule(radius, r_min, beta, n_r, 12)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    R, T = np.meshgrid(r, th, indexing="ij")
    vals = f((cx + R * np.cos(T)).ravel(), (cy + R * np.sin(T)).ravel())
    w = np.broadcast_to((wr * r)[:, None] * (2 * np.pi / n_theta), R.shape)
    return np.tensordot(w.ravel(), vals, axes=(0, 0))
