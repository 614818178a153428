"""Independent reference computations shared by the unit and acceptance tests."""

import itertools
import math

import numpy as np
from scipy.integrate import quad

from liouvillebary.measures import AtomicSigned
from liouvillebary.quadrature import torus_dist


def brute_bl(mu: AtomicSigned, step: float = 0.002) -> float:
    """Grid search over test values at up to three support points.

    With zero total mass the pairing ignores constants, so one value can be
    pinned to 0 once the sup bound is traded for differences bounded by 2.
    """
    pts, c = mu.points, mu.masses
    n = len(c)
    assert n <= 3
    D = np.minimum(torus_dist(pts[:, None], pts[None, :]), 2.0)
    grid = np.arange(-2, 2 + step / 2, step)
    F = np.meshgrid(*([np.zeros(1)] + [grid] * (n - 1)), indexing="ij")
    ok = np.ones(F[0].shape, dtype=bool)
    for i, j in itertools.combinations(range(n), 2):
        ok &= np.abs(F[i] - F[j]) <= D[i, j] + 1e-12
    val = sum(ci * Fi for ci, Fi in zip(c, F))
    return float(val[ok].max())


def radial_energy(lam: float, g: float, R: float = 0.5) -> float:
    """Dirichlet energy of one bubble with cone exponent ``g`` inside the disk of radius ``R``."""
    s = 2 + 2 * g

    def f(u):
        r = math.exp(u)
        return 2 * math.pi * (s * lam**2 * r ** (s - 1) / (1 + lam**2 * r**s)) ** 2 * r * r

    knee = -2 * math.log(lam) / s
    return quad(f, math.log(1e-14), math.log(R), points=[knee], limit=200, epsabs=1e-12)[0]


def slope(lams, values) -> float:
    return float(np.polyfit(np.log(lams), values, 1)[0])
