"""Spectral fields on the unit flat torus and the mean-field functional.

Grids have ``N`` nodes per axis at ``(i/N, j/N)``.  Green functions are
normalized by ``Delta G_p = 2*pi*(delta_p - 1)`` with zero mean, so that
``G_p(x) ~ log d(x, p)`` near ``p``.  Two representations are provided: a
spectral one on the grid (used for residual checks and for the solver) and a
closed theta-function form that can be evaluated anywhere (used by the
adaptive quadratures).
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from ._validation import InvalidInputError, UnderResolvedError, check_power_of_two, check_real
from .measures import BarycenterConfig
from .quadrature import Center, _adaptive_rect, _legendre, _jacobi, integrate_disk, integrate_torus, torus_dist, wrap
from .strata import SingularConfig

_NOME = math.exp(-math.pi)
_LOG_EULER = sum(math.log1p(-math.exp(-2 * math.pi * n)) for n in range(1, 30))
_THETA_TERMS = np.arange(12)
_THETA_COEF = 2.0 * (-1.0) ** _THETA_TERMS * _NOME ** ((_THETA_TERMS + 0.5) ** 2)

#: limit of G_p(x) - log d(x, p) as x -> p
GREEN_REGULAR_PART = math.log(2 * math.pi) - math.pi / 6 + 2 * _LOG_EULER


@dataclass(frozen=True)
class TorusGrid:
    """Uniform ``N x N`` node grid on the unit torus."""

    N: int

    def __post_init__(self):
        object.__setattr__(self, "N", check_power_of_two(self.N))

    @property
    def spacing(self) -> float:
        return 1.0 / self.N

    @property
    def cell_area(self) -> float:
        return 1.0 / self.N**2

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        g = np.arange(self.N) / self.N
        return np.meshgrid(g, g, indexing="ij")

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        k = np.fft.fftfreq(self.N, 1.0 / self.N)
        return np.meshgrid(k, k, indexing="ij")

    @cached_property
    def k2(self) -> np.ndarray:
        kx, ky = self.wavenumbers
        return kx**2 + ky**2

    @cached_property
    def laplacian_symbol(self) -> np.ndarray:
        return -4 * math.pi**2 * self.k2

    def field(self, values) -> "TorusField":
        return TorusField(self, values)

    def distance_to(self, p) -> np.ndarray:
        X, Y = self.coords
        return torus_dist(np.stack([X, Y], -1), p)


class TorusField:
    """Real node values on a :class:`TorusGrid` with cached spectral data.

    Parameters
    ----------
    grid : TorusGrid
    values : array_like, shape (N, N)
    """

    __slots__ = ("grid", "values", "__dict__")

    def __init__(self, grid: TorusGrid, values):
        values = np.array(values, dtype=float)
        if values.shape != (grid.N, grid.N):
            raise InvalidInputError(f"values must have shape {(grid.N, grid.N)}, got {values.shape}")
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @classmethod
    def from_coefficients(cls, grid: TorusGrid, coef) -> "TorusField":
        return cls(grid, np.real(np.fft.ifft2(coef) * grid.N**2))

    @cached_property
    def coefficients(self) -> np.ndarray:
        """Fourier coefficients normalized so that ``c[0, 0]`` is the mean."""
        return np.fft.fft2(self.values) / self.grid.N**2

    @cached_property
    def mean(self) -> float:
        return float(np.real(self.coefficients[0, 0]))

    def laplacian(self) -> "TorusField":
        return TorusField.from_coefficients(self.grid, self.coefficients * self.grid.laplacian_symbol)

    def gradient(self) -> tuple[np.ndarray, np.ndarray]:
        kx, ky = self.grid.wavenumbers
        c = self.coefficients
        # the Nyquist mode carries no odd derivative on a real grid
        nyq = self.grid.N // 2
        kx = np.where(np.abs(kx) == nyq, 0, kx)
        ky = np.where(np.abs(ky) == nyq, 0, ky)
        gx = np.real(np.fft.ifft2(2j * math.pi * kx * c)) * self.grid.N**2
        gy = np.real(np.fft.ifft2(2j * math.pi * ky * c)) * self.grid.N**2
        return gx, gy

    def __add__(self, other):
        other = other.values if isinstance(other, TorusField) else other
        return TorusField(self.grid, self.values + other)

    def __sub__(self, other):
        other = other.values if isinstance(other, TorusField) else other
        return TorusField(self.grid, self.values - other)

    def __mul__(self, scalar):
        return TorusField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def grid_norm(self) -> float:
        """Discrete ``L^2`` norm with cell-area weights."""
        return float(np.sqrt(np.mean(self.values**2)))

    def to_bytes(self) -> bytes:
        """Little-endian ``uint64`` header ``N`` followed by row-major float64 values."""
        return struct.pack("<Q", self.grid.N) + self.values.astype("<f8").tobytes(order="C")

    @classmethod
    def from_bytes(cls, data: bytes) -> "TorusField":
        (N,) = struct.unpack("<Q", data[:8])
        values = np.frombuffer(data[8:], dtype="<f8")
        if values.size != N * N:
            raise InvalidInputError(f"payload holds {values.size} values, header says N={N}")
        return cls(TorusGrid(int(N)), values.reshape(N, N))

    def to_csv(self) -> str:
        buf = io.StringIO()
        np.savetxt(buf, self.values, delimiter=",", fmt="%.17g")
        return buf.getvalue()


def theta_green(dx, dy) -> np.ndarray:
    """Zero-mean Green function of the unit square torus at displacement ``(dx, dy)``.

    Uses ``log|theta_1(pi z)| - pi y**2 + const`` with ``z = x + i y`` the
    minimal-image displacement.
    """
    x = wrap(dx)
    y = wrap(dy)
    z = math.pi * (x + 1j * y)
    shape = z.shape
    z = z.reshape(-1)
    th = np.zeros(z.shape, dtype=complex)
    for n, c in zip(_THETA_TERMS, _THETA_COEF):
        th += c * np.sin((2 * n + 1) * z)
    with np.errstate(divide="ignore"):
        out = np.log(np.abs(th)) - math.pi * y.reshape(-1) ** 2 - _LOG_EULER + math.pi / 12
    return out.reshape(shape)


def green_exact(points, p) -> np.ndarray:
    """Green function with pole ``p`` evaluated at arbitrary points ``(..., 2)``."""
    pts = np.asarray(points, dtype=float)
    return theta_green(pts[..., 0] - p[0], pts[..., 1] - p[1])


def discrete_delta(grid: TorusGrid, p) -> TorusField:
    """Band-limited Dirac mass at ``p``: the grid field with coefficients ``exp(-2 pi i k.p)``."""
    kx, ky = grid.wavenumbers
    return TorusField.from_coefficients(grid, np.exp(-2j * math.pi * (kx * p[0] + ky * p[1])))


def green_function(grid: TorusGrid, p) -> TorusField:
    """Spectral Green function: ``Delta G = 2 pi (delta_p - 1)`` with zero mean.

    Parameters
    ----------
    grid : TorusGrid
    p : point
        Pole; it should sit off the grid nodes (a half-cell offset is typical).
    """
    kx, ky = grid.wavenumbers
    k2 = grid.k2
    phase = np.exp(-2j * math.pi * (kx * p[0] + ky * p[1]))
    safe = np.where(k2 > 0, k2, 1.0)
    coef = np.where(k2 > 0, -phase / (2 * math.pi * safe), 0.0)
    return TorusField.from_coefficients(grid, coef)


def green_residual(G: TorusField, p) -> float:
    """Grid norm of ``Delta G - 2 pi (delta_p - 1)``."""
    delta = discrete_delta(G.grid, p)
    res = G.laplacian().values - 2 * math.pi * (delta.values - 1.0)
    return float(np.sqrt(np.mean(res**2)))


def h_tilde_at(points, config: SingularConfig, base: Callable | None = None) -> np.ndarray:
    """Pointwise ``h * exp(2 sum_j alpha_j G_{p_j})``."""
    pts = np.asarray(points, dtype=float)
    expo = np.zeros(pts.shape[:-1])
    for a, p in zip(config.alphas, config.positions):
        expo = expo + 2 * a * green_exact(pts, p)
    h = 1.0 if base is None else base(pts[..., 0], pts[..., 1])
    with np.errstate(over="ignore"):
        return h * np.exp(expo)


def h_tilde(grid: TorusGrid, config: SingularConfig, base: TorusField | None = None) -> TorusField:
    """Weight ``h_tilde`` sampled at the grid nodes (``h = 1`` unless ``base`` is given)."""
    X, Y = grid.coords
    vals = h_tilde_at(np.stack([X, Y], -1), config)
    if base is not None:
        if np.any(base.values <= 0):
            raise InvalidInputError("base weight must be positive")
        vals = vals * base.values
    return TorusField(grid, vals)


def gamma(lam, d, alpha, delta):
    """Interpolated cone exponent of a bubble centred at distance ``d`` from a singular point.

    Equals ``alpha`` for ``d <= delta * lam**(-1/(1+alpha))``, zero for
    ``d >= delta``, and in between solves
    ``1 + gamma = log(lam) / (log(lam) + alpha * (log d - log delta))``.
    """
    lam = float(lam)
    if lam <= 1:
        raise InvalidInputError(f"lambda must exceed 1, got {lam}")
    check_real(alpha, "alpha", lo=-1, hi=0, lo_open=True)
    check_real(delta, "delta", lo=0, hi=1, lo_open=True, hi_open=True)
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise InvalidInputError("distance must be non-negative")
    if alpha == 0:
        return np.zeros_like(d) if d.ndim else 0.0
    L = math.log(lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = L + alpha * (np.log(d) - math.log(delta))
        g = L / denom - 1.0
    inner = d <= delta * lam ** (-1.0 / (1.0 + alpha))
    g = np.where(inner, alpha, np.where(d >= delta, 0.0, np.clip(g, alpha, 0.0)))
    return g if g.ndim else float(g)


@dataclass(frozen=True)
class BubbleParams:
    """Concentration parameter, cutoff and barycenter of a multi-bump profile.

    The exponent of each atom is fixed by its distance to the nearest
    singular point; an atom at least ``delta`` away from all of them is a
    plain regular bubble.
    """

    lam: float
    sigma: BarycenterConfig
    delta: float | None = None
    gammas: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        lam = check_real(self.lam, "lam", lo=1, lo_open=True)
        cfg = self.sigma.config
        delta = cfg.delta if self.delta is None else check_real(self.delta, "delta", lo=0, hi=1, lo_open=True)
        if cfg.m >= 2:
            sep = min(float(torus_dist(p, q)) for i, p in enumerate(cfg.positions) for q in cfg.positions[i + 1:])
            if delta >= sep / 4:
                raise InvalidInputError(f"delta={delta} must stay below a quarter of the singular separation {sep}")
        gs = []
        for a in self.sigma.atoms:
            if cfg.m == 0:
                gs.append(0.0)
                continue
            d = [float(torus_dist(a.x, p)) for p in cfg.positions]
            j = int(np.argmin(d))
            alpha = cfg.alphas[j] if d[j] < delta else 0.0
            gs.append(float(gamma(lam, d[j], alpha, delta)) if alpha else 0.0)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "gammas", tuple(gs))

    @property
    def config(self) -> SingularConfig:
        return self.sigma.config

    @property
    def core_scales(self) -> np.ndarray:
        """Radius ``lam**(-1/(1+gamma_i))`` of each bubble core."""
        return self.lam ** (-1.0 / (1.0 + np.array(self.gammas)))

    def with_lam(self, lam: float) -> "BubbleParams":
        return BubbleParams(lam, self.sigma, self.delta)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "delta": self.delta, "gammas": list(self.gammas),
                "sigma": self.sigma.to_json()}


def _bubble_terms(params: BubbleParams, x, y):
    """Per-atom ``log(t_i b_i)`` and displacement data at points ``(x, y)``."""
    lam2 = params.lam**2
    logs, disp, dist = [], [], []
    for a, g in zip(params.sigma.atoms, params.gammas):
        dx = wrap(x - a.x[0])
        dy = wrap(y - a.x[1])
        d = np.hypot(dx, dy)
        with np.errstate(divide="ignore"):
            logs.append(math.log(a.t) + math.log(lam2) - 2 * np.log1p(lam2 * d ** (2 + 2 * g)) if a.t > 0
                        else np.full_like(d, -np.inf))
        disp.append((dx, dy))
        dist.append(d)
    return np.array(logs), disp, dist


def bubble_value(params: BubbleParams, x, y) -> np.ndarray:
    """``phi = 1/2 log sum_i t_i lam^2 / (1 + lam^2 d_i^(2(1+gamma_i)))^2``."""
    logs, _, _ = _bubble_terms(params, np.asarray(x, float), np.asarray(y, float))
    top = logs.max(axis=0)
    return 0.5 * (top + np.log(np.exp(logs - top).sum(axis=0)))


def bubble_density(params: BubbleParams, x, y) -> np.ndarray:
    """``exp(2 phi)`` without the weight."""
    logs, _, _ = _bubble_terms(params, np.asarray(x, float), np.asarray(y, float))
    return np.exp(logs).sum(axis=0)


def bubble_gradient(params: BubbleParams, x, y) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the multi-bump profile."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    logs, disp, dist = _bubble_terms(params, x, y)
    top = logs.max(axis=0)
    w = np.exp(logs - top)
    w = w / w.sum(axis=0)
    lam2 = params.lam**2
    gx = np.zeros_like(x)
    gy = np.zeros_like(y)
    for wi, g, (dx, dy), d in zip(w, params.gammas, disp, dist):
        s = 2 + 2 * g
        with np.errstate(divide="ignore", invalid="ignore"):
            # d/dd of log b_i divided by d
            coef = -2 * s * lam2 * d ** (s - 2) / (1 + lam2 * d**s)
        coef = np.where(d > 0, coef, 0.0)
        gx = gx + 0.5 * wi * coef * dx
        gy = gy + 0.5 * wi * coef * dy
    return gx, gy


def check_resolution(grid: TorusGrid, params: BubbleParams) -> None:
    """Refuse bubbles whose core is narrower than four grid cells."""
    worst = float(np.min(params.core_scales))
    if worst < 4 * grid.spacing:
        raise UnderResolvedError(
            f"bubble core {worst:.3g} is below 4 grid cells ({4 * grid.spacing:.3g}); "
            f"use the adaptive quadrature path or a finer grid")


def phi_multibump(grid: TorusGrid, params: BubbleParams, guard: bool = True) -> TorusField:
    """Multi-bump profile sampled on ``grid``.

    Raises
    ------
    UnderResolvedError
        If ``guard`` is set and a bubble core is below four grid cells.
    """
    if guard:
        check_resolution(grid, params)
    X, Y = grid.coords
    return TorusField(grid, bubble_value(params, X, Y))


def dirichlet_energy(u: TorusField) -> float:
    """``int |grad u|^2`` by Parseval."""
    c = u.coefficients
    return float(4 * math.pi**2 * np.sum(u.grid.k2 * np.abs(c) ** 2))


def fd_dirichlet_energy(u: TorusField) -> float:
    """Second-order finite-difference energy, for consistency checks."""
    h = u.grid.spacing
    v = u.values
    gx = (np.roll(v, -1, 0) - v) / h
    gy = (np.roll(v, -1, 1) - v) / h
    return float(np.mean(gx**2 + gy**2))


def _atom_centers(params: BubbleParams, beta_of_gamma: Callable[[float], float]) -> list[Center]:
    out = []
    for a, g, core in zip(params.sigma.atoms, params.gammas, params.core_scales):
        out.append(Center(tuple(a.x), beta_of_gamma(g), float(core)))
    return out


def _cut_breaks(params: BubbleParams) -> list[float]:
    br = []
    for a in params.sigma.atoms:
        br.extend([a.x[0] + 0.5, a.x[1] + 0.5])
    return br


def bubble_energy(params: BubbleParams, rtol: float = 1e-10) -> float:
    """Dirichlet energy of the profile by adaptive quadrature of its analytic gradient."""

    def f(x, y):
        gx, gy = bubble_gradient(params, x, y)
        return gx**2 + gy**2

    centers = _atom_centers(params, lambda g: 3 + 4 * g)
    return float(integrate_torus(f, centers, extra_breaks=_cut_breaks(params), rtol=rtol))


def bubble_mean(params: BubbleParams, rtol: float = 1e-10) -> float:
    """``int phi`` by adaptive quadrature."""
    centers = _atom_centers(params, lambda g: 1.0)
    return float(integrate_torus(lambda x, y: bubble_value(params, x, y), centers,
                                 extra_breaks=_cut_breaks(params), rtol=rtol))


def _mass_centers(params: BubbleParams) -> list[Center]:
    cfg = params.config
    centers = _atom_centers(params, lambda g: 1.0)
    for a, p in zip(cfg.alphas, cfg.positions):
        centers.append(Center(tuple(p), 1 + 2 * a, 1.0))
    return centers


def bubble_mass(params: BubbleParams, rtol: float = 1e-10) -> float:
    """``int h_tilde exp(2 phi)`` by adaptive quadrature (``h = 1``)."""
    cfg = params.config

    def f(x, y):
        return h_tilde_at(np.stack([x, y], -1), cfg) * bubble_density(params, x, y)

    return float(integrate_torus(f, _mass_centers(params), extra_breaks=_cut_breaks(params), rtol=rtol))


def ball_mass(params: BubbleParams, center, radius: float) -> float:
    """``int_{B_radius(center)} h_tilde exp(2 phi)``.

    The ball may contain a singular point only at its center.
    """
    cfg = params.config
    center = tuple(float(v) for v in center)
    beta = 1.0
    for a, p in zip(cfg.alphas, cfg.positions):
        d = float(torus_dist(center, p))
        if d <= 1e-12:
            beta = 1 + 2 * a
        elif d < radius + 1e-9:
            raise InvalidInputError(f"singular point {p} lies inside the ball off its center")
    core = float(np.min(params.core_scales))

    def f(x, y):
        return h_tilde_at(np.stack([x, y], -1), cfg) * bubble_density(params, x, y)

    return float(integrate_disk(f, center, radius, beta=beta, core=core, n_theta=96))


def weight_integral(config: SingularConfig) -> float:
    """``int h_tilde`` by adaptive quadrature."""
    centers = [Center(tuple(p), 1 + 2 * a, 1.0) for a, p in zip(config.alphas, config.positions)]
    return float(integrate_torus(lambda x, y: h_tilde_at(np.stack([x, y], -1), config), centers))


def bubble_functional(params: BubbleParams, rho: float) -> dict:
    """Energy, mean, log-mass and ``J`` of the profile, all by adaptive quadrature."""
    E = bubble_energy(params)
    mean = bubble_mean(params)
    mass = bubble_mass(params)
    return {"energy": E, "mean": mean, "log_mass": math.log(mass),
            "J": E + 2 * rho * mean - rho * math.log(mass)}


# grid functional ----------------------------------------------------------------

def _cell_hat_integrals(config: SingularConfig, x0: float, y0: float, h: float, p, alpha: float,
                        contains: bool, n: int = 20) -> np.ndarray:
    """``int h_tilde psi`` over one cell for its four bilinear hats.

    Order of the hats: (x0, y0), (x0+h, y0), (x0, y0+h), (x0+h, y0+h).
    """
    def f(x, y):
        u = (x - x0) / h
        v = (y - y0) / h
        w = h_tilde_at(np.stack([x, y], -1), config)
        return np.stack([(1 - u) * (1 - v) * w, u * (1 - v) * w, (1 - u) * v * w, u * v * w], -1)

    if not contains:
        return _adaptive_rect(f, np.array([[x0, x0 + h, y0, y0 + h]]), rtol=1e-13, atol=1e-18)
    # polar rule about p over the four triangles of the cell
    px, py = p
    beta = 1 + 2 * alpha
    xl, wl = _legendre(n)
    xj, wj = _jacobi(n, beta)
    corners = [(x0, y0), (x0 + h, y0), (x0 + h, y0 + h), (x0, y0 + h)]
    xs, ys, ws = [], [], []
    for (ax, ay), (bx, by) in zip(corners, corners[1:] + corners[:1]):
        ta = math.atan2(ay - py, ax - px)
        tb = math.atan2(by - py, bx - px)
        if tb < ta:
            tb += 2 * math.pi
        # edge line: points e(s) = a + s (b - a); distance from p along angle t
        ex, ey = bx - ax, by - ay
        t = 0.5 * (ta + tb) + 0.5 * (tb - ta) * xl
        wt = 0.5 * (tb - ta) * wl
        for ti, wti in zip(t, wt):
            cx, cy = math.cos(ti), math.sin(ti)
            den = cx * ey - cy * ex
            R = ((ax - px) * ey - (ay - py) * ex) / den
            r = 0.5 * R * (1 + xj)
            # int_0^R r^beta g(r) dr with g = f r / r^beta
            wr = wj * (0.5 * R) ** (beta + 1) / r**beta
            xs.append(px + r * cx)
            ys.append(py + r * cy)
            ws.append(wti * wr * r)
    vals = f(np.concatenate(xs), np.concatenate(ys))
    return np.tensordot(np.concatenate(ws), vals, axes=(0, 0))


def product_weights(grid: TorusGrid, config: SingularConfig, patch: int = 3) -> np.ndarray:
    """Node weights ``W`` with ``int h_tilde e^{2u} ~ sum_n W_n e^{2 u_n}``.

    Away from the singular points this is the trapezoid rule.  In a block of
    ``(2 patch + 1)^2`` cells around each ``p_j`` the weights are the exact
    integrals of ``h_tilde`` against the bilinear hat functions.
    """
    N = grid.N
    h = grid.spacing
    in_patch = np.zeros((N, N), dtype=bool)
    cells = []
    for a, p in zip(config.alphas, config.positions):
        i0 = int(math.floor(p[0] * N)) % N
        j0 = int(math.floor(p[1] * N)) % N
        for di in range(-patch, patch + 1):
            for dj in range(-patch, patch + 1):
                i, j = (i0 + di) % N, (j0 + dj) % N
                if in_patch[i, j]:
                    raise InvalidInputError("quadrature patches of two singular points overlap")
                in_patch[i, j] = True
                cells.append((i0 + di, j0 + dj, p, a, di == 0 and dj == 0))
    outside = ~in_patch
    # nodes touching at least one trapezoid cell
    touch = outside | np.roll(outside, 1, 0) | np.roll(outside, 1, 1) | np.roll(np.roll(outside, 1, 0), 1, 1)
    X, Y = grid.coords
    H = np.zeros((N, N))
    H[touch] = h_tilde_at(np.stack([X[touch], Y[touch]], -1), config)
    W = np.zeros((N, N))
    quarter = 0.25 * h * h * outside
    for s0, s1 in ((0, 0), (1, 0), (0, 1), (1, 1)):
        W += np.roll(np.roll(quarter, s0, 0), s1, 1) * H
    for ci, cj, p, a, contains in cells:
        x0, y0 = ci * h, cj * h
        # unwrap p next to the cell
        pp = (x0 + wrap(p[0] - x0), y0 + wrap(p[1] - y0))
        vals = _cell_hat_integrals(config, x0, y0, h, pp, a, contains)
        for (si, sj), v in zip(((0, 0), (1, 0), (0, 1), (1, 1)), vals):
            W[(ci + si) % N, (cj + sj) % N] += v
    return W


@dataclass
class GridFunctional:
    """Discrete ``J(u) = int |grad u|^2 + 2 rho int u - rho log int h_tilde e^{2u}``.

    Parameters
    ----------
    grid : TorusGrid
    config : SingularConfig
    rho : float, optional
        Defaults to ``config.rho``.
    """

    grid: TorusGrid
    config: SingularConfig
    rho: float | None = None
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.rho = self.config.rho if self.rho is None else check_real(self.rho, "rho", lo=0, lo_open=True)
        self.weights = product_weights(self.grid, self.config)

    def _log_mass(self, v: np.ndarray) -> tuple[float, np.ndarray]:
        top = float(v.max())
        e = self.weights * np.exp(2 * (v - top))
        S = e.sum()
        return 2 * top + math.log(S), e / S

    def log_mass(self, u) -> float:
        return self._log_mass(_values(u))[0]

    def value(self, u) -> float:
        v = _values(u)
        f = u if isinstance(u, TorusField) else TorusField(self.grid, v)
        return dirichlet_energy(f) + 2 * self.rho * float(v.mean()) - self.rho * self._log_mass(v)[0]

    def residual_field(self, u) -> np.ndarray:
        """``-Delta u + rho - rho h_tilde e^{2u} / int h_tilde e^{2u}`` at the nodes."""
        v = _values(u)
        f = u if isinstance(u, TorusField) else TorusField(self.grid, v)
        _, share = self._log_mass(v)
        return -f.laplacian().values + self.rho - self.rho * share * self.grid.N**2

    def gradient(self, u) -> np.ndarray:
        """Exact gradient of :meth:`value` with respect to the node values."""
        return 2 * self.grid.cell_area * self.residual_field(u)

    def residual(self, u) -> float:
        r = self.residual_field(u)
        return float(np.sqrt(np.mean(r**2)))


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, TorusField) else np.asarray(u, dtype=float)


def functional_J(u: TorusField, rho: float, config: SingularConfig) -> float:
    """Discrete mean-field functional of a grid field."""
    return GridFunctional(u.grid, config, rho).value(u)


def el_residual(u: TorusField, rho: float, config: SingularConfig) -> float:
    """Grid ``L^2`` norm of the Euler-Lagrange residual."""
    return GridFunctional(u.grid, config, rho).residual(u)
