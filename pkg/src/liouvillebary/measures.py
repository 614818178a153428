"""Finitely atomic probability measures on the torus and their dual-norm distance.

The distance between two atomic measures is the supremum of
``int f d(sigma1 - sigma2)`` over functions with ``|f| <= 1`` and Lipschitz
constant at most 1.  On a finite support this is a linear program over the
values of ``f`` at the support points; any feasible vector extends to the
whole torus with the same bounds, so the program is exact.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, minimize
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import InvalidInputError, NumericalError, check_point, check_real
from .quadrature import torus_dist, wrap
from .strata import REGULAR, SingularConfig, Stratum, precedes

MAX_ATOMS = 64


def _label_str(label) -> str:
    return REGULAR if label == REGULAR else f"singular({label})"


def _parse_label(text) -> object:
    if text == REGULAR:
        return REGULAR
    if isinstance(text, str) and text.startswith("singular(") and text.endswith(")"):
        try:
            return int(text[9:-1])
        except ValueError:
            pass
    raise InvalidInputError(f"atom label must be 'regular' or 'singular(j)', got {text!r}")


@dataclass(frozen=True)
class Atom:
    """A weighted Dirac mass ``t * delta_x`` with a regular or singular label."""

    t: float
    x: tuple[float, float]
    label: object = REGULAR

    @property
    def singular(self) -> bool:
        return self.label != REGULAR

    def to_dict(self) -> dict:
        return {"t": self.t, "x": list(self.x), "label": _label_str(self.label)}


@dataclass(frozen=True)
class BarycenterConfig:
    """A formal barycenter ``sum_i t_i delta_{x_i}`` attached to a problem config.

    Parameters
    ----------
    atoms : sequence of Atom
        Weights must be non-negative and sum to 1; singular atoms sit exactly
        at their singular point.
    config : SingularConfig
        Ambient problem data.
    check_admissible : bool
        Whether to require the support pattern to be an admissible stratum.
    """

    atoms: tuple[Atom, ...]
    config: SingularConfig = field(repr=False)
    check_admissible: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        atoms = []
        for i, a in enumerate(self.atoms):
            t = check_real(a.t, f"atoms[{i}].t", lo=0)
            label = a.label
            if label != REGULAR:
                if isinstance(label, bool) or not isinstance(label, (int, np.integer)):
                    raise InvalidInputError(f"atoms[{i}] has unknown label {label!r}")
                label = int(label)
                if not 1 <= label <= self.config.m:
                    raise InvalidInputError(f"atoms[{i}] label singular({label}) out of range")
                p = self.config.positions[label - 1]
                if a.x is not None and torus_dist(check_point(a.x), p) > 1e-12:
                    raise InvalidInputError(f"atoms[{i}] is singular({label}) but not at p_{label}")
                x = tuple(p)
            else:
                x = tuple(float(v) for v in check_point(a.x, f"atoms[{i}].x"))
            atoms.append(Atom(t, x, label))
        if not atoms:
            raise InvalidInputError("a barycenter needs at least one atom")
        if len(atoms) > MAX_ATOMS:
            raise InvalidInputError(f"at most {MAX_ATOMS} atoms are supported")
        total = math.fsum(a.t for a in atoms)
        if abs(total - 1.0) > 1e-12:
            raise InvalidInputError(f"weights must sum to 1, got {total!r}")
        for (i, a), (j, b) in itertools.combinations(enumerate(atoms), 2):
            if torus_dist(a.x, b.x) <= 1e-14:
                raise InvalidInputError(f"atoms {i} and {j} share a position")
        labels = [a.label for a in atoms if a.singular]
        if len(set(labels)) != len(labels):
            raise InvalidInputError("a singular point carries at most one atom")
        object.__setattr__(self, "atoms", tuple(atoms))
        if self.check_admissible:
            s = self.stratum
            if not self.config.is_admissible(s.k, s.iota):
                raise InvalidInputError(f"support pattern {s!r} is not admissible for rho={self.config.rho}")

    @classmethod
    def from_arrays(cls, t, x, labels=None, config: SingularConfig | None = None, **kw):
        config = config if config is not None else SingularConfig(rho=1e6)
        labels = [REGULAR] * len(t) if labels is None else labels
        return cls(tuple(Atom(float(ti), tuple(xi) if xi is not None else None, li)
                         for ti, xi, li in zip(t, x, labels)), config, **kw)

    @property
    def weights(self) -> np.ndarray:
        return np.array([a.t for a in self.atoms])

    @property
    def points(self) -> np.ndarray:
        return np.array([a.x for a in self.atoms])

    @property
    def stratum(self) -> Stratum:
        support = [a for a in self.atoms if a.t > 0]
        k = sum(1 for a in support if not a.singular)
        iota = tuple(sorted(a.label for a in support if a.singular))
        return Stratum(k, iota, self.config.mass(k, iota))

    def to_json(self) -> list[dict]:
        return [a.to_dict() for a in self.atoms]

    @classmethod
    def from_json(cls, data: Sequence[dict], config: SingularConfig, **kw) -> "BarycenterConfig":
        atoms = []
        for i, d in enumerate(data):
            try:
                atoms.append(Atom(d["t"], tuple(d["x"]) if d.get("x") is not None else None,
                                  _parse_label(d.get("label", REGULAR))))
            except KeyError as exc:
                raise InvalidInputError(f"atom {i} lacks field {exc}") from None
        return cls(tuple(atoms), config, **kw)

    def __sub__(self, other: "BarycenterConfig") -> "AtomicSigned":
        return AtomicSigned.difference(self, other)


@dataclass(frozen=True)
class AtomicSigned:
    """A signed atomic measure of total mass zero."""

    masses: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        if abs(math.fsum(self.masses)) > 1e-12:
            raise InvalidInputError(f"signed measure has nonzero total mass {math.fsum(self.masses)!r}")

    @classmethod
    def difference(cls, a: BarycenterConfig, b: BarycenterConfig) -> "AtomicSigned":
        pts: list[tuple[float, float]] = []
        mass: list[float] = []
        for sign, meas in ((1.0, a), (-1.0, b)):
            for at in meas.atoms:
                for i, q in enumerate(pts):
                    if torus_dist(q, at.x) <= 1e-14:
                        mass[i] += sign * at.t
                        break
                else:
                    pts.append(at.x)
                    mass.append(sign * at.t)
        return cls(np.array(mass), np.array(pts).reshape(-1, 2))


def _pairwise(points: np.ndarray) -> np.ndarray:
    return torus_dist(points[:, None, :], points[None, :, :])


def bl_norm(mu: AtomicSigned) -> float:
    """Dual bounded-Lipschitz norm of a zero-mass atomic measure."""
    keep = np.abs(mu.masses) > 0
    c = mu.masses[keep]
    n = len(c)
    if n == 0:
        return 0.0
    D = _pairwise(mu.points[keep])
    rows, rhs = [], []
    for a, b in itertools.permutations(range(n), 2):
        r = np.zeros(n)
        r[a], r[b] = 1.0, -1.0
        rows.append(r)
        rhs.append(D[a, b])
    res = linprog(-c, A_ub=np.array(rows) if rows else None, b_ub=np.array(rhs) if rhs else None,
                  bounds=[(-1.0, 1.0)] * n, method="highs")
    if res.status != 0:
        raise NumericalError(f"bounded-Lipschitz LP failed: status={res.status}, message={res.message!r}")
    return max(0.0, float(-res.fun))


def bl_distance(sigma1: BarycenterConfig, sigma2: BarycenterConfig) -> float:
    """Dual distance ``sup {int f d(sigma1 - sigma2) : |f| <= 1, Lip(f) <= 1}``."""
    return bl_norm(AtomicSigned.difference(sigma1, sigma2))


def _transport_bound(t, x, targets) -> float:
    return float(sum(ti * min(2.0, float(torus_dist(xi, y))) for ti, xi, y in zip(t, x, targets)))


def _stratum_candidates(sigma: BarycenterConfig, s: Stratum, budget: int):
    """Best assignments of atoms to the slots of ``s`` ranked by a transport bound.

    Slots are the ``k`` regular positions (anchored at the first atom moved
    there) and the singular points of ``s``.
    """
    cfg = sigma.config
    order = sorted(range(len(sigma.atoms)), key=lambda i: -sigma.atoms[i].t)
    atoms = [sigma.atoms[i] for i in order]
    sing = [cfg.positions[j - 1] for j in s.iota]
    best: list[tuple[float, int, tuple]] = []
    counter = itertools.count()

    def push(cost, assign):
        item = (-cost, next(counter), assign)
        if len(best) < budget:
            heapq.heappush(best, item)
        elif cost < -best[0][0]:
            heapq.heapreplace(best, item)

    def bound():
        return math.inf if len(best) < budget else -best[0][0]

    def dfs(i, assign, anchors, cost):
        if cost >= bound():
            return
        if i == len(atoms):
            push(cost, tuple(assign))
            return
        a = atoms[i]
        moves = []
        for j, p in enumerate(sing):
            moves.append((a.t * min(2.0, float(torus_dist(a.x, p))), ("s", j)))
        for r, anc in enumerate(anchors):
            moves.append((a.t * min(2.0, float(torus_dist(a.x, anc))), ("r", r)))
        if len(anchors) < s.k:
            moves.append((0.0, ("r", len(anchors))))
        moves.sort(key=lambda m: m[0])
        for c, slot in moves:
            new_anchors = anchors + [a.x] if slot[0] == "r" and slot[1] == len(anchors) else anchors
            assign.append(slot)
            dfs(i + 1, assign, new_anchors, cost + c)
            assign.pop()

    dfs(0, [], [], 0.0)
    out = []
    for negc, _, assign in sorted(best, key=lambda b: -b[0]):
        out.append((-negc, assign))
    return atoms, sing, out


def _build(cfg, s, atoms, sing, assign, reg_pos=None):
    reg_w = np.zeros(s.k)
    sing_w = np.zeros(len(sing))
    anchors: list = []
    for a, (kind, j) in zip(atoms, assign):
        if kind == "s":
            sing_w[j] += a.t
        else:
            if j == len(anchors):
                anchors.append(a.x)
            reg_w[j] += a.t
    pos = list(anchors) if reg_pos is None else [tuple(p) for p in reg_pos]
    new_atoms = [Atom(float(w), tuple(np.mod(p, 1.0)), REGULAR) for w, p in zip(reg_w, pos) if w > 0]
    new_atoms += [Atom(float(w), None, j) for w, j in zip(sing_w, s.iota) if w > 0]
    return new_atoms, len(anchors)


def _candidate_measure(cfg, new_atoms):
    # regular atoms landing on a singular point or on each other collapse
    merged: list[Atom] = []
    for a in new_atoms:
        for i, b in enumerate(merged):
            if torus_dist(a.x if a.x is not None else cfg.positions[a.label - 1],
                          b.x if b.x is not None else cfg.positions[b.label - 1]) == 0:
                label = b.label if b.singular else a.label
                merged[i] = Atom(a.t + b.t, b.x if b.x is not None else a.x, label)
                break
        else:
            merged.append(a)
    total = math.fsum(a.t for a in merged)
    merged = [Atom(a.t / total, a.x, a.label) for a in merged]
    return BarycenterConfig(tuple(merged), cfg, check_admissible=False)


def distance_to_stratum(sigma: BarycenterConfig, s: Stratum, budget: int = 16, refine: bool = False) -> float:
    """Upper bound on the distance from ``sigma`` to the stratum ``s``.

    Atoms are assigned to the slots of ``s`` (kept in place, snapped to a
    singular point, or merged into another atom); the ``budget`` assignments
    with the smallest transport bound are evaluated exactly, and optionally
    the free positions of the best one are refined by Nelder-Mead.
    """
    cfg = sigma.config
    if not cfg.is_admissible(s.k, s.iota):
        raise InvalidInputError(f"{s!r} is not admissible")
    atoms, sing, cands = _stratum_candidates(sigma, s, max(1, int(budget)))
    best = math.inf
    best_assign = None
    for bound, assign in cands:
        if bound == 0.0:
            return 0.0
        new_atoms, _ = _build(cfg, s, atoms, sing, assign)
        d = bl_distance(sigma, _candidate_measure(cfg, new_atoms))
        if d < best:
            best, best_assign = d, assign
    if refine and best_assign is not None:
        anchors = []
        for a, (kind, j) in zip(atoms, best_assign):
            if kind == "r" and j == len(anchors):
                anchors.append(a.x)
        if anchors:
            start = np.array(anchors, dtype=float).ravel()

            def objective(v):
                new_atoms, _ = _build(cfg, s, atoms, sing, best_assign, v.reshape(-1, 2))
                try:
                    return bl_distance(sigma, _candidate_measure(cfg, new_atoms))
                except InvalidInputError:
                    return math.inf

            res = minimize(objective, start, method="Nelder-Mead",
                           options={"maxfev": 40 * len(start), "xatol": 1e-6, "fatol": 1e-9})
            best = min(best, float(res.fun))
    return best


@dataclass(frozen=True)
class InteriorCheck:
    interior: bool
    witness: BarycenterConfig | None = None
    bound: float = 0.0
    reason: str = ""

    def __bool__(self):
        return self.interior


def check_eps_interior(sigma: BarycenterConfig, eps: float) -> InteriorCheck:
    """Test whether ``sigma`` keeps all weights and separations at least ``eps / 2``.

    When it does not, return a witness obtained by moving the offending mass:
    a light atom is dropped onto its nearest neighbour, or two close atoms are
    merged (at their midpoint, or at the singular point if one is singular).
    The witness lies in a stratum strictly below that of ``sigma``; ``bound``
    is the guaranteed distance bound ``2 t`` or ``2 d``.
    """
    eps = check_real(eps, "eps", lo=0, lo_open=True)
    cfg = sigma.config
    atoms = [a for a in sigma.atoms if a.t > 0]
    s = sigma.stratum
    if s.k == 0 and s.l == 1:
        return InteriorCheck(True, reason="minimal stratum")
    if len(atoms) == 1:
        return InteriorCheck(True)
    pts = np.array([a.x for a in atoms])
    D = _pairwise(pts)
    np.fill_diagonal(D, np.inf)
    light = [i for i, a in enumerate(atoms) if a.t < eps / 2]
    if light:
        i = min(light, key=lambda i: atoms[i].t)
        j = int(np.argmin(D[i]))
        rest = [a for n, a in enumerate(atoms) if n not in (i, j)]
        host = atoms[j]
        rest.append(Atom(host.t + atoms[i].t, host.x, host.label))
        witness = BarycenterConfig(tuple(rest), cfg)
        return InteriorCheck(False, witness, 2 * atoms[i].t, f"weight {atoms[i].t} < eps/2")
    i, j = np.unravel_index(np.argmin(D), D.shape)
    d = float(D[i, j])
    if d < eps / 2:
        a, b = atoms[i], atoms[j]
        if a.singular and b.singular:
            raise InvalidInputError("eps exceeds the separation of the singular points")
        if a.singular or b.singular:
            host = a if a.singular else b
            merged = Atom(a.t + b.t, host.x, host.label)
        else:
            disp = wrap(np.subtract(b.x, a.x))
            mid = np.mod(np.asarray(a.x) + 0.5 * disp, 1.0)
            merged = Atom(a.t + b.t, tuple(mid), REGULAR)
        rest = [c for n, c in enumerate(atoms) if n not in (i, j)] + [merged]
        witness = BarycenterConfig(tuple(rest), cfg)
        return InteriorCheck(False, witness, 2 * d, f"separation {d} < eps/2")
    return InteriorCheck(True)


def witness_precedes(sigma: BarycenterConfig, witness: BarycenterConfig) -> bool:
    a, b = witness.stratum, sigma.stratum
    return a != b and precedes(a, b)


@dataclass(frozen=True)
class ProjectionResult:
    """Outcome of projecting a grid density onto the barycenter space."""

    sigma: BarycenterConfig | None
    residual: float
    status: str

    @property
    def ok(self) -> bool:
        return self.sigma is not None

    def to_dict(self) -> dict:
        return {"status": self.status, "residual": self.residual,
                "atoms": self.sigma.to_json() if self.sigma is not None else None}


def _disk_kernel(N: int, radius: float) -> np.ndarray:
    g = np.arange(N) / N
    d = wrap(g)
    D = np.hypot(d[:, None], d[None, :])
    return (D <= radius).astype(float)


def project_density(f, config: SingularConfig, radius: float = 0.05, eps: float = 0.05) -> ProjectionResult:
    """Greedy extraction of an admissible barycenter from a grid density.

    Parameters
    ----------
    f : TorusField or ndarray
        Non-negative node values of a unit-mass density on an ``N x N`` grid.
    config : SingularConfig
    radius : float
        Peak radius; singular points capture peaks within ``2 * radius`` and
        claim the disk of radius ``3 * radius``.
    eps : float
        Stop once the unclaimed mass drops below ``eps``.

    Returns
    -------
    ProjectionResult
        ``status`` is ``"ok"`` or ``"no admissible projection"``.
    """
    values = np.asarray(getattr(f, "values", f), dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise InvalidInputError("density must be a square grid")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise InvalidInputError("density must be finite and non-negative")
    N = values.shape[0]
    mass = values / N**2
    total = mass.sum()
    if abs(total - 1.0) > 1e-3:
        raise InvalidInputError(f"density must have unit mass, got {total}")
    radius = check_real(radius, "radius", lo=0, hi=1 / 6, lo_open=True)
    eps = check_real(eps, "eps", lo=0, hi=1, lo_open=True)
    g = np.arange(N) / N
    X, Y = np.meshgrid(g, g, indexing="ij")
    kernel_hat = np.fft.fft2(_disk_kernel(N, radius))

    remaining = mass.copy()
    used: set[int] = set()
    found: list[tuple[float, tuple[float, float], object]] = []
    k = 0
    iota: list[int] = []
    while remaining.sum() >= eps:
        ball = np.real(np.fft.ifft2(np.fft.fft2(remaining) * kernel_hat))
        n = int(np.argmax(ball))
        peak = np.array([X.flat[n], Y.flat[n]])
        if ball.flat[n] <= 0:
            break
        near = [j for j in range(1, config.m + 1) if j not in used
                and torus_dist(peak, config.positions[j - 1]) <= 2 * radius]
        if near:
            j = min(near, key=lambda j: float(torus_dist(peak, config.positions[j - 1])))
            trial = (k, tuple(sorted(iota + [j])))
            center = np.asarray(config.positions[j - 1])
            claim = torus_dist(np.stack([X, Y], -1), center) <= 3 * radius
        else:
            j = None
            trial = (k + 1, tuple(sorted(iota)))
            claim = torus_dist(np.stack([X, Y], -1), peak) <= radius
        if not config.is_admissible(*trial):
            break
        w = remaining[claim].sum()
        if j is None:
            disp = wrap(np.stack([X[claim], Y[claim]], -1) - peak)
            pos = tuple(np.mod(peak + (remaining[claim][:, None] * disp).sum(0) / w, 1.0))
            found.append((w, pos, REGULAR))
            k += 1
        else:
            found.append((w, tuple(config.positions[j - 1]), j))
            used.add(j)
            iota.append(j)
        remaining = np.where(claim, 0.0, remaining)
    residual = float(remaining.sum())
    if residual >= eps or not found:
        return ProjectionResult(None, residual, "no admissible projection")
    ws = np.array([w for w, _, _ in found])
    ws = ws / ws.sum()
    ws[-1] = 1.0 - math.fsum(ws[:-1])
    atoms = tuple(Atom(float(w), pos if lab == REGULAR else None, lab) for w, (_, pos, lab) in zip(ws, found))
    return ProjectionResult(BarycenterConfig(atoms, config), residual, "ok")


class BarycenterProjector(TransformerMixin, BaseEstimator):
    """Project grid densities onto admissible barycenters.

    Parameters
    ----------
    config : SingularConfig
    radius : float, default=0.05
    eps : float, default=0.05
    """

    def __init__(self, config: SingularConfig | None = None, radius: float = 0.05, eps: float = 0.05):
        self.config = config
        self.radius = radius
        self.eps = eps

    def fit(self, X=None, y=None):
        if not isinstance(self.config, SingularConfig):
            raise InvalidInputError("config must be a SingularConfig")
        check_real(self.radius, "radius", lo=0, lo_open=True)
        check_real(self.eps, "eps", lo=0, lo_open=True)
        self.config_ = self.config
        return self

    def transform(self, X) -> list[ProjectionResult]:
        check_is_fitted(self, "config_")
        if hasattr(X, "values") or np.asarray(X).ndim == 2:
            X = [X]
        return [project_density(f, self.config_, self.radius, self.eps) for f in X]
