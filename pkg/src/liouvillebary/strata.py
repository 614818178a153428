"""Combinatorics of the weighted barycenter space.

A stratum ``(k, iota)`` collects the measures with ``k`` free regular atoms and
atoms pinned at the singular points ``p_i`` for ``i`` in ``iota``.  It belongs
to the space when its weighted mass ``4*pi*(k + sum_{i in iota} (1 + alpha_i))``
is strictly below ``rho``.  Singular-point indices are 1-based throughout, and
the weights are kept sorted so that ``p_1`` carries the smallest ``alpha``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._validation import InvalidInputError, SingularValueError, check_point, check_real

FOUR_PI = 4.0 * math.pi

REGULAR = "regular"


def torus_distance(x, y) -> float:
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    d = d - np.floor(d + 0.5)
    return float(np.hypot(d[0], d[1]))


def default_positions(m: int) -> tuple[tuple[float, float], ...]:
    """Spread ``m`` points on a square lattice of the unit torus."""
    side = max(1, math.ceil(math.sqrt(m)))
    pts = []
    for j in range(m):
        a, b = divmod(j, side)
        pts.append(((a + 0.3) / side, (b + 0.3) / side))
    return tuple(pts)


@dataclass(frozen=True)
class SingularConfig:
    """Problem data: cone weights, the parameter ``rho`` and singular points.

    Parameters
    ----------
    alphas : sequence of float
        Weights in ``(-1, 0)``, sorted non-decreasing.
    rho : float
        Positive parameter of the mean-field equation.
    positions : sequence of points, optional
        Singular points on the unit torus. A lattice layout is used if omitted.
    tol : float
        Relative tolerance for comparisons against ``rho``.
    delta : float
        Bubble interpolation cutoff; singular points must be more than
        ``4 * delta`` apart.
    """

    alphas: tuple[float, ...] = ()
    rho: float = 1.0
    positions: tuple[tuple[float, float], ...] | None = None
    tol: float = 1e-9
    delta: float = 0.05

    def __post_init__(self):
        alphas = tuple(check_real(a, f"alphas[{i}]", lo=-1, hi=0, lo_open=True, hi_open=True)
                       for i, a in enumerate(self.alphas))
        if any(a > b for a, b in zip(alphas, alphas[1:])):
            raise InvalidInputError("alphas must be sorted non-decreasing")
        rho = check_real(self.rho, "rho", lo=0, lo_open=True)
        tol = check_real(self.tol, "tol", lo=0)
        delta = check_real(self.delta, "delta", lo=0, hi=0.25, lo_open=True, hi_open=True)
        positions = self.positions
        if positions is None:
            positions = default_positions(len(alphas))
        positions = tuple(tuple(float(v) for v in check_point(p, f"positions[{i}]")) for i, p in enumerate(positions))
        if len(positions) != len(alphas):
            raise InvalidInputError(
                f"got {len(positions)} positions for {len(alphas)} singular points")
        for i, j in itertools.combinations(range(len(positions)), 2):
            if torus_distance(positions[i], positions[j]) <= 4 * delta:
                raise InvalidInputError(
                    f"singular points {i + 1} and {j + 1} are closer than 4*delta={4 * delta}")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "tol", tol)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "positions", positions)

    @property
    def m(self) -> int:
        return len(self.alphas)

    @property
    def atol(self) -> float:
        """Absolute comparison tolerance, ``tol * rho``."""
        return self.tol * self.rho

    def weight(self, j: int) -> float:
        """Weighted cardinality ``1 + alpha_j`` of the singular point ``p_j``."""
        return 1.0 + self.alphas[j - 1]

    def mass(self, k: int, iota: Iterable[int] = ()) -> float:
        return FOUR_PI * (k + sum(self.weight(i) for i in iota))

    def stratum(self, k: int, iota: Iterable[int] = ()) -> "Stratum":
        iota = tuple(sorted(set(iota)))
        if any(i < 1 or i > self.m for i in iota):
            raise InvalidInputError(f"indices {iota} out of range 1..{self.m}")
        return Stratum(int(k), iota, self.mass(k, iota))

    def is_admissible(self, k: int, iota: Iterable[int] = ()) -> bool:
        iota = tuple(iota)
        if k < 0 or k + len(iota) < 1:
            return False
        return self.mass(k, iota) < self.rho - self.atol

    def with_rho(self, rho: float) -> "SingularConfig":
        return SingularConfig(self.alphas, rho, self.positions, self.tol, self.delta)

    def to_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "rho": self.rho,
            "positions": [list(p) for p in self.positions],
            "tol": self.tol,
            "delta": self.delta,
        }


@dataclass(frozen=True)
class Stratum:
    """An index pair ``(k, iota)`` together with its weighted mass."""

    k: int
    iota: tuple[int, ...] = ()
    mass: float = field(default=math.nan, compare=False)

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.iota)

    @property
    def dim(self) -> int:
        return 3 * self.k + len(self.iota) - 1

    def sort_key(self):
        return (self.mass, self.k, self.iota)

    def to_dict(self) -> dict:
        return {"k": self.k, "iota": list(self.iota), "mass": self.mass, "dim": self.dim}

    def __repr__(self):
        inner = ",".join(map(str, self.iota))
        return f"Stratum({self.k},{{{inner}}})"


@dataclass(frozen=True)
class SingularValue:
    value: float
    n: int
    I: tuple[int, ...]


@dataclass(frozen=True)
class SingularValueSet:
    values: tuple[SingularValue, ...]

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array([v.value for v in self.values])


class GraphVerdict(str, enum.Enum):
    CONTRACTIBLE = "contractible"
    NON_CONTRACTIBLE = "non_contractible"
    NOT_APPLICABLE = "not_applicable"


def _subsets(m: int, start: int = 1) -> Iterable[tuple[int, ...]]:
    idx = range(start, m + 1)
    for r in range(len(idx) + 1):
        yield from itertools.combinations(idx, r)


def chi(config: SingularConfig, atoms: Sequence) -> float:
    """Weighted cardinality of a set of atom labels.

    Labels are ``"regular"`` or a 1-based singular index ``j`` (an ``int``).
    """
    seen = set()
    total = 0.0
    for a in atoms:
        if a == REGULAR or a is None:
            total += 1.0
            continue
        if isinstance(a, bool) or not isinstance(a, (int, np.integer)):
            raise InvalidInputError(f"unknown atom label {a!r}")
        j = int(a)
        if not 1 <= j <= config.m:
            raise InvalidInputError(f"singular label {j} out of range 1..{config.m}")
        if j in seen:
            raise InvalidInputError(f"duplicate singular label {j}")
        seen.add(j)
        total += config.weight(j)
    return total


def singular_values(config: SingularConfig, cap: float) -> SingularValueSet:
    """All values ``4*pi*n + 4*pi*sum_{i in I}(1 + alpha_i) <= cap`` with ``n + |I| > 0``."""
    cap = check_real(cap, "cap", lo=0, lo_open=True)
    found = []
    for I in _subsets(config.m):
        base = config.mass(0, I)
        n = 0
        while base + FOUR_PI * n <= cap + config.atol:
            if n + len(I) > 0:
                found.append(SingularValue(base + FOUR_PI * n, n, I))
            n += 1
    found.sort(key=lambda v: (v.value, v.n, v.I))
    unique: list[SingularValue] = []
    for v in found:
        if unique and abs(v.value - unique[-1].value) <= config.atol:
            continue
        unique.append(v)
    return SingularValueSet(tuple(unique))


def check_not_singular(config: SingularConfig) -> None:
    for v in singular_values(config, config.rho + config.atol + 1e-300):
        if abs(v.value - config.rho) <= config.atol:
            raise SingularValueError(
                f"rho is a singular value: rho={config.rho} = 4*pi*({v.n} + chi{list(v.I)})")


def enumerate_strata(config: SingularConfig) -> list[Stratum]:
    """Every admissible stratum, sorted by ``(mass, k, iota)``.

    Raises
    ------
    SingularValueError
        If ``rho`` is within tolerance of a singular value.
    """
    check_not_singular(config)
    out = []
    for iota in _subsets(config.m):
        k = 0 if iota else 1
        while config.is_admissible(k, iota):
            out.append(config.stratum(k, iota))
            k += 1
    out.sort(key=Stratum.sort_key)
    return out


def precedes(s1: Stratum, s2: Stratum) -> bool:
    """Inclusion order: ``s1`` sits inside the closure of ``s2``.

    The indices of ``s1`` outside ``s2`` must be absorbed by the extra free
    regular atoms of ``s2``.
    """
    if s2.k < s1.k:
        return False
    return len(set(s1.iota) - set(s2.iota)) <= s2.k - s1.k


def strictly_precedes(s1: Stratum, s2: Stratum) -> bool:
    return s1 != s2 and precedes(s1, s2)


def _maximal(candidates: list[Stratum]) -> list[Stratum]:
    return [s for s in candidates
            if not any(strictly_precedes(s, t) for t in candidates)]


def maximal_common_substrata(s1: Stratum, s2: Stratum, config: SingularConfig) -> list[Stratum]:
    common = [s for s in enumerate_strata(config) if precedes(s, s1) and precedes(s, s2)]
    return _maximal(common)


def minimal_strata(config: SingularConfig) -> list[Stratum]:
    strata = enumerate_strata(config)
    minimal = [s for s in strata if not any(strictly_precedes(t, s) for t in strata)]
    if config.m >= 1:
        assert all(s.k == 0 and s.l == 1 for s in minimal), minimal
    return minimal


def _max_admissible_k(config: SingularConfig, iota) -> int:
    """Largest ``k`` with ``(k, iota)`` admissible, ignoring the ``k + |iota| >= 1`` rule; -1 if none."""
    slack = (config.rho - config.atol) / FOUR_PI - sum(config.weight(i) for i in iota)
    if slack <= 0:
        return -1
    k = math.ceil(slack) - 1
    while k >= 0 and not config.mass(k, iota) < config.rho - config.atol:
        k -= 1
    while config.mass(k + 1, iota) < config.rho - config.atol:
        k += 1
    return k


def is_pj_stable(config: SingularConfig, j: int) -> bool:
    """Whether adjoining ``p_j`` to any admissible stratum keeps it admissible."""
    if not 1 <= j <= config.m:
        raise InvalidInputError(f"j={j} out of range 1..{config.m}")
    check_not_singular(config)
    others = [i for i in range(1, config.m + 1) if i != j]
    for r in range(len(others) + 1):
        for iota in itertools.combinations(others, r):
            k = _max_admissible_k(config, iota)
            if k < 0 or k + len(iota) < 1:
                continue
            # mass is increasing in k, so the largest admissible k is the binding case
            if not config.is_admissible(k, iota + (j,)):
                return False
    return True


def not_p1_stable(config: SingularConfig) -> bool:
    if config.m == 0:
        return False
    return not is_pj_stable(config, 1)


def conjecture_literal(config: SingularConfig, with_n: bool = False) -> bool:
    """Algebraic non-contractibility criterion.

    With ``with_n=False`` the inequalities are evaluated exactly as displayed:
    some nonempty ``iota`` inside ``{2..m}`` has
    ``4*pi*chi(iota) < rho < 4*pi*chi({1} + iota)``.  With ``with_n=True`` an
    integer ``n >= 0`` of regular atoms is added to both sums.
    """
    if config.m < 2:
        return False
    rho = config.rho
    for iota in _subsets(config.m, start=2):
        if not iota:
            continue
        lo = config.mass(0, iota)
        hi = config.mass(0, (1,) + iota)
        n = 0
        while lo + FOUR_PI * n < rho:
            if lo + FOUR_PI * n < rho < hi + FOUR_PI * n:
                return True
            if not with_n:
                break
            n += 1
    return False


def _graph(config: SingularConfig, strata: list[Stratum]):
    import networkx as nx

    g = nx.Graph()
    for s in strata:
        if s.k == 0 and s.l == 1:
            g.add_node(s.iota[0])
    for s in strata:
        if s.k == 0 and s.l == 2:
            g.add_edge(*s.iota)
    return g


def classify_graph_case(config: SingularConfig) -> GraphVerdict:
    """Contractibility when every stratum has dimension 0 or 1.

    The space is then a graph whose vertices are the admissible ``delta_{p_j}``
    and whose edges are the admissible segments between two of them.
    """
    import networkx as nx

    strata = enumerate_strata(config)
    if not strata or max(s.dim for s in strata) >= 2:
        return GraphVerdict.NOT_APPLICABLE
    g = _graph(config, strata)
    if nx.number_connected_components(g) >= 2:
        return GraphVerdict.NON_CONTRACTIBLE
    if nx.cycle_basis(g):
        return GraphVerdict.NON_CONTRACTIBLE
    return GraphVerdict.CONTRACTIBLE


def graph_theorem_conditions(config: SingularConfig) -> tuple[bool, bool]:
    """Evaluate the two inequality systems of the graph theorem directly.

    Returns ``(points_case, loop_case)``: the first holds when the space is
    ``k >= 2`` isolated points, the second when the first three singular
    points are pairwise joined.
    """
    m, rho = config.m, config.rho
    w = [config.weight(i) for i in range(1, m + 1)]
    pairs_blocked = all(rho < FOUR_PI * (w[i] + w[j]) for i, j in itertools.combinations(range(m), 2))
    k = sum(1 for x in w if rho > FOUR_PI * x)
    points_case = (
        m >= 2 and 2 <= k <= m and pairs_blocked
        and all(rho > FOUR_PI * w[i] for i in range(k))
        and all(rho < FOUR_PI * w[i] for i in range(k, m))
    )
    loop_case = m >= 3 and all(rho > FOUR_PI * (w[i] + w[j]) for i, j in itertools.combinations(range(3), 2))
    return points_case, loop_case


def graph_theorem_verdict(config: SingularConfig) -> GraphVerdict:
    strata = enumerate_strata(config)
    if not strata or max(s.dim for s in strata) >= 2:
        return GraphVerdict.NOT_APPLICABLE
    points_case, loop_case = graph_theorem_conditions(config)
    if points_case or loop_case:
        return GraphVerdict.NON_CONTRACTIBLE
    return GraphVerdict.CONTRACTIBLE
