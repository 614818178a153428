import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from liouvillebary._validation import InvalidInputError, SingularValueError
from liouvillebary.strata import (
    GraphVerdict,
    SingularConfig,
    Stratum,
    chi,
    classify_graph_case,
    conjecture_literal,
    enumerate_strata,
    graph_theorem_conditions,
    graph_theorem_verdict,
    is_pj_stable,
    maximal_common_substrata,
    minimal_strata,
    not_p1_stable,
    precedes,
    singular_values,
)

PI = math.pi


def brute_strata(alphas, rho, tol=1e-9):
    """Independent enumeration: scan k up to rho/4pi and every subset."""
    out = []
    m = len(alphas)
    for k in range(int(rho / (4 * PI)) + 2):
        for r in range(m + 1):
            for iota in itertools.combinations(range(1, m + 1), r):
                if k + r == 0:
                    continue
                mass = 4 * PI * (k + sum(1 + alphas[i - 1] for i in iota))
                if mass < rho - tol * rho:
                    out.append((k, iota))
    return sorted(out)


def pairs(strata):
    return [(s.k, s.iota) for s in strata]


def brute_pj_stable(config, j):
    strata = set(pairs(enumerate_strata(config)))
    for k, iota in strata:
        if j in iota:
            continue
        if (k, tuple(sorted(iota + (j,)))) not in strata:
            return False
    return True


configs = st.builds(
    lambda alphas, rho: (tuple(sorted(alphas)), rho),
    st.lists(st.floats(-0.95, -0.05), min_size=0, max_size=4),
    st.floats(0.2 * PI, 16 * PI),
)


def make(alphas, rho):
    try:
        c = SingularConfig(alphas, rho, delta=0.01)
        enumerate_strata(c)
    except SingularValueError:
        return None
    return c


class TestChi:
    def test_regular_atom(self):
        assert chi(SingularConfig(), ["regular"]) == 1.0

    def test_empty(self):
        assert chi(SingularConfig(), []) == 0.0

    def test_mixed(self):
        assert chi(SingularConfig((-0.5,), 1.0), [1, "regular"]) == pytest.approx(1.5)

    def test_duplicate_singular_label(self):
        with pytest.raises(InvalidInputError):
            chi(SingularConfig((-0.5,), 1.0), [1, 1])

    def test_label_out_of_range(self):
        with pytest.raises(InvalidInputError):
            chi(SingularConfig((-0.5,), 1.0), [2])


class TestConfigValidation:
    def test_unsorted_alphas(self):
        with pytest.raises(InvalidInputError):
            SingularConfig((-0.3, -0.7), 1.0)

    @pytest.mark.parametrize("a", [0.0, -1.0, 0.2, float("nan")])
    def test_alpha_range(self, a):
        with pytest.raises(InvalidInputError):
            SingularConfig((a,), 1.0)

    def test_rho_positive(self):
        with pytest.raises(InvalidInputError):
            SingularConfig((), 0.0)

    def test_close_points(self):
        with pytest.raises(InvalidInputError):
            SingularConfig((-0.5, -0.5), 1.0, positions=((0.1, 0.1), (0.2, 0.1)), delta=0.05)

    def test_positions_wrap(self):
        c = SingularConfig((-0.5,), 1.0, positions=((1.25, -0.25),))
        assert c.positions == ((0.25, 0.75),)


class TestEnumerate:
    def test_two_pi(self):
        c = SingularConfig((-0.7, -0.3), 2 * PI)
        assert pairs(enumerate_strata(c)) == [(0, (1,))]

    def test_three_pi(self):
        c = SingularConfig((-0.7, -0.3), 3 * PI)
        assert pairs(enumerate_strata(c)) == [(0, (1,)), (0, (2,))]

    @pytest.mark.parametrize("k", [1, 2, 4])
    def test_regular_chain(self, k):
        c = SingularConfig((), 4 * PI * (k + 1) - 1e-3)
        assert pairs(enumerate_strata(c)) == [(j, ()) for j in range(1, k + 1)]

    def test_refuses_singular_value(self):
        with pytest.raises(SingularValueError, match="rho is a singular value"):
            enumerate_strata(SingularConfig((-0.5,), 2 * PI))
        with pytest.raises(SingularValueError):
            enumerate_strata(SingularConfig((), 8 * PI))

    def test_equal_weights_are_distinct(self):
        c = SingularConfig((-0.5, -0.5), 2.5 * PI)
        assert pairs(enumerate_strata(c)) == [(0, (1,)), (0, (2,))]

    def test_sorted_and_dims(self):
        c = SingularConfig((-0.7, -0.6, -0.5), 9 * PI)
        strata = enumerate_strata(c)
        masses = [s.mass for s in strata]
        assert masses == sorted(masses)
        for s in strata:
            assert s.dim == 3 * s.k + len(s.iota) - 1
            assert (s.dim == 0) == ((s.k, len(s.iota)) == (0, 1))

    @settings(max_examples=200, deadline=None)
    @given(configs)
    def test_matches_brute_force(self, data):
        c = make(*data)
        if c is None:
            return
        assert sorted(pairs(enumerate_strata(c))) == brute_strata(c.alphas, c.rho)
        for s in enumerate_strata(c):
            assert abs(s.mass - c.rho) > c.atol


class TestSingularValues:
    def test_regular(self):
        vals = singular_values(SingularConfig(), 12.5 * PI).as_array()
        assert vals == pytest.approx([4 * PI, 8 * PI, 12 * PI])

    def test_one_point(self):
        vals = singular_values(SingularConfig((-0.5,), 1.0), 4 * PI).as_array()
        assert vals == pytest.approx([2 * PI, 4 * PI])

    def test_dedup(self):
        vals = singular_values(SingularConfig((-0.5, -0.5), 1.0), 4 * PI).as_array()
        assert vals == pytest.approx([2 * PI, 4 * PI])

    def test_witnesses(self):
        c = SingularConfig((-0.7, -0.3), 1.0)
        for v in singular_values(c, 12 * PI):
            assert v.n + len(v.I) > 0
            assert v.value == pytest.approx(c.mass(v.n, v.I))


class TestOrder:
    def test_examples(self):
        assert precedes(Stratum(0, (1,)), Stratum(1, ()))
        assert precedes(Stratum(0, (1, 2)), Stratum(1, (1,)))
        assert not precedes(Stratum(1, (1,)), Stratum(0, (1, 2)))
        s = Stratum(2, (1, 3))
        assert precedes(s, s)

    @pytest.mark.parametrize("alphas", [(), (-0.5,), (-0.7, -0.3), (-0.8, -0.5, -0.3), (-0.9, -0.6, -0.4, -0.2)])
    @pytest.mark.parametrize("rho_over_pi", [3.3, 7.1, 11.7, 15.9])
    def test_poset_laws_exhaustive(self, alphas, rho_over_pi):
        c = make(alphas, rho_over_pi * PI)
        strata = enumerate_strata(c)
        for a in strata:
            assert precedes(a, a)
        for a, b in itertools.product(strata, repeat=2):
            if precedes(a, b):
                assert a.mass <= b.mass + c.atol
                assert a.dim <= b.dim
                if precedes(b, a):
                    assert a == b
        for a, b, d in itertools.product(strata, repeat=3):
            if precedes(a, b) and precedes(b, d):
                assert precedes(a, d)

    def test_minimal_k_points(self):
        c = SingularConfig((-0.7, -0.3), 3 * PI)
        assert pairs(minimal_strata(c)) == [(0, (1,)), (0, (2,))]

    def test_minimal_regular(self):
        assert pairs(minimal_strata(SingularConfig((), 9 * PI))) == [(1, ())]

    def test_minimal_single_point(self):
        c = SingularConfig((-0.4,), 3 * PI)
        assert pairs(minimal_strata(c)) == [(0, (1,))]

    @settings(max_examples=100, deadline=None)
    @given(configs)
    def test_minimal_shape(self, data):
        c = make(*data)
        if c is None or c.m == 0:
            return
        for s in minimal_strata(c):
            assert s.k == 0 and len(s.iota) == 1


class TestInters:
    def test_self(self):
        c = SingularConfig((-0.7, -0.6, -0.5), 5 * PI)
        s = c.stratum(0, (1, 2))
        assert maximal_common_substrata(s, s, c) == [s]

    def test_two_pairs(self):
        # (0,{1}) admissible, no stratum with k = 1
        c = SingularConfig((-0.7, -0.6, -0.5), 3.5 * PI)
        out = maximal_common_substrata(c.stratum(0, (1, 2)), c.stratum(0, (1, 3)), c)
        assert pairs(out) == [(0, (1,))]

    def test_regular_and_pair(self):
        c = SingularConfig((-0.5, -0.4), 5.2 * PI)
        out = maximal_common_substrata(c.stratum(1), c.stratum(0, (1, 2)), c)
        assert pairs(out) == [(0, (1,)), (0, (2,))]

    @pytest.mark.parametrize("alphas,rho_over_pi", [((-0.7, -0.6, -0.5), 9.0), ((-0.8, -0.3), 10.5), ((), 13.0)])
    def test_properties(self, alphas, rho_over_pi):
        c = make(alphas, rho_over_pi * PI)
        strata = enumerate_strata(c)
        for a, b in itertools.combinations(strata, 2):
            out = maximal_common_substrata(a, b, c)
            for s in out:
                assert precedes(s, a) and precedes(s, b)
            for s, t in itertools.permutations(out, 2):
                assert not precedes(s, t)
            for s in strata:
                if precedes(s, a) and precedes(s, b):
                    assert any(precedes(s, t) for t in out)


class TestStability:
    def test_single_point_stable(self):
        c = SingularConfig((-0.4,), 2 * PI)
        assert is_pj_stable(c, 1)
        assert not not_p1_stable(c)

    def test_p2_not_stable(self):
        a1, a2 = -0.6, -0.3
        rho = 0.5 * (4 * PI * (1 + a2) + 4 * PI * (2 + a1 + a2))
        c = SingularConfig((a1, a2), rho)
        assert not is_pj_stable(c, 2)

    def test_not_p1_stable_handle(self):
        c = SingularConfig((-0.5,), 5 * PI)
        assert not_p1_stable(c)

    def test_not_p1_stable_regular(self):
        assert not not_p1_stable(SingularConfig((), 5 * PI))

    def test_out_of_range(self):
        with pytest.raises(InvalidInputError):
            is_pj_stable(SingularConfig((-0.5,), PI), 2)

    @settings(max_examples=300, deadline=None)
    @given(configs)
    def test_fast_check_matches_brute_force(self, data):
        c = make(*data)
        if c is None:
            return
        for j in range(1, c.m + 1):
            assert is_pj_stable(c, j) == brute_pj_stable(c, j)

    @settings(max_examples=300, deadline=None)
    @given(configs)
    def test_propagation(self, data):
        c = make(*data)
        if c is None:
            return
        if any(is_pj_stable(c, j) for j in range(1, c.m + 1)):
            assert is_pj_stable(c, 1)


class TestConjecture:
    def test_k_points(self):
        assert conjecture_literal(SingularConfig((-0.7, -0.3), 3 * PI))

    def test_m1(self):
        for rho in (PI, 3 * PI, 5 * PI, 11 * PI):
            assert not conjecture_literal(SingularConfig((-0.5,), rho))
            assert not conjecture_literal(SingularConfig((-0.5,), rho), with_n=True)

    def test_loop_regime(self):
        c = SingularConfig((-0.7, -0.65, -0.6), 3.5 * PI)
        assert graph_theorem_conditions(c)[1]
        assert conjecture_literal(c)

    def test_n_variant_shifts(self):
        # iota={2}: lower 2.8pi, upper 4pi; shifted by 4pi
        c = SingularConfig((-0.7, -0.3), 7 * PI)
        assert not conjecture_literal(c)
        assert conjecture_literal(c, with_n=True)


class TestGraph:
    def test_star(self):
        c = SingularConfig((-0.9, -0.46, -0.45, -0.44), 3.2 * PI)
        edges = [s.iota for s in enumerate_strata(c) if len(s.iota) == 2]
        assert edges == [(1, 2), (1, 3), (1, 4)]
        assert classify_graph_case(c) is GraphVerdict.CONTRACTIBLE

    def test_k_points(self):
        c = SingularConfig((-0.7, -0.3), 3 * PI)
        assert classify_graph_case(c) is GraphVerdict.NON_CONTRACTIBLE

    def test_single_point(self):
        assert classify_graph_case(SingularConfig((-0.7, -0.3), 2 * PI)) is GraphVerdict.CONTRACTIBLE

    def test_triangle(self):
        c = SingularConfig((-0.7, -0.65, -0.6), 3.5 * PI)
        assert classify_graph_case(c) is GraphVerdict.NON_CONTRACTIBLE

    def test_not_applicable(self):
        assert classify_graph_case(SingularConfig((-0.5,), 5 * PI)) is GraphVerdict.NOT_APPLICABLE

    def test_theorem_misses_split_graph(self):
        # vertices 1,2,3 with only the edge 12: two components, yet neither
        # inequality system of the theorem holds
        c = SingularConfig((-0.6, -0.6, -0.1), 3.8 * PI)
        assert pairs(enumerate_strata(c)) == [(0, (1,)), (0, (2,)), (0, (1, 2)), (0, (3,))]
        assert classify_graph_case(c) is GraphVerdict.NON_CONTRACTIBLE
        assert graph_theorem_verdict(c) is GraphVerdict.CONTRACTIBLE

    @settings(max_examples=400, deadline=None)
    @given(configs)
    def test_theorem_agrees_on_trees_and_points(self, data):
        """Agreement wherever the graph is edgeless or connected."""
        c = make(*data)
        if c is None:
            return
        verdict = classify_graph_case(c)
        if verdict is GraphVerdict.NOT_APPLICABLE:
            return
        strata = enumerate_strata(c)
        nodes = {s.iota[0] for s in strata if s.k == 0 and len(s.iota) == 1}
        edges = [s.iota for s in strata if s.k == 0 and len(s.iota) == 2]
        touched = {i for e in edges for i in e}
        if edges and touched != nodes:
            return
        assert graph_theorem_verdict(c) is verdict
