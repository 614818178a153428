import math

import numpy as np
import pytest

from liouvillebary._validation import InvalidInputError, PreconditionError, UnderResolvedError
from liouvillebary.experiments import (
    CoerciveSolver,
    ScanReport,
    check_lambda_grid,
    classify,
    coercive_solve,
    coercivity_threshold,
    concentration_scan,
    energy_scan,
    fit_slope,
    improved_probe,
    max_decade_variation,
    mt_probe,
    random_configs,
    sweep,
)
from liouvillebary.field import el_residual
from liouvillebary.measures import Atom, BarycenterConfig
from liouvillebary.strata import SingularConfig

PI = math.pi
SHORT = [32 * 2**i for i in range(6)]


class TestHelpers:
    def test_fit_exact_line(self):
        fit = fit_slope([0, 1, 2, 3], [1, 3, 5, 7])
        assert fit["slope"] == pytest.approx(2) and fit["intercept"] == pytest.approx(1)
        assert fit["rms_residual"] == pytest.approx(0, abs=1e-12)

    @pytest.mark.parametrize("lams", [[10, 20, 40, 80], [10, 12, 14, 16, 18], [0.5, 10, 100, 1000, 1e4]])
    def test_lambda_grid_rejected(self, lams):
        with pytest.raises(InvalidInputError):
            check_lambda_grid(lams)

    def test_lambda_grid_sorted(self):
        assert list(check_lambda_grid([1000, 10, 100, 50, 500])) == [10, 50, 100, 500, 1000]

    def test_decade_variation(self):
        assert max_decade_variation([10, 100, 1000], [0.0, 0.3, 1.0]) == pytest.approx(0.7)

    def test_report_csv_and_summary(self):
        rep = ScanReport("x", {}, [{"a": 1.5, "b": [1, 2]}], {}, {"ok": True, "bad": False})
        assert rep.to_csv() == "a,b\n1.5,1 2\n"
        assert rep.summary() == "x: FAIL(bad)"
        assert "runtime" not in rep.to_dict()


class TestEnergyScan:
    @pytest.fixture(scope="class")
    @staticmethod
    def regular():
        sig = BarycenterConfig.from_arrays([1.0], [(0.4, 0.6)], config=SingularConfig(rho=6 * PI))
        return energy_scan(sig, SHORT)

    def test_verdicts(self, regular):
        assert regular.passed, regular.verdicts
        assert regular.verdicts["J_decreasing"]

    def test_translation_invariance(self, regular):
        sig = BarycenterConfig.from_arrays([1.0], [(0.9, 0.05)], config=SingularConfig(rho=6 * PI))
        moved = energy_scan(sig, SHORT)
        for a, b in zip(regular.rows, moved.rows):
            assert a["energy"] == pytest.approx(b["energy"], rel=1e-8)
            assert a["J"] == pytest.approx(b["J"], rel=1e-8)

    def test_grid_path_needs_grid(self):
        sig = BarycenterConfig.from_arrays([1.0], [(0.4, 0.6)])
        with pytest.raises(PreconditionError):
            energy_scan(sig, SHORT, adaptive=False)

    def test_no_decrease_claim_below_threshold(self):
        sig = BarycenterConfig.from_arrays([1.0], [(0.4, 0.6)], config=SingularConfig(rho=2 * PI),
                                           check_admissible=False)
        rep = energy_scan(sig, SHORT)
        assert "J_decreasing" not in rep.verdicts
        assert rep.fits["J"]["slope"] > 0


class TestConcentration:
    def test_single_atom(self):
        sig = BarycenterConfig.from_arrays([1.0], [(0.5, 0.5)])
        rep = concentration_scan(sig, lam=1e3)
        assert rep.passed
        assert rep.fits["t_tilde"][0] / rep.rows[1]["total_mass"] > 0.99

    def test_symmetric_pair(self):
        sig = BarycenterConfig.from_arrays([0.5, 0.5], [(0.25, 0.25), (0.75, 0.75)])
        rep = concentration_scan(sig, lam=1e3)
        a, b = rep.fits["t_tilde"]
        assert a == pytest.approx(b, rel=1e-9)

    def test_inadmissible(self):
        sig = BarycenterConfig.from_arrays([1.0], [(0.5, 0.5)], config=SingularConfig(rho=PI),
                                           check_admissible=False)
        with pytest.raises(PreconditionError):
            concentration_scan(sig)


class TestProbes:
    def test_mt_regular(self):
        rep = mt_probe(SingularConfig((-0.5,), PI), lambdas=SHORT)
        assert rep.verdicts["below_sharp_constant"] and rep.verdicts["approaches_from_below"]

    def test_mt_singular_exceeds_regular_constant(self):
        rep = mt_probe(SingularConfig((-0.5,), PI), singular=1, lambdas=SHORT)
        assert rep.passed
        assert rep.fits["asymptotic_ratio"] == pytest.approx(1 / (2 * PI), rel=0.01)

    def test_improved_two_bumps(self):
        rep = improved_probe(2, (), SingularConfig(rho=PI), lambdas=SHORT)
        assert rep.passed
        assert rep.fits["asymptotic_ratio"] == pytest.approx(1 / (8 * PI), rel=0.02)

    def test_improved_separation_refused(self):
        with pytest.raises(PreconditionError):
            improved_probe(2, (), SingularConfig(rho=PI), points=[(0.3, 0.3), (0.4, 0.3)], lambdas=SHORT)

    def test_improved_gamma0_refused(self):
        # the cone weight makes the split uneven, failing a strict mass-fraction bound
        with pytest.raises(PreconditionError, match="gamma0"):
            improved_probe(1, (1,), SingularConfig((-0.5,), PI), gamma0=0.49, lambdas=SHORT)

    def test_unresolvable_core_refused(self):
        with pytest.raises(UnderResolvedError):
            mt_probe(SingularConfig((-0.9,), PI), singular=1, lambdas=SHORT)

    def test_improved_bad_index(self):
        with pytest.raises(InvalidInputError):
            improved_probe(0, (2,), SingularConfig((-0.5,), PI), lambdas=SHORT)


class TestSolver:
    @pytest.fixture(scope="class")
    @staticmethod
    def cfg():
        return SingularConfig((-0.5,), PI, positions=((0.3 + 1 / 128, 0.4 + 1 / 128),))

    def test_threshold(self):
        assert coercivity_threshold(SingularConfig((-0.7, -0.2), PI)) == pytest.approx(1.2 * PI)
        assert coercivity_threshold(SingularConfig()) == pytest.approx(4 * PI)

    def test_refuses_non_coercive(self, cfg):
        with pytest.raises(PreconditionError):
            CoerciveSolver(N=64, rho=1.9 * PI).fit(cfg)

    def test_converges(self, cfg):
        u, rep = coercive_solve(cfg, N=64)
        assert rep.passed, rep.verdicts
        assert abs(u.mean) < 1e-12
        assert el_residual(u, cfg.rho, cfg) <= 1e-6

    def test_independent_of_initial_guess(self, cfg):
        base = CoerciveSolver(N=64).fit(cfg).solution_.values
        for seed in (1, 2):
            s = CoerciveSolver(N=64, init_scale=1.0, random_state=seed, tol=1e-9).fit(cfg)
            assert s.report_.verdicts["monotone"]
            assert np.abs(s.solution_.values - base).max() < 1e-5

    def test_regular_has_constant_solution(self):
        s = CoerciveSolver(N=64).fit(SingularConfig(rho=PI))
        assert s.n_iter_ == 0 and np.all(s.predict().values == 0)


class TestSweep:
    def test_reproducible(self):
        a = [c.to_dict() for c in random_configs(20, seed=7)]
        b = [c.to_dict() for c in random_configs(20, seed=7)]
        assert a == b

    def test_examples(self):
        rep = sweep([SingularConfig((-0.7, -0.3), 3 * PI), SingularConfig((-0.5,), 5 * PI),
                     SingularConfig((-0.6, -0.6, -0.1), 3.8 * PI)])
        assert rep.passed
        assert rep.fits["graph_theorem_mismatch"] == 1
        assert list(rep.fits["disagreement_by_m"]) == ["1", "2", "3"]

    def test_classify_k_points(self):
        row = classify(SingularConfig((-0.7, -0.3), 3 * PI))
        assert row["graph"] == "non_contractible" and row["max_dim"] == 0
        assert row["stable_indices"] == [] and not row["p1_stable"]
        assert row["conjecture_literal"] and row["agree_literal"]

    def test_random_sweep_propagation(self):
        rep = sweep(random_configs(500, seed=1))
        assert rep.fits["propagation_violations"] == 0
