import math

import numpy as np
import pytest
from scipy.integrate import quad

from liouvillebary._validation import PreconditionError, UnderResolvedError
from liouvillebary.quadrature import Center, integrate_disk, integrate_torus, merge_centers, torus_dist, wrap


def test_wrap_range():
    d = wrap(np.linspace(-3, 3, 101))
    assert np.all(d >= -0.5) and np.all(d < 0.5)


def test_torus_dist_symmetric():
    a, b = (0.05, 0.95), (0.95, 0.05)
    assert torus_dist(a, b) == pytest.approx(math.hypot(0.1, 0.1))
    assert torus_dist(a, b) == torus_dist(b, a)


def test_merge_keeps_worst_exponent():
    out = merge_centers([Center((0.2, 0.2), 1.0, 0.1), Center((1.2, 0.2), -0.5, 0.3)])
    assert out == [Center((0.2, 0.2), -0.5, 0.1)]


def test_constant_and_trig():
    assert integrate_torus(lambda x, y: np.ones_like(x)) == pytest.approx(1.0, abs=1e-13)
    val = integrate_torus(lambda x, y: np.cos(2 * np.pi * x) ** 2, [Center((0.3, 0.6))])
    assert val == pytest.approx(0.5, abs=1e-12)


def test_inverse_distance_closed_form():
    # int of 1/|z| over the unit square centred at the pole is 4 log(1 + sqrt 2)
    p = (0.37, 0.61)
    val = integrate_torus(lambda x, y: 1 / torus_dist(np.stack([x, y], -1), p), [Center(p, 0.0, 1.0)],
                          extra_breaks=[p[0] + 0.5, p[1] + 0.5])
    assert val == pytest.approx(4 * math.log(1 + math.sqrt(2)), rel=1e-10)


def test_strong_singularity_against_radial_oracle():
    # 1/|z|^1.5: radial integral 2 R^0.5 along each ray of the square
    oracle = 8 * quad(lambda t: 2 * math.sqrt(0.5 / math.cos(t)), 0, math.pi / 4, epsabs=1e-14)[0]
    p = (0.2, 0.3)
    val = integrate_torus(lambda x, y: torus_dist(np.stack([x, y], -1), p) ** -1.5, [Center(p, -0.5, 1.0)],
                          extra_breaks=[p[0] + 0.5, p[1] + 0.5])
    assert val == pytest.approx(oracle, rel=1e-9)


def test_vector_valued():
    val = integrate_torus(lambda x, y: np.stack([np.ones_like(x), x * 0 + 2.0], -1), [Center((0.5, 0.5))])
    assert np.allclose(val, [1.0, 2.0])


def test_disk_area_and_singular_weight():
    assert integrate_disk(lambda x, y: np.ones_like(x), (0.1, 0.9), 0.2) == pytest.approx(math.pi * 0.04)
    c = (0.5, 0.5)
    val = integrate_disk(lambda x, y: torus_dist(np.stack([x, y], -1), c) ** -1.0, c, 0.1, beta=0.0)
    assert val == pytest.approx(2 * math.pi * 0.1, rel=1e-12)


def test_disk_radius_checked():
    with pytest.raises(PreconditionError):
        integrate_disk(lambda x, y: x, (0.0, 0.0), 0.6)


def test_core_below_precision_refused():
    with pytest.raises(UnderResolvedError):
        integrate_torus(lambda x, y: x, [Center((0.3, 0.3), 1.0, 1e-12)])
    with pytest.raises(UnderResolvedError):
        integrate_disk(lambda x, y: x, (0.3, 0.3), 0.1, core=1e-12)
