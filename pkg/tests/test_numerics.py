"""Hypergeometric evaluation against quadrature; bisection behaviour."""

import math

import numpy as np
import pytest

import oracles
from ncclora import numerics
from ncclora.numerics import BracketingError, ConvergenceError, Tolerance


def _interference_args(eta: float):
    # the capture model only ever calls this parameter family
    return 1.0, 2.0 / eta, 1.0 + 2.0 / eta


def test_agrees_with_quadrature_moderate_argument():
    a, b, c = _interference_args(2.7)
    for z in (-1e-3, -0.1, -0.5, -0.99):
        ref = oracles.hyp2f1_quadrature(a, b, c, z)
        assert numerics.hyp_2f1(a, b, c, z) == pytest.approx(ref, rel=1e-10)


def test_agrees_with_quadrature_huge_argument():
    for eta in (2.1, 2.7, 4.0):
        a, b, c = _interference_args(eta)
        for z in (-1e2, -1e4, -1e6):
            ref = oracles.hyp2f1_quadrature(a, b, c, z)
            assert numerics.hyp_2f1(a, b, c, z) == pytest.approx(ref, rel=1e-8), \
                (eta, z)


def test_value_at_zero_is_one():
    assert numerics.hyp_2f1(1.0, 0.74, 1.74, 0.0) == pytest.approx(1.0, abs=1e-14)


def test_symmetric_in_first_two_parameters():
    for z in (-0.3, -42.0):
        assert numerics.hyp_2f1(1.0, 0.5, 2.5, z) == pytest.approx(
            numerics.hyp_2f1(0.5, 1.0, 2.5, z), rel=1e-12)


def test_rejects_invalid_domain():
    with pytest.raises(ValueError):
        numerics.hyp_2f1(1.0, 0.5, 1.5, 0.25)
    with pytest.raises(ValueError):
        numerics.hyp_2f1(1.0, 0.5, -2.0, -0.5)


def test_tolerance_validation():
    with pytest.raises(ValueError):
        Tolerance(rel=0.0)
    with pytest.raises(ValueError):
        Tolerance(abs=-1.0)
    with pytest.raises(ValueError):
        Tolerance(max_iter=0)


def test_bisect_linear_root():
    res = numerics.bisect(lambda x: x - 1.0, 0.0, 3.0)
    assert res.root == pytest.approx(1.0, abs=1e-9)
    assert res.lower <= res.root <= res.upper


def test_bisect_sqrt2():
    res = numerics.bisect(lambda x: x * x - 2.0, 0.0, 2.0,
                          Tolerance(rel=1e-14, abs=1e-14))
    assert res.root == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_bisect_exact_endpoint_short_circuits():
    res = numerics.bisect(lambda x: x, 0.0, 1.0)
    assert res.root == 0.0
    assert res.iterations == 0


def test_bisect_requires_sign_change():
    with pytest.raises(BracketingError):
        numerics.bisect(lambda x: x * x + 1.0, -1.0, 1.0)


def test_bisect_iteration_budget():
    with pytest.raises(ConvergenceError):
        numerics.bisect(lambda x: x - 1.0, 0.0, 3.0,
                        Tolerance(rel=1e-15, abs=1e-300, max_iter=3))


def test_bisect_deterministic():
    f = lambda x: math.cos(x) - x
    a = numerics.bisect(f, 0.0, 2.0)
    b = numerics.bisect(f, 0.0, 2.0)
    assert a == b


def test_bisect_interval_always_brackets():
    # the invariant the layout solver relies on: f changes sign on the
    # returned interval (or the interval is degenerate at an exact root)
    rng = np.random.default_rng(5)
    for _ in range(50):
        shift = rng.uniform(-0.9, 0.9)
        f = lambda x, s=shift: math.tanh(x) - s
        res = numerics.bisect(f, -5.0, 5.0)
        if res.lower != res.upper:
            assert f(res.lower) * f(res.upper) <= 0.0
        assert abs(f(res.root)) < 1e-6
