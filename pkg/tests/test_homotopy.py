"""Structural identities and diagnostics of the homotopy embedding."""

import numpy as np
import pytest

from hann.expr import DomainError, eval_system, jacobian, parse_system
from hann.homotopy import (build_homotopy, eval_homotopy, eval_homotopy_batch,
                           theorem1_diagnostic)

ABS_SRC = """\
vars: x, y
x^2 - y^2 = 0
1 - |x - y| = 0
"""

SINGLE_SRC = "vars: x\ndomain: x in [-40, 0]\n1/x - sin(x) + 1 = 0\n"


def test_anchor_identity():
    sys = parse_system(ABS_SRC)
    rng = np.random.default_rng(0)
    for _ in range(100):
        x0 = rng.uniform(-15, 15, 2)
        hp = build_homotopy(sys, x0, gamma=0.01)
        assert np.allclose(eval_homotopy(hp, x0, 0.0), 0.0, atol=1e-14)


def test_endpoint_identity():
    sys = parse_system(ABS_SRC)
    hp = build_homotopy(sys, [1.0, 2.0], gamma=0.3)
    rng = np.random.default_rng(1)
    eps = np.finfo(float).eps
    for _ in range(100):
        x = rng.uniform(-15, 15, 2)
        f = eval_system(sys, x)
        h = eval_homotopy(hp, x, 1.0)
        assert np.all(np.abs(h - f) <= 4 * eps * (1 + np.abs(f)))


def test_explicit_formula():
    sys = parse_system(ABS_SRC)
    x0 = np.array([2.0, -1.0])
    gamma = 0.07
    hp = build_homotopy(sys, x0, gamma)
    f0 = eval_system(sys, x0)
    rng = np.random.default_rng(2)
    for t in (0.0, 0.25, 0.8, 1.0):
        x = rng.uniform(-3, 3, 2)
        f = eval_system(sys, x)
        want = t * f + gamma * (t - 1.0) * (f - f0)
        assert np.allclose(eval_homotopy(hp, x, t), want, atol=1e-13)


def test_gamma_one_minus_t_form_is_equivalent():
    # gamma*(t-1)*(F(x)-F(x0)) == gamma*(1-t)*(F(x0)-F(x))
    sys = parse_system(SINGLE_SRC)
    x0 = np.array([-15.0])
    gamma = 0.01
    hp = build_homotopy(sys, x0, gamma)
    f0 = eval_system(sys, x0)
    for t in np.linspace(0, 1, 7):
        x = np.array([-3.3])
        f = eval_system(sys, x)
        alt = t * f + gamma * (1.0 - t) * (f0 - f)
        assert np.allclose(eval_homotopy(hp, x, t), alt, atol=1e-14)


def test_affine_in_t():
    sys = parse_system(ABS_SRC)
    hp = build_homotopy(sys, [0.5, 0.5], gamma=0.01)
    x = np.array([1.2, -0.7])
    for t1, t2 in ((0.0, 1.0), (0.2, 0.9), (0.4, 0.4)):
        mid = eval_homotopy(hp, x, (t1 + t2) / 2)
        avg = (eval_homotopy(hp, x, t1) + eval_homotopy(hp, x, t2)) / 2
        assert np.allclose(mid, avg, atol=1e-13)


def test_batch_matches_pointwise():
    sys = parse_system(ABS_SRC)
    hp = build_homotopy(sys, [0.0, 0.0], gamma=0.01)
    rng = np.random.default_rng(3)
    X = rng.uniform(-2, 2, (9, 2))
    ts = rng.uniform(0, 1, 9)
    batch = eval_homotopy_batch(hp, X, ts)
    assert batch.shape == (2, 9)
    for j in range(9):
        assert np.allclose(batch[:, j], eval_homotopy(hp, X[j], ts[j]))


def test_inadmissible_anchor_rejected():
    sys = parse_system(SINGLE_SRC)
    with pytest.raises(DomainError):
        build_homotopy(sys, [0.0], gamma=0.01)


def test_gamma_must_be_positive():
    sys = parse_system(ABS_SRC)
    with pytest.raises(ValueError):
        build_homotopy(sys, [0.0, 0.0], gamma=0.0)


def test_time_varying_system_rejected():
    sys = parse_system("vars: x\ntime: t\nx - t = 0")
    with pytest.raises(ValueError):
        build_homotopy(sys, [0.0], gamma=0.01)


# ---------------------------------------------------------------------------
# diagnostics

def test_diagnostic_t_derivative_matches_finite_differences():
    sys = parse_system(ABS_SRC)
    hp = build_homotopy(sys, [2.0, 1.0], gamma=0.05)
    x = np.array([1.3, -0.4])
    for t in (0.1, 0.5, 0.9):
        _, dth, _ = theorem1_diagnostic(hp, x, t)
        h = 1e-7
        fd = (eval_homotopy(hp, x, t + h) - eval_homotopy(hp, x, t - h)) \
            / (2 * h)
        assert np.allclose(dth, fd, rtol=1e-6, atol=1e-9)


def test_diagnostic_x_jacobian_at_t1_is_system_jacobian():
    sys = parse_system(ABS_SRC)
    hp = build_homotopy(sys, [2.0, 1.0], gamma=0.05)
    x = np.array([0.7, 0.1])
    dxh, _, _ = theorem1_diagnostic(hp, x, 1.0)
    assert np.allclose(dxh, jacobian(sys, x), atol=1e-14)


def test_diagnostic_linear_system_finite_condition():
    sys = parse_system("vars: x\nx = 0")
    hp = build_homotopy(sys, [0.3], gamma=0.01)
    _, _, cond = theorem1_diagnostic(hp, [0.5], 0.5)
    assert np.isfinite(cond)


def test_diagnostic_singular_jacobian_flags_infinity():
    # f(x, y) = (x + y, x + y): Jacobian is rank 1 everywhere
    sys = parse_system("vars: x, y\nx + y = 0\nx + y = 0")
    hp = build_homotopy(sys, [1.0, 1.0], gamma=0.01)
    _, _, cond = theorem1_diagnostic(hp, [0.5, 0.2], 0.5)
    assert cond == float("inf")
