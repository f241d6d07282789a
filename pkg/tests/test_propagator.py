import importlib
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gordonlab import _kernels_py
from gordonlab.errors import DomainError
from gordonlab.potentials import ZERO, PeriodicOnLine, PowerSingular, Smooth, Step
from gordonlab.propagator import (
    Monodromy,
    SolutionState,
    monodromy,
    propagate,
    three_point_bound,
    three_point_from_matrix,
    trajectory,
    transfer,
)

S0 = SolutionState(Fraction(0), 1.0, 0.0)
PI2_STEP = Step((0, Fraction(1, 2)), (0, math.pi**2))


def free(E, x, u0=1.0, du0=0.0):
    """Closed-form solution of -u'' = E u."""
    if E > 0:
        k = math.sqrt(E)
        return u0 * math.cos(k * x) + du0 * math.sin(k * x) / k, -u0 * k * math.sin(k * x) + du0 * math.cos(k * x)
    if E < 0:
        k = math.sqrt(-E)
        return u0 * math.cosh(k * x) + du0 * math.sinh(k * x) / k, u0 * k * math.sinh(k * x) + du0 * math.cosh(k * x)
    return u0 + du0 * x, du0


@st.composite
def step_potentials(draw):
    k = draw(st.integers(1, 5))
    den = draw(st.integers(k + 1, 30))
    cuts = sorted(draw(st.sets(st.integers(1, den - 1), min_size=k - 1, max_size=k - 1)))
    vals = draw(st.lists(st.integers(-40, 40), min_size=k, max_size=k))
    return Step(tuple([Fraction(0)] + [Fraction(c, den) for c in cuts]), tuple(Fraction(v, 4) for v in vals))


def test_free_examples():
    s = propagate(ZERO, 1.0, S0, math.pi / 2)
    assert s.u == pytest.approx(0.0, abs=1e-8) and s.du == pytest.approx(-1.0, abs=1e-8)
    s = propagate(Step.constant(1), 0.0, S0, 1)
    assert (s.u, s.du) == pytest.approx((math.cosh(1), math.sinh(1)), abs=1e-12)


def test_step_matching_example():
    s = propagate(PI2_STEP, 0.0, S0, 1)
    h = math.pi / 2
    assert s.u == pytest.approx(math.cosh(h), abs=1e-10)
    assert s.du == pytest.approx(math.pi * math.sinh(h), abs=1e-9)


def test_monodromy_examples():
    M = monodromy(ZERO, 4.0, period=math.pi)
    assert M.matrix == pytest.approx(np.eye(2), abs=1e-12)
    M = monodromy(ZERO, 1.0, period=math.pi)
    assert M.matrix == pytest.approx(-np.eye(2), abs=1e-12)
    M = monodromy(PI2_STEP, 0.0, period=1)
    B1 = np.array([[1, 0.5], [0, 1]])
    k = math.pi
    B2 = np.array([[math.cosh(k / 2), math.sinh(k / 2) / k], [k * math.sinh(k / 2), math.cosh(k / 2)]])
    assert M.matrix == pytest.approx(B2 @ B1, abs=1e-12)


def test_monodromy_json():
    M = monodromy(PI2_STEP, 0.3, period=1)
    assert Monodromy.from_json(M.to_json()) == M


@given(step_potentials(), st.floats(-5, 5), st.integers(1, 4))
def test_det_and_cayley_hamilton(W, E, period):
    M = monodromy(W, E, period=period)
    assert abs(M.det - 1) <= 1e-10 * max(1.0, np.abs(M.matrix).max() ** 2)
    assert M.cayley_hamilton_residual() <= 1e-9 * max(1.0, np.abs(M.matrix).max() ** 2)


@given(step_potentials(), st.floats(-5, 5), st.fractions(-3, 3, max_denominator=7), st.fractions(-3, 3, max_denominator=7))
def test_composition(W, E, a, b):
    direct = propagate(W, E, S0, b)
    mid = propagate(W, E, propagate(W, E, S0, a), b)
    scale = max(1.0, abs(direct.u), abs(direct.du)) * max(1.0, np.abs(transfer(W, E, 0, a).matrix).max()) ** 2
    assert abs(direct.u - mid.u) <= 2e-10 * scale
    assert abs(direct.du - mid.du) <= 2e-10 * scale


@given(step_potentials(), st.floats(-5, 5), st.fractions(-4, 4, max_denominator=9))
def test_reversibility(W, E, x):
    there = propagate(W, E, S0, x)
    back = propagate(W, E, there, 0)
    scale = max(1.0, there.norm) ** 2
    assert abs(back.u - 1) <= 1e-9 * scale and abs(back.du) <= 1e-9 * scale


def test_smooth_matches_constant_closed_form():
    # cos(2 pi 0 x) is the constant 1, forcing the adaptive integrator path
    W = Smooth.cos(0, 1, 0)
    s = propagate(W, 0.0, S0, 3)
    assert (s.u, s.du) == pytest.approx((math.cosh(3), math.sinh(3)), rel=1e-9)


def test_smooth_reversible_and_unimodular():
    W = Smooth(((1, Fraction(3, 2), 0), (2, Fraction(-1, 2), Fraction(1, 3))))
    M = monodromy(W, 1.3, period=1)
    assert M.det == pytest.approx(1.0, abs=1e-9)
    s = propagate(W, 1.3, S0, 4)
    b = propagate(W, 1.3, s, 0)
    assert (b.u, b.du) == pytest.approx((1.0, 0.0), abs=1e-8)


def test_singular_integrable():
    W = PowerSingular(Fraction(1, 2))
    M = monodromy(W, 0.5, period=1)
    assert M.det == pytest.approx(1.0, abs=1e-8)
    s = propagate(W, 0.5, S0, 2)
    assert math.isfinite(s.u) and math.isfinite(s.du)
    # crossing the singularity from either side agrees
    a = propagate(W, 0.5, SolutionState(Fraction(-1, 3), 0.2, 0.7), Fraction(1, 3))
    b = propagate(W, 0.5, propagate(W, 0.5, SolutionState(Fraction(-1, 3), 0.2, 0.7), Fraction(-1, 10)), Fraction(1, 3))
    assert (a.u, a.du) == pytest.approx((b.u, b.du), rel=1e-7)


def test_trajectory_matches_propagate():
    xs = [Fraction(k, 3) for k in range(-9, 10)]
    traj = trajectory(PI2_STEP, 0.7, S0, xs)
    for x, s in zip(xs, traj):
        t = propagate(PI2_STEP, 0.7, S0, x)
        assert (s.u, s.du) == pytest.approx((t.u, t.du), rel=1e-12, abs=1e-12)


def test_three_point_examples():
    r = three_point_bound(ZERO, 1.0, S0, period=2 * math.pi)
    assert r.norms == pytest.approx((1.0, 1.0, 1.0), abs=1e-9)
    assert r.trace == pytest.approx(2.0, abs=1e-12)
    r = three_point_bound(ZERO, 0.0, SolutionState(0, 0.0, 1.0), period=1)
    assert r.norms == pytest.approx((math.sqrt(2), math.sqrt(2), math.sqrt(5)), abs=1e-12)
    assert r.max_norm == pytest.approx(math.sqrt(5))
    with pytest.raises(DomainError):
        three_point_bound(ZERO, 0.0, SolutionState(0, 2.0, 0.0), period=1)


def test_three_point_boundary_case_uses_le_branch():
    # rotation by 2 pi / 3: trace exactly -1
    M = Monodromy(-0.5, -math.sqrt(3) / 2, math.sqrt(3) / 2, -0.5)
    r = three_point_from_matrix(M, [1.0, 0.0])
    assert r.case == "|tr|<=1"


def test_three_point_random():
    rng = random.Random(11)
    for _ in range(300):
        k = rng.randint(1, 4)
        cuts = sorted(rng.sample(range(1, 20), k - 1))
        W = Step(tuple([Fraction(0)] + [Fraction(c, 20) for c in cuts]), tuple(Fraction(rng.randint(-20, 20), 4) for _ in range(k)))
        t = rng.uniform(0, 2 * math.pi)
        r = three_point_bound(W, rng.uniform(-5, 5), SolutionState(0, math.cos(t), math.sin(t)), period=rng.randint(1, 3))
        assert r.holds()


def test_blocks_match_closed_form():
    for E in (-2.0, 0.0, 3.0):
        u, du = _kernels_py.propagate_pc(np.array([1.7]), np.array([-E]), 1.0, 0.5)
        assert (u, du) == pytest.approx(free(E, 1.7, 1.0, 0.5), rel=1e-13)


def test_backend_parity():
    kernels = importlib.import_module("gordonlab.kernels")
    rng = np.random.default_rng(3)
    lengths = rng.uniform(-1, 1, 200)
    w = rng.uniform(-3, 3, 200)
    w[::17] = 0.0
    ref = _kernels_py.transfer_product(lengths, w)
    got = kernels.transfer_product(lengths, w)
    assert got == pytest.approx(ref, rel=1e-12, abs=1e-12)
    a = _kernels_py.trajectory_pc(lengths, w, 0.3, -0.2)
    b = kernels.trajectory_pc(lengths, w, 0.3, -0.2)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-12, atol=1e-12)


def test_periodic_on_line_wrapper():
    W = PeriodicOnLine(PI2_STEP, 1)
    assert propagate(W, 0.0, S0, 1).u == pytest.approx(math.cosh(math.pi / 2))
