import math
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gordonlab.exact_arith import Frequency, preset
from gordonlab.nodecay import (
    SQUARED_NORM_FLOOR,
    THRESHOLD,
    gronwall_check,
    gronwall_constant,
    growth_bound,
    mp_propagate_pc,
    witness_run,
)
from gordonlab.potentials import ZERO, QuasiPotential, Smooth, Step
from gordonlab.propagator import SolutionState, propagate

HALF = Step((0, Fraction(1, 2)), (1, 0))
S0 = SolutionState(Fraction(0), 1.0, 0.0)


@st.composite
def step_potentials(draw):
    k = draw(st.integers(1, 4))
    den = draw(st.integers(k + 1, 24))
    cuts = sorted(draw(st.sets(st.integers(1, den - 1), min_size=k - 1, max_size=k - 1)))
    vals = draw(st.lists(st.integers(-20, 20), min_size=k, max_size=k))
    return Step(tuple([Fraction(0)] + [Fraction(c, den) for c in cuts]), tuple(Fraction(v, 4) for v in vals))


def test_constant_is_explicit():
    assert gronwall_constant(Step.constant(1), 0.0) == pytest.approx(math.exp(2))
    assert THRESHOLD == 0.25 and SQUARED_NORM_FLOOR == 1 / 16


def test_gronwall_identical():
    g = gronwall_check(HALF, HALF, 0.3, Fraction(2))
    assert g.lhs == 0 and g.rhs == 0 and g.passed


def test_gronwall_closed_form_example():
    g = gronwall_check(Step.constant(1), ZERO, 0.0, 1)
    assert g.lhs == pytest.approx(math.hypot(math.cosh(1) - 1, math.sinh(1)), rel=1e-12)
    C = math.exp(2)
    assert g.C == pytest.approx(C)
    assert g.rhs == pytest.approx(C * math.exp(C), rel=1e-9)
    assert g.passed


@given(step_potentials(), step_potentials(), st.floats(-5, 5), st.fractions(-5, 5, max_denominator=8))
def test_gronwall_random_pairs(W1, W2, E, x):
    assert gronwall_check(W1, W2, E, x).passed


def test_gronwall_smooth_pair():
    g = gronwall_check(Smooth.cos(1, 2, 0), Smooth.cos(1, 2, Fraction(1, 10)), 0.7, Fraction(3, 2))
    assert g.passed and g.lhs > 0


def test_growth_examples():
    b = growth_bound(ZERO, -1.0, 2)
    assert b.norm == pytest.approx(math.hypot(math.cosh(2), math.sinh(2)))
    assert b.bound >= b.norm and b.passed
    for x in (Fraction(-7), Fraction(3, 2), Fraction(40)):
        b = growth_bound(ZERO, 1.0, x)
        assert b.norm == pytest.approx(1.0) and b.passed
    b = growth_bound(Step((0, Fraction(1, 3)), (3, -2)), 2.0, 10)
    assert b.passed


def test_growth_random():
    rng = random.Random(5)
    for _ in range(100):
        W = Step((0, Fraction(rng.randint(1, 9), 10)), (Fraction(rng.randint(-12, 12), 4), Fraction(rng.randint(-12, 12), 4)))
        assert growth_bound(W, rng.uniform(-5, 5), Fraction(rng.randint(-60, 60), 7)).passed


def test_mp_reverification_agrees():
    q = QuasiPotential(ZERO, HALF, preset("liouville-default"))
    for x in (Fraction(-25), Fraction(50)):
        u, du = mp_propagate_pc(q, 0.5, S0, x)
        s = propagate(q, 0.5, S0, x)
        assert (u, du) == pytest.approx((s.u, s.du), rel=1e-9)


def test_witness_zero_v2():
    q = QuasiPotential(Step((0, Fraction(1, 4)), (1, -1)), ZERO, preset("liouville-default"))
    rep = witness_run(q, 0.5, range(1, 4))
    assert all(r.sup_diff_sampled == 0 and r.passed for r in rep.rows)
    assert rep.m0 == 1
    assert all(r.witnesses for r in rep.rows)


def test_witness_rational_alpha():
    f = Frequency.from_rational(Fraction(3, 8))
    q = QuasiPotential(ZERO, HALF, f)
    rep = witness_run(q, 2.0, [f.proxy_order])
    assert rep.rows[0].sup_diff_sampled == 0


def test_witness_liouville_half_energy():
    q = QuasiPotential(ZERO, HALF, preset("liouville-default"))
    rep = witness_run(q, 0.5, [3])
    row = rep.rows[0]
    assert row.passed and row.sup_diff_sampled <= THRESHOLD
    assert row.sup_diff_rigorous >= row.sup_diff_sampled
    assert row.witnesses
    for w in row.witnesses:
        assert w.x in (-25, 25, 50)
        assert w.norm >= THRESHOLD - 1e-9 and w.verified_norm >= THRESHOLD - 1e-9
        assert w.squared_norm >= SQUARED_NORM_FLOOR - 1e-9
    assert row.three_point.max_norm >= 0.5 - 1e-9
    assert all(g.passed for g in row.gronwall)


def test_density_monotone():
    q = QuasiPotential(ZERO, HALF, preset("liouville-default"))
    lo = witness_run(q, -1.0, [2], sample_density=2, verify=False)
    hi = witness_run(q, -1.0, [2], sample_density=8, verify=False)
    assert hi.rows[0].sup_diff_sampled >= lo.rows[0].sup_diff_sampled - 1e-12
    assert not (hi.rows[0].passed and not lo.rows[0].passed)


def test_witness_budget_marks_incomplete(monkeypatch):
    import gordonlab.nodecay as nd

    monkeypatch.setattr(nd, "GRID_BUDGET", 100)
    q = QuasiPotential(ZERO, HALF, preset("liouville-default"))
    rep = nd.witness_run(q, 0.5, range(1, 4))
    assert rep.incomplete and len(rep.rows) < 3 and "budget" in rep.note
