import math
from fractions import Fraction

import numpy as np
import pytest

from gordonlab.dsl import parse_potential
from gordonlab.errors import DomainError, ResourceBudgetError
from gordonlab.exact_arith import Frequency, preset
from gordonlab.gordon import (
    generic_l1_distance,
    gordon_sequence,
    l1_distance,
    osc_bound,
    singular_bound,
    v2_only,
)
from gordonlab.potentials import ZERO, PowerSingular, QuasiPotential, Smooth, Step, Sum

HALF = Step((0, Fraction(1, 2)), (1, 0))
LIOU = preset("liouville-default")

# exact values from breakpoint enumeration; the 1e6-point Riemann oracle below
# gave 1.441176 (bound 4.2e-5) and 0.676476 (bound 2.5e-4)
I1 = Fraction(41517141862713, 28807812721066)
I2 = Fraction(19487638017189, 28807812721066)


def riemann_oracle(freq, m, n=10**6):
    """Midpoint sum on (-q_m, 2 q_m) with float phases; returns (value, error bound)."""
    qm = freq.cf.q[m]
    alpha, alpha_m = float(freq.value), float(freq.convergent(m))
    h = 3 * qm / n
    x = -qm + (np.arange(n) + 0.5) * h

    def v2(ph):
        return ((ph - np.floor(ph)) < 0.5).astype(float)

    val = float(np.abs(v2(x * alpha) - v2(x * alpha_m)).sum() * h)
    # each cell holding a discontinuity is off by at most h * (max jump = 1)
    n_breaks = 2 * 3 * qm * (alpha + alpha_m) + 4
    return val, h * n_breaks


def quasi(v2, freq=LIOU, theta=0, v1=ZERO):
    return QuasiPotential(v1, v2, freq, theta)


def test_step_exact_values_frozen():
    q = quasi(HALF)
    assert l1_distance(q, 1).exact == I1
    assert l1_distance(q, 2).exact == I2


@pytest.mark.parametrize("m", [1, 2])
def test_step_exact_matches_riemann(m):
    exact = l1_distance(quasi(HALF), m).exact
    val, bound = riemann_oracle(LIOU, m)
    assert abs(float(exact) - val) <= bound


def test_identical_and_rational():
    f = Frequency.from_rational(Fraction(1, 2))
    d = l1_distance(quasi(HALF, f), 1)
    assert d.value == 0 and d.method == "identical"
    rep = gordon_sequence(quasi(HALF), 1.0, [4])
    assert rep.rows[0].I_m == 0
    assert rep.rows[0].log_scaled == -math.inf


def test_v1_cancels():
    q = quasi(HALF, v1=Step((0, Fraction(1, 3)), (5, -2)))
    assert l1_distance(q, 2).exact == I2
    assert l1_distance(v2_only(q), 2).exact == I2


@pytest.mark.parametrize("c", [Fraction(3), Fraction(-1, 2)])
def test_scale_linearity_exact(c):
    scaled = l1_distance(quasi(Sum.of([(c, HALF)])), 2).exact
    assert scaled == abs(c) * I2


def test_subadditivity():
    other = Step((0, Fraction(1, 5), Fraction(3, 5)), (0, 2, -1))
    both = l1_distance(quasi(Sum.of([(1, HALF), (1, other)])), 2).value
    assert both <= l1_distance(quasi(HALF), 2).value + l1_distance(quasi(other), 2).value + 1e-15


def test_phase_shift_by_integer():
    q = quasi(HALF, theta=Fraction(2, 7))
    q2 = QuasiPotential(ZERO, HALF, LIOU, 0)
    q2.theta = Fraction(2, 7) + 3  # bypass the reduction in the constructor
    assert l1_distance(q, 2).exact == l1_distance(q2, 2).exact


@pytest.mark.parametrize("m", [1, 2, 3])
def test_osc_bound_dominates_step_and_cos(m):
    assert l1_distance(quasi(HALF), m).value <= osc_bound(quasi(HALF), m, 4.0, 1.0)
    c = Smooth.cos(1, 1, 0)
    assert l1_distance(quasi(c), m).value <= osc_bound(quasi(c), m, 4 * math.pi, 1.0)


def test_osc_bound_constant():
    q = quasi(Step.constant(2))
    assert osc_bound(q, 2, 0.0, 1.0) == 0
    assert l1_distance(q, 2).value == 0


def test_smooth_matches_mp_quadrature():
    c = Smooth(((1, 1, 0), (3, Fraction(1, 2), Fraction(1, 5))))
    q = quasi(c)
    d = l1_distance(q, 1)
    val, err = generic_l1_distance(c, LIOU.value, LIOU.convergent(1), Fraction(0), Fraction(-1), Fraction(2))
    assert d.value == pytest.approx(val, rel=1e-8, abs=10 * err)


def test_singular_closed_form_matches_quadrature():
    s = PowerSingular(Fraction(1, 2))
    d = l1_distance(quasi(s), 1)
    val, err = generic_l1_distance(s, LIOU.value, LIOU.convergent(1), Fraction(0), Fraction(-1), Fraction(2))
    assert d.method == "closed-form-singular"
    assert d.value == pytest.approx(val, abs=max(10 * err, 1e-5))


def test_singular_bound_and_errors():
    q = quasi(PowerSingular(Fraction(1, 2)))
    b = singular_bound(q, 2)
    assert b.value > 0 and b.ratio == pytest.approx(b.I_m / b.value)
    with pytest.raises(DomainError):
        singular_bound(quasi(PowerSingular(Fraction(1, 2)), theta=Fraction(1, 3)), 2)
    with pytest.raises(DomainError):
        singular_bound(quasi(HALF), 1)
    f = Frequency.from_rational(Fraction(2, 5))
    b = singular_bound(quasi(PowerSingular(Fraction(1, 2)), f), f.proxy_order)
    assert b.value == 0 and b.I_m == 0


def test_near_critical_singularity_finite():
    q = quasi(PowerSingular(Fraction(9, 10)))
    d = l1_distance(q, 1)
    b = singular_bound(q, 1, d.value)
    assert math.isfinite(d.value) and d.value > 0 and math.isfinite(b.value)


def test_numeric_budget():
    g = preset("golden")
    with pytest.raises(ResourceBudgetError) as info:
        l1_distance(quasi(Smooth.cos(1, 1, 0), g), 20)
    assert info.value.order == 20 and g.cf.q[20] > 10_000
    # exact step bookkeeping is not capped by the numeric budget
    assert l1_distance(quasi(HALF, g), 20).exact is not None


def test_sequence_rows_and_golden_control():
    rep = gordon_sequence(quasi(HALF), 1.0, range(1, 4), holder=(4.0, 1.0))
    assert [r.q_m for r in rep.rows] == [1, 3, 25]
    assert [r.a_m for r in rep.rows] == [1, 2, 8]
    assert all(r.osc_bound >= r.I_m for r in rep.rows)
    for r in rep.rows:
        assert r.log_scaled == pytest.approx(r.q_m + math.log(r.I_m))
    golden = gordon_sequence(quasi(HALF, preset("golden")), 5.0, range(1, 9))
    vals = [r.log_scaled for r in golden.rows]
    assert not golden.decreasing
    assert vals[-1] > vals[0]


def test_window_argument():
    q = quasi(HALF)
    full = l1_distance(q, 2).exact
    left = l1_distance(q, 2, (-3, 0)).exact
    right = l1_distance(q, 2, (0, 6)).exact
    assert left + right == full
    with pytest.raises(DomainError):
        l1_distance(q, 2, (1, 1))
    with pytest.raises(DomainError):
        l1_distance(q, 0)


def test_dsl_potential_in_pipeline():
    q = quasi(parse_potential("2*step{0:1, 1/2:0}"))
    assert l1_distance(q, 1).exact == 2 * I1
