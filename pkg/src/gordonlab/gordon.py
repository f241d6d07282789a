"""Distance between a quasiperiodic potential and its periodic approximants.

``I_m = int_{-q_m}^{2 q_m} |V2(x alpha + theta) - V2(x alpha_m + theta)| dx``
(the 1-periodic V1 parts cancel).  Step sampling functions give an exact
rational value; trigonometric ones use cancellation-free quadrature; power
singularities use closed-form antiderivatives in multiprecision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .errors import DomainError, ResourceBudgetError
from .exact_arith import log_abs, to_rational
from .potentials import (
    ZERO,
    PeriodicPotential,
    PowerSingular,
    QuasiPotential,
    Smooth,
    Step,
    Sum,
    _lattice_points,
)

# q_m ceiling for the numeric (non-step) integration routes
NUMERIC_WORK_BUDGET = 10_000
_MP_DPS = 60


@dataclass(frozen=True)
class L1Distance:
    value: float
    exact: Fraction | None  # set for step sampling functions
    error_bound: float
    method: str

    @property
    def log_value(self) -> float:
        if self.exact is not None:
            return log_abs(self.exact)
        return math.log(self.value) if self.value > 0 else -math.inf


def _default_window(q: QuasiPotential, m: int):
    qm = q.alpha.cf.q[m]
    return Fraction(-qm), Fraction(2 * qm)


def _singular_part(p: PeriodicPotential):
    """``(coefficient, PowerSingular)`` when p is a scaled single power singularity."""
    if isinstance(p, PowerSingular):
        return Fraction(1), p
    if isinstance(p, Sum) and len(p.terms) == 1 and isinstance(p.terms[0][1], PowerSingular):
        return p.terms[0]
    return None


def _smooth_part(p: PeriodicPotential):
    if isinstance(p, Smooth):
        return p
    if isinstance(p, Sum) and p.terms and all(isinstance(t, Smooth) for _, t in p.terms):
        terms = []
        for c, t in p.terms:
            terms.extend((k, c * a, phi) for k, a, phi in t.terms)
        return Smooth(tuple(terms))
    return None


def l1_distance(q: QuasiPotential, m: int, window=None) -> L1Distance:
    """``int_a^b |V2(x alpha + theta) - V2(x alpha_m + theta)| dx`` (default window ``(-q_m, 2 q_m)``)."""
    if m < 1:
        raise DomainError("approximation orders start at m = 1")
    q.alpha.convergent(m)
    a, b = _default_window(q, m) if window is None else (to_rational(window[0]), to_rational(window[1]))
    if not a < b:
        raise DomainError(f"empty window ({a}, {b})")
    alpha, alpha_m = q.alpha.value, q.alpha.convergent(m)
    v2 = q.v2
    if alpha == alpha_m:
        return L1Distance(0.0, Fraction(0), 0.0, "identical")
    step = v2.as_step()
    if step is not None:
        exact = step_l1_distance(step, alpha, alpha_m, q.theta, a, b)
        return L1Distance(float(exact), exact, 0.0, "exact-step")
    if q.alpha.cf.q[m] > NUMERIC_WORK_BUDGET:
        raise ResourceBudgetError(
            f"q_{m} = {q.alpha.cf.q[m]} exceeds the numeric work budget {NUMERIC_WORK_BUDGET}; use a smaller m",
            order=m,
        )
    smooth = _smooth_part(v2)
    if smooth is not None:
        val, err = smooth_l1_distance(smooth, alpha, alpha_m, q.theta, a, b)
        return L1Distance(val, None, err, "gauss-smooth")
    sing = _singular_part(v2)
    if sing is not None:
        c, ps = sing
        val = singular_l1_distance(ps, alpha, alpha_m, q.theta, a, b)
        val *= abs(float(c))
        return L1Distance(val, None, abs(val) * 1e-25 + 1e-300, "closed-form-singular")
    val, err = generic_l1_distance(v2, alpha, alpha_m, q.theta, a, b)
    return L1Distance(val, None, err, "mp-quadrature")


# --- steps -------------------------------------------------------------------


def step_l1_distance(step: Step, alpha: Fraction, alpha_m: Fraction, theta: Fraction, a: Fraction, b: Fraction) -> Fraction:
    """Exact integral by enumerating the phase breakpoints of both compositions."""
    marks = step.unit_breakpoints()
    pts = {a, b}
    pts.update(_lattice_points(alpha, theta, marks, a, b))
    pts.update(_lattice_points(alpha_m, theta, marks, a, b))
    pts = sorted(pts)
    total = Fraction(0)
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = (lo + hi) / 2
        d = step.eval(alpha * mid + theta) - step.eval(alpha_m * mid + theta)
        if d:
            total += abs(d) * (hi - lo)
    return total


# --- trigonometric polynomials -------------------------------------------------


def smooth_l1_distance(f: Smooth, alpha: Fraction, alpha_m: Fraction, theta: Fraction, a: Fraction, b: Fraction, rtol: float = 1e-10):
    """Composite Gauss-Legendre with the cancellation-free difference form."""
    kmax = max((k for k, _, _ in f.terms), default=0)
    if kmax == 0:
        return 0.0, 0.0
    dalpha = float(alpha - alpha_m)
    am = alpha_m
    length = float(b - a)
    nodes, weights = np.polynomial.legendre.leggauss(12)
    speed = max(float(alpha), float(alpha_m), 1e-300)

    def integrate(n_panels):
        edges = np.linspace(0.0, length, n_panels + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1] - edges[0])
        t = (mids[:, None] + half * nodes[None, :]).ravel()  # offsets from a
        x = float(a) + t
        # phase of the approximant, reduced mod 1 without losing the offset
        base = float((am * a + theta) % 1)
        ph = np.mod(base + float(am) * t, 1.0)
        shift = dalpha * x
        vals = np.abs(f.difference(ph, shift)).reshape(len(mids), -1)
        return float(half * np.sum(vals @ weights))

    n = max(16, int(math.ceil(length * speed * kmax * 16)))
    prev = integrate(n)
    for _ in range(8):
        n *= 2
        cur = integrate(n)
        err = abs(cur - prev)
        if err <= rtol * max(abs(cur), 1e-300):
            return cur, err
        prev = cur
    return cur, err


# --- power singularities -------------------------------------------------------


def _mpq(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


def singular_l1_distance(ps: PowerSingular, alpha: Fraction, alpha_m: Fraction, theta: Fraction, a: Fraction, b: Fraction) -> float:
    """Closed-form piecewise integration of ``|g(phi) - g(psi)|`` for ``g = c|y|^-gamma``.

    Pieces are cut where either phase crosses an integer (singularity) or a
    half-integer (branch change).  On a piece each term is monotone, so the
    difference changes sign only where ``|s1| = |s2|``; those (linear) roots
    are solved exactly and the absolute value moves outside each integral.
    """
    marks = (Fraction(0), Fraction(1, 2))
    pts = {a, b}
    pts.update(_lattice_points(alpha, theta, marks, a, b))
    pts.update(_lattice_points(alpha_m, theta, marks, a, b))
    pts = sorted(pts)
    gamma = ps.gamma
    with mpmath.workdps(_MP_DPS):
        e = 1 - _mpq(gamma)
        c = _mpq(ps.scale)
        mal, mam = _mpq(alpha), _mpq(alpha_m)

        def G(slope_mp, s_exact):
            # antiderivative of c|s|^-gamma in x, s = slope x + const
            s = _mpq(s_exact)
            return c * mpmath.sign(s) * abs(s) ** e / (e * slope_mp)

        total = mpmath.mpf(0)
        for lo, hi in zip(pts[:-1], pts[1:]):
            mid = (lo + hi) / 2
            n1 = _round_half(alpha * mid + theta)
            n2 = _round_half(alpha_m * mid + theta)
            cuts = {lo, hi}
            if alpha != alpha_m:
                r1 = (n1 - n2) / (alpha - alpha_m)
                if lo < r1 < hi:
                    cuts.add(r1)
            if alpha + alpha_m != 0:
                r2 = (n1 + n2 - 2 * theta) / (alpha + alpha_m)
                if lo < r2 < hi:
                    cuts.add(r2)
            cuts = sorted(cuts)
            for l, r in zip(cuts[:-1], cuts[1:]):
                s1l, s1r = alpha * l + theta - n1, alpha * r + theta - n1
                s2l, s2r = alpha_m * l + theta - n2, alpha_m * r + theta - n2
                piece = (G(mal, s1r) - G(mal, s1l)) - (G(mam, s2r) - G(mam, s2l))
                total += abs(piece)
        return float(total)


def _round_half(y: Fraction) -> int:
    """Nearest integer, ties irrelevant (called at piece midpoints only)."""
    return math.floor(y + Fraction(1, 2))


# --- generic fallback ----------------------------------------------------------


def _mp_eval(p: PeriodicPotential, y):
    if isinstance(p, Step):
        t = y - mpmath.floor(y)
        val = p.values[-1]
        for bp, v in zip(p.breakpoints, p.values):
            if t >= _mpq(bp):
                val = v
        return _mpq(val)
    if isinstance(p, Smooth):
        t = y - mpmath.floor(y)
        return sum(_mpq(a) * mpmath.cos(2 * mpmath.pi * k * t + _mpq(phi)) for k, a, phi in p.terms)
    if isinstance(p, PowerSingular):
        t = y - mpmath.floor(y)
        d = min(t, 1 - t)
        return _mpq(p.scale) * d ** (-_mpq(p.gamma))
    if isinstance(p, Sum):
        return sum(_mpq(c) * _mp_eval(t, y) for c, t in p.terms)
    raise TypeError(type(p).__name__)


def generic_l1_distance(v2: PeriodicPotential, alpha, alpha_m, theta, a, b):
    """Tanh-sinh quadrature between all phase breakpoints, in multiprecision."""
    marks = tuple(sorted(set(v2.unit_breakpoints()) | {Fraction(0), Fraction(1, 2)}))
    pts = {a, b}
    pts.update(_lattice_points(alpha, theta, marks, a, b))
    pts.update(_lattice_points(alpha_m, theta, marks, a, b))
    pts = sorted(pts)
    with mpmath.workdps(40):
        mal, mam, mth = _mpq(alpha), _mpq(alpha_m), _mpq(theta)

        def integrand(x):
            return abs(_mp_eval(v2, mal * x + mth) - _mp_eval(v2, mam * x + mth))

        total = mpmath.mpf(0)
        err_total = mpmath.mpf(0)
        for lo, hi in zip(pts[:-1], pts[1:]):
            val, err = mpmath.quad(integrand, [_mpq(lo), _mpq(hi)], error=True)
            total += val
            err_total += err
        return float(total), float(err_total)


# --- bounds --------------------------------------------------------------------


def osc_bound(q: QuasiPotential, m: int, D: float, delta: float) -> float:
    """``(3 q_m alpha + 1)/alpha * D * (2 q_m |alpha - alpha_m|)^delta`` with the exact enclosure."""
    if D == 0:
        return 0.0
    alpha = float(q.alpha.value)
    qm = q.alpha.cf.q[m]
    enc = q.alpha.enclosure(m)
    if enc == 0:
        return 0.0
    log_eps = math.log(2) + math.log(qm) + log_abs(enc)
    return (3 * qm * alpha + 1) / alpha * D * math.exp(delta * log_eps)


@dataclass(frozen=True)
class SingularBound:
    m: int
    value: float  # p_m^(2-gamma) |alpha q_m / p_m - 1|^(1-gamma)
    I_m: float
    ratio: float  # I_m / value; nan when value == 0


def singular_bound(q: QuasiPotential, m: int, I_m: float | None = None) -> SingularBound:
    """Shape ``p_m^(2-gamma) |alpha q_m/p_m - 1|^(1-gamma)`` of the power-singularity estimate (theta = 0)."""
    if q.theta != 0:
        raise DomainError("the power-singularity bound is only available for theta = 0; use l1_distance for numeric values")
    sing = _singular_part(q.v2)
    if sing is None:
        raise DomainError("singular_bound needs V2 = c * sing(gamma, scale)")
    gamma = sing[1].gamma
    p_m, q_m = q.alpha.pq(m)
    if p_m < 1:
        raise DomainError(f"p_{m} = 0; start at m >= 1")
    rel = abs(q.alpha.value * q_m / p_m - 1)
    if I_m is None:
        I_m = l1_distance(q, m).value
    if rel == 0:
        return SingularBound(m, 0.0, I_m, math.nan)
    g = float(gamma)
    log_val = (2 - g) * math.log(p_m) + (1 - g) * log_abs(rel)
    value = math.exp(log_val)
    return SingularBound(m, value, I_m, I_m / value if value > 0 else math.nan)


# --- the sequence --------------------------------------------------------------


@dataclass(frozen=True)
class GordonRow:
    m: int
    a_m: int
    q_m: int
    alpha_err_upper: Fraction
    I_m: float
    I_exact: Fraction | None
    C: float
    log_scaled: float  # C q_m + ln I_m
    osc_bound: float | None = None
    sing_bound: float | None = None
    method: str = ""


@dataclass
class GordonReport:
    label: str
    C: float
    rows: list[GordonRow] = field(default_factory=list)

    @property
    def decreasing(self) -> bool:
        vals = [r.log_scaled for r in self.rows]
        return all(b < a for a, b in zip(vals, vals[1:]))


def gordon_sequence(
    q: QuasiPotential,
    C: float,
    m_range,
    holder: tuple[float, float] | None = None,
    label: str = "",
) -> GordonReport:
    """Rows ``m, a_m, q_m, |alpha - alpha_m| bound, I_m, C q_m + ln I_m`` for m in m_range.

    Only the finite range is evaluated; ``report.decreasing`` is a trend flag,
    not a statement about the limit.
    """
    report = GordonReport(label or q.alpha.label, float(C))
    sing = _singular_part(q.v2)
    for m in m_range:
        dist = l1_distance(q, m)
        qm = q.alpha.cf.q[m]
        log_scaled = C * qm + dist.log_value
        ob = osc_bound(q, m, *holder) if holder is not None else None
        sb = None
        if sing is not None and q.theta == 0:
            sb = singular_bound(q, m, dist.value).value
        report.rows.append(
            GordonRow(
                m=m,
                a_m=q.alpha.a(m),
                q_m=qm,
                alpha_err_upper=q.alpha.enclosure(m),
                I_m=dist.value,
                I_exact=dist.exact,
                C=float(C),
                log_scaled=log_scaled,
                osc_bound=ob,
                sing_bound=sb,
                method=dist.method,
            )
        )
    return report


def v2_only(q: QuasiPotential) -> QuasiPotential:
    """The same composition with V1 removed (V1 cancels in every I_m)."""
    return QuasiPotential(ZERO, q.v2, q.alpha, q.theta)
