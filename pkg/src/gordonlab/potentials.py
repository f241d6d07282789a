"""Periodic sampling functions, quasiperiodic compositions and their approximants.

Every sampling function has period exactly 1.  Breakpoints, phases and
positions are exact rationals wherever the step structure matters; values of
smooth and singular families are doubles.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ResourceBudgetError, SingularityHit
from .exact_arith import Frequency, to_rational

TWO_PI = 2.0 * math.pi

# Largest number of exact breakpoints enumerated in one window.
MAX_BREAKPOINTS = 2_000_000


def _frac(x):
    """``x mod 1`` exactly for Fractions/ints, in floating point otherwise."""
    if isinstance(x, (Fraction, int)):
        return x - math.floor(x)
    return x - math.floor(x)


def _fmt(x) -> str:
    x = to_rational(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


class PeriodicPotential:
    """Base class of the 1-periodic sampling functions."""

    period = Fraction(1)

    # --- structure -------------------------------------------------------
    @property
    def is_step(self) -> bool:
        return False

    @property
    def is_singular(self) -> bool:
        return False

    def unit_breakpoints(self) -> tuple[Fraction, ...]:
        """Points of [0, 1) where the piecewise description changes."""
        return ()

    def singular_points(self) -> tuple[Fraction, ...]:
        return ()

    def as_step(self) -> "Step | None":
        return None

    # --- evaluation ------------------------------------------------------
    def eval(self, x):
        raise NotImplementedError

    def eval_float(self, x: float) -> float:
        return float(self.eval(x))

    def eval_array(self, x: np.ndarray) -> np.ndarray:
        return np.array([self.eval_float(float(t)) for t in np.asarray(x, dtype=float)])

    # --- integrals -------------------------------------------------------
    def unit_antiderivative(self, t: float) -> float:
        """``int_0^t p`` for ``0 <= t <= 1``."""
        raise NotImplementedError

    @cached_property
    def mean(self) -> float:
        return self.unit_antiderivative(1.0)

    def integral(self, a: float, b: float) -> float:
        """``int_a^b p(x) dx`` in closed form."""
        a, b = float(a), float(b)
        n = math.floor(a)
        a -= n
        b -= n

        def cum(y):
            k = math.floor(y)
            return k * self.mean + self.unit_antiderivative(y - k)

        return cum(b) - cum(a)

    def abs_unit_integral(self) -> float:
        """``int_0^1 |p|``."""
        raise NotImplementedError

    def window_sup(self, length: float) -> float:
        """``sup_x int_x^{x+length} |p|`` for ``0 < length <= 1``."""
        return _numeric_window_sup(self, length)

    # --- algebra ---------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, PeriodicPotential):
            return NotImplemented
        return Sum.of([(1, self), (1, other)])

    def __rmul__(self, c):
        return Sum.of([(c, self)])

    def shifted(self, c) -> "PeriodicPotential":
        """``p + c`` for a real constant c."""
        return Sum.of([(1, self), (c, ONE)])

    def to_dsl(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.to_dsl()


@dataclass(frozen=True, eq=True)
class Step(PeriodicPotential):
    """Value ``values[i]`` on ``[breakpoints[i], breakpoints[i+1])``, wrapping mod 1.

    Right-continuous at every breakpoint.
    """

    breakpoints: tuple[Fraction, ...]
    values: tuple[Fraction, ...]

    def __post_init__(self):
        bps = tuple(to_rational(b) for b in self.breakpoints)
        vals = tuple(to_rational(v) for v in self.values)
        if not bps:
            raise DomainError("a step function needs at least one breakpoint")
        if len(bps) != len(vals):
            raise DomainError("step breakpoints and values differ in length")
        for b in bps:
            if not 0 <= b < 1:
                raise DomainError(f"step breakpoint {b} outside [0, 1)")
        for lo, hi in zip(bps, bps[1:]):
            if not lo < hi:
                raise DomainError(f"step breakpoints not increasing: {lo} then {hi}")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, c) -> "Step":
        return cls((Fraction(0),), (to_rational(c),))

    @property
    def is_step(self):
        return True

    def as_step(self):
        return self

    def unit_breakpoints(self):
        return self.breakpoints if len(self.values) > 1 else ()

    @cached_property
    def _float_bps(self):
        return np.array([float(b) for b in self.breakpoints])

    @cached_property
    def _float_vals(self):
        return np.array([float(v) for v in self.values])

    def eval(self, x):
        y = _frac(x)
        i = bisect_right(self.breakpoints, y) - 1
        return self.values[i]  # i == -1 wraps to the last piece

    def eval_float(self, x):
        return float(self.eval(x if isinstance(x, (Fraction, int)) else float(x)))

    def eval_array(self, x):
        y = np.mod(np.asarray(x, dtype=float), 1.0)
        idx = np.searchsorted(self._float_bps, y, side="right") - 1
        return self._float_vals[idx]

    def pieces_unit(self) -> list[tuple[Fraction, Fraction, Fraction]]:
        """``(start, end, value)`` covering [0, 1)."""
        bps = list(self.breakpoints)
        out = []
        if bps[0] > 0:
            out.append((Fraction(0), bps[0], self.values[-1]))
        for i, b in enumerate(bps):
            end = bps[i + 1] if i + 1 < len(bps) else Fraction(1)
            out.append((b, end, self.values[i]))
        return out

    def jumps(self) -> list[tuple[Fraction, Fraction]]:
        """``(position, height)`` of the genuine discontinuities in [0, 1)."""
        out = []
        k = len(self.values)
        for i, b in enumerate(self.breakpoints):
            h = self.values[i] - self.values[i - 1]
            if h != 0 and k > 1:
                out.append((b, h))
        return out

    def unit_antiderivative(self, t):
        t = float(t)
        total = 0.0
        for lo, hi, v in self.pieces_unit():
            lo_f, hi_f = float(lo), float(hi)
            if t <= lo_f:
                break
            total += float(v) * (min(t, hi_f) - lo_f)
        return total

    def exact_abs_integral(self) -> Fraction:
        return sum((abs(v) * (hi - lo) for lo, hi, v in self.pieces_unit()), Fraction(0))

    def exact_mean(self) -> Fraction:
        return sum((v * (hi - lo) for lo, hi, v in self.pieces_unit()), Fraction(0))

    def abs_unit_integral(self):
        return float(self.exact_abs_integral())

    def window_sup(self, length):
        return float(self.exact_window_sup(to_rational(length)))

    def exact_window_sup(self, length: Fraction) -> Fraction:
        # F(x) = int_x^{x+L} |p| is piecewise linear with kinks at b and b - L
        if length >= 1:
            return self.exact_abs_integral() * length
        cands = {b for b in self.breakpoints} | {_frac(b - length) for b in self.breakpoints}
        cands.add(Fraction(0))
        best = Fraction(0)
        for x in cands:
            best = max(best, self.exact_abs_window(x, x + length))
        return best

    def exact_abs_window(self, a: Fraction, b: Fraction) -> Fraction:
        """``int_a^b |p|`` exactly."""
        total = Fraction(0)
        n = math.floor(a)
        a, b = a - n, b - n
        k = 0
        while k < b:
            for lo, hi, v in self.pieces_unit():
                lo2, hi2 = max(lo + k, a), min(hi + k, b)
                if hi2 > lo2:
                    total += abs(v) * (hi2 - lo2)
            k += 1
        return total

    def to_dsl(self):
        if len(self.values) == 1 and self.values[0] == 0:
            return "zero"
        pairs = ", ".join(f"{_fmt(b)}:{_fmt(v)}" for b, v in zip(self.breakpoints, self.values))
        return "step{" + pairs + "}"


@dataclass(frozen=True)
class Smooth(PeriodicPotential):
    """Trigonometric polynomial ``sum a cos(2 pi k x + phi)`` over ``terms = ((k, a, phi), ...)``."""

    terms: tuple[tuple[int, Fraction, Fraction], ...]

    def __post_init__(self):
        clean = []
        for k, a, phi in self.terms:
            if int(k) != k or k < 0:
                raise DomainError(f"trigonometric frequency must be a non-negative integer, got {k}")
            clean.append((int(k), to_rational(a), to_rational(phi)))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def cos(cls, k: int = 1, amplitude=1, phase=0) -> "Smooth":
        return cls(((k, amplitude, phase),))

    @cached_property
    def _fterms(self):
        return [(k, float(a), float(phi)) for k, a, phi in self.terms]

    def eval(self, x):
        y = float(_frac(x)) if isinstance(x, (Fraction, int)) else float(x) - math.floor(float(x))
        return sum(a * math.cos(TWO_PI * k * y + phi) for k, a, phi in self._fterms)

    eval_float = eval

    def eval_array(self, x):
        x = np.asarray(x, dtype=float)
        y = x - np.floor(x)
        out = np.zeros_like(y)
        for k, a, phi in self._fterms:
            out += a * np.cos(TWO_PI * k * y + phi)
        return out

    def difference(self, phase: np.ndarray, shift: np.ndarray) -> np.ndarray:
        """``f(phase + shift) - f(phase)`` without cancellation for tiny shifts."""
        phase = np.asarray(phase, dtype=float)
        shift = np.asarray(shift, dtype=float)
        out = np.zeros(np.broadcast(phase, shift).shape)
        for k, a, phi in self._fterms:
            if k == 0:
                continue
            out += -2.0 * a * np.sin(TWO_PI * k * (phase + 0.5 * shift) + phi) * np.sin(math.pi * k * shift)
        return out

    def lipschitz(self) -> float:
        return sum(abs(a) * TWO_PI * k for k, a, _ in self._fterms)

    def unit_antiderivative(self, t):
        t = float(t)
        total = 0.0
        for k, a, phi in self._fterms:
            if k == 0:
                total += a * math.cos(phi) * t
            else:
                total += a * (math.sin(TWO_PI * k * t + phi) - math.sin(phi)) / (TWO_PI * k)
        return total

    def abs_unit_integral(self):
        from scipy.integrate import quad

        kmax = max((k for k, _, _ in self._fterms), default=0)
        pts = np.linspace(0.0, 1.0, 8 * max(kmax, 1) + 1)
        total = 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            val, _ = quad(lambda t: abs(self.eval_float(t)), lo, hi, limit=200, epsabs=1e-14, epsrel=1e-12)
            total += val
        return total

    def to_dsl(self):
        return " + ".join(f"cos({k}, {_fmt(a)}, {_fmt(phi)})" for k, a, phi in self.terms) or "zero"


@dataclass(frozen=True)
class PowerSingular(PeriodicPotential):
    """1-periodization of ``scale * |x| ** (-gamma)`` on [-1/2, 1/2]."""

    gamma: Fraction
    scale: Fraction = Fraction(1)

    def __post_init__(self):
        g = to_rational(self.gamma)
        c = to_rational(self.scale)
        if not 0 < g < 1:
            raise DomainError(f"power singularity needs 0 < gamma < 1, got {g}")
        if c <= 0:
            raise DomainError(f"power singularity needs scale > 0, got {c}")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "scale", c)

    @property
    def is_singular(self):
        return True

    def unit_breakpoints(self):
        return (Fraction(0), Fraction(1, 2))

    def singular_points(self):
        return (Fraction(0),)

    @cached_property
    def _g(self):
        return float(self.gamma)

    @cached_property
    def _c(self):
        return float(self.scale)

    def eval(self, x):
        y = _frac(x)
        if y == 0:
            raise SingularityHit(x)
        d = min(y, 1 - y)
        return self._c * float(d) ** (-self._g)

    def eval_float(self, x):
        return self.eval(float(x) if not isinstance(x, (Fraction, int)) else x)

    def eval_array(self, x):
        x = np.asarray(x, dtype=float)
        y = x - np.floor(x)
        if np.any(y == 0.0):
            bad = x[y == 0.0][0]
            raise SingularityHit(float(bad))
        d = np.minimum(y, 1.0 - y)
        return self._c * d ** (-self._g)

    def unit_antiderivative(self, t):
        t = float(t)
        e = 1.0 - self._g
        half = 0.5**e / e
        if t <= 0.5:
            return self._c * t**e / e
        return self._c * (2.0 * half - (1.0 - t) ** e / e)

    def abs_unit_integral(self):
        e = 1.0 - self._g
        return self._c * 2.0 * 0.5**e / e

    def window_sup(self, length):
        # symmetric decreasing profile: the window centred on the singularity wins
        length = min(float(length), 1.0)
        e = 1.0 - self._g
        return self._c * 2.0 * (0.5 * length) ** e / e

    def to_dsl(self):
        if self.scale == 1:
            return f"sing({_fmt(self.gamma)}, 1)"
        return f"sing({_fmt(self.gamma)}, {_fmt(self.scale)})"


@dataclass(frozen=True)
class Sum(PeriodicPotential):
    """Flat linear combination ``sum c_i p_i``; never contains nested Sums."""

    terms: tuple[tuple[Fraction, PeriodicPotential], ...]

    def __post_init__(self):
        for c, p in self.terms:
            if isinstance(p, Sum):
                raise DomainError("Sum must be flat; build it with Sum.of(...)")

    @classmethod
    def of(cls, terms: Iterable[tuple[object, PeriodicPotential]]) -> PeriodicPotential:
        flat: list[tuple[Fraction, PeriodicPotential]] = []
        for c, p in terms:
            c = to_rational(c)
            if isinstance(p, Sum):
                flat.extend((c * c2, p2) for c2, p2 in p.terms)
            else:
                flat.append((c, p))
        if len(flat) == 1 and flat[0][0] == 1:
            return flat[0][1]
        return cls(tuple(flat))

    @property
    def is_step(self):
        return all(p.is_step for _, p in self.terms)

    @property
    def is_singular(self):
        return any(p.is_singular for _, p in self.terms)

    def unit_breakpoints(self):
        pts = set()
        for _, p in self.terms:
            pts.update(p.unit_breakpoints())
        return tuple(sorted(pts))

    def singular_points(self):
        pts = set()
        for _, p in self.terms:
            pts.update(p.singular_points())
        return tuple(sorted(pts))

    def as_step(self):
        if not self.is_step:
            return None
        if not self.terms:
            return ZERO
        bps = sorted({b for _, p in self.terms for b in p.breakpoints})
        vals = [sum((c * p.eval(b) for c, p in self.terms), Fraction(0)) for b in bps]
        # drop breakpoints that do not change the value (keep the first one)
        keep_b, keep_v = [bps[0]], [vals[0]]
        for b, v in zip(bps[1:], vals[1:]):
            if v != keep_v[-1]:
                keep_b.append(b)
                keep_v.append(v)
        if len(keep_v) > 1 and keep_v[0] == keep_v[-1] and keep_b[0] != 0:
            keep_b, keep_v = keep_b[1:], keep_v[1:]
        return Step(tuple(keep_b), tuple(keep_v))

    def eval(self, x):
        exact, inexact = Fraction(0), 0.0
        all_exact = True
        for c, p in self.terms:
            v = p.eval(x)
            if isinstance(v, Fraction):
                exact += c * v
            else:
                all_exact = False
                inexact += float(c) * v
        return exact if all_exact else float(exact) + inexact

    def eval_float(self, x):
        return sum(float(c) * p.eval_float(x) for c, p in self.terms)

    def eval_array(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, p in self.terms:
            out += float(c) * p.eval_array(x)
        return out

    def unit_antiderivative(self, t):
        return sum(float(c) * p.unit_antiderivative(t) for c, p in self.terms)

    def abs_unit_integral(self):
        step = self.as_step()
        if step is not None:
            return step.abs_unit_integral()
        return _numeric_abs_unit_integral(self)

    def window_sup(self, length):
        step = self.as_step()
        if step is not None:
            return step.window_sup(length)
        return _numeric_window_sup(self, length)

    def triangle_bound(self) -> float:
        return sum(abs(float(c)) * p.abs_unit_integral() for c, p in self.terms)

    def to_dsl(self):
        if not self.terms:
            return "zero"
        parts = []
        for c, p in self.terms:
            if isinstance(p, Smooth) and len(p.terms) > 1:
                parts.extend(f"cos({k}, {_fmt(c * a)}, {_fmt(phi)})" for k, a, phi in p.terms)
                continue
            body = p.to_dsl()
            parts.append(body if c == 1 else f"{_fmt(c)}*{body}")
        return " + ".join(parts)


ZERO = Step.constant(0)
ONE = Step.constant(1)


def _numeric_abs_unit_integral(p: PeriodicPotential) -> float:
    import mpmath

    pts = sorted({Fraction(0), Fraction(1), Fraction(1, 2), *p.unit_breakpoints()})
    total = 0.0
    with mpmath.workdps(20):
        for lo, hi in zip(pts[:-1], pts[1:]):
            total += float(mpmath.quad(lambda t: abs(p.eval_float(float(t))), [float(lo), float(hi)]))
    return total


def _numeric_window_sup(p: PeriodicPotential, length: float, n: int = 4096) -> float:
    length = float(length)
    if length >= 1.0:
        return p.abs_unit_integral() * length
    # cumulative |p| on a grid refined by the breakpoints, then a window scan
    base = np.linspace(0.0, 1.0, n + 1)
    extra = np.array([float(b) for b in p.unit_breakpoints()])
    grid = np.unique(np.concatenate([base, extra, np.mod(extra - length, 1.0)]))
    cum = np.zeros(len(grid))
    for i, (lo, hi) in enumerate(zip(grid[:-1], grid[1:])):
        cum[i + 1] = cum[i] + _abs_piece_integral(p, lo, hi)
    total = cum[-1]

    def F(x):
        x = np.mod(x, 1.0)
        y = x + length
        cx = np.interp(x, grid, cum)
        cy = np.where(y <= 1.0, np.interp(np.minimum(y, 1.0), grid, cum), total + np.interp(y - 1.0, grid, cum))
        return cy - cx

    return float(np.max(F(grid[:-1])))


def _abs_piece_integral(p: PeriodicPotential, lo: float, hi: float) -> float:
    sing = [float(s) for s in p.singular_points()]
    if any(abs(lo - s) < 1e-300 or abs(hi - s - 1.0) < 1e-300 or abs(hi - s) < 1e-300 for s in sing):
        # integrable endpoint singularity: closed form is available only per family
        import mpmath

        with mpmath.workdps(20):
            return float(mpmath.quad(lambda t: abs(p.eval_float(float(t))), [lo, hi]))
    xs, ws = np.polynomial.legendre.leggauss(8)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return float(half * np.sum(ws * np.abs(p.eval_array(mid + half * xs))))


# ----------------------------------------------------------------------------
# Potentials on the line


class LinePotential:
    """Interface used by the propagator: a real potential on the whole line."""

    def breakpoints(self, a: Fraction, b: Fraction) -> list[Fraction]:
        raise NotImplementedError

    def singular_breakpoints(self, a: Fraction, b: Fraction) -> list[Fraction]:
        return []

    @property
    def is_piecewise_constant(self) -> bool:
        raise NotImplementedError

    def value(self, x):
        raise NotImplementedError

    def value_float(self, x: float) -> float:
        return float(self.value(x))

    def integral(self, a: float, b: float) -> float:
        raise NotImplementedError

    def pieces(self, a, b) -> tuple[list[Fraction], list]:
        """Exact edges ``a = e_0 < ... < e_n = b`` and the constant value on each piece.

        Only for piecewise-constant potentials; adjacent equal values are merged.
        Works for ``a > b`` too (edges then decrease).
        """
        a, b = to_rational(a), to_rational(b)
        if not self.is_piecewise_constant:
            raise DomainError("pieces() needs a piecewise-constant potential")
        if a == b:
            return [a], []
        lo, hi = min(a, b), max(a, b)
        inner = [x for x in self.breakpoints(lo, hi) if lo < x < hi]
        edges = [lo, *inner, hi]
        vals = [self.value((l + r) / 2) for l, r in zip(edges[:-1], edges[1:])]
        m_edges, m_vals = [edges[0]], []
        for v, r in zip(vals, edges[1:]):
            if m_vals and m_vals[-1] == v:
                m_edges[-1] = r
            else:
                m_vals.append(v)
                m_edges.append(r)
        if a > b:
            m_edges.reverse()
            m_vals.reverse()
        return m_edges, m_vals


def _lattice_points(slope: Fraction, offset: Fraction, marks: Sequence[Fraction], a: Fraction, b: Fraction) -> list[Fraction]:
    """All x in [a, b] with ``slope*x + offset`` congruent to a mark mod 1."""
    out = []
    if slope == 0:
        return out
    lo_phase, hi_phase = sorted((slope * a + offset, slope * b + offset))
    count = 0
    for s in marks:
        k0 = math.ceil(lo_phase - s)
        k1 = math.floor(hi_phase - s)
        count += max(0, k1 - k0 + 1)
        if count > MAX_BREAKPOINTS:
            raise ResourceBudgetError(
                f"more than {MAX_BREAKPOINTS} breakpoints in [{float(a):.6g}, {float(b):.6g}]; use a smaller window or order"
            )
        for k in range(k0, k1 + 1):
            out.append((k + s - offset) / slope)
    return out


class PeriodicOnLine(LinePotential):
    """A 1-periodic sampling function used directly as W(x)."""

    def __init__(self, p: PeriodicPotential, period=None):
        self.p = p
        self.period = Fraction(1) if period is None else to_rational(period)

    @property
    def is_piecewise_constant(self):
        return self.p.is_step

    def breakpoints(self, a, b):
        return sorted(set(_lattice_points(Fraction(1), Fraction(0), self.p.unit_breakpoints(), a, b)))

    def singular_breakpoints(self, a, b):
        return sorted(set(_lattice_points(Fraction(1), Fraction(0), self.p.singular_points(), a, b)))

    def value(self, x):
        return self.p.eval(x)

    def value_float(self, x):
        return self.p.eval_float(x)

    def value_array(self, x):
        return self.p.eval_array(x)

    def integral(self, a, b):
        return self.p.integral(a, b)

    def l1_unif_bound(self, shift: float = 0.0) -> float:
        return l1_unif_norm(self.p.shifted(shift) if shift else self.p)

    def __repr__(self):
        return f"PeriodicOnLine({self.p.to_dsl()!r})"


def as_line(W) -> LinePotential:
    if isinstance(W, LinePotential):
        return W
    if isinstance(W, PeriodicPotential):
        return PeriodicOnLine(W)
    if isinstance(W, (int, float, Fraction)):
        return PeriodicOnLine(Step.constant(W))
    raise TypeError(f"not a potential: {W!r}")


class _Composed(LinePotential):
    """``V1(x) + V2(slope * x + theta)`` with an exact rational slope."""

    v1: PeriodicPotential
    v2: PeriodicPotential
    theta: Fraction

    @property
    def slope(self) -> Fraction:
        raise NotImplementedError

    @property
    def is_piecewise_constant(self):
        return self.v1.is_step and self.v2.is_step

    def phase(self, x):
        """``slope * x + theta`` reduced mod 1 (exact for rational x)."""
        x = to_rational(x)
        return _frac(self.slope * x + self.theta)

    def value(self, x):
        x = to_rational(x)
        a = self.v1.eval(x)
        b = self.v2.eval(self.phase(x))
        if isinstance(a, Fraction) and isinstance(b, Fraction):
            return a + b
        return float(a) + float(b)

    def value_float(self, x):
        x = float(x)
        ph = float(self.slope) * x + float(self.theta)
        return self.v1.eval_float(x) + self.v2.eval_float(ph - math.floor(ph))

    def value_array(self, x):
        x = np.asarray(x, dtype=float)
        ph = float(self.slope) * x + float(self.theta)
        return self.v1.eval_array(x) + self.v2.eval_array(ph)

    def breakpoints(self, a, b):
        a, b = to_rational(a), to_rational(b)
        pts = set(_lattice_points(Fraction(1), Fraction(0), self.v1.unit_breakpoints(), a, b))
        pts.update(_lattice_points(self.slope, self.theta, self.v2.unit_breakpoints(), a, b))
        return sorted(pts)

    def singular_breakpoints(self, a, b):
        a, b = to_rational(a), to_rational(b)
        pts = set(_lattice_points(Fraction(1), Fraction(0), self.v1.singular_points(), a, b))
        pts.update(_lattice_points(self.slope, self.theta, self.v2.singular_points(), a, b))
        return sorted(pts)

    def integral(self, a, b):
        s = float(self.slope)
        th = float(self.theta)
        out = self.v1.integral(a, b)
        if s == 0:
            return out + self.v2.eval_float(th) * (float(b) - float(a))
        return out + self.v2.integral(s * float(a) + th, s * float(b) + th) / s

    def l1_unif_bound(self, shift: float = 0.0) -> float:
        """Upper bound on ``||V + shift||_{1,unif}``; exact when the period is small and steps only."""
        if self.is_piecewise_constant and self.period <= 10_000:
            return float(_exact_line_unif_norm(self, Fraction(shift)))
        v1 = self.v1.shifted(shift) if shift else self.v1
        s = float(self.slope)
        part2 = self.v2.window_sup(s) / s if s > 0 else abs(self.v2.eval_float(float(self.theta)))
        return l1_unif_norm(v1) + part2


def _exact_line_unif_norm(W: _Composed, shift: Fraction) -> Fraction:
    # sup over windows [x, x+1] of int |W + shift| for a step potential of period P
    P = W.period
    edges, vals = W.pieces(Fraction(0), P + 1)
    vals = [abs(v + shift) for v in vals]
    cands = set(edges) | {e - 1 for e in edges if e - 1 >= 0}
    cands = [c for c in cands if 0 <= c <= P]

    def window(x):
        total = Fraction(0)
        for lo, hi, v in zip(edges[:-1], edges[1:], vals):
            l2, h2 = max(lo, x), min(hi, x + 1)
            if h2 > l2:
                total += v * (h2 - l2)
        return total

    return max(window(c) for c in cands)


class QuasiPotential(_Composed):
    """``V(x) = V1(x) + V2(x alpha + theta)`` with alpha carried as an exact proxy."""

    def __init__(self, v1: PeriodicPotential, v2: PeriodicPotential, alpha: Frequency, theta=0):
        theta = to_rational(theta)
        if not 0 <= theta < 1:
            theta = _frac(theta)
        self.v1, self.v2, self.alpha, self.theta = v1, v2, alpha, theta

    @property
    def slope(self):
        return self.alpha.value

    @property
    def period(self) -> Fraction:
        return Fraction(self.alpha.value.denominator)

    def approximant(self, m: int) -> "ApproximantPotential":
        return ApproximantPotential(self, m)

    def with_theta(self, theta) -> "QuasiPotential":
        return QuasiPotential(self.v1, self.v2, self.alpha, theta)

    def __repr__(self):
        return f"QuasiPotential(v1={self.v1.to_dsl()!r}, v2={self.v2.to_dsl()!r}, alpha={self.alpha.label!r}, theta={self.theta})"


class ApproximantPotential(_Composed):
    """``V1(x) + V2(x alpha_m + theta)``, periodic with period ``q_m``."""

    def __init__(self, source: QuasiPotential, m: int):
        self.source = source
        self.m = m
        self.alpha_m = source.alpha.convergent(m)
        self.v1, self.v2, self.theta = source.v1, source.v2, source.theta

    @property
    def slope(self):
        return self.alpha_m

    @property
    def period(self) -> Fraction:
        return Fraction(self.source.alpha.cf.q[self.m])

    def __repr__(self):
        return f"ApproximantPotential(m={self.m}, alpha_m={self.alpha_m})"


def eval_potential(p: PeriodicPotential, x):
    return p.eval(x)


def eval_quasi(q: _Composed, x):
    """Exact-phase evaluation of a quasiperiodic potential or approximant."""
    return q.value(x)


def l1_unif_norm(p) -> float:
    """``sup_x int_x^{x+1} |p|``."""
    if isinstance(p, PeriodicPotential):
        return p.abs_unit_integral()
    if isinstance(p, PeriodicOnLine):
        return p.p.abs_unit_integral()
    if isinstance(p, _Composed):
        return p.l1_unif_bound()
    raise TypeError(f"not a potential: {p!r}")


# ----------------------------------------------------------------------------
# Oscillation


def osc_integral(p: PeriodicPotential, eps) -> float:
    """``int_0^1 osc_{p,eps}(x) dx``; ``inf`` when p has a power singularity."""
    eps_q = to_rational(eps)
    if not 0 < eps_q < Fraction(1, 4):
        raise DomainError(f"osc_integral needs 0 < eps < 1/4, got {eps}")
    if p.is_singular:
        return math.inf
    step = p.as_step()
    if step is not None:
        return float(step_osc_integral(step, eps_q))
    return _scan_osc_integral(p, float(eps_q))


def step_osc_integral(step: Step, eps: Fraction) -> Fraction:
    """Exact oscillation integral of a step function (overlapping windows allowed)."""
    if len(step.values) == 1:
        return Fraction(0)
    crit = sorted({_frac(b + s) for b in step.breakpoints for s in (eps, -eps)} | {Fraction(0)})
    crit.append(Fraction(1))
    total = Fraction(0)
    for lo, hi in zip(crit[:-1], crit[1:]):
        if hi == lo:
            continue
        x = (lo + hi) / 2
        left, right = x - eps, x + eps
        seen = {step.eval(left)}
        n = math.floor(left)
        for k in (n, n + 1):
            for b, v in zip(step.breakpoints, step.values):
                if left < b + k < right:
                    seen.add(v)
        total += (max(seen) - min(seen)) * (hi - lo)
    return total


def _scan_osc_integral(p: PeriodicPotential, eps: float) -> float:
    from scipy.ndimage import maximum_filter1d, minimum_filter1d

    # pick the half-width first so the sampled window spans 2*eps to one grid step
    half = max(64, int(math.ceil(8192 * eps)))
    n = int(round(half / eps))
    x = (np.arange(n) + 0.5) / n
    f = p.eval_array(x)
    size = 2 * half + 1
    hi = maximum_filter1d(f, size=size, mode="wrap")
    lo = minimum_filter1d(f, size=size, mode="wrap")
    return float(np.mean(hi - lo))


@dataclass(frozen=True)
class HolderFit:
    ok: bool
    D: float = math.nan
    delta: float = math.nan
    eps_min: float = math.nan
    eps_max: float = math.nan
    max_log_residual: float = math.nan
    reason: str = ""
    values: tuple[float, ...] = field(default=(), repr=False)


def holder_certificate(p: PeriodicPotential, eps_grid: Sequence[float]) -> HolderFit:
    """Least-squares fit ``osc_integral(eps) ~ D eps**delta`` over ``eps_grid``."""
    eps = [float(e) for e in eps_grid]
    if len(eps) < 2:
        return HolderFit(False, reason="need at least two eps values")
    if any(e >= 0.25 or e <= 0 for e in eps):
        return HolderFit(False, reason="every eps must lie in (0, 1/4)")
    if any(a <= b for a, b in zip(eps, eps[1:])):
        return HolderFit(False, reason="eps grid must be strictly decreasing")
    vals = [osc_integral(p, e) for e in eps]
    if any(math.isinf(v) for v in vals):
        return HolderFit(False, reason="oscillation integral is unbounded (power singularity)", values=tuple(vals))
    if all(v == 0 for v in vals):
        return HolderFit(True, 0.0, 1.0, min(eps), max(eps), 0.0, "constant", tuple(vals))
    if any(v <= 0 for v in vals):
        return HolderFit(False, reason="oscillation vanishes on part of the grid", values=tuple(vals))
    lx, ly = np.log(eps), np.log(vals)
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = float(np.max(np.abs(ly - (slope * lx + icpt))))
    if slope <= 0:
        return HolderFit(False, math.exp(icpt), float(slope), min(eps), max(eps), resid, "no decay in eps", tuple(vals))
    return HolderFit(True, float(math.exp(icpt)), float(slope), min(eps), max(eps), resid, "", tuple(vals))
