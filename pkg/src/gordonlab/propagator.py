"""Solutions of ``-u'' + (W - E) u = 0``, monodromy matrices and the three-point bound.

Piecewise-constant potentials are propagated with exact constant-coefficient
blocks (see :mod:`gordonlab.kernels`).  Everything else goes through an
adaptive fourth-order Magnus integrator whose leading term uses the exact
integral of W, so integrable power singularities at step endpoints are handled
without sampling the singular point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DomainError, InvariantViolation, NumericalBlowup, StepSizeUnderflow
from .exact_arith import to_rational
from .potentials import LinePotential, as_line

DEFAULT_TOL = 1e-10
_SQRT3 = math.sqrt(3.0)
_NODE_LO = 0.5 - _SQRT3 / 6.0
_NODE_HI = 0.5 + _SQRT3 / 6.0


@dataclass(frozen=True)
class SolutionState:
    x: object  # Fraction or float
    u: float
    du: float

    @property
    def norm(self) -> float:
        return math.hypot(self.u, self.du)

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.norm - 1.0) <= tol

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.u, self.du])


@dataclass(frozen=True)
class Monodromy:
    """Row-major 2x2 transfer matrix ``[[a, b], [c, d]]`` over ``(x0, x1)`` at energy E."""

    a: float
    b: float
    c: float
    d: float
    x0: object = 0
    x1: object = 0
    energy: float = 0.0

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> float:
        return self.a + self.d

    def cayley_hamilton_residual(self) -> float:
        """Operator norm of ``M^2 - tr(M) M + I``."""
        M = self.matrix
        R = M @ M - self.trace * M + np.eye(2)
        return float(np.linalg.norm(R, 2))

    def apply(self, v) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=float)

    def inverse(self) -> "Monodromy":
        # valid because det M = 1
        return Monodromy(self.d, -self.b, -self.c, self.a, self.x1, self.x0, self.energy)

    def to_json(self) -> str:
        return json.dumps(
            {
                "matrix": [self.a, self.b, self.c, self.d],
                "interval": [str(self.x0), str(self.x1)],
                "energy": self.energy,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Monodromy":
        data = json.loads(text)
        a, b, c, d = (float(v) for v in data["matrix"])
        x0, x1 = (to_rational(v) for v in data["interval"])
        return cls(a, b, c, d, x0, x1, float(data["energy"]))


# ----------------------------------------------------------------------------
# piecewise-constant path


def _pc_arrays(W: LinePotential, E: float, x0, x1):
    edges, vals = W.pieces(x0, x1)
    lengths = np.array([float(r - l) for l, r in zip(edges[:-1], edges[1:])])
    w = np.array([float(v) - E for v in vals])
    return edges, lengths, w


def pc_trajectory(W: LinePotential, E: float, start: SolutionState, xs: Sequence) -> list[SolutionState]:
    """States at every point of ``xs`` for a piecewise-constant W (exact blocks)."""
    x0 = to_rational(start.x)
    pts = [to_rational(x) for x in xs]
    out: dict[Fraction, SolutionState] = {}
    for side in (1, -1):
        targets = sorted({p for p in pts if (p - x0) * side > 0}, key=lambda p: side * p)
        if not targets:
            continue
        far = targets[-1]
        edges, vals = W.pieces(x0, far)
        # merge sample points into the exact edge list
        merged = sorted(set(edges) | set(targets), key=lambda p: side * p)
        lengths = np.array([float(r - l) for l, r in zip(merged[:-1], merged[1:])])
        mids = [(l + r) / 2 for l, r in zip(merged[:-1], merged[1:])]
        w = np.array([float(_value_on(edges, vals, m, side)) - E for m in mids])
        us, dus = kernels.trajectory_pc(lengths, w, start.u, start.du)
        index = {p: i for i, p in enumerate(merged)}
        for p in targets:
            i = index[p]
            out[p] = SolutionState(p, float(us[i]), float(dus[i]))
    res = []
    for p in pts:
        res.append(out[p] if p != x0 else SolutionState(p, start.u, start.du))
    return res


def _value_on(edges, vals, x, side):
    """Constant value of the piece of ``(edges, vals)`` containing x."""
    lo, hi = 0, len(vals)
    # edges are monotone in the direction ``side``
    while lo < hi:
        mid = (lo + hi) // 2
        if (edges[mid + 1] - x) * side <= 0:
            lo = mid + 1
        else:
            hi = mid
    return vals[min(lo, len(vals) - 1)]


# ----------------------------------------------------------------------------
# adaptive Magnus path


def _magnus_block(W: LinePotential, E: float, a: float, h: float):
    mean = W.integral(a, a + h) - E * h
    w1 = W.value_float(a + _NODE_LO * h) - E
    w2 = W.value_float(a + _NODE_HI * h) - E
    c = _SQRT3 * h * h / 12.0 * (w1 - w2)
    # Omega = [[c, h], [mean, -c]];  Omega^2 = (c^2 + h*mean) I
    delta = c * c + h * mean
    if delta > 0.0:
        s = math.sqrt(delta)
        f0, f1 = math.cosh(s), math.sinh(s) / s
    elif delta < 0.0:
        s = math.sqrt(-delta)
        f0, f1 = math.cos(s), math.sin(s) / s
    else:
        f0, f1 = 1.0, 1.0
    return f0 + f1 * c, f1 * h, f1 * mean, f0 - f1 * c


def _mul(M, N):
    a, b, c, d = M
    p, q, r, s = N
    return p * a + q * c, p * b + q * d, r * a + s * c, r * b + s * d


def _magnus_segment(W, E, a: float, b: float, M, tol: float, start_h: float | None = None):
    """Compose the transfer matrix over [a, b] onto M (a < b or a > b)."""
    span = b - a
    if span == 0.0:
        return M
    direction = 1.0 if span > 0 else -1.0
    length = abs(span)
    h = min(length, start_h if start_h else min(length, 0.05))
    x = a
    done = 0.0
    floor_h = 1e-15 * max(1.0, abs(a), abs(b))
    while done < length:
        h = min(h, length - done)
        hs = direction * h
        try:
            full = _magnus_block(W, E, x, hs)
            half1 = _magnus_block(W, E, x, hs / 2)
            half2 = _magnus_block(W, E, x + hs / 2, hs / 2)
        except (OverflowError, ZeroDivisionError):
            full = half1 = half2 = (math.nan,) * 4
        fine = _mul(half1, half2)
        if not all(math.isfinite(v) for v in fine):
            if h <= floor_h:
                raise NumericalBlowup(x)
            h /= 4.0
            continue
        cand = _mul(M, fine)
        err = max(abs(p - q) for p, q in zip(_mul(M, full), cand)) / 15.0
        tol_here = tol * max(1.0, max(abs(v) for v in cand))
        if err <= tol_here:
            M = cand
            done += h
            x = a + direction * done
            growth = 4.0 if err == 0 else min(4.0, max(0.2, 0.9 * (tol_here / err) ** 0.2))
            h *= growth
        else:
            h *= max(0.1, 0.9 * (tol_here / err) ** 0.2)
            if h < floor_h:
                raise StepSizeUnderflow(x)
    return M


def _segment_points(W: LinePotential, x0: Fraction, x1: Fraction) -> list[Fraction]:
    lo, hi = min(x0, x1), max(x0, x1)
    pts = {lo, hi}
    pts.update(p for p in W.breakpoints(lo, hi) if lo < p < hi)
    pts = sorted(pts)
    return pts if x1 >= x0 else pts[::-1]


def _transfer_general(W: LinePotential, E: float, x0, x1, tol: float):
    pts = _segment_points(W, x0, x1)
    M = (1.0, 0.0, 0.0, 1.0)
    singular = set(W.singular_breakpoints(min(x0, x1), max(x0, x1)))
    for l, r in zip(pts[:-1], pts[1:]):
        near_sing = l in singular or r in singular
        start_h = 1e-6 * abs(float(r - l)) if near_sing else None
        if r in singular and l not in singular:
            # integrate away from the singularity so steps grow geometrically
            seg = _magnus_segment(W, E, float(r), float(l), (1.0, 0.0, 0.0, 1.0), tol, start_h)
            a, b, c, d = seg
            M = _mul(M, (d, -b, -c, a))
        else:
            M = _magnus_segment(W, E, float(l), float(r), M, tol, start_h)
    return M


def transfer(W, E: float, x0, x1, tol: float = DEFAULT_TOL) -> Monodromy:
    """Transfer matrix ``M(x0, x1)`` mapping ``(u, u')(x0)`` to ``(u, u')(x1)``."""
    W = as_line(W)
    E = float(E)
    x0q, x1q = to_rational(x0), to_rational(x1)
    if W.is_piecewise_constant:
        _, lengths, w = _pc_arrays(W, E, x0q, x1q)
        M = kernels.transfer_product(lengths, w)
    else:
        M = _transfer_general(W, E, x0q, x1q, tol)
    if not all(math.isfinite(v) for v in M):
        raise NumericalBlowup(x0)
    return Monodromy(*(float(v) for v in M), x0=x0q, x1=x1q, energy=E)


def propagate(W, E: float, start: SolutionState, to_x, tol: float = DEFAULT_TOL) -> SolutionState:
    """Solve ``-u'' + W u = E u`` from ``start`` to ``to_x``."""
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    W = as_line(W)
    E = float(E)
    if W.is_piecewise_constant:
        x0q, x1q = to_rational(start.x), to_rational(to_x)
        _, lengths, w = _pc_arrays(W, E, x0q, x1q)
        u, du = kernels.propagate_pc(lengths, w, float(start.u), float(start.du))
    else:
        M = transfer(W, E, start.x, to_x, tol)
        u, du = M.apply([start.u, start.du])
    if not (math.isfinite(u) and math.isfinite(du)):
        raise NumericalBlowup(start.x)
    return SolutionState(to_x, float(u), float(du))


def trajectory(W, E: float, start: SolutionState, xs: Sequence, tol: float = DEFAULT_TOL) -> list[SolutionState]:
    """States at all of ``xs`` (any order, either side of ``start.x``)."""
    W = as_line(W)
    E = float(E)
    if W.is_piecewise_constant:
        return pc_trajectory(W, E, start, xs)
    x0 = to_rational(start.x)
    pts = [to_rational(x) for x in xs]
    out = {}
    for side in (1, -1):
        targets = sorted({p for p in pts if (p - x0) * side > 0}, key=lambda p: side * p)
        prev, state = x0, SolutionState(x0, start.u, start.du)
        for p in targets:
            state = propagate(W, E, state, p, tol)
            out[p] = state
            prev = p
    return [out[p] if p != x0 else SolutionState(p, start.u, start.du) for p in pts]


def monodromy(W, E: float, period=None, tol: float = DEFAULT_TOL, start=0) -> Monodromy:
    """Transfer matrix over one period ``[start, start + period]``."""
    W = as_line(W)
    p = getattr(W, "period", None) if period is None else period
    if p is None:
        raise DomainError("monodromy needs a periodic potential or an explicit period")
    s = to_rational(start)
    return transfer(W, E, s, s + to_rational(p), tol)


@dataclass(frozen=True)
class ThreePointResult:
    norm_minus: float  # ||(u, u')(-p)||
    norm_plus: float  # ||(u, u')(p)||
    norm_double: float  # ||(u, u')(2p)||
    trace: float
    case: str  # "|tr|<=1" or "|tr|>1"
    pair_max: float
    pair_bound: float

    @property
    def max_norm(self) -> float:
        return max(self.norm_minus, self.norm_plus, self.norm_double)

    @property
    def norms(self) -> tuple[float, float, float]:
        return self.norm_minus, self.norm_plus, self.norm_double

    def holds(self, slack: float = 1e-9) -> bool:
        return self.max_norm >= 0.5 - slack and self.pair_max >= self.pair_bound - slack


def three_point_from_matrix(M: Monodromy, init: Sequence[float]) -> ThreePointResult:
    v = np.asarray(init, dtype=float)
    Mv = M.apply(v)
    M2v = M.apply(Mv)
    Minv = M.inverse().apply(v)
    nm, np_, n2 = (float(np.hypot(*w)) for w in (Minv, Mv, M2v))
    tr = M.trace
    if abs(tr) <= 1.0:
        return ThreePointResult(nm, np_, n2, tr, "|tr|<=1", max(np_, n2), 0.5)
    return ThreePointResult(nm, np_, n2, tr, "|tr|>1", max(nm, np_), abs(tr) / 2.0)


def three_point_bound(W, E: float, init: SolutionState, period=None, tol: float = DEFAULT_TOL, check: bool = True) -> ThreePointResult:
    """Norms of the solution at ``-p, p, 2p`` via the one-period monodromy.

    When ``|tr M| <= 1`` the pair ``(p, 2p)`` carries a norm >= 1/2; otherwise the
    pair ``(-p, p)`` carries a norm >= ``|tr M| / 2``.
    """
    if not init.is_normalized():
        raise DomainError(f"initial state must be normalized, has norm {init.norm!r}")
    M = monodromy(W, E, period, tol)
    res = three_point_from_matrix(M, [init.u, init.du])
    if check and not res.holds():
        raise InvariantViolation(
            "three-point lower bound",
            f"E={E}, init=({init.u}, {init.du}), norms={res.norms}, trace={res.trace}",
        )
    return res
