"""Non-decay witnesses: Gronwall comparison, growth bounds and the witness run.

For each order m the solution u of the quasiperiodic equation and u_m of the
q_m-periodic approximant start from the same normalized state at 0.  When
their difference stays below 1/4 on [-q_m, 2q_m], the three-point bound for
u_m transfers to u: some x in {-q_m, q_m, 2q_m} has ``|u|^2 + |u'|^2 >= 1/16``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from . import kernels
from .errors import InvariantViolation, ResourceBudgetError
from .exact_arith import to_rational
from .potentials import LinePotential, QuasiPotential, _Composed, as_line
from .propagator import (
    DEFAULT_TOL,
    SolutionState,
    ThreePointResult,
    monodromy,
    pc_trajectory,
    propagate,
    three_point_from_matrix,
    trajectory,
)

THRESHOLD = 0.25  # allowed sup of the solution difference
SQUARED_NORM_FLOOR = THRESHOLD**2  # D = 1/16
WITNESS_SLACK = 1e-9
# ceiling on grid points per order in witness_run
GRID_BUDGET = 2_000_000

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def unif_norm_bound(W: LinePotential, shift: float = 0.0) -> float:
    """Upper bound (exact where cheap) on ``||W + shift||_{1,unif}``."""
    return W.l1_unif_bound(shift)


def gronwall_constant(W1, E: float) -> float:
    """``exp(1 + ||W1 - E||_{1,unif})``."""
    return math.exp(1.0 + unif_norm_bound(as_line(W1), -float(E)))


def _log_add(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = max(a, b), min(a, b)
    return hi + math.log1p(math.exp(lo - hi))


def _safe_exp(v: float) -> float:
    return math.exp(v) if v < 709.0 else math.inf


# --- integral of |W1 - W2| |u2| -------------------------------------------------


def _abs_u_on_piece(w: float, h: float, u0: float, du0: float) -> float:
    """``int_0^h |u|`` where ``u'' = w u``, ``(u, u')(0) = (u0, du0)``, h > 0."""
    cuts = [0.0, h]
    if w < 0.0:
        k = math.sqrt(-w)
        phi = math.atan2(du0 / k, u0)  # u = R cos(k t - phi)
        # zeros: k t - phi = pi/2 + n pi
        n0 = math.ceil((-phi - math.pi / 2) / math.pi)
        n = n0
        while True:
            t = (math.pi / 2 + n * math.pi + phi) / k
            if t >= h:
                break
            if t > 0:
                cuts.append(t)
            n += 1
    elif w > 0.0 and du0 != 0.0:
        s = math.sqrt(w)
        r = -u0 * s / du0
        if -1.0 < r < 1.0:
            t = math.atanh(r) / s
            if 0 < t < h:
                cuts.append(t)
    elif w == 0.0 and du0 != 0.0:
        t = -u0 / du0
        if 0 < t < h:
            cuts.append(t)
    cuts.sort()
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        half = 0.5 * (hi - lo)
        ts = 0.5 * (lo + hi) + half * _GL_NODES
        vals = [abs(_u_at(w, t, u0, du0)) for t in ts]
        total += half * float(np.dot(_GL_WEIGHTS, vals))
    return total


def _u_at(w, t, u0, du0):
    a, b, _, _ = kernels.block(w, t)
    return a * u0 + b * du0


def _pc_weighted_integral(W1: LinePotential, W2: LinePotential, E: float, init: SolutionState, x: Fraction) -> float:
    lo, hi = min(Fraction(0), x), max(Fraction(0), x)
    if lo == hi:
        return 0.0
    edges = sorted({lo, hi, *W1.breakpoints(lo, hi), *W2.breakpoints(lo, hi)})
    edges = [e for e in edges if lo <= e <= hi]
    states = pc_trajectory(W2, E, init, edges)
    total = 0.0
    for (l, r), st in zip(zip(edges[:-1], edges[1:]), states[:-1]):
        mid = (l + r) / 2
        v1, v2 = W1.value(mid), W2.value(mid)
        diff = abs(float(v1) - float(v2)) if not (isinstance(v1, Fraction) and isinstance(v2, Fraction)) else float(abs(v1 - v2))
        if diff == 0.0:
            continue
        total += diff * _abs_u_on_piece(float(v2) - E, float(r - l), st.u, st.du)
    return total


def _generic_weighted_integral(W1: LinePotential, W2: LinePotential, E: float, init: SolutionState, x: Fraction, tol: float) -> float:
    lo, hi = min(Fraction(0), x), max(Fraction(0), x)
    if lo == hi:
        return 0.0
    edges = sorted({lo, hi, *W1.breakpoints(lo, hi), *W2.breakpoints(lo, hi)})
    panels = []
    for l, r in zip(edges[:-1], edges[1:]):
        n = max(1, math.ceil(float(r - l) / 0.05))
        for j in range(n):
            panels.append((l + (r - l) * j / n, l + (r - l) * (j + 1) / n))
    nodes = []
    for l, r in panels:
        mid, half = float(l + r) / 2, float(r - l) / 2
        nodes.extend(mid + half * _GL_NODES)
    states = trajectory(W2, E, init, nodes, tol)
    total = 0.0
    for i, (l, r) in enumerate(panels):
        half = float(r - l) / 2
        chunk = states[i * len(_GL_NODES):(i + 1) * len(_GL_NODES)]
        vals = [abs(W1.value_float(float(s.x)) - W2.value_float(float(s.x))) * abs(s.u) for s in chunk]
        total += half * float(np.dot(_GL_WEIGHTS, vals))
    return total


def weighted_difference_integral(W1, W2, E: float, x, init: SolutionState | None = None, tol: float = DEFAULT_TOL) -> float:
    """``int |W1 - W2| |u2|`` between 0 and x."""
    W1, W2 = as_line(W1), as_line(W2)
    init = init or SolutionState(Fraction(0), 1.0, 0.0)
    x = to_rational(x)
    if W1.is_piecewise_constant and W2.is_piecewise_constant:
        return _pc_weighted_integral(W1, W2, float(E), init, x)
    return _generic_weighted_integral(W1, W2, float(E), init, x, tol)


@dataclass(frozen=True)
class GronwallResult:
    x: object
    lhs: float
    rhs: float  # may be inf; log_rhs is authoritative
    log_rhs: float
    C: float
    integral: float

    @property
    def passed(self) -> bool:
        if self.lhs == 0.0:
            return True
        if self.integral == 0.0:
            return False
        return math.log(self.lhs) <= self.log_rhs + 1e-12


def gronwall_check(W1, W2, E: float, x, init: SolutionState | None = None, tol: float = DEFAULT_TOL) -> GronwallResult:
    """Compare ``||(u1,u1') - (u2,u2')||(x)`` with ``C exp(C|x|) int |W1 - W2||u2|``."""
    W1, W2 = as_line(W1), as_line(W2)
    init = init or SolutionState(Fraction(0), 1.0, 0.0)
    x = to_rational(x)
    s1 = propagate(W1, E, init, x, tol)
    s2 = propagate(W2, E, init, x, tol)
    lhs = math.hypot(s1.u - s2.u, s1.du - s2.du)
    C = gronwall_constant(W1, E)
    integral = weighted_difference_integral(W1, W2, E, x, init, tol)
    if integral > 0:
        log_rhs = math.log(C) + C * abs(float(x)) + math.log(integral)
    else:
        log_rhs = -math.inf
    return GronwallResult(x, lhs, _safe_exp(log_rhs) if integral > 0 else 0.0, log_rhs, C, integral)


@dataclass(frozen=True)
class GrowthBound:
    x: object
    norm: float
    bound: float
    log_bound: float
    free_norm: float

    @property
    def passed(self) -> bool:
        if self.norm == 0.0:
            return True
        return math.log(self.norm) <= self.log_bound + 1e-12


def _free_envelope(E: float, x: float, u0: float, du0: float) -> float:
    """``sup |u0(t)|`` over t between 0 and x for ``-u0'' = E u0``."""
    ax = abs(x)
    if E > 0:
        k = math.sqrt(E)
        return math.hypot(u0, du0 / k)
    if E < 0:
        s = math.sqrt(-E)
        return abs(u0) * math.cosh(s * ax) + abs(du0) / s * math.sinh(s * ax)
    return abs(u0) + abs(du0) * ax


def growth_bound(W, E: float, x, init: SolutionState | None = None, tol: float = DEFAULT_TOL) -> GrowthBound:
    """Explicit bound on ``||(u, u')(x)||``: free solution plus the Gronwall correction."""
    W = as_line(W)
    E = float(E)
    init = init or SolutionState(Fraction(0), 1.0, 0.0)
    xq = to_rational(x)
    xf = float(xq)
    a, b, c, d = kernels.block(-E, xf)
    free_u, free_du = a * init.u + b * init.du, c * init.u + d * init.du
    free_norm = math.hypot(free_u, free_du)
    env = _free_envelope(E, xf, init.u, init.du)
    if W.is_piecewise_constant:
        lo, hi = min(Fraction(0), xq), max(Fraction(0), xq)
        edges, vals = W.pieces(lo, hi) if lo < hi else ([lo], [])
        w_int = float(sum((abs(Fraction(v)) * (r - l) for l, r, v in zip(edges[:-1], edges[1:], vals)), Fraction(0)))
    else:
        w_int = math.ceil(abs(xf)) * unif_norm_bound(W)
    C = gronwall_constant(W, E)
    log_free = math.log(free_norm) if free_norm > 0 else -math.inf
    if w_int > 0 and env > 0:
        log_corr = math.log(C) + C * abs(xf) + math.log(env) + math.log(w_int)
    else:
        log_corr = -math.inf
    log_bound = _log_add(log_free, log_corr)
    state = propagate(W, E, init, xq, tol)
    return GrowthBound(xq, state.norm, _safe_exp(log_bound), log_bound, free_norm)


# --- witness run -----------------------------------------------------------------


@dataclass(frozen=True)
class WitnessPoint:
    x: Fraction
    norm: float  # ||(u, u')(x)|| from the run
    norm_approximant: float  # ||(u_m, u_m')(x)||
    verified_norm: float | None = None  # independent high-precision re-propagation

    @property
    def squared_norm(self) -> float:
        return self.norm**2


@dataclass
class WitnessRow:
    m: int
    q_m: int
    sup_diff_sampled: float
    sup_diff_rigorous: float  # nan when no rigorous bound is available
    passed: bool
    n_samples: int
    witnesses: list[WitnessPoint] = field(default_factory=list)
    three_point: ThreePointResult | None = None
    gronwall: list[GronwallResult] = field(default_factory=list)


@dataclass
class WitnessReport:
    energy: float
    rows: list[WitnessRow] = field(default_factory=list)
    incomplete: bool = False
    note: str = ""
    D: float = SQUARED_NORM_FLOOR

    @property
    def m0(self) -> int | None:
        """Smallest passing order in the computed range."""
        for r in self.rows:
            if r.passed:
                return r.m
        return None

    @property
    def witness_sequence(self) -> list[WitnessPoint]:
        return [w for r in self.rows for w in r.witnesses]


def _grid(q_m: int, density: int, extra) -> list[Fraction]:
    lo, hi = Fraction(-q_m), Fraction(2 * q_m)
    n = 3 * q_m * density
    pts = {lo + Fraction(3 * q_m * k, n) for k in range(n + 1)}
    pts.update(e for e in extra if lo <= e <= hi)
    pts.add(Fraction(0))
    return sorted(pts)


def _rigorous_sup(grid, W1, W2, E, traj1, traj2) -> float:
    # both potentials are constant between consecutive grid points
    best = 0.0
    for i in range(len(grid) - 1):
        s, t = grid[i], grid[i + 1]
        mid = (s + t) / 2
        w1 = float(W1.value(mid)) - E
        w2 = float(W2.value(mid)) - E
        h = float(t - s)
        L = max(1.0, abs(w1), abs(w2))
        d_s = math.hypot(traj1[i].u - traj2[i].u, traj1[i].du - traj2[i].du)
        u2 = math.hypot(traj2[i].u, traj2[i].du)
        bound = math.exp(h * L) * (d_s + h * abs(w1 - w2) * u2)
        best = max(best, bound)
    return best


def mp_propagate_pc(W: LinePotential, E: float, init: SolutionState, x, dps: int = 40) -> tuple[float, float]:
    """Block propagation in multiprecision arithmetic; an independent check of the double kernels."""
    x = to_rational(x)
    edges, vals = W.pieces(to_rational(init.x), x)
    with mpmath.workdps(dps):
        u, du = mpmath.mpf(init.u), mpmath.mpf(init.du)
        Emp = mpmath.mpf(E)
        for (l, r), v in zip(zip(edges[:-1], edges[1:]), vals):
            h = mpmath.mpf((r - l).numerator) / (r - l).denominator
            vv = Fraction(v)
            w = mpmath.mpf(vv.numerator) / vv.denominator - Emp
            if w > 0:
                s = mpmath.sqrt(w)
                ch, sh = mpmath.cosh(s * h), mpmath.sinh(s * h)
                u, du = ch * u + sh / s * du, s * sh * u + ch * du
            elif w < 0:
                k = mpmath.sqrt(-w)
                cs, sn = mpmath.cos(k * h), mpmath.sin(k * h)
                u, du = cs * u + sn / k * du, -k * sn * u + cs * du
            else:
                u, du = u + h * du, du
        return float(u), float(du)


def witness_run(
    q: QuasiPotential,
    E: float,
    m_range,
    sample_density: int = 8,
    init: SolutionState | None = None,
    tol: float = DEFAULT_TOL,
    verify: bool = True,
    audit: bool = True,
) -> WitnessReport:
    """Compare u and u_m on [-q_m, 2q_m] for each m and emit witness points for passing m."""
    E = float(E)
    init = init or SolutionState(Fraction(0), 1.0, 0.0)
    report = WitnessReport(E)
    for m in m_range:
        am = q.approximant(m)
        qm = q.alpha.cf.q[m]
        window = (Fraction(-qm), Fraction(2 * qm))
        est = 3 * qm * sample_density
        if est > GRID_BUDGET:
            report.incomplete = True
            report.note = f"stopped before m = {m}: grid of {est} points exceeds budget {GRID_BUDGET}"
            break
        pc = q.is_piecewise_constant and am.is_piecewise_constant
        try:
            extra = set(q.breakpoints(*window)) | set(am.breakpoints(*window)) if pc else set()
        except ResourceBudgetError as exc:
            report.incomplete = True
            report.note = f"stopped at m = {m}: {exc}"
            break
        grid = _grid(qm, sample_density, extra)
        traj = trajectory(q, E, init, grid, tol)
        traj_m = trajectory(am, E, init, grid, tol)
        diffs = [math.hypot(a.u - b.u, a.du - b.du) for a, b in zip(traj, traj_m)]
        sup_sampled = max(diffs)
        sup_rig = _rigorous_sup(grid, q, am, E, traj, traj_m) if pc else math.nan
        row = WitnessRow(m, qm, sup_sampled, sup_rig, sup_sampled <= THRESHOLD, len(grid))
        index = {g: i for i, g in enumerate(grid)}
        if audit:
            for xw in (Fraction(-qm), Fraction(qm), Fraction(2 * qm)):
                g = gronwall_check(q, am, E, xw, init, tol)
                row.gronwall.append(g)
                if not g.passed:
                    raise InvariantViolation(
                        "Gronwall comparison",
                        f"E={E}, m={m}, x={xw}, lhs={g.lhs}, log_rhs={g.log_rhs}",
                    )
        if row.passed:
            M = monodromy(am, E, period=qm, tol=tol)
            tp = three_point_from_matrix(M, [init.u, init.du])
            row.three_point = tp
            if not tp.holds(WITNESS_SLACK):
                raise InvariantViolation("three-point lower bound", f"E={E}, m={m}, norms={tp.norms}")
            for xw in (Fraction(-qm), Fraction(qm), Fraction(2 * qm)):
                st, st_m = traj[index[xw]], traj_m[index[xw]]
                if st.norm < THRESHOLD:
                    continue
                verified = None
                if verify and pc:
                    vu, vdu = mp_propagate_pc(q, E, init, xw)
                    verified = math.hypot(vu, vdu)
                elif verify:
                    verified = propagate(q, E, init, xw, tol / 100).norm
                if verified is not None and verified < THRESHOLD - WITNESS_SLACK:
                    raise InvariantViolation("witness soundness", f"E={E}, m={m}, x={xw}, recomputed norm {verified}")
                row.witnesses.append(WitnessPoint(xw, st.norm, st_m.norm, verified))
            if not row.witnesses:
                raise InvariantViolation(
                    "witness existence",
                    f"E={E}, m={m}: sup diff {sup_sampled} <= 1/4 but no point of {{-q, q, 2q}} has norm >= 1/4",
                )
        report.rows.append(row)
    return report
