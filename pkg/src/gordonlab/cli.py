"""``gordonlab`` command line.

Exit codes: 0 success, 1 usage / parse / domain error, 2 a guaranteed
invariant failed, 3 a resource budget would be exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction

from .dsl import canonical, parse_potential
from .errors import DSLSyntaxError, GordonLabError, InvariantViolation, ResourceBudgetError
from .exact_arith import PRESETS, Frequency, cf_expand, liouville_certify, preset
from .gordon import gordon_sequence
from .nodecay import witness_run
from .potentials import QuasiPotential, holder_certificate
from .propagator import SolutionState, monodromy, trajectory
from .reporting import (
    CF_COLUMNS,
    GORDON_COLUMNS,
    MONODROMY_COLUMNS,
    WITNESS_COLUMNS,
    fmt_float,
    fmt_rational,
    gordon_json,
    gordon_rows,
    svg_line_plot,
    to_csv,
    to_json,
    witness_json,
    witness_rows,
    write_atomic,
)

__all__ = ["RunConfig", "parse_potential", "build_parser", "run", "main"]

COMMANDS = ("cf", "monodromy", "gordon", "witness", "plot")
EXIT_OK, EXIT_ERROR, EXIT_INVARIANT, EXIT_BUDGET = 0, 1, 2, 3
HOLDER_EPS = (0.2, 0.1, 0.05, 0.02, 0.01)
DET_TOL = 1e-8
CH_TOL = 1e-7


class UsageError(GordonLabError):
    pass


def _rational(text: str, what: str) -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"{what}: cannot read {text!r} as a rational") from None


def parse_alpha(spec: str) -> Frequency:
    """``preset-name`` | ``cf:a1,a2,...`` | ``rational:p/q``."""
    spec = spec.strip()
    if spec in PRESETS:
        return preset(spec)
    if spec.startswith("cf:"):
        try:
            quotients = [int(t) for t in spec[3:].split(",") if t.strip()]
        except ValueError:
            raise UsageError(f"--alpha: bad partial quotient list {spec!r}") from None
        if not quotients:
            raise UsageError("--alpha: empty partial quotient list")
        return Frequency.from_cf(quotients)
    if spec.startswith("rational:"):
        x = _rational(spec[9:], "--alpha")
        if not 0 < x < 1:
            raise UsageError("--alpha: rational must lie in (0, 1)")
        return Frequency.from_rational(x)
    raise UsageError(f"--alpha: expected one of {', '.join(PRESETS)}, cf:..., rational:p/q; got {spec!r}")


def parse_m_range(text: str) -> tuple[int, int]:
    try:
        a, b = text.split("..") if ".." in text else (text, text)
        lo, hi = int(a), int(b)
    except ValueError:
        raise UsageError(f"--m-range: expected a..b, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise UsageError(f"--m-range: need 1 <= a <= b, got {text!r}")
    return lo, hi


def _float_list(text: str, what: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma separated numbers, got {text!r}") from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{what}: need at least one finite value")
    return vals


@dataclass
class RunConfig:
    command: str
    v1: str = "zero"
    v2: str = "step{0:1, 1/2:0}"
    alpha: str = "liouville-default"
    theta: str = "0"
    energies: list = field(default_factory=lambda: [0.5])
    bigC: list = field(default_factory=lambda: [1.0])
    m_range: tuple = (1, 3)
    tol: float = 1e-10
    out: str = "-"
    format: str = "csv"
    rational: str | None = None
    B: str = "1"
    density: int = 8
    holder: str | None = None
    expect_liouville: bool = False
    expect_decreasing: bool = False
    kind: str = "gordon"

    def validate(self) -> "RunConfig":
        """Return the canonical form; raises on any malformed field."""
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json", "svg"):
            raise UsageError(f"unknown format {self.format!r}")
        if self.kind not in ("gordon", "profile"):
            raise UsageError(f"unknown plot kind {self.kind!r}")
        if self.tol <= 0 or self.density < 1:
            raise UsageError("--tol and --density must be positive")
        lo, hi = (int(v) for v in self.m_range)
        if lo < 1 or hi < lo:
            raise UsageError(f"bad m range {self.m_range!r}")
        parse_alpha(self.alpha)
        return RunConfig(
            command=self.command,
            v1=canonical(self.v1),
            v2=canonical(self.v2),
            alpha=self.alpha.strip(),
            theta=fmt_rational(_rational(self.theta, "--theta")),
            energies=[float(e) for e in self.energies],
            bigC=[float(c) for c in self.bigC],
            m_range=(lo, hi),
            tol=float(self.tol),
            out=self.out,
            format=self.format,
            rational=None if self.rational is None else fmt_rational(_rational(self.rational, "--rational")),
            B=fmt_rational(_rational(self.B, "--B")),
            density=int(self.density),
            holder=self.holder,
            expect_liouville=bool(self.expect_liouville),
            expect_decreasing=bool(self.expect_decreasing),
            kind=self.kind,
        )

    def to_json(self) -> str:
        d = asdict(self)
        d["m_range"] = list(self.m_range)
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        d = json.loads(text)
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise UsageError(f"unknown config keys: {', '.join(sorted(extra))}")
        if "m_range" in d:
            d["m_range"] = tuple(d["m_range"])
        return cls(**d).validate()

    @property
    def quasi(self) -> QuasiPotential:
        return QuasiPotential(
            parse_potential(self.v1), parse_potential(self.v2), parse_alpha(self.alpha), Fraction(self.theta)
        )

    @property
    def orders(self) -> range:
        return range(self.m_range[0], self.m_range[1] + 1)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage, which would collide with the invariant code
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gordonlab", description="Periodic-approximant experiments for quasiperiodic Schrodinger operators.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "cf": "continued fraction expansion, convergents, Liouville certificate",
        "monodromy": "trace / det of approximant monodromies over an energy grid",
        "gordon": "L1 distances to periodic approximants and log-scaled values",
        "witness": "solution difference and three-point witnesses",
        "plot": "SVG line plots",
    }
    for name in COMMANDS:
        s = sub.add_parser(name, help=helps[name])
        s.add_argument("--config", help="load a RunConfig JSON file (other flags ignored)")
        s.add_argument("--dump-config", action="store_true", help="print the canonical config JSON and exit")
        s.add_argument("--v1", default="zero")
        s.add_argument("--v2", default="step{0:1, 1/2:0}")
        s.add_argument("--alpha", default="liouville-default")
        s.add_argument("--theta", default="0")
        s.add_argument("--energies", default="0.5")
        s.add_argument("--bigC", default="1")
        s.add_argument("--m-range", default="1..3")
        s.add_argument("--tol", type=float, default=1e-10)
        s.add_argument("--out", default="-")
        s.add_argument("--format", choices=("csv", "json", "svg"), default=None)
        if name == "cf":
            s.add_argument("--rational", help="expand p/q instead of --alpha")
            s.add_argument("--B", default="1")
            s.add_argument("--expect-liouville", action="store_true")
        if name == "gordon":
            s.add_argument("--holder", help="'auto' or 'D,delta' to add the oscillation bound column")
            s.add_argument("--expect-decreasing", action="store_true")
        if name in ("witness", "plot"):
            s.add_argument("--density", type=int, default=8, help="samples per unit length")
        if name == "plot":
            s.add_argument("--kind", choices=("gordon", "profile"), default="gordon")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    if ns.config:
        with open(ns.config, encoding="utf-8") as fh:
            return RunConfig.from_json(fh.read())
    fmt = ns.format or ("svg" if ns.command == "plot" else "csv")
    return RunConfig(
        command=ns.command,
        v1=ns.v1,
        v2=ns.v2,
        alpha=ns.alpha,
        theta=ns.theta,
        energies=_float_list(ns.energies, "--energies"),
        bigC=_float_list(ns.bigC, "--bigC"),
        m_range=parse_m_range(ns.m_range),
        tol=ns.tol,
        out=ns.out,
        format=fmt,
        rational=getattr(ns, "rational", None),
        B=getattr(ns, "B", "1"),
        density=getattr(ns, "density", 8),
        holder=getattr(ns, "holder", None),
        expect_liouville=getattr(ns, "expect_liouville", False),
        expect_decreasing=getattr(ns, "expect_decreasing", False),
        kind=getattr(ns, "kind", "gordon"),
    ).validate()


def _emit(cfg: RunConfig, text: str, stdout) -> None:
    if cfg.out == "-":
        stdout.write(text)
    else:
        write_atomic(cfg.out, text)


def _run_cf(cfg: RunConfig) -> tuple[str, str | None]:
    if cfg.rational is not None:
        cf = cf_expand(Fraction(cfg.rational))
        quotients = list(cf.partial_quotients)
        if cfg.format == "json":
            return to_json({"rational": cfg.rational, "cf": [str(a) for a in quotients]}), None
        return json.dumps(quotients) + "\n", None
    freq = parse_alpha(cfg.alpha)
    hi = min(cfg.m_range[1], freq.proxy_order - 1)
    certs = {c.m: c for c in liouville_certify(freq.cf, Fraction(cfg.B), hi)} if hi >= 1 else {}
    rows = []
    for m in cfg.orders:
        if m > freq.proxy_order:
            break
        p, q = freq.pq(m)
        c = certs.get(m)
        rows.append(
            {
                "m": str(m),
                "a_m": str(freq.a(m)),
                "p_m": str(p),
                "q_m": str(q),
                "enclosure": fmt_rational(freq.enclosure(m)),
                "certified": "" if c is None else ("true" if c.holds else "false"),
            }
        )
    failure = None
    if cfg.expect_liouville:
        bad = [r["m"] for r in rows if r["certified"] != "true"]
        if bad:
            failure = (
                f"Liouville bound |alpha - p_m/q_m| <= B m^(-q_m) with B = {cfg.B}",
                f"alpha = {cfg.alpha}, failing m = {', '.join(bad)}",
            )
    if cfg.format == "json":
        return to_json({"alpha": cfg.alpha, "B": cfg.B, "rows": rows}), failure
    return to_csv(rows, CF_COLUMNS), failure


def _run_monodromy(cfg: RunConfig) -> tuple[str, str | None]:
    q = cfg.quasi
    rows, failure = [], None
    for E in cfg.energies:
        for m in cfg.orders:
            am = q.approximant(m)
            M = monodromy(am, E, tol=cfg.tol)
            res = M.cayley_hamilton_residual()
            rows.append(
                {
                    "E": fmt_float(E),
                    "m": str(m),
                    "period": str(am.period),
                    "trace": fmt_float(M.trace),
                    "det": fmt_float(M.det),
                    "ch_residual": fmt_float(res),
                    "m11": fmt_float(M.a),
                    "m12": fmt_float(M.b),
                    "m21": fmt_float(M.c),
                    "m22": fmt_float(M.d),
                }
            )
            scale = max(1.0, abs(M.a), abs(M.b), abs(M.c), abs(M.d)) ** 2
            if failure is None and (abs(M.det - 1) > DET_TOL * scale or res > CH_TOL * scale):
                failure = ("det M = 1 and M^2 - tr(M) M + I = 0", f"E = {E}, m = {m}, det = {M.det!r}, residual = {res!r}")
    if cfg.format == "json":
        return to_json({"monodromy": rows}), failure
    return to_csv(rows, MONODROMY_COLUMNS), failure


def _holder(cfg: RunConfig, q: QuasiPotential):
    if cfg.holder is None:
        return None
    if cfg.holder == "auto":
        fit = holder_certificate(q.v2, HOLDER_EPS)
        if not fit.ok:
            raise UsageError(f"--holder auto: {fit.reason}")
        return fit.D, fit.delta
    try:
        D, delta = (float(t) for t in cfg.holder.split(","))
    except ValueError:
        raise UsageError(f"--holder: expected 'auto' or 'D,delta', got {cfg.holder!r}") from None
    return D, delta


def _gordon_reports(cfg: RunConfig):
    q = cfg.quasi
    holder = _holder(cfg, q)
    return [gordon_sequence(q, C, cfg.orders, holder=holder) for C in cfg.bigC]


def _run_gordon(cfg: RunConfig) -> tuple[str, str | None]:
    reports = _gordon_reports(cfg)
    failure = None
    if cfg.expect_decreasing:
        bad = [r.C for r in reports if not r.decreasing]
        if bad:
            failure = (
                "C q_m + ln I_m strictly decreasing in m",
                f"alpha = {cfg.alpha}, V2 = {cfg.v2}, failing C = {', '.join(map(str, bad))}",
            )
    if cfg.format == "json":
        return to_json(gordon_json(reports)), failure
    return to_csv(gordon_rows(reports), GORDON_COLUMNS), failure


def _witness_reports(cfg: RunConfig):
    q = cfg.quasi
    return [witness_run(q, E, cfg.orders, sample_density=cfg.density, tol=cfg.tol) for E in cfg.energies]


def _run_witness(cfg: RunConfig) -> tuple[str, str | None]:
    reports = _witness_reports(cfg)
    if cfg.format == "json":
        return to_json(witness_json(reports)), None
    return to_csv(witness_rows(reports), WITNESS_COLUMNS), None


def _run_plot(cfg: RunConfig) -> tuple[str, str | None]:
    if cfg.format != "svg":
        raise UsageError("plot only writes svg")
    if cfg.kind == "gordon":
        series = []
        for rep in _gordon_reports(cfg):
            series.append((f"C = {rep.C:g}", [float(r.m) for r in rep.rows], [r.log_scaled for r in rep.rows]))
        return svg_line_plot(series, f"log-scaled Gordon values, alpha = {cfg.alpha}", "m", "C q_m + ln I_m"), None
    q = cfg.quasi
    E = cfg.energies[0]
    m = cfg.m_range[1]
    qm = q.alpha.cf.q[m]
    n = 3 * qm * cfg.density
    if n > 200_000:
        raise ResourceBudgetError(f"profile plot at m = {m} needs {n} samples", order=m)
    xs = [Fraction(-qm) + Fraction(k, cfg.density) for k in range(n + 1)]
    init = SolutionState(Fraction(0), 1.0, 0.0)
    series = []
    for label, W in (("u", q), (f"u_{m}", q.approximant(m))):
        states = trajectory(W, E, init, xs, tol=cfg.tol)
        series.append((label, [float(x) for x in xs], [s.norm for s in states]))
    return svg_line_plot(series, f"solution norm, E = {E:g}, m = {m}", "x", "|(u, u')|"), None


_RUNNERS = {"cf": _run_cf, "monodromy": _run_monodromy, "gordon": _run_gordon, "witness": _run_witness, "plot": _run_plot}


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute a validated config; artifacts are written only after every cell finished."""
    stdout = stdout or sys.stdout
    text, failure = _RUNNERS[cfg.command](cfg)
    _emit(cfg, text, stdout)
    if failure is not None:
        raise InvariantViolation(*failure)
    return EXIT_OK


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    cfg = None
    try:
        ns = build_parser().parse_args(argv)
        cfg = config_from_args(ns)
        if ns.dump_config:
            stdout.write(cfg.to_json() + "\n")
            return EXIT_OK
        return run(cfg, stdout)
    except InvariantViolation as exc:
        stderr.write(f"gordonlab: {exc}\n")
        if cfg is not None:
            stderr.write(f"gordonlab: inputs {cfg.to_json()}\n")
        return EXIT_INVARIANT
    except ResourceBudgetError as exc:
        order = f" (order {exc.order})" if exc.order is not None else ""
        stderr.write(f"gordonlab: resource budget exceeded{order}: {exc}\n")
        return EXIT_BUDGET
    except (DSLSyntaxError, GordonLabError, ValueError, OSError) as exc:
        stderr.write(f"gordonlab: error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
