"""Exact rational arithmetic, continued fractions and Liouville frequencies.

Rationals are :class:`fractions.Fraction` (canonical, arbitrary precision).
Irrational frequencies enter only through explicit partial-quotient lists and
are carried downstream as a high-order convergent ``p_M / q_M``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import DomainError, RangeError, ResourceBudgetError

BigRational = Fraction

DEFAULT_DIGIT_BUDGET = 10**6
_BUDGET_ENV = "GORDONLAB_DIGIT_BUDGET"


def digit_budget() -> int:
    """Decimal-digit ceiling for generated big integers (env override)."""
    raw = os.environ.get(_BUDGET_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_DIGIT_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise DomainError(f"{_BUDGET_ENV} must be a positive integer, got {raw!r}") from exc
    if value <= 0:
        raise DomainError(f"{_BUDGET_ENV} must be a positive integer, got {raw!r}")
    return value


def to_rational(x) -> Fraction:
    """Coerce ints, Fractions, floats (exactly) and ``"p/q"`` strings."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, float)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"not a rational literal: {x!r}") from exc
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def _decimal_digits(n: int) -> int:
    n = abs(n)
    if n < 10:
        return 1
    return int(n.bit_length() * 0.30102999566398120) + 1


@dataclass(frozen=True)
class ContinuedFraction:
    """Finite expansion ``[0; a_1, ..., a_M]`` with its convergent table.

    ``p[m], q[m]`` follow the recurrences with ``p_0 = 0, p_1 = 1,
    q_0 = 1, q_1 = a_1``; index ``m`` runs over ``0..M``.
    """

    partial_quotients: tuple[int, ...]
    p: tuple[int, ...] = field(init=False, repr=False, compare=False)
    q: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        quotients = tuple(int(a) for a in self.partial_quotients)
        if not quotients:
            raise DomainError("a continued fraction needs at least one partial quotient")
        for i, a in enumerate(quotients, start=1):
            if a < 1:
                raise DomainError(f"partial quotient a_{i} = {a} is not a positive integer")
        p = [0, 1]
        q = [1, quotients[0]]
        for a in quotients[1:]:
            p.append(a * p[-1] + p[-2])
            q.append(a * q[-1] + q[-2])
        object.__setattr__(self, "partial_quotients", quotients)
        object.__setattr__(self, "p", tuple(p))
        object.__setattr__(self, "q", tuple(q))

    def __len__(self) -> int:
        return len(self.partial_quotients)

    @property
    def order(self) -> int:
        return len(self.partial_quotients)

    def a(self, m: int) -> int:
        if not 1 <= m <= self.order:
            raise RangeError(f"a_{m} unavailable: expansion has {self.order} partial quotients")
        return self.partial_quotients[m - 1]

    def convergent(self, m: int) -> Fraction:
        if not 0 <= m <= self.order:
            raise RangeError(f"convergent {m} unavailable: expansion has {self.order} partial quotients")
        return Fraction(self.p[m], self.q[m])

    def value(self) -> Fraction:
        """Exact value of the finite expansion (the last convergent)."""
        return self.convergent(self.order)

    def to_json(self) -> str:
        return json.dumps({"cf": [str(a) for a in self.partial_quotients]})

    @classmethod
    def from_json(cls, text: str) -> "ContinuedFraction":
        data = json.loads(text)
        if "cf" not in data:
            raise DomainError("JSON object has no 'cf' key")
        return cls(tuple(int(a) for a in data["cf"]))


def reconstruct(quotients: Sequence[int]) -> Fraction:
    """Evaluate the nested fraction ``1/(a_1 + 1/(a_2 + ...))`` bottom-up.

    Independent of the convergent recurrence; used as a round-trip oracle.
    """
    if not quotients:
        raise DomainError("empty partial-quotient list")
    value = Fraction(quotients[-1])
    for a in reversed(quotients[:-1]):
        value = a + 1 / value
    return 1 / value


def cf_expand(x) -> ContinuedFraction:
    """Continued-fraction expansion of an exact rational in (0, 1).

    The Euclidean algorithm naturally ends with a last quotient >= 2,
    which is the canonical form.

    >>> cf_expand(Fraction(5, 7)).partial_quotients
    (1, 2, 2)
    """
    x = to_rational(x)
    if not 0 < x < 1:
        raise DomainError(f"cf_expand needs 0 < x < 1, got {x}")
    num, den = x.numerator, x.denominator
    quotients = []
    while num:
        a, r = divmod(den, num)
        quotients.append(a)
        den, num = num, r
    return ContinuedFraction(tuple(quotients))


def convergents(cf: ContinuedFraction, m_max: int) -> list[tuple[int, int]]:
    """``[(p_0, q_0), ..., (p_{m_max}, q_{m_max})]``."""
    if m_max < 0 or m_max > cf.order:
        raise RangeError(f"m_max = {m_max} exceeds the {cf.order} available partial quotients")
    return list(zip(cf.p[: m_max + 1], cf.q[: m_max + 1]))


def determinant_residues(cf: ContinuedFraction) -> list[int]:
    """``p_m q_{m-1} - p_{m-1} q_m - (-1)^(m-1)`` for m = 1..M (all zero when sound)."""
    out = []
    for m in range(1, cf.order + 1):
        det = cf.p[m] * cf.q[m - 1] - cf.p[m - 1] * cf.q[m]
        out.append(det - (-1) ** (m - 1))
    return out


def default_growth_rule(m: int, q_m: int) -> int:
    """``a_{m+1} = max(2, m ** q_m)``."""
    return max(2, m**q_m)


def _check_power_budget(m: int, q_m: int, budget: int) -> None:
    if m <= 1:
        return
    digits = q_m * math.log10(m)
    if digits > budget:
        raise ResourceBudgetError(
            f"a_{m + 1} = {m}^q_{m} would have about {digits:.3g} decimal digits, "
            f"over the budget of {budget}; lower m_max (offending m = {m})",
            order=m,
        )


def build_liouville(
    a1: int,
    growth_rule: Callable[[int, int], int] | None = None,
    m_max: int = 4,
    budget: int | None = None,
) -> ContinuedFraction:
    """Construct ``[0; a_1, ..., a_{m_max}]`` with ``a_{m+1} = rule(m, q_m)``.

    With the default rule ``|alpha - alpha_m| < 1/(q_m q_{m+1}) <= m^(-q_m)``.
    """
    if a1 < 1:
        raise DomainError(f"a_1 must be a positive integer, got {a1}")
    if m_max < 1:
        raise DomainError(f"m_max must be >= 1, got {m_max}")
    budget = digit_budget() if budget is None else budget
    rule = default_growth_rule if growth_rule is None else growth_rule
    quotients = [int(a1)]
    q_prev, q_cur = 1, int(a1)
    for m in range(1, m_max):
        if growth_rule is None:
            _check_power_budget(m, q_cur, budget)
        a_next = int(rule(m, q_cur))
        if a_next < 1:
            raise DomainError(f"growth rule returned a_{m + 1} = {a_next} < 1")
        if _decimal_digits(a_next) > budget:
            raise ResourceBudgetError(
                f"a_{m + 1} exceeds the digit budget of {budget} (offending m = {m})", order=m
            )
        quotients.append(a_next)
        q_prev, q_cur = q_cur, a_next * q_cur + q_prev
        if _decimal_digits(q_cur) > budget:
            raise ResourceBudgetError(
                f"q_{m + 1} exceeds the digit budget of {budget} (offending m = {m})", order=m
            )
    return ContinuedFraction(tuple(quotients))


@dataclass(frozen=True)
class LiouvilleCertificate:
    m: int
    q_m: int
    enclosure: Fraction  # 1/(q_m q_{m+1}), strict upper bound on |alpha - alpha_m|
    B: Fraction
    holds: bool


def _power_le(base: int, exponent: int, bound: Fraction) -> bool:
    """Exact ``base**exponent <= bound`` that avoids huge powers when logs decide."""
    if bound <= 0:
        return False
    lhs_log = exponent * math.log(base) if base > 1 else 0.0
    rhs_log = math.log(bound.numerator) - math.log(bound.denominator)
    if lhs_log > rhs_log + 1.0:
        return False
    if lhs_log < rhs_log - 1.0:
        return True
    return base**exponent * bound.denominator <= bound.numerator


def liouville_certify(cf: ContinuedFraction, B, m_max: int) -> list[LiouvilleCertificate]:
    """Check ``1/(q_m q_{m+1}) <= B m^(-q_m)`` exactly for m = 1..m_max.

    This is a sufficient condition for ``|alpha - alpha_m| <= B m^(-q_m)``.
    """
    B = to_rational(B)
    if B <= 0:
        raise DomainError(f"B must be positive, got {B}")
    if m_max + 1 > cf.order:
        raise RangeError(
            f"certifying up to m = {m_max} needs {m_max + 1} partial quotients, have {cf.order}"
        )
    out = []
    for m in range(1, m_max + 1):
        qm, qn = cf.q[m], cf.q[m + 1]
        # 1/(qm qn) <= B / m^qm  <=>  m^qm <= B qm qn
        holds = _power_le(m, qm, B * qm * qn)
        out.append(LiouvilleCertificate(m, qm, Fraction(1, qm * qn), B, holds))
    return out


@dataclass(frozen=True)
class Frequency:
    """A frequency alpha carried exactly as the convergent of order ``proxy_order``.

    When built from an exact rational, ``proxy_order`` is the full length of
    its expansion and the proxy *is* alpha.
    """

    cf: ContinuedFraction
    proxy_order: int
    exact: bool = False
    label: str = ""

    def __post_init__(self):
        if not 1 <= self.proxy_order <= self.cf.order:
            raise DomainError(
                f"proxy order {self.proxy_order} outside 1..{self.cf.order}"
            )

    @classmethod
    def from_rational(cls, x, label: str = "") -> "Frequency":
        cf = cf_expand(x)
        return cls(cf, cf.order, exact=True, label=label or f"rational:{to_rational(x)}")

    @classmethod
    def from_cf(cls, quotients: Iterable[int], proxy_order: int | None = None, label: str = "") -> "Frequency":
        cf = ContinuedFraction(tuple(quotients))
        M = cf.order if proxy_order is None else proxy_order
        tag = label or "cf:" + ",".join(str(a) for a in cf.partial_quotients[:M])
        return cls(cf, M, exact=False, label=tag)

    @property
    def value(self) -> Fraction:
        return Fraction(self.cf.p[self.proxy_order], self.cf.q[self.proxy_order])

    def __float__(self) -> float:
        return float(self.value)

    @property
    def max_order(self) -> int:
        """Largest m for which alpha_m is a genuine (distinct-or-equal) convergent."""
        return self.proxy_order

    def convergent(self, m: int) -> Fraction:
        if not 0 <= m <= self.proxy_order:
            raise RangeError(f"order {m} outside 0..{self.proxy_order} for this frequency")
        return self.cf.convergent(m)

    def pq(self, m: int) -> tuple[int, int]:
        self.convergent(m)
        return self.cf.p[m], self.cf.q[m]

    def a(self, m: int) -> int:
        return self.cf.a(m)

    def enclosure(self, m: int) -> Fraction:
        """Upper bound on ``|alpha - alpha_m|``; zero when the proxy equals alpha_m."""
        if m >= self.proxy_order:
            self.convergent(m)
            return Fraction(0)
        return Fraction(1, self.cf.q[m] * self.cf.q[m + 1])

    def error(self, m: int) -> Fraction:
        """Exact ``|alpha_M - alpha_m|`` for the stored proxy."""
        return abs(self.value - self.convergent(m))


PRESETS = ("liouville-default", "golden")


def preset(name: str) -> Frequency:
    """Named demo frequencies.

    ``liouville-default``: default growth rule from a_1 = 1, four quotients
    ``[1, 2, 8, 3**25]``; the next quotient ``4**q_4`` has about 1.3e13 digits.
    ``golden``: forty ones.
    """
    if name == "liouville-default":
        cf = build_liouville(1, m_max=4)
        return Frequency(cf, cf.order, label=name)
    if name == "golden":
        return Frequency(ContinuedFraction((1,) * 40), 40, label=name)
    raise DomainError(f"unknown frequency preset {name!r}; known: {', '.join(PRESETS)}")


def rational_to_json(x) -> str:
    x = to_rational(x)
    return json.dumps({"rational": [str(x.numerator), str(x.denominator)]})


def rational_from_json(text: str) -> Fraction:
    data = json.loads(text)
    if "rational" not in data:
        raise DomainError("JSON object has no 'rational' key")
    p, q = data["rational"]
    return Fraction(int(p), int(q))


def log_abs(x) -> float:
    """Natural log of ``|x|`` for Fractions far outside double range."""
    x = to_rational(x)
    if x == 0:
        return -math.inf
    return math.log(abs(x.numerator)) - math.log(x.denominator)
