# bornlab/exact.py - Exact arithmetic over Q and Q(sqrt 2)
from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import total_ordering
from typing import Iterator, Literal, Optional, Tuple, Union

from .exceptions import InvalidTagsError, ScenarioError

Rational = Fraction
RationalLike = Union[Fraction, int, str]

_REAL_DIGITS = 40


def as_rational(x: RationalLike) -> Fraction:
    """Exact rational from an int, Fraction or "p/q" literal."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


@total_ordering
@dataclass(frozen=True)
class QuadRational:
    """Exact element a + b*sqrt(2) of Q(sqrt 2)."""

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", as_rational(self.a))
        object.__setattr__(self, "b", as_rational(self.b))

    @classmethod
    def of(cls, x: Union["QuadRational", RationalLike]) -> "QuadRational":
        if isinstance(x, QuadRational):
            return x
        return cls(as_rational(x), Fraction(0))

    @classmethod
    def sqrt2(cls) -> "QuadRational":
        return cls(Fraction(0), Fraction(1))

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def sign(self) -> int:
        """Exact sign of a + b*sqrt(2)."""
        sa, sb = _sign(self.a), _sign(self.b)
        if sa == 0 or sb == 0 or sa == sb:
            return sa or sb
        # opposite signs: compare a^2 with 2 b^2
        if self.a * self.a > 2 * self.b * self.b:
            return sa
        return sb

    def conjugate(self) -> "QuadRational":
        return QuadRational(self.a, -self.b)

    def norm(self) -> Fraction:
        """Field norm a^2 - 2 b^2."""
        return self.a * self.a - 2 * self.b * self.b

    def __add__(self, other: Union["QuadRational", RationalLike]) -> "QuadRational":
        o = QuadRational.of(other)
        return QuadRational(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self) -> "QuadRational":
        return QuadRational(-self.a, -self.b)

    def __sub__(self, other: Union["QuadRational", RationalLike]) -> "QuadRational":
        return self + (-QuadRational.of(other))

    def __rsub__(self, other: Union["QuadRational", RationalLike]) -> "QuadRational":
        return QuadRational.of(other) - self

    def __mul__(self, other: Union["QuadRational", RationalLike]) -> "QuadRational":
        o = QuadRational.of(other)
        return QuadRational(self.a * o.a + 2 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def scale(self, q: RationalLike) -> "QuadRational":
        q = as_rational(q)
        return QuadRational(self.a * q, self.b * q)

    def inverse(self) -> "QuadRational":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("zero has no inverse in Q(sqrt 2)")
        c = self.conjugate()
        return QuadRational(c.a / n, c.b / n)

    def __truediv__(self, other: Union["QuadRational", RationalLike]) -> "QuadRational":
        return self * QuadRational.of(other).inverse()

    def __rtruediv__(self, other: Union["QuadRational", RationalLike]) -> "QuadRational":
        return QuadRational.of(other) * self.inverse()

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        if isinstance(other, QuadRational):
            return self.a == other.a and self.b == other.b
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.a, self.b))

    def __lt__(self, other: Union["QuadRational", RationalLike]) -> bool:
        return (self - QuadRational.of(other)).sign() < 0

    def __float__(self) -> float:
        return quad_to_real(self)

    def __str__(self) -> str:
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}*sqrt2"
        op = "+" if self.b > 0 else "-"
        return f"{self.a} {op} {abs(self.b)}*sqrt2"

    def __repr__(self) -> str:
        return f"QuadRational({self.a!s}, {self.b!s})"


def quad_ops(
    x: QuadRational,
    y: Union[QuadRational, RationalLike],
    op: Literal["add", "sub", "scale"],
) -> QuadRational:
    """Exact field arithmetic; for op="scale" y is the rational coefficient."""
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "scale":
        if isinstance(y, QuadRational):
            if not y.is_rational:
                raise TypeError("scale coefficient must be rational")
            y = y.a
        return x.scale(y)
    raise ValueError(f"unknown quad op {op!r}")


def _to_decimal(x: Fraction) -> Decimal:
    return Decimal(x.numerator) / Decimal(x.denominator)


def quad_to_real(x: QuadRational) -> float:
    """
    Float of a + b*sqrt(2) to full relative precision.

    When a and b have opposite signs the value is taken as norm / conjugate,
    so a close rational approximation of b*sqrt(2) does not cancel away.
    """
    with localcontext() as ctx:
        ctx.prec = _REAL_DIGITS
        root2 = Decimal(2).sqrt()
        if _sign(x.a) * _sign(x.b) < 0:
            return float(_to_decimal(x.norm()) / (_to_decimal(x.a) - _to_decimal(x.b) * root2))
        return float(_to_decimal(x.a) + _to_decimal(x.b) * root2)


def sqrt2_convergents() -> Iterator[Fraction]:
    """Continued-fraction convergents 1, 3/2, 7/5, 17/12, ... of sqrt(2)."""
    p0, q0, p1, q1 = 1, 0, 1, 1
    while True:
        yield Fraction(p1, q1)
        p0, q0, p1, q1 = p1, q1, 2 * p1 + p0, 2 * q1 + q0


def sqrt2_approximant(within: float) -> Fraction:
    """First convergent p/q with |p/q - sqrt 2| < within."""
    for c in sqrt2_convergents():
        if abs(quad_to_real(QuadRational(c, -1))) < within:
            return c
    raise AssertionError("unreachable")  # pragma: no cover


# ===== PROBABILITY TAGS =====
@dataclass(frozen=True)
class ProbabilityTag:
    """Exact squared amplitude: rational, or an irrational element of Q(sqrt 2)."""

    value: QuadRational

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", QuadRational.of(self.value))

    @classmethod
    def rational(cls, q: RationalLike) -> "ProbabilityTag":
        return cls(QuadRational.of(as_rational(q)))

    @classmethod
    def irrational(cls, x: QuadRational) -> "ProbabilityTag":
        if x.b == 0:
            raise InvalidTagsError(f"irrational tag needs a non-zero sqrt2 part, got {x}")
        return cls(x)

    @property
    def kind(self) -> str:
        return "rational" if self.value.is_rational else "irrational"

    @property
    def is_rational(self) -> bool:
        return self.value.is_rational

    def exact(self) -> Optional[Fraction]:
        return self.value.a if self.value.is_rational else None

    def real(self) -> float:
        return quad_to_real(self.value)

    def __str__(self) -> str:
        return str(self.value)


# ===== LITERAL SYNTAX =====
_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")
_SQRT2_TERM_RE = re.compile(r"^\s*([+-]?)\s*(?:(\d+)\s*(?:/\s*(\d+))?\s*\*\s*)?sqrt2\s*$")


def parse_rational(text: str) -> Fraction:
    """Parse "p/q", "p" or a decimal literal such as "0.25" or "1e-6" exactly."""
    m = _RATIONAL_RE.match(text)
    if not m:
        try:
            return Fraction(text.strip())
        except (ValueError, ZeroDivisionError):
            raise ScenarioError(f"not a rational literal: {text!r}") from None
    num, den = m.group(1), m.group(2)
    if den is not None and int(den) == 0:
        raise ScenarioError(f"zero denominator in {text!r}")
    return Fraction(int(num), int(den) if den else 1)


def _split_terms(text: str) -> Tuple[str, ...]:
    # split at +/- that start a new term (not the sign at position 0)
    parts = re.split(r"(?<=[^\s+\-*/eE])\s*(?=[+-])", text.strip())
    return tuple(p for p in parts if p.strip())


def parse_quad(text: str) -> QuadRational:
    """Parse "p/q + r/s*sqrt2", "r/s*sqrt2", "sqrt2" or a plain rational."""
    a, b = Fraction(0), Fraction(0)
    for term in _split_terms(text):
        t = term.replace(" ", "")
        if "sqrt2" in t:
            m = _SQRT2_TERM_RE.match(t)
            if not m:
                raise ScenarioError(f"not a Q(sqrt2) literal: {text!r}")
            sign = -1 if m.group(1) == "-" else 1
            num = int(m.group(2)) if m.group(2) else 1
            den = int(m.group(3)) if m.group(3) else 1
            if den == 0:
                raise ScenarioError(f"zero denominator in {text!r}")
            b += sign * Fraction(num, den)
        else:
            a += parse_rational(t.lstrip("+"))
    return QuadRational(a, b)


def parse_tag(text: str) -> ProbabilityTag:
    x = parse_quad(text)
    return ProbabilityTag(x)
