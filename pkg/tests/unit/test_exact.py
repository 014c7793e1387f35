# tests/unit/test_exact.py - Test exact arithmetic over Q and Q(sqrt2)
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bornlab.exact import (
    ProbabilityTag,
    QuadRational,
    as_rational,
    parse_quad,
    parse_rational,
    quad_ops,
    quad_to_real,
    sqrt2_approximant,
    sqrt2_convergents,
)
from bornlab.exceptions import InvalidTagsError, ScenarioError

rationals = st.fractions(min_value=-100, max_value=100, max_denominator=50)
quads = st.builds(QuadRational, rationals, rationals)


@pytest.mark.unit
class TestQuadRational:
    """Test QuadRational field arithmetic"""

    def test_conjugate_product(self):
        """(1 + sqrt2)(1 - sqrt2) = -1"""
        x = QuadRational(1, 1)
        assert x * x.conjugate() == -1
        assert x.norm() == Fraction(-1)

    def test_sign_of_mixed_terms(self):
        """Sign is exact when a and b have opposite signs"""
        assert QuadRational(Fraction(-11, 12), 1).sign() == 1
        assert QuadRational(Fraction(3, 2), -1).sign() == 1
        assert QuadRational(Fraction(7, 5), -1).sign() == -1
        assert QuadRational(0, 0).sign() == 0

    def test_ordering(self):
        """7/5 < sqrt2 < 3/2"""
        assert QuadRational(Fraction(7, 5)) < QuadRational.sqrt2() < QuadRational(Fraction(3, 2))

    def test_zero_inverse(self):
        """Zero has no inverse"""
        with pytest.raises(ZeroDivisionError):
            QuadRational(0).inverse()

    def test_float_value(self):
        """-11/12 + sqrt2 lies between 0.497 and 0.498"""
        x = QuadRational(Fraction(-11, 12), 1)
        assert float(x) == pytest.approx(math.sqrt(2) - 11 / 12, abs=1e-15)
        assert 0.497 < float(x) < 0.498

    def test_str(self):
        """Readable forms"""
        assert str(QuadRational(Fraction(1, 3))) == "1/3"
        assert str(QuadRational(0, Fraction(1, 2))) == "1/2*sqrt2"
        assert str(QuadRational(3, -2)) == "3 - 2*sqrt2"

    def test_equality_with_rationals(self):
        """Rational elements compare equal to ints and Fractions"""
        assert QuadRational(Fraction(1, 2)) == Fraction(1, 2)
        assert QuadRational(1, 1) != 1
        assert hash(QuadRational(2)) == hash(QuadRational(Fraction(4, 2)))

    def test_quad_ops(self):
        """add, sub and rational scaling"""
        x, y = QuadRational(1, 2), QuadRational(3, -1)
        assert quad_ops(x, y, "add") == QuadRational(4, 1)
        assert quad_ops(x, y, "sub") == QuadRational(-2, 3)
        assert quad_ops(x, Fraction(1, 2), "scale") == QuadRational(Fraction(1, 2), 1)
        with pytest.raises(TypeError):
            quad_ops(x, QuadRational.sqrt2(), "scale")

    def test_as_rational_rejects_float(self):
        """Floats are never silently converted"""
        with pytest.raises(TypeError):
            as_rational(0.5)
        assert as_rational("3/7") == Fraction(3, 7)

    @given(quads, quads)
    def test_addition_commutes(self, x, y):
        """x + y = y + x"""
        assert x + y == y + x

    @given(quads, quads, quads)
    def test_distributive(self, x, y, z):
        """x (y + z) = xy + xz"""
        assert x * (y + z) == x * y + x * z

    @given(quads)
    def test_inverse(self, x):
        """x * x^-1 = 1 for non-zero x"""
        if x.norm() == 0:
            return
        assert x * x.inverse() == 1

    @given(quads)
    def test_sign_agrees_with_float(self, x):
        """Exact sign matches the float sign away from zero"""
        value = quad_to_real(x)
        if abs(value) > 1e-9:
            assert x.sign() == (1 if value > 0 else -1)


@pytest.mark.unit
class TestConvergents:
    """Test sqrt2 convergents"""

    def test_first_terms(self):
        """1, 3/2, 7/5, 17/12"""
        gen = sqrt2_convergents()
        assert [next(gen) for _ in range(4)] == [1, Fraction(3, 2), Fraction(7, 5), Fraction(17, 12)]

    def test_approximant(self):
        """First convergent within 1e-6 of sqrt2"""
        assert sqrt2_approximant(1e-6) == Fraction(1393, 985)

    @pytest.mark.parametrize("index", [10, 30, 60, 120])
    def test_deep_convergent_gap(self, index):
        """p - q sqrt2 keeps its sign and size when p/q is far past 40 digits"""
        gen = sqrt2_convergents()
        c = [next(gen) for _ in range(index + 1)][-1]
        p, q = c.numerator, c.denominator
        gap = QuadRational(p, -q)
        expected = (p * p - 2 * q * q) / (p + q * math.sqrt(2))
        assert quad_to_real(gap) == pytest.approx(expected, rel=1e-12)
        assert (quad_to_real(gap) > 0) == (gap.sign() > 0)
        assert quad_to_real(QuadRational(-p, q)) == pytest.approx(-expected, rel=1e-12)


@pytest.mark.unit
class TestProbabilityTag:
    """Test ProbabilityTag kinds"""

    def test_rational(self):
        """Rational tags keep their exact value"""
        tag = ProbabilityTag.rational("1/3")
        assert tag.kind == "rational"
        assert tag.exact() == Fraction(1, 3)
        assert tag.real() == pytest.approx(1 / 3)

    def test_irrational(self):
        """Irrational tags have no rational value"""
        tag = ProbabilityTag.irrational(QuadRational(Fraction(-11, 12), 1))
        assert tag.kind == "irrational"
        assert tag.exact() is None

    def test_irrational_requires_sqrt2_part(self):
        """A rational cannot be tagged irrational"""
        with pytest.raises(InvalidTagsError):
            ProbabilityTag.irrational(QuadRational(Fraction(1, 2)))


@pytest.mark.unit
class TestLiterals:
    """Test literal parsing"""

    def test_rational_forms(self):
        """p/q, integers and decimals parse exactly"""
        assert parse_rational("3/7") == Fraction(3, 7)
        assert parse_rational(" -2 ") == Fraction(-2)
        assert parse_rational("0.25") == Fraction(1, 4)
        assert parse_rational("1e-6") == Fraction(1, 1000000)

    def test_rational_errors(self):
        """Zero denominators and junk raise ScenarioError"""
        with pytest.raises(ScenarioError):
            parse_rational("3/0")
        with pytest.raises(ScenarioError):
            parse_rational("half")

    def test_quad_forms(self):
        """Sums with a sqrt2 term"""
        assert parse_quad("-11/12 + sqrt2") == QuadRational(Fraction(-11, 12), 1)
        assert parse_quad("1/2*sqrt2") == QuadRational(0, Fraction(1, 2))
        assert parse_quad("3 - 2*sqrt2") == QuadRational(3, -2)
        assert parse_quad("5/12") == QuadRational(Fraction(5, 12))

    def test_quad_error(self):
        """Malformed sqrt2 term"""
        with pytest.raises(ScenarioError):
            parse_quad("2^sqrt2")
