# tests/unit/test_exceptions.py - Test exception hierarchy
import pytest

from bornlab.exceptions import (
    BornLabError,
    IndeterminateFormError,
    InvalidDimensionError,
    InvalidDimsError,
    InvalidGridError,
    InvalidOperatorError,
    InvalidPartitionError,
    InvalidPathError,
    InvalidScalingError,
    InvalidSpecError,
    InvalidSplitError,
    InvalidStateError,
    InvalidTagsError,
    MissingTagsError,
    NotApplicableError,
    NotInContextAlgebraError,
    ScenarioError,
    SizeLimitError,
    TypeMismatchError,
    UnderdeterminedFitError,
    UnknownIdentifierError,
)

ALL_ERRORS = [
    IndeterminateFormError,
    InvalidDimensionError,
    InvalidDimsError,
    InvalidGridError,
    InvalidOperatorError,
    InvalidPartitionError,
    InvalidPathError,
    InvalidScalingError,
    InvalidSpecError,
    InvalidSplitError,
    InvalidStateError,
    InvalidTagsError,
    MissingTagsError,
    NotApplicableError,
    NotInContextAlgebraError,
    SizeLimitError,
    TypeMismatchError,
    UnderdeterminedFitError,
    UnknownIdentifierError,
]


@pytest.mark.unit
class TestExceptionHierarchy:
    """Test exception class hierarchy"""

    @pytest.mark.parametrize("error_class", ALL_ERRORS)
    def test_inherits_from_base(self, error_class):
        """Every error derives from BornLabError"""
        assert issubclass(error_class, BornLabError)
        assert issubclass(error_class, Exception)

    def test_base_is_not_value_error(self):
        """BornLabError passes through pydantic validators unwrapped"""
        assert not issubclass(BornLabError, ValueError)

    def test_catch_by_base(self):
        """Specific errors can be caught as BornLabError"""
        with pytest.raises(BornLabError):
            raise InvalidTagsError("tags sum to 0.9")

    def test_message_preserved(self):
        """The message is the string form"""
        error = NotApplicableError("two-slope is defined on Q(sqrt2)")
        assert str(error) == "two-slope is defined on Q(sqrt2)"


@pytest.mark.unit
class TestScenarioError:
    """Test ScenarioError location formatting"""

    def test_with_line(self):
        """path:line: message"""
        error = ScenarioError("unknown assignment 'nope'", line=4, path="run.scn")
        assert str(error) == "run.scn:4: unknown assignment 'nope'"
        assert error.line == 4
        assert error.path == "run.scn"
        assert error.message == "unknown assignment 'nope'"

    def test_without_line(self):
        """Line 0 drops the line number"""
        error = ScenarioError("'seed' is mandatory", path="run.scn")
        assert str(error) == "run.scn: 'seed' is mandatory"
        assert error.line == 0

    def test_default_path(self):
        """Default path placeholder"""
        error = ScenarioError("bad")
        assert error.path == "<scenario>"
        assert isinstance(error, BornLabError)
