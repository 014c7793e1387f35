# bornlab/__init__.py - Born-rule property lab
from .assignments import CATALOG, MATRIX_ASSIGNMENTS, Assignment, get_assignment
from .config import VERSION, LabSettings
from .exact import ProbabilityTag, QuadRational, parse_quad, parse_rational
from .exceptions import (
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
from .lab import BornLab, list_catalog, run_scenario, write_report
from .linalg import CVec, Context, HermitianOperator, XReal
from .models import ContinuityResult, Lemma1Record, PropertyMatrix, PropertyVerdict, Report, Witness
from .scenario import ScenarioSpec, load_scenario, parse_scenario

__version__ = VERSION
__all__ = [
    # Facade
    "BornLab",
    "run_scenario",
    "write_report",
    "list_catalog",

    # Exceptions
    "BornLabError",
    "IndeterminateFormError",
    "InvalidDimensionError",
    "InvalidDimsError",
    "InvalidGridError",
    "InvalidOperatorError",
    "InvalidPartitionError",
    "InvalidPathError",
    "InvalidScalingError",
    "InvalidSpecError",
    "InvalidSplitError",
    "InvalidStateError",
    "InvalidTagsError",
    "MissingTagsError",
    "NotApplicableError",
    "NotInContextAlgebraError",
    "ScenarioError",
    "SizeLimitError",
    "TypeMismatchError",
    "UnderdeterminedFitError",
    "UnknownIdentifierError",

    # Linear algebra and exact arithmetic
    "CVec",
    "Context",
    "HermitianOperator",
    "XReal",
    "QuadRational",
    "ProbabilityTag",
    "parse_quad",
    "parse_rational",

    # Assignments
    "Assignment",
    "CATALOG",
    "MATRIX_ASSIGNMENTS",
    "get_assignment",

    # Results
    "PropertyVerdict",
    "PropertyMatrix",
    "Witness",
    "Lemma1Record",
    "ContinuityResult",
    "Report",

    # Configuration and scenarios
    "LabSettings",
    "ScenarioSpec",
    "load_scenario",
    "parse_scenario",
]
