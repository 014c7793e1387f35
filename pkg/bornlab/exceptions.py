# bornlab/exceptions.py - Error hierarchy shared by every module


class BornLabError(Exception):
    """Base exception for bornlab"""
    pass


# ===== LINEAR ALGEBRA =====
class InvalidDimensionError(BornLabError):
    """Dimension must be a positive integer"""
    pass


class InvalidPartitionError(BornLabError):
    """Partition is overlapping, incomplete, or has too many blocks"""
    pass


class TypeMismatchError(BornLabError):
    """Operands are of different kinds (vector vs operator)"""
    pass


class InvalidOperatorError(BornLabError):
    """Operator violates a required predicate (Hermitian, effect, projector)"""
    pass


class NotInContextAlgebraError(BornLabError):
    """Operator is not a subset sum of the context members"""
    pass


class InvalidStateError(BornLabError):
    """State is not normalized or leaves a quantity undefined"""
    pass


class IndeterminateFormError(BornLabError):
    """Extended-real arithmetic produced inf - inf"""
    pass


# ===== ASSIGNMENTS AND TAGS =====
class InvalidTagsError(BornLabError):
    """Probability tags are inconsistent with the context"""
    pass


class MissingTagsError(BornLabError):
    """Assignment consumes probability tags but none were supplied"""
    pass


class NotApplicableError(BornLabError):
    """Assignment is undefined on the requested input"""
    pass


# ===== PROBES AND HARNESSES =====
class InvalidPathError(BornLabError):
    """Continuity path is incompatible with the assignment"""
    pass


class UnderdeterminedFitError(BornLabError):
    """Design matrix rank is below the number of fit parameters"""
    pass


class InvalidSplitError(BornLabError):
    """Branch split sizes are out of range"""
    pass


class InvalidScalingError(BornLabError):
    """Scaled operator leaves the effect cone"""
    pass


class InvalidDimsError(BornLabError):
    """Unitary dimensions do not match the bipartite state"""
    pass


class InvalidSpecError(BornLabError):
    """Run, frequency or mixture specification is invalid"""
    pass


class InvalidGridError(BornLabError):
    """Grid is too short or not strictly increasing"""
    pass


class SizeLimitError(BornLabError):
    """Brute-force expansion exceeds the configured ceiling"""
    pass


# ===== SCENARIOS =====
class UnknownIdentifierError(BornLabError):
    """Name does not resolve against the assignment, property or harness catalogs"""
    pass


class ScenarioError(BornLabError):
    """Scenario file failed to parse or validate"""

    def __init__(self, message: str, line: int = 0, path: str = "<scenario>"):
        self.line = line
        self.path = path
        self.message = message
        location = f"{path}:{line}" if line else path
        super().__init__(f"{location}: {message}")
