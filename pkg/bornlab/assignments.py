# bornlab/assignments.py - Catalog of measurement-assignment functions
import logging
import math
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Union

import numpy as np

from .exact import ProbabilityTag, QuadRational, RationalLike, as_rational, quad_to_real
from .exceptions import (
    InvalidDimensionError,
    InvalidOperatorError,
    InvalidSpecError,
    InvalidStateError,
    InvalidTagsError,
    MissingTagsError,
    NotApplicableError,
    UnknownIdentifierError,
)
from .linalg import (
    CVec,
    Context,
    HermitianOperator,
    State,
    XReal,
    as_density,
    match_subset,
    require_effect,
    xsum,
)

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
TAG_SUM_TOL = 1e-12
EQUATOR_BAND = 1e-12

ExactValue = Union[Fraction, QuadRational]


# ===== SPEC-LEVEL EVALUATORS =====
def born_eval(state: State, op: HermitianOperator) -> float:
    """Tr[rho A] for a PureState or DensityMatrix and an effect A."""
    require_effect(op)
    rho = as_density(state)
    if rho.shape != op.entries.shape:
        raise InvalidDimensionError(f"state dim {rho.shape[0]} does not match operator dim {op.dim}")
    value = complex(np.einsum("ij,ji->", rho, op.entries))
    # imaginary residue is rounding noise on Hermitian inputs
    return float(value.real)


def trace_squared_eval(op: HermitianOperator, d: int) -> float:
    """(Tr[A]/d)^2"""
    require_effect(op)
    if op.dim != d:
        raise InvalidDimensionError(f"operator dim {op.dim} does not match d={d}")
    return (op.trace() / d) ** 2


def equal_rule_fraction(op: HermitianOperator, ctx: Context) -> Fraction:
    if not ctx.complete:
        raise InvalidOperatorError("the Equal rule needs a complete context")
    return Fraction(len(match_subset(op, ctx)), len(ctx))


def equal_rule_eval(op: HermitianOperator, ctx: Context) -> float:
    """k/N where op is the sum of k of the N context members."""
    return float(equal_rule_fraction(op, ctx))


def quartic_weights(state: State, ctx: Context) -> List[float]:
    """w_i = q_i^2 / sum_j q_j^2 with q_i = Tr[rho A_i]."""
    rho = as_density(state)
    q = np.array([np.real(np.einsum("ij,ji->", rho, m.entries)) for m in ctx.members])
    denom = float(np.sum(q * q))
    if denom <= 0.0:
        raise InvalidStateError("quartic weights undefined: state is orthogonal to every member")
    return [float(v * v / denom) for v in q]


def deutsch_quartic_eval(state: CVec, i: int, basis: Context) -> float:
    """|<psi|x_i>|^4 / sum_j |<psi|x_j>|^4 over a d=2 rank-1 basis."""
    if basis.dim != 2 or len(basis) != 2:
        raise InvalidDimensionError("the quartic counterexample is defined for d=2 bases only")
    if not (basis.complete and basis.projective and all(m.rank() == 1 for m in basis.members)):
        raise InvalidOperatorError("basis must be a complete rank-1 projective context")
    _check_index(i, len(basis))
    return quartic_weights(state, basis)[i]


def _check_index(i: int, n: int) -> None:
    if not 0 <= i < n:
        raise InvalidSpecError(f"index {i} out of range for {n} entries")


def check_tags(tags: Sequence[ProbabilityTag]) -> None:
    total = math.fsum(t.real() for t in tags)
    if abs(total - 1.0) > TAG_SUM_TOL:
        raise InvalidTagsError(f"probability tags sum to {total!r}, not 1")


def patch_value(tag: ProbabilityTag) -> QuadRational:
    """Born value on rational tags, sqrt 2 on irrational ones."""
    return tag.value if tag.is_rational else QuadRational.sqrt2()


def zurek_patch_eval(tags: Sequence[ProbabilityTag], i: int) -> float:
    check_tags(tags)
    _check_index(i, len(tags))
    return quad_to_real(patch_value(tags[i]))


def bloch_hemisphere_eval(x: CVec) -> float:
    """1 on the northern hemisphere, 0 on the southern, 1/2 on the equator."""
    if x.dim != 2:
        raise InvalidDimensionError("the hemisphere function lives in d=2")
    z = float(abs(x.entries[0]) ** 2 - abs(x.entries[1]) ** 2)
    return _hemisphere(z)


def _hemisphere(z: float) -> float:
    if z > EQUATOR_BAND:
        return 1.0
    if z < -EQUATOR_BAND:
        return 0.0
    return 0.5


def two_slope_eval(x: QuadRational, c1: RationalLike = 1, c2: RationalLike = 10000) -> QuadRational:
    """Additive f(a + b sqrt2) = c1 a + c2 b sqrt2."""
    c1, c2 = as_rational(c1), as_rational(c2)
    return QuadRational(c1 * x.a, c2 * x.b)


# ===== ASSIGNMENT INTERFACE =====
class Assignment:
    """
    Named evaluator mu(operator, context, state, tags) -> extended real.

    Subclasses declare which inputs they consume; context-free assignments
    ignore the context argument entirely.
    """

    name: str = ""
    consumes: FrozenSet[str] = frozenset({"operator"})
    dims: Optional[FrozenSet[int]] = None
    domain: str = "operator"
    effect_domain: bool = True
    anchor: str = ""

    @property
    def contextual(self) -> bool:
        return "context" in self.consumes

    @property
    def uses_state(self) -> bool:
        return "state" in self.consumes

    @property
    def uses_tags(self) -> bool:
        return "tags" in self.consumes

    def supports_dim(self, d: int) -> bool:
        return self.dims is None or d in self.dims

    def evaluate(
        self,
        op: HermitianOperator,
        ctx: Context,
        state: Optional[State] = None,
        tags: Optional[Sequence[ProbabilityTag]] = None,
    ) -> XReal:
        raise NotImplementedError

    def evaluate_exact(
        self,
        op: HermitianOperator,
        ctx: Context,
        state: Optional[State] = None,
        tags: Optional[Sequence[ProbabilityTag]] = None,
    ) -> Optional[ExactValue]:
        """Exact value where the assignment is exact on its domain, else None."""
        return None

    def member_values(
        self,
        ctx: Context,
        state: Optional[State] = None,
        tags: Optional[Sequence[ProbabilityTag]] = None,
    ) -> List[XReal]:
        return [self.evaluate(m, ctx, state, tags) for m in ctx.members]

    def _require_state(self, state: Optional[State]) -> State:
        if state is None:
            raise InvalidStateError(f"assignment '{self.name}' needs a state")
        return state

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r})"


class ContextualAssignment(Assignment):
    """Assigns per-member values and extends them to subset sums by additivity."""

    def evaluate(self, op, ctx, state=None, tags=None) -> XReal:
        subset = match_subset(op, ctx)
        values = self.member_values(ctx, state, tags)
        return xsum([values[i] for i in subset])

    def evaluate_exact(self, op, ctx, state=None, tags=None) -> Optional[ExactValue]:
        exact = self.member_values_exact(ctx, state, tags)
        if exact is None:
            return None
        subset = match_subset(op, ctx)
        total: ExactValue = Fraction(0)
        for i in subset:
            total = exact[i] + total
        return total

    def member_values_exact(self, ctx, state=None, tags=None) -> Optional[List[ExactValue]]:
        return None


# ===== CATALOG =====
class BornAssignment(Assignment):
    name = "born"
    consumes = frozenset({"operator", "state"})
    anchor = "Born rule p(A) = Tr[rho A]"

    def evaluate(self, op, ctx, state=None, tags=None) -> XReal:
        return XReal(value=born_eval(self._require_state(state), op))


class TraceSquaredAssignment(Assignment):
    name = "trace-squared"
    consumes = frozenset({"operator"})
    anchor = "mu(A) = (Tr[A]/d)^2, normalized but not strongly normalized"

    def evaluate(self, op, ctx, state=None, tags=None) -> XReal:
        return XReal(value=trace_squared_eval(op, op.dim))


class EqualRuleAssignment(ContextualAssignment):
    name = "equal-rule"
    consumes = frozenset({"operator", "context"})
    anchor = "Equal rule: 1/N per member of an N-member context"

    def member_values(self, ctx, state=None, tags=None) -> List[XReal]:
        return [XReal(value=1.0 / len(ctx))] * len(ctx)

    def member_values_exact(self, ctx, state=None, tags=None) -> Optional[List[ExactValue]]:
        return [Fraction(1, len(ctx))] * len(ctx)

    def evaluate(self, op, ctx, state=None, tags=None) -> XReal:
        return XReal(value=equal_rule_eval(op, ctx))


class DeutschQuarticAssignment(ContextualAssignment):
    name = "deutsch-quartic"
    consumes = frozenset({"operator", "context", "state"})
    anchor = "quartic weights |<psi|x_i>|^4 / sum_j |<psi|x_j>|^4"

    def member_values(self, ctx, state=None, tags=None) -> List[XReal]:
        return [XReal(value=w) for w in quartic_weights(self._require_state(state), ctx)]


class ZurekPatchAssignment(ContextualAssignment):
    name = "zurek-patch"
    consumes = frozenset({"operator", "context", "tags"})
    anchor = "Born on rational squared amplitudes, sqrt 2 on irrational ones"

    def _checked(self, ctx: Context, tags: Optional[Sequence[ProbabilityTag]]) -> Sequence[ProbabilityTag]:
        if tags is None:
            raise MissingTagsError(f"assignment '{self.name}' needs probability tags")
        if len(tags) != len(ctx):
            raise InvalidTagsError(f"{len(tags)} tags for a {len(ctx)}-member context")
        check_tags(tags)
        return tags

    def member_values(self, ctx, state=None, tags=None) -> List[XReal]:
        return [XReal(value=quad_to_real(patch_value(t))) for t in self._checked(ctx, tags)]

    def member_values_exact(self, ctx, state=None, tags=None) -> Optional[List[ExactValue]]:
        values: List[ExactValue] = []
        for t in self._checked(ctx, tags):
            v = patch_value(t)
            values.append(v.a if v.is_rational else v)
        return values


class BlochHemisphereAssignment(Assignment):
    name = "bloch-hemisphere"
    consumes = frozenset({"operator"})
    dims = frozenset({2})
    effect_domain = False
    anchor = "d=2 step frame function, weight 1, not regular"

    def evaluate(self, op, ctx, state=None, tags=None) -> XReal:
        if op.dim != 2:
            raise NotApplicableError("the hemisphere function is defined in d=2 only")
        if not op.is_projector():
            raise NotApplicableError("the hemisphere function is defined on projectors only")
        r = op.rank()
        if r == 0:
            return XReal(value=0.0)
        if r == 2:
            return XReal(value=1.0)
        z = float(np.real(op.entries[0, 0] - op.entries[1, 1]))
        return XReal(value=_hemisphere(z))

    def evaluate_exact(self, op, ctx, state=None, tags=None) -> Optional[ExactValue]:
        return Fraction(self.evaluate(op, ctx).value).limit_denominator(2)


class TwoSlopeAssignment(Assignment):
    """Discontinuous additive function on Q(sqrt 2); not defined on operators."""

    name = "two-slope"
    consumes = frozenset()
    domain = "quad"
    effect_domain = False
    anchor = "f(a + b sqrt2) = c1 a + c2 b sqrt2, additive and discontinuous"

    def __init__(self, c1: RationalLike = 1, c2: RationalLike = 10000):
        self.c1 = as_rational(c1)
        self.c2 = as_rational(c2)

    def value(self, x: QuadRational) -> QuadRational:
        return two_slope_eval(x, self.c1, self.c2)

    def real_value(self, x: QuadRational) -> float:
        return quad_to_real(self.value(x))

    def evaluate(self, op, ctx, state=None, tags=None) -> XReal:
        raise NotApplicableError("two-slope is defined on Q(sqrt2), not on operators")


CATALOG: Dict[str, Assignment] = {
    a.name: a
    for a in (
        BornAssignment(),
        TraceSquaredAssignment(),
        EqualRuleAssignment(),
        DeutschQuarticAssignment(),
        ZurekPatchAssignment(),
        BlochHemisphereAssignment(),
        TwoSlopeAssignment(),
    )
}

# the assignments x properties matrix covers the operator-valued assignments
MATRIX_ASSIGNMENTS = (
    "born",
    "trace-squared",
    "equal-rule",
    "deutsch-quartic",
    "zurek-patch",
    "bloch-hemisphere",
)


def get_assignment(name: str) -> Assignment:
    try:
        return CATALOG[name]
    except KeyError:
        raise UnknownIdentifierError(f"unknown assignment '{name}'") from None
