# bornlab/properties.py - Sampling-based property checks, Lemma 1 cross-check, continuity probes
import logging
import math
import time
from concurrent.futures import Executor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from .assignments import Assignment, TwoSlopeAssignment, get_assignment
from .exact import ProbabilityTag, QuadRational
from .exceptions import (
    InvalidDimensionError,
    InvalidGridError,
    InvalidPathError,
    InvalidScalingError,
    InvalidSpecError,
    InvalidTagsError,
    MissingTagsError,
    NotApplicableError,
    UnknownIdentifierError,
)
from .linalg import (
    CVec,
    Context,
    HermitianOperator,
    XReal,
    coarse_grain,
    derive_seed,
    haar_random_unitary,
    partition_context,
    random_density_matrix,
    random_partition,
    rng_for,
    xsum,
)
from .models import (
    ContinuityResult,
    Jump,
    Lemma1Record,
    PropertyMatrix,
    PropertyVerdict,
    SeriesPoint,
    Witness,
    operator_payload,
)

logger = logging.getLogger(__name__)

PROPERTY_NAMES = (
    "additivity",
    "anc",
    "onc",
    "normalization",
    "strong-normalization",
    "non-negativity",
    "state-affinity",
)
CONTINUITY_PATHS = ("amplitude-sweep", "scaling-sweep", "frame-rotation")
TAG_POLICIES = ("rational-sector",)

DEFAULT_TOL = 1e-9
NORMALIZATION_TOL = 1e-10
NONNEGATIVITY_TOL = 1e-12
CONTINUITY_TOL = 0.1
DEFAULT_TRIALS = 200
DEFAULT_DIMS = (2, 3, 4, 5)
DEFAULT_TAG_POLICY = "rational-sector"

SECTOR_DENOMINATOR = 60
TAG_SNAP_TOL = 1e-7

COUNTABLE_NOTE = "countable additivity is checked as finite additivity over contexts of size <= d"

GridPoint = Union[Fraction, QuadRational, float, int]


# ===== RATIONAL SECTOR =====
@dataclass(frozen=True, eq=False)
class RationalSector:
    """
    Pure state U (sqrt(t_i) e^{i phi_i}) with exact rational weights t_i.

    Every projector onto a group of U's columns has an exact rational
    Born weight, which is what tag-consuming assignments need.
    """

    unitary: np.ndarray
    weights: Tuple[Fraction, ...]
    phases: Tuple[float, ...]

    @classmethod
    def sample(cls, unitary: np.ndarray, seed: int, denominator: int = SECTOR_DENOMINATOR) -> "RationalSector":
        d = unitary.shape[0]
        rng = rng_for(seed)
        counts = rng.multinomial(denominator, [1.0 / d] * d)
        phases = rng.uniform(0.0, 2.0 * math.pi, size=d)
        return cls(
            unitary=unitary,
            weights=tuple(Fraction(int(c), denominator) for c in counts),
            phases=tuple(float(p) for p in phases),
        )

    @property
    def denominator(self) -> int:
        return math.lcm(*(w.denominator for w in self.weights))

    @property
    def state(self) -> CVec:
        amps = np.array([math.sqrt(w) for w in self.weights]) * np.exp(1j * np.array(self.phases))
        return CVec(entries=self.unitary @ amps)

    def tag(self, op: HermitianOperator) -> ProbabilityTag:
        psi = self.state.entries
        weight = float(np.real(np.vdot(psi, op.entries @ psi)))
        scaled = weight * self.denominator
        n = round(scaled)
        if abs(scaled - n) > TAG_SNAP_TOL:
            raise InvalidTagsError(f"operator weight {weight!r} is not on the rational lattice 1/{self.denominator}")
        return ProbabilityTag.rational(Fraction(n, self.denominator))

    def tags(self, ctx: Context) -> List[ProbabilityTag]:
        return [self.tag(m) for m in ctx.members]


# ===== TRIALS =====
@dataclass(frozen=True, eq=False)
class Trial:
    d: int
    index: int
    seed: int
    unitary: np.ndarray
    sector: RationalSector
    rng: np.random.Generator


def _trials(dims: Sequence[int], trials: int, seed: int) -> Iterator[Trial]:
    for d in dims:
        for t in range(trials):
            trial_seed = derive_seed(seed, d, t)
            unitary = haar_random_unitary(d, derive_seed(trial_seed, "basis"))
            yield Trial(
                d=d,
                index=t,
                seed=trial_seed,
                unitary=unitary,
                sector=RationalSector.sample(unitary, derive_seed(trial_seed, "sector")),
                rng=rng_for(derive_seed(trial_seed, "aux")),
            )


class _Evaluator:
    """Feeds an assignment the state and tags its consumes-set asks for."""

    def __init__(self, a: Assignment, tags: Optional[str]):
        if a.uses_tags:
            if tags is None:
                raise MissingTagsError(f"assignment '{a.name}' consumes probability tags; pass a tag policy")
            if tags not in TAG_POLICIES:
                raise UnknownIdentifierError(f"unknown tag policy '{tags}'")
        self.a = a

    def __call__(self, op: HermitianOperator, ctx: Context, sector: RationalSector) -> XReal:
        state = sector.state if self.a.uses_state else None
        tags = sector.tags(ctx) if self.a.uses_tags else None
        return self.a.evaluate(op, ctx, state, tags)

    def exact(self, op: HermitianOperator, ctx: Context, sector: RationalSector) -> Optional[Any]:
        state = sector.state if self.a.uses_state else None
        tags = sector.tags(ctx) if self.a.uses_tags else None
        return self.a.evaluate_exact(op, ctx, state, tags)


def _gap(x: XReal, y: XReal) -> float:
    if x.value == y.value:
        return 0.0
    return abs(x.value - y.value)


def _exact_sum(values: Sequence[Optional[Any]]) -> Optional[Any]:
    if any(v is None for v in values):
        return None
    total: Any = Fraction(0)
    for v in values:
        total = v + total
    return total


class _Tracker:
    """Max discrepancy plus the first witness in (dim, trial) order."""

    def __init__(self, tol: float):
        self.tol = tol
        self.max_discrepancy = 0.0
        self.witness: Optional[Witness] = None

    def record(
        self,
        trial: Optional[Trial],
        discrepancy: float,
        labels: Sequence[str],
        values: Sequence[Union[XReal, float]],
        exact: Optional[Callable[[], Sequence[Optional[Any]]]] = None,
        description: str = "",
        operators: Optional[Mapping[str, np.ndarray]] = None,
        index: int = 0,
    ) -> None:
        self.max_discrepancy = max(self.max_discrepancy, discrepancy)
        if discrepancy > self.tol and self.witness is None:
            exact_values = None
            if exact is not None:
                ev = list(exact())
                if all(v is not None for v in ev):
                    exact_values = [str(v) for v in ev]
            self.witness = Witness(
                dim=trial.d if trial else None,
                trial=trial.index if trial else index,
                trial_seed=trial.seed if trial else 0,
                labels=list(labels),
                values=[float(v) for v in values],
                exact_values=exact_values,
                discrepancy=discrepancy,
                description=description,
                operators={k: operator_payload(m) for k, m in (operators or {}).items()},
            )
            logger.debug("witness found: %s = %s (discrepancy %.3e)", labels, self.witness.values, discrepancy)

    def verdict(
        self,
        prop: str,
        a: Assignment,
        seed: int,
        dims: Sequence[int],
        trials: int,
        note: Optional[str] = None,
        extras: Optional[Dict[str, Any]] = None,
    ) -> PropertyVerdict:
        return PropertyVerdict(
            property=prop,
            assignment=a.name,
            holds=self.witness is None,
            trials=trials,
            tolerance=self.tol,
            seed=seed,
            dims=list(dims),
            max_discrepancy=self.max_discrepancy,
            witness=self.witness,
            note=note,
            extras=extras or {},
        )


def _not_applicable(prop: str, a: Assignment, tol: float, seed: int, dims: Sequence[int], reason: str) -> PropertyVerdict:
    return PropertyVerdict(
        property=prop,
        assignment=a.name,
        applicable=False,
        reason=reason,
        tolerance=tol,
        seed=seed,
        dims=list(dims),
    )


def _operator_dims(a: Assignment, dims: Sequence[int], minimum: int = 1) -> Tuple[List[int], Optional[str]]:
    if a.domain != "operator":
        return [], "domain is Q(sqrt2), not operators"
    usable = [d for d in dims if d >= minimum and a.supports_dim(d)]
    if not usable:
        return [], f"assignment is undefined in dims {list(dims)}"
    return usable, None


def _check_trials(trials: int) -> None:
    if trials < 1:
        raise InvalidSpecError(f"trials must be at least 1, got {trials}")


def _proj(columns: np.ndarray) -> HermitianOperator:
    return HermitianOperator.from_columns(columns)


def _projective(members: Sequence[HermitianOperator]) -> Context:
    return Context(members=tuple(members), complete=True, projective=True)


# ===== PROPERTY CHECKS =====
def check_additivity(
    a: Assignment,
    dims: Sequence[int] = DEFAULT_DIMS,
    trials: int = DEFAULT_TRIALS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    tags: Optional[str] = DEFAULT_TAG_POLICY,
) -> PropertyVerdict:
    """
    Compare mu(sum of a block) with the sum of mu over the block, inside one context.

    Trial 0 in each dimension uses a rank-1 context grouped into one block,
    i.e. mu(I) against the sum over a basis.
    """
    _check_trials(trials)
    usable, reason = _operator_dims(a, dims)
    if reason:
        return _not_applicable("additivity", a, tol, seed, dims, reason)
    evaluate = _Evaluator(a, tags)
    tracker = _Tracker(tol)
    try:
        for trial in _trials(usable, trials, seed):
            d = trial.d
            if trial.index == 0:
                blocks = [[i] for i in range(d)]
                groups = [list(range(d))]
            else:
                blocks = random_partition(d, int(trial.rng.integers(1, d + 1)), trial.rng)
                groups = random_partition(len(blocks), int(trial.rng.integers(1, len(blocks) + 1)), trial.rng)
            ctx = partition_context(trial.unitary, blocks)
            coarse = coarse_grain(ctx, groups)
            member_values = [evaluate(m, ctx, trial.sector) for m in ctx.members]
            for group, summed in zip(groups, coarse.members):
                lhs = evaluate(summed, ctx, trial.sector)
                rhs = xsum([member_values[i] for i in group])
                tracker.record(
                    trial,
                    _gap(lhs, rhs),
                    ("mu(sum)", "sum(mu)"),
                    (lhs, rhs),
                    exact=lambda: (
                        evaluate.exact(summed, ctx, trial.sector),
                        _exact_sum([evaluate.exact(ctx.members[i], ctx, trial.sector) for i in group]),
                    ),
                    description=f"block {group} of a {len(ctx)}-member context",
                    operators={"sum": summed.entries},
                )
    except NotApplicableError as e:
        return _not_applicable("additivity", a, tol, seed, dims, str(e))
    return tracker.verdict("additivity", a, seed, usable, trials, note=COUNTABLE_NOTE)


def check_onc(
    a: Assignment,
    dims: Sequence[int] = DEFAULT_DIMS,
    trials: int = DEFAULT_TRIALS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    tags: Optional[str] = DEFAULT_TAG_POLICY,
) -> PropertyVerdict:
    """mu(A|C1) vs mu(A|C2) for two completions of A's orthocomplement with different block counts."""
    _check_trials(trials)
    usable, reason = _operator_dims(a, dims, minimum=2)
    if reason:
        return _not_applicable("onc", a, tol, seed, dims, reason)
    evaluate = _Evaluator(a, tags)
    tracker = _Tracker(tol)
    try:
        for trial in _trials(usable, trials, seed):
            d, t, u = trial.d, trial.index, trial.unitary
            rank_a = 1 + t % max(1, d - 2)
            rest = d - rank_a
            k1 = 1 + (t + 1) % (rest - 1) if rest > 1 else 1
            k2 = k1 + 1 if rest > 1 else 1
            op = _proj(u[:, :rank_a])
            comp1 = u[:, rank_a:]
            comp2 = comp1
            if not a.uses_tags:
                comp2 = comp1 @ haar_random_unitary(rest, derive_seed(trial.seed, "onc-rotation"))
            blocks1 = random_partition(rest, k1, trial.rng)
            blocks2 = random_partition(rest, k2, trial.rng)
            c1 = _projective([op] + [_proj(comp1[:, b]) for b in blocks1])
            c2 = _projective([op] + [_proj(comp2[:, b]) for b in blocks2])
            v1 = evaluate(op, c1, trial.sector)
            v2 = evaluate(op, c2, trial.sector)
            tracker.record(
                trial,
                _gap(v1, v2),
                ("mu(A|C1)", "mu(A|C2)"),
                (v1, v2),
                exact=lambda: (evaluate.exact(op, c1, trial.sector), evaluate.exact(op, c2, trial.sector)),
                description=f"rank-{rank_a} A completed by {len(c1) - 1} vs {len(c2) - 1} blocks",
                operators={"A": op.entries},
            )
    except NotApplicableError as e:
        return _not_applicable("onc", a, tol, seed, dims, str(e))
    note = "state held fixed; only the completion of A varies"
    return tracker.verdict("onc", a, seed, usable, trials, note=note)


def check_anc(
    a: Assignment,
    dims: Sequence[int] = DEFAULT_DIMS,
    trials: int = DEFAULT_TRIALS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    tags: Optional[str] = DEFAULT_TAG_POLICY,
) -> PropertyVerdict:
    """
    Additive value of a rank-2 projector P_S across contexts.

    Compares mu(A)+mu(B) and mu(A')+mu(B') for two rank-1 splittings of
    P_S, and both against mu(P_S) in the context {P_S, complement}.
    """
    _check_trials(trials)
    usable, reason = _operator_dims(a, dims, minimum=2)
    if reason:
        return _not_applicable("anc", a, tol, seed, dims, reason)
    evaluate = _Evaluator(a, tags)
    tracker = _Tracker(tol)
    try:
        for trial in _trials(usable, trials, seed):
            d, u = trial.d, trial.unitary
            span = u[:, :2]
            split2 = span @ _second_splitting(a, trial, span)
            a1, b1 = _proj(u[:, 0]), _proj(u[:, 1])
            a2, b2 = _proj(split2[:, 0]), _proj(split2[:, 1])
            p_s = _proj(span)
            complement = [_proj(u[:, 2:])] if d > 2 else []
            rank_one_rest = [_proj(u[:, j]) for j in range(2, d)]

            c1 = _projective([a1, b1] + complement)
            c2 = _projective([a2, b2] + rank_one_rest)
            c3 = _projective([p_s] + complement)

            s1 = evaluate(a1, c1, trial.sector) + evaluate(b1, c1, trial.sector)
            s2 = evaluate(a2, c2, trial.sector) + evaluate(b2, c2, trial.sector)
            try:
                direct: Optional[XReal] = evaluate(p_s, c3, trial.sector)
            except NotApplicableError:
                direct = None

            exact = {
                "split-1": lambda: _exact_sum([evaluate.exact(a1, c1, trial.sector), evaluate.exact(b1, c1, trial.sector)]),
                "split-2": lambda: _exact_sum([evaluate.exact(a2, c2, trial.sector), evaluate.exact(b2, c2, trial.sector)]),
                "direct": lambda: evaluate.exact(p_s, c3, trial.sector),
            }
            values = {"split-1": s1, "split-2": s2, "direct": direct}
            for left, right in (("split-1", "split-2"), ("split-1", "direct"), ("split-2", "direct")):
                lv, rv = values[left], values[right]
                if lv is None or rv is None:
                    continue
                tracker.record(
                    trial,
                    _gap(lv, rv),
                    (left, right),
                    (lv, rv),
                    exact=lambda l=left, r=right: (exact[l](), exact[r]()),
                    description=f"rank-2 P_S with {len(c1)}-, {len(c2)}- and {len(c3)}-member contexts",
                    operators={"P_S": p_s.entries, "A'": a2.entries},
                )
    except NotApplicableError as e:
        return _not_applicable("anc", a, tol, seed, dims, str(e))
    return tracker.verdict("anc", a, seed, usable, trials)


def _second_splitting(a: Assignment, trial: Trial, span: np.ndarray) -> np.ndarray:
    """2x2 unitary giving the second rank-1 splitting of span(U e0, U e1)."""
    if a.uses_tags:
        # align with the state's projection so both halves keep rational tags
        c = span.conj().T @ trial.sector.state.entries
        norm = float(np.linalg.norm(c))
        if norm > 1e-9:
            c0, c1 = c / norm
            return np.array([[c0, -np.conj(c1)], [c1, np.conj(c0)]])
    return haar_random_unitary(2, derive_seed(trial.seed, "anc-rotation"))


def check_normalization(
    a: Assignment,
    dims: Sequence[int] = DEFAULT_DIMS,
    seed: int = 0,
    tol: float = NORMALIZATION_TOL,
    tags: Optional[str] = DEFAULT_TAG_POLICY,
) -> PropertyVerdict:
    """|mu(I) - 1| <= tol, with I evaluated in a rank-1 basis context."""
    usable, reason = _operator_dims(a, dims)
    if reason:
        return _not_applicable("normalization", a, tol, seed, dims, reason)
    evaluate = _Evaluator(a, tags)
    tracker = _Tracker(tol)
    try:
        for trial in _trials(usable, 1, seed):
            ctx = partition_context(trial.unitary, [[i] for i in range(trial.d)])
            identity = HermitianOperator.identity(trial.d)
            value = evaluate(identity, ctx, trial.sector)
            tracker.record(
                trial,
                _gap(value, XReal(value=1.0)),
                ("mu(I)", "1"),
                (value, 1.0),
                exact=lambda: (evaluate.exact(identity, ctx, trial.sector), Fraction(1)),
            )
    except NotApplicableError as e:
        return _not_applicable("normalization", a, tol, seed, dims, str(e))
    note = "mu(I) is evaluated in a rank-1 basis context; contextual assignments sum their member values over it"
    return tracker.verdict("normalization", a, seed, usable, len(usable), note=note)


def check_strong_normalization(
    a: Assignment,
    dims: Sequence[int] = DEFAULT_DIMS,
    trials: int = DEFAULT_TRIALS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    tags: Optional[str] = DEFAULT_TAG_POLICY,
) -> PropertyVerdict:
    """Sum of mu over complete contexts of varied block structure equals 1."""
    _check_trials(trials)
    usable, reason = _operator_dims(a, dims)
    if reason:
        return _not_applicable("strong-normalization", a, tol, seed, dims, reason)
    evaluate = _Evaluator(a, tags)
    tracker = _Tracker(tol)
    try:
        for trial in _trials(usable, trials, seed):
            d = trial.d
            if trial.index == 0:
                blocks = [[i] for i in range(d)]
            else:
                blocks = random_partition(d, int(trial.rng.integers(1, d + 1)), trial.rng)
            ctx = partition_context(trial.unitary, blocks)
            total = xsum([evaluate(m, ctx, trial.sector) for m in ctx.members])
            tracker.record(
                trial,
                _gap(total, XReal(value=1.0)),
                ("sum(mu)", "1"),
                (total, 1.0),
                exact=lambda: (_exact_sum([evaluate.exact(m, ctx, trial.sector) for m in ctx.members]), Fraction(1)),
                description=f"{len(ctx)}-member decomposition of I",
            )
    except NotApplicableError as e:
        return _not_applicable("strong-normalization", a, tol, seed, dims, str(e))
    return tracker.verdict("strong-normalization", a, seed, usable, trials, note=COUNTABLE_NOTE)


def check_nonnegativity(
    a: Assignment,
    dims: Sequence[int] = DEFAULT_DIMS,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    tags: Optional[str] = DEFAULT_TAG_POLICY,
) -> PropertyVerdict:
    """Every sampled value >= -1e-12; two-slope is sampled on the positive cone of Q(sqrt2)."""
    _check_trials(trials)
    tol = NONNEGATIVITY_TOL
    if isinstance(a, TwoSlopeAssignment):
        return _quad_nonnegativity(a, trials, seed)
    usable, reason = _operator_dims(a, dims)
    if reason:
        return _not_applicable("non-negativity", a, tol, seed, dims, reason)
    evaluate = _Evaluator(a, tags)
    tracker = _Tracker(tol)
    try:
        for trial in _trials(usable, trials, seed):
            d = trial.d
            blocks = random_partition(d, int(trial.rng.integers(1, d + 1)), trial.rng)
            ctx = partition_context(trial.unitary, blocks)
            subset = [i for i in range(len(ctx)) if trial.rng.random() < 0.5] or [0]
            probes = list(ctx.members) + [ctx.subset_sum(subset)]
            for op in probes:
                value = evaluate(op, ctx, trial.sector)
                tracker.record(
                    trial,
                    max(0.0, -value.value),
                    ("mu",),
                    (value,),
                    exact=lambda op=op: (evaluate.exact(op, ctx, trial.sector),),
                    operators={"A": op.entries},
                )
    except NotApplicableError as e:
        return _not_applicable("non-negativity", a, tol, seed, dims, str(e))
    return tracker.verdict("non-negativity", a, seed, usable, trials)


def positive_quads(trials: int, seed: int) -> Iterator[QuadRational]:
    """1, sqrt2, then random positive elements of Q(sqrt2)."""
    rng = rng_for(derive_seed(seed, "quads"))
    for t in range(trials):
        if t == 0:
            yield QuadRational(1)
        elif t == 1:
            yield QuadRational.sqrt2()
        else:
            x = QuadRational(
                Fraction(int(rng.integers(-50, 51)), int(rng.integers(1, 20))),
                Fraction(int(rng.integers(-50, 51)), int(rng.integers(1, 20))),
            )
            sign = x.sign()
            yield QuadRational(1) if sign == 0 else (x if sign > 0 else -x)


def _quad_nonnegativity(a: TwoSlopeAssignment, trials: int, seed: int) -> PropertyVerdict:
    tracker = _Tracker(NONNEGATIVITY_TOL)
    for t, x in enumerate(positive_quads(trials, seed)):
        fx = a.value(x)
        value = a.real_value(x)
        tracker.record(
            None,
            max(0.0, -value),
            ("x", "f(x)"),
            (float(x), value),
            exact=lambda x=x, fx=fx: (x, fx),
            description="positive element of Q(sqrt2)",
            index=t,
        )
    note = f"sampled on the positive cone of Q(sqrt2) with c1={a.c1}, c2={a.c2}"
    return tracker.verdict("non-negativity", a, seed, [], trials, note=note)


def check_state_affinity(
    a: Assignment,
    dims: Sequence[int] = DEFAULT_DIMS,
    trials: int = DEFAULT_TRIALS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    tags: Optional[str] = DEFAULT_TAG_POLICY,
) -> PropertyVerdict:
    """
    mu(sum_j p_j rho_j, A) vs sum_j p_j mu(rho_j, A) on convex mixtures.

    Components share the trial basis; tag-consuming assignments get the
    exact mixed tags sum_j p_j t_j.
    """
    _check_trials(trials)
    if not (a.uses_state or a.uses_tags):
        return _not_applicable("state-affinity", a, tol, seed, dims, "assignment does not consume a state")
    usable, reason = _operator_dims(a, dims)
    if reason:
        return _not_applicable("state-affinity", a, tol, seed, dims, reason)
    evaluate = _Evaluator(a, tags)
    tracker = _Tracker(tol)
    try:
        for trial in _trials(usable, trials, seed):
            d, u = trial.d, trial.unitary
            n_parts = 1 + trial.index % 3
            sectors = [trial.sector] + [
                RationalSector.sample(u, derive_seed(trial.seed, "component", j)) for j in range(1, n_parts)
            ]
            if n_parts == 1:
                weights = [Fraction(1)]
            else:
                counts = trial.rng.multinomial(12, [1.0 / n_parts] * n_parts)
                weights = [Fraction(1 + int(c), 12 + n_parts) for c in counts]
            rho = sum(
                (float(p) * np.outer(s.state.entries, s.state.entries.conj()) for p, s in zip(weights, sectors)),
                np.zeros((d, d), dtype=complex),
            )
            mixed = HermitianOperator(entries=rho)
            blocks = random_partition(d, int(trial.rng.integers(1, d + 1)), trial.rng)
            ctx = partition_context(u, blocks)
            mixed_tags = None
            if a.uses_tags:
                per_part = [s.tags(ctx) for s in sectors]
                mixed_tags = [
                    ProbabilityTag(sum((p * tl[i].value for p, tl in zip(weights, per_part)), QuadRational(0)))
                    for i in range(len(ctx))
                ]
            for op in ctx.members:
                lhs = a.evaluate(op, ctx, mixed if a.uses_state else None, mixed_tags)
                rhs = xsum([
                    float(p) * evaluate(op, ctx, s)
                    for p, s in zip(weights, sectors)
                ])
                tracker.record(
                    trial,
                    _gap(lhs, rhs),
                    ("mu(mixture)", "sum p mu"),
                    (lhs, rhs),
                    description=f"{n_parts}-component mixture with weights {[str(w) for w in weights]}",
                    operators={"A": op.entries, "rho": mixed.entries},
                )
    except NotApplicableError as e:
        return _not_applicable("state-affinity", a, tol, seed, dims, str(e))
    return tracker.verdict("state-affinity", a, seed, usable, trials)


# ===== LEMMA 1 =====
def lemma1_crosscheck(
    a: Assignment,
    dims: Sequence[int] = DEFAULT_DIMS,
    trials: int = DEFAULT_TRIALS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    tags: Optional[str] = DEFAULT_TAG_POLICY,
    verdicts: Optional[Mapping[str, PropertyVerdict]] = None,
) -> Lemma1Record:
    """strong-normalization must equal additivity AND normalization."""
    found = dict(verdicts or {})
    for prop in ("strong-normalization", "additivity", "normalization"):
        if prop not in found:
            found[prop] = run_check(a, prop, dims, trials, tol, cell_seed(seed, a.name, prop), tags)
    skipped = [p for p in ("strong-normalization", "additivity", "normalization") if not found[p].applicable]
    if skipped:
        reasons = "; ".join(f"{p}: {found[p].reason}" for p in skipped)
        return Lemma1Record(assignment=a.name, skipped_reason=reasons)
    strong = bool(found["strong-normalization"].holds)
    additive = bool(found["additivity"].holds)
    normalized = bool(found["normalization"].holds)
    consistent = strong == (additive and normalized)
    if not consistent:
        logger.error("Lemma 1 inconsistency for %s: strong=%s additive=%s normalized=%s", a.name, strong, additive, normalized)
    return Lemma1Record(
        assignment=a.name,
        strong=strong,
        additive=additive,
        normalized=normalized,
        consistent=consistent,
    )


# ===== CONTINUITY PROBES =====
def _exact_point(g: GridPoint) -> QuadRational:
    if isinstance(g, QuadRational):
        return g
    if isinstance(g, float):
        return QuadRational(Fraction(g))
    return QuadRational.of(g)


def _path_error(a: Assignment, path: str) -> Optional[str]:
    if path not in CONTINUITY_PATHS:
        return f"unknown continuity path '{path}'"
    if isinstance(a, TwoSlopeAssignment):
        return None if path == "scaling-sweep" else "two-slope only supports the scaling-sweep path"
    if path == "amplitude-sweep" and not (a.uses_state or a.uses_tags):
        return f"'{a.name}' ignores the state, so an amplitude sweep is vacuous"
    if path == "scaling-sweep" and not a.effect_domain:
        return f"'{a.name}' is not defined on scaled effects"
    if path == "frame-rotation" and a.uses_tags:
        return "rotated frames carry irrational weights outside Q(sqrt2); tags cannot be formed"
    return None


def continuity_probe(
    a: Assignment,
    path: str,
    grid: Sequence[GridPoint],
    tol: float = CONTINUITY_TOL,
    state: Optional[CVec] = None,
) -> ContinuityResult:
    """
    Evaluate mu along a one-parameter path in d=2 and report jumps.

    A jump is an adjacent pair (in parameter order) with |dmu| > tol and
    |dparam| no larger than the nominal grid step range/(n-1).
    """
    error = _path_error(a, path)
    if error:
        raise InvalidPathError(error)
    if len(grid) < 2:
        raise InvalidGridError("a continuity grid needs at least two points")
    if state is None:
        state = CVec.basis(2, 0)

    points: List[SeriesPoint] = []
    for g in grid:
        value = _path_value(a, path, g, state)
        points.append(SeriesPoint(parameter=float(g), value=value, label=str(g)))

    ordered = sorted(points, key=lambda p: p.parameter)
    step = (ordered[-1].parameter - ordered[0].parameter) / (len(ordered) - 1)
    jumps = []
    for left, right in zip(ordered, ordered[1:]):
        delta = 0.0 if left.value == right.value else abs(right.value - left.value)
        if delta > tol and right.parameter - left.parameter <= step * (1 + 1e-12):
            jumps.append(Jump(left=left, right=right, delta=delta))
    logger.info("continuity probe %s/%s: %d points, %d jumps", a.name, path, len(points), len(jumps))
    return ContinuityResult(assignment=a.name, path=path, tolerance=tol, step=step, series=points, jumps=jumps)


def _path_value(a: Assignment, path: str, g: GridPoint, state: CVec) -> float:
    p0 = HermitianOperator(entries=np.diag([1.0, 0.0]))
    identity = HermitianOperator.identity(2)

    if path == "amplitude-sweep":
        t = _exact_point(g) if a.uses_tags else None
        x = float(g)
        if not 0.0 <= x <= 1.0:
            raise InvalidPathError(f"amplitude parameter {g} outside [0, 1]")
        ctx = Context.of([p0, identity - p0])
        psi = CVec(entries=[math.sqrt(x), math.sqrt(1.0 - x)])
        tags = [ProbabilityTag(t), ProbabilityTag(1 - t)] if t is not None else None
        return a.evaluate(p0, ctx, psi if a.uses_state else None, tags).value

    if path == "scaling-sweep":
        c = float(g)
        if not 0.0 <= c <= 1.0:
            raise InvalidScalingError(f"scaling {g} pushes the effect outside [0, I]")
        if isinstance(a, TwoSlopeAssignment):
            return a.real_value(_exact_point(g))
        scaled = p0 * c
        ctx = Context.of([scaled, identity - scaled])
        tags = None
        if a.uses_tags:
            weight = _exact_point(g) * _exact_weight(state, p0)
            tags = [ProbabilityTag(weight), ProbabilityTag(1 - weight)]
        return a.evaluate(scaled, ctx, state if a.uses_state else None, tags).value

    theta = float(g)
    x = CVec(entries=[math.cos(theta), math.sin(theta)])
    proj = x.projector()
    ctx = Context.of([proj, identity - proj])
    return a.evaluate(proj, ctx, state if a.uses_state else None, None).value


def _exact_weight(state: CVec, op: HermitianOperator) -> Fraction:
    w = float(np.real(np.vdot(state.entries, op.entries @ state.entries)))
    exact = Fraction(w).limit_denominator(10**6)
    if abs(float(exact) - w) > TAG_SNAP_TOL:
        raise InvalidTagsError(f"state weight {w!r} is not a recognisable rational")
    return exact


# ===== FRAME WEIGHTS =====
def frame_weight_check(
    a: Assignment,
    d: int,
    subspace_dims: Sequence[int],
    trials: int = DEFAULT_TRIALS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    state: Optional[HermitianOperator] = None,
) -> PropertyVerdict:
    """
    Sum of mu over random orthonormal bases of a subspace is basis-independent.

    The per-subspace weight (from the first basis) is reported in extras.
    """
    _check_trials(trials)
    prop = "frame-weight"
    if a.domain != "operator":
        return _not_applicable(prop, a, tol, seed, [d], "domain is Q(sqrt2), not operators")
    if a.uses_tags:
        return _not_applicable(prop, a, tol, seed, [d], "rotated bases carry irrational weights; tags cannot be formed")
    if not a.supports_dim(d):
        return _not_applicable(prop, a, tol, seed, [d], f"assignment is undefined in d={d}")
    for k in subspace_dims:
        if not 1 <= k <= d:
            raise InvalidDimensionError(f"subspace dimension {k} outside [1, {d}]")

    rho = state if state is not None else random_density_matrix(d, derive_seed(seed, "state"))
    tracker = _Tracker(tol)
    weights: Dict[str, float] = {}
    try:
        for k in subspace_dims:
            sub_seed = derive_seed(seed, "subspace", k)
            u = haar_random_unitary(d, sub_seed)
            span = u[:, :k]
            complement = [_proj(u[:, k:])] if k < d else []
            reference: Optional[XReal] = None
            for t in range(trials):
                basis = span @ haar_random_unitary(k, derive_seed(sub_seed, t))
                members = [_proj(basis[:, i]) for i in range(k)]
                ctx = _projective(members + complement)
                weight = xsum([a.evaluate(m, ctx, rho if a.uses_state else None) for m in members])
                if reference is None:
                    reference = weight
                    weights[str(k)] = weight.value
                tracker.record(
                    None,
                    _gap(weight, reference),
                    ("W(basis)", "W(first basis)"),
                    (weight, reference),
                    description=f"{k}-dimensional subspace of d={d}",
                    index=t,
                )
    except NotApplicableError as e:
        return _not_applicable(prop, a, tol, seed, [d], str(e))
    verdict = tracker.verdict(prop, a, seed, [d], trials, extras={"weights": weights})
    return verdict


# ===== MATRIX =====
class MatrixSpec(Protocol):
    seed: int
    dims: List[int]
    trials: int
    tag_policy: Optional[str]

    def tolerance_for(self, prop: str) -> float: ...


def cell_seed(seed: int, assignment: str, prop: str) -> int:
    return derive_seed(seed, "check", assignment, prop)


def run_check(
    a: Assignment,
    prop: str,
    dims: Sequence[int],
    trials: int,
    tol: float,
    seed: int,
    tags: Optional[str] = DEFAULT_TAG_POLICY,
) -> PropertyVerdict:
    if prop == "additivity":
        return check_additivity(a, dims, trials, tol, seed, tags)
    if prop == "anc":
        return check_anc(a, dims, trials, tol, seed, tags)
    if prop == "onc":
        return check_onc(a, dims, trials, tol, seed, tags)
    if prop == "normalization":
        return check_normalization(a, dims, seed, tol, tags)
    if prop == "strong-normalization":
        return check_strong_normalization(a, dims, trials, tol, seed, tags)
    if prop == "non-negativity":
        return check_nonnegativity(a, dims, trials, seed, tags)
    if prop == "state-affinity":
        return check_state_affinity(a, dims, trials, tol, seed, tags)
    raise UnknownIdentifierError(f"unknown property '{prop}'")


def _timed_check(a: Assignment, prop: str, spec: MatrixSpec) -> Tuple[PropertyVerdict, float]:
    started = time.perf_counter()
    verdict = run_check(
        a, prop, spec.dims, spec.trials, spec.tolerance_for(prop), cell_seed(spec.seed, a.name, prop), spec.tag_policy
    )
    elapsed = time.perf_counter() - started
    logger.info("%s / %s: %s (%.2fs)", a.name, prop, verdict.status, elapsed)
    return verdict, elapsed


def build_property_matrix(
    assignments: Sequence[str],
    properties: Sequence[str],
    spec: MatrixSpec,
    executor: Optional[Executor] = None,
    timings: Optional[Dict[str, float]] = None,
) -> PropertyMatrix:
    """
    Populate every (assignment, property) cell.

    Per-cell seeds come from the spec seed and the cell's names, so the
    result does not depend on the executor or on scheduling order.
    """
    resolved = [get_assignment(name) for name in assignments]
    for prop in properties:
        if prop not in PROPERTY_NAMES:
            raise UnknownIdentifierError(f"unknown property '{prop}'")

    jobs = [(a, prop) for a in resolved for prop in properties]
    if executor is None:
        results = [_timed_check(a, prop, spec) for a, prop in jobs]
    else:
        futures = [executor.submit(_timed_check, a, prop, spec) for a, prop in jobs]
        results = [f.result() for f in futures]

    cells: Dict[str, Dict[str, PropertyVerdict]] = {a.name: {} for a in resolved}
    for (a, prop), (verdict, elapsed) in zip(jobs, results):
        cells[a.name][prop] = verdict
        if timings is not None:
            timings[f"check:{a.name}:{prop}"] = elapsed
    return PropertyMatrix(rows=[a.name for a in resolved], columns=list(properties), cells=cells)
