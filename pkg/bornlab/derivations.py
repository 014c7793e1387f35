# bornlab/derivations.py - Executable cores of the envariance, fine-graining and homogeneity arguments
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import linalg as sla

from .assignments import Assignment, TwoSlopeAssignment
from .exact import ProbabilityTag, QuadRational, RationalLike, as_rational, quad_to_real, sqrt2_approximant
from .exceptions import (
    BornLabError,
    InvalidDimensionError,
    InvalidDimsError,
    InvalidScalingError,
    InvalidSplitError,
    InvalidStateError,
    MissingTagsError,
    NotApplicableError,
)
from .linalg import (
    CVec,
    Context,
    HermitianOperator,
    State,
    derive_seed,
    partition_context,
    rng_for,
    tensor_product,
)

logger = logging.getLogger(__name__)

SCHMIDT_TOL = 1e-10
UNIT_TOL = 1e-12

_ZERO, _ONE, _MINUS_ONE = Fraction(0), Fraction(1), Fraction(-1)


# ===== BIPARTITE STATES =====
class SchmidtTerm(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coefficient: float
    system: CVec
    environment: CVec


class BipartiteState(BaseModel):
    """Unit vector on S (x) E with an optional Schmidt decomposition"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    vector: CVec
    dims: Tuple[int, int]
    schmidt: Optional[List[SchmidtTerm]] = None

    @model_validator(mode="after")
    def _check(self) -> "BipartiteState":
        d_s, d_e = self.dims
        if d_s < 1 or d_e < 1 or self.vector.dim != d_s * d_e:
            raise InvalidDimsError(f"vector of dim {self.vector.dim} does not factor as {d_s} x {d_e}")
        if not self.vector.is_pure_state():
            raise InvalidStateError("bipartite state must be a unit vector")
        if self.schmidt is not None:
            coeffs = [t.coefficient for t in self.schmidt]
            if any(c < 0 for c in coeffs) or any(a < b for a, b in zip(coeffs, coeffs[1:])):
                raise InvalidStateError("Schmidt coefficients must be non-negative and descending")
            rebuilt = sum(
                (t.coefficient * np.kron(t.system.entries, t.environment.entries) for t in self.schmidt),
                np.zeros(d_s * d_e, dtype=complex),
            )
            if np.linalg.norm(rebuilt - self.vector.entries) > SCHMIDT_TOL:
                raise InvalidStateError("Schmidt terms do not reconstruct the state")
        return self

    @classmethod
    def from_schmidt(
        cls,
        coefficients: Sequence[float],
        system_basis: Optional[np.ndarray] = None,
        environment_basis: Optional[np.ndarray] = None,
    ) -> "BipartiteState":
        """sum_i c_i |a_i>|b_i> over the columns of the given bases (computational by default)."""
        coeffs = np.asarray(coefficients, dtype=float)
        n = len(coeffs)
        a = np.eye(n, dtype=complex) if system_basis is None else np.asarray(system_basis, dtype=complex)
        b = np.eye(n, dtype=complex) if environment_basis is None else np.asarray(environment_basis, dtype=complex)
        if a.shape[1] < n or b.shape[1] < n:
            raise InvalidDimsError("bases have fewer columns than Schmidt coefficients")
        order = np.argsort(-coeffs, kind="stable")
        vec = sum((coeffs[i] * np.kron(a[:, i], b[:, i]) for i in range(n)), np.zeros(a.shape[0] * b.shape[0], dtype=complex))
        terms = [
            SchmidtTerm(coefficient=float(coeffs[i]), system=CVec(entries=a[:, i]), environment=CVec(entries=b[:, i]))
            for i in order
        ]
        return cls(vector=CVec(entries=vec), dims=(a.shape[0], b.shape[0]), schmidt=terms)

    def schmidt_decompose(self) -> "BipartiteState":
        """Same state with its Schmidt terms filled in by SVD."""
        d_s, d_e = self.dims
        u, s, vh = sla.svd(self.vector.entries.reshape(d_s, d_e))
        terms = [
            SchmidtTerm(coefficient=float(s[i]), system=CVec(entries=u[:, i]), environment=CVec(entries=vh[i, :]))
            for i in range(len(s))
            if s[i] > SCHMIDT_TOL
        ]
        return BipartiteState(vector=self.vector, dims=self.dims, schmidt=terms)


def envariance_check(psi: BipartiteState, u_s: np.ndarray, u_e: np.ndarray) -> float:
    """|| (I (x) U_E)(U_S (x) I) psi - psi ||"""
    d_s, d_e = psi.dims
    u_s, u_e = np.asarray(u_s, dtype=complex), np.asarray(u_e, dtype=complex)
    if u_s.shape != (d_s, d_s) or u_e.shape != (d_e, d_e):
        raise InvalidDimsError(f"unitaries of shape {u_s.shape}, {u_e.shape} do not act on {d_s} x {d_e}")
    moved = tensor_product(u_s, u_e) @ psi.vector.entries
    return float(np.linalg.norm(moved - psi.vector.entries))


def _complete_basis(columns: List[np.ndarray], d: int) -> np.ndarray:
    m = np.column_stack(columns) if columns else np.zeros((d, 0), dtype=complex)
    if m.shape[1] == d:
        return m
    return np.column_stack([m, sla.null_space(m.conj().T)])


def swap_pair(psi: BipartiteState, i: int, j: int) -> Tuple[np.ndarray, np.ndarray]:
    """Transposition of Schmidt vectors i and j on S, and the matching transposition on E."""
    state = psi if psi.schmidt is not None else psi.schmidt_decompose()
    d_s, d_e = state.dims
    terms = state.schmidt or []
    a = _complete_basis([t.system.entries for t in terms], d_s)
    b = _complete_basis([t.environment.entries for t in terms], d_e)
    perm_s = np.eye(d_s)
    perm_s[[i, j]] = perm_s[[j, i]]
    perm_e = np.eye(d_e)
    perm_e[[i, j]] = perm_e[[j, i]]
    return a @ perm_s @ a.conj().T, b @ perm_e @ b.conj().T


# ===== CONSTRAINT SYSTEM =====
@dataclass(frozen=True, slots=True)
class Equation:
    """sum_i coefficients[i] p_i = rhs"""
    coefficients: Dict[int, Fraction]
    rhs: Fraction
    provenance: Literal["swap-symmetry", "weak-additivity"]
    source: str


@dataclass
class ConstraintSystem:
    """Linear constraints on p_1..p_n, each citing the swap or additivity instance that produced it"""
    n: int
    equations: List[Equation] = field(default_factory=list)

    def add_swap(self, i: int, j: int) -> None:
        self.equations.append(
            Equation({i: _ONE, j: _MINUS_ONE}, _ZERO, "swap-symmetry", f"swap(x{i + 1}, x{j + 1})")
        )

    def add_normalization(self) -> None:
        self.equations.append(
            Equation({i: Fraction(1) for i in range(self.n)}, Fraction(1), "weak-additivity", "mu(k) + mu(k_perp) = 1")
        )

    def solve(self) -> Tuple[Optional[List[Fraction]], int]:
        """
        Exact solution and rank.

        Swap rows are folded with a union-find into equality classes; the
        remaining rows are eliminated over the classes in exact arithmetic.
        Returns (None, rank) when the solution is not unique or not consistent.
        """
        parent = list(range(self.n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        others: List[Equation] = []
        for eq in self.equations:
            if eq.provenance == "swap-symmetry" and len(eq.coefficients) == 2 and eq.rhs == 0:
                (i, ci), (j, cj) = eq.coefficients.items()
                if ci == -cj and ci != 0:
                    parent[find(i)] = find(j)
                    continue
            others.append(eq)

        roots = sorted({find(i) for i in range(self.n)})
        col = {r: k for k, r in enumerate(roots)}
        m = len(roots)
        rows: List[List[Fraction]] = []
        for eq in others:
            row = [Fraction(0)] * (m + 1)
            for i, c in eq.coefficients.items():
                row[col[find(i)]] += c
            row[m] = eq.rhs
            rows.append(row)

        reduced_rank, pivots = _eliminate(rows, m)
        if any(all(v == 0 for v in row[:m]) and row[m] != 0 for row in rows):
            return None, self.n - m + reduced_rank
        rank = self.n - m + reduced_rank
        if reduced_rank < m:
            return None, rank
        values = {c: rows[r][m] for r, c in pivots}
        return [values[col[find(i)]] for i in range(self.n)], rank


def _eliminate(rows: List[List[Fraction]], m: int) -> Tuple[int, List[Tuple[int, int]]]:
    """In-place Gauss-Jordan elimination; returns rank and (row, column) pivots."""
    pivots: List[Tuple[int, int]] = []
    r = 0
    for c in range(m):
        pivot = next((k for k in range(r, len(rows)) if rows[k][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        lead = rows[r][c]
        rows[r] = [v / lead for v in rows[r]]
        for k in range(len(rows)):
            if k != r and rows[k][c] != 0:
                factor = rows[k][c]
                rows[k] = [vk - factor * vr for vk, vr in zip(rows[k], rows[r])]
        pivots.append((r, c))
        r += 1
    return r, pivots


def swap_system(n: int) -> ConstraintSystem:
    """All C(n,2) pairwise swap equations plus one normalization row."""
    if n < 1:
        raise InvalidSplitError(f"need at least one outcome, got {n}")
    system = ConstraintSystem(n=n)
    for i in range(n):
        for j in range(i + 1, n):
            system.add_swap(i, j)
    system.add_normalization()
    return system


@lru_cache(maxsize=256)
def _swap_solution(n: int) -> Tuple[Fraction, ...]:
    values, rank = swap_system(n).solve()
    if values is None or rank != n:
        raise BornLabError(f"swap constraints for n={n} have rank {rank}, expected a unique solution")
    return tuple(values)


def swap_derivation(n: int) -> List[Fraction]:
    """p_i = 1/n from envariant swaps and normalization, solved exactly."""
    return list(_swap_solution(n))


# ===== FINE GRAINING AND THE CONDITIONAL CHAIN =====
def fine_grained_state(m: int, n: int) -> BipartiteState:
    """sqrt(m/n)|x1>|Y1> + sqrt((n-m)/n)|x2>|Y2> written over n ancilla branches."""
    if not 1 <= m <= n:
        raise InvalidSplitError(f"need 1 <= m <= n, got m={m}, n={n}")
    vec = np.zeros(2 * n, dtype=complex)
    branch = 1.0 / math.sqrt(n)
    for j in range(n):
        outcome = 0 if j < m else 1
        vec[outcome * n + j] = branch
    return BipartiteState(vector=CVec(entries=vec), dims=(2, n))


def fine_grain(m: int, n: int) -> Tuple[Fraction, Fraction]:
    """Aggregate n equal branches, m of them on x1: returns (m/n, (n-m)/n)."""
    state = fine_grained_state(m, n)
    amplitudes = state.vector.entries.reshape(2, n)
    nonzero = np.abs(amplitudes[amplitudes != 0])
    if nonzero.size != n or np.max(np.abs(nonzero - 1.0 / math.sqrt(n))) > UNIT_TOL:
        raise BornLabError("fine-grained branches are not equal-amplitude")
    weights = swap_derivation(n)
    return sum(weights[:m], Fraction(0)), sum(weights[m:], Fraction(0))


def zurek_chain(m: int, n: int) -> Fraction:
    """mu of m of n equal-amplitude outcomes as the product of (1 - 1/k), k = m+1..n."""
    if n < 1 or not 0 <= m <= n:
        raise InvalidSplitError(f"need 0 <= m <= n and n >= 1, got m={m}, n={n}")
    value = Fraction(1)
    for k in range(m + 1, n + 1):
        value *= 1 - Fraction(1, k)
    if value != Fraction(m, n):
        raise BornLabError(f"chain product {value} disagrees with {m}/{n}")
    return value


# ===== ORTHOGONALITY =====
def orthogonality_witness(x1: CVec, x2: CVec, e0: CVec, e1: CVec, e2: CVec) -> float:
    """
    Gram-matrix obstruction to a unitary x_i (x) E0 -> x_i (x) E_i.

    Equals |<x1|x2> (1 - <E1|E2>)|; zero is necessary for the unitary to exist.
    """
    for v in (x1, x2, e0, e1, e2):
        if not v.is_pure_state():
            raise InvalidStateError(f"input vector has norm {v.norm()!r}, not 1")
    if x1.dim != x2.dim or not e0.dim == e1.dim == e2.dim:
        raise InvalidDimsError("system and environment vectors must share their dimensions")
    before = tensor_product(x1, e0).inner(tensor_product(x2, e0))
    after = tensor_product(x1, e1).inner(tensor_product(x2, e2))
    return float(abs(before - after))


# ===== SHIFT INVARIANCE =====
class ShiftResult(BaseModel):
    mu_sum: float
    gap: float
    values: List[float]


def shift_invariance_check(
    a: Assignment,
    psi: CVec,
    eigenvalues: Sequence[float],
    k: float,
    context: Optional[Context] = None,
    tags: Optional[Sequence[ProbabilityTag]] = None,
) -> ShiftResult:
    """V = sum mu_i x_i against V_shift = sum mu_i (x_i + k); gap = |V_shift - V - k|."""
    if len(eigenvalues) != psi.dim:
        raise InvalidDimensionError(f"{len(eigenvalues)} eigenvalues for a dim-{psi.dim} state")
    if isinstance(a, TwoSlopeAssignment):
        raise NotApplicableError("two-slope has no per-outcome values")
    if context is None:
        context = partition_context(np.eye(psi.dim, dtype=complex), [[i] for i in range(psi.dim)])
    mu = [
        a.evaluate(m, context, psi if a.uses_state else None, tags).value
        for m in context.members
    ]
    v = math.fsum(m * x for m, x in zip(mu, eigenvalues))
    v_shift = math.fsum(m * (x + k) for m, x in zip(mu, eigenvalues))
    return ShiftResult(mu_sum=math.fsum(mu), gap=abs(v_shift - v - k), values=mu)


# ===== HOMOGENEITY AND DYADIC TAILS =====
Coefficient = Union[Fraction, QuadRational, float, int]


class BuschResult(BaseModel):
    rational_deviation: float
    limit_gap: float
    base_value: float
    rational_series: List[Tuple[float, float]] = Field(default_factory=list)
    real_series: List[Tuple[float, float]] = Field(default_factory=list)


class DyadicResult(BaseModel):
    error: float
    partial_sums: List[Tuple[int, float]]


def _scaled_value(
    a: Assignment,
    op: HermitianOperator,
    coeff: Coefficient,
    state: Optional[State],
    tag: Optional[ProbabilityTag],
) -> float:
    c = float(coeff)
    eig = op.eigenvalues()
    if c < 0 or c * eig[-1] > 1 + 1e-10 or c * eig[0] < -1e-10:
        raise InvalidScalingError(f"coefficient {coeff} pushes the operator outside the effect cone")
    scaled = op * c
    identity = HermitianOperator.identity(op.dim)
    ctx = Context.of([scaled, identity - scaled])
    tags = None
    if a.uses_tags:
        if tag is None:
            raise MissingTagsError(f"'{a.name}' needs the exact tag of the probed operator")
        exact = coeff if isinstance(coeff, QuadRational) else QuadRational(Fraction(coeff))
        weight = exact * tag.value
        tags = [ProbabilityTag(weight), ProbabilityTag(1 - weight)]
    return a.evaluate(scaled, ctx, state if a.uses_state else None, tags).value


def _default_state(a: Assignment, d: int, state: Optional[State]) -> Optional[State]:
    if state is None and a.uses_state:
        return HermitianOperator(entries=np.eye(d, dtype=complex) / d)
    return state


def busch_homogeneity_probe(
    a: Assignment,
    op: HermitianOperator,
    rationals: Sequence[RationalLike],
    reals: Sequence[Coefficient],
    tol: float = 1e-10,
    state: Optional[State] = None,
    tag: Optional[ProbabilityTag] = None,
) -> BuschResult:
    """
    max_q |mu(qA) - q mu(A)| over rationals, and the gap between mu(rA) and
    the limit of mu(qA) as q -> r, estimated by interpolating between the
    nearest grid rationals on either side of r.
    """
    if isinstance(a, TwoSlopeAssignment):
        raise NotApplicableError("two-slope acts on Q(sqrt2), not on effects")
    state = _default_state(a, op.dim, state)
    base = _scaled_value(a, op, Fraction(1), state, tag)

    qs = sorted(as_rational(q) for q in rationals)
    q_values = [(float(q), _scaled_value(a, op, q, state, tag)) for q in qs]
    deviation = max((abs(v - float(q) * base) for (_, v), q in zip(q_values, qs)), default=0.0)

    real_series: List[Tuple[float, float]] = []
    limit_gap = 0.0
    for r in reals:
        x = float(r)
        value = _scaled_value(a, op, r, state, tag)
        real_series.append((x, value))
        limit = _interpolate(q_values, x)
        if limit is not None:
            limit_gap = max(limit_gap, abs(limit - value))
    if deviation > tol or limit_gap > tol:
        logger.info("homogeneity probe %s: deviation %.3e, limit gap %.3e", a.name, deviation, limit_gap)
    return BuschResult(
        rational_deviation=deviation,
        limit_gap=limit_gap,
        base_value=base,
        rational_series=q_values,
        real_series=real_series,
    )


def _interpolate(points: List[Tuple[float, float]], x: float) -> Optional[float]:
    if not points:
        return None
    below = [p for p in points if p[0] <= x]
    above = [p for p in points if p[0] >= x]
    if not below:
        return above[0][1]
    if not above:
        return below[-1][1]
    (x0, y0), (x1, y1) = below[-1], above[0]
    if x1 == x0:
        return y0
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def dyadic_tail_check(
    a: Assignment,
    op: HermitianOperator,
    depth: int,
    state: Optional[State] = None,
    tag: Optional[ProbabilityTag] = None,
) -> DyadicResult:
    """|mu(A) - sum_{i=1..M} mu(A/2^i) - mu(A)/2^M| with each term in the context {A/2^i, I - A/2^i}."""
    if depth < 1:
        raise InvalidSplitError(f"depth must be at least 1, got {depth}")
    if isinstance(a, TwoSlopeAssignment):
        raise NotApplicableError("two-slope acts on Q(sqrt2), not on effects")
    state = _default_state(a, op.dim, state)
    whole = _scaled_value(a, op, Fraction(1), state, tag)
    partial = 0.0
    partial_sums: List[Tuple[int, float]] = []
    for i in range(1, depth + 1):
        partial += _scaled_value(a, op, Fraction(1, 2**i), state, tag)
        partial_sums.append((i, partial))
    error = abs(whole - partial - whole / 2**depth)
    return DyadicResult(error=error, partial_sums=partial_sums)


# ===== ADDITIVE PATHOLOGY =====
class PathologyResult(BaseModel):
    """Exact Cauchy/homogeneity checks and a discontinuity witness for two-slope"""
    c1: str
    c2: str
    pairs: int
    cauchy_failures: int
    homogeneity_failures: int
    witness_x: str
    witness_y: str
    distance: float
    value_gap: float


def random_quad(rng: np.random.Generator, bound: int = 1000) -> QuadRational:
    def q() -> Fraction:
        return Fraction(int(rng.integers(-bound, bound + 1)), int(rng.integers(1, bound + 1)))

    return QuadRational(q(), q())


def discontinuity_witness(within: float = 1e-6) -> Tuple[QuadRational, QuadRational]:
    """sqrt2 and a rational approximant closer than `within` in the reals."""
    return QuadRational.sqrt2(), QuadRational(sqrt2_approximant(within))


def additive_pathology(
    c1: RationalLike = 1,
    c2: RationalLike = 10000,
    pairs: int = 10000,
    within: float = 1e-6,
    seed: int = 0,
) -> PathologyResult:
    """Check f(x+y) = f(x)+f(y) and f(qx) = q f(x) exactly, then exhibit the discontinuity."""
    f = TwoSlopeAssignment(c1, c2)
    rng = rng_for(derive_seed(seed, "pathology"))
    cauchy_failures = 0
    homogeneity_failures = 0
    for _ in range(pairs):
        x, y = random_quad(rng), random_quad(rng)
        if f.value(x + y) != f.value(x) + f.value(y):
            cauchy_failures += 1
        q = Fraction(int(rng.integers(-100, 101)), int(rng.integers(1, 101)))
        if f.value(x.scale(q)) != f.value(x).scale(q):
            homogeneity_failures += 1

    x, y = discontinuity_witness(within)
    result = PathologyResult(
        c1=str(f.c1),
        c2=str(f.c2),
        pairs=pairs,
        cauchy_failures=cauchy_failures,
        homogeneity_failures=homogeneity_failures,
        witness_x=str(x),
        witness_y=str(y),
        distance=abs(quad_to_real(x - y)),
        value_gap=abs(quad_to_real(f.value(x) - f.value(y))),
    )
    logger.info("two-slope pathology: %d/%d Cauchy failures, gap %.3f at distance %.1e",
                cauchy_failures, pairs, result.value_gap, result.distance)
    return result
