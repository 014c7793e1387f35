# bornlab/linalg.py - Dense complex linear algebra, operator predicates, contexts, sampling
import hashlib
import logging
import math
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy import linalg as sla

from .exceptions import (
    IndeterminateFormError,
    InvalidDimensionError,
    InvalidOperatorError,
    InvalidPartitionError,
    InvalidStateError,
    NotInContextAlgebraError,
    TypeMismatchError,
)

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
PROJECTOR_TOL = 1e-10
EFFECT_TOL = 1e-10
TRACE_TOL = 1e-12
UNIT_NORM_TOL = 1e-12
COMPLETENESS_TOL = 1e-10
DEGENERACY_TOL = 1e-9
SUBSET_MATCH_TOL = 1e-9

_SEED_MASK = (1 << 64) - 1


# ===== EXTENDED REALS =====
class XReal(BaseModel):
    """Element of the extended real line with saturating arithmetic"""
    model_config = ConfigDict(frozen=True)

    value: float

    @field_validator("value", mode="before")
    @classmethod
    def _no_nan(cls, v: Any) -> float:
        v = float(v)
        if math.isnan(v):
            raise IndeterminateFormError("extended real value is undefined (nan)")
        return v

    @classmethod
    def of(cls, value: Union["XReal", float, int]) -> "XReal":
        if isinstance(value, XReal):
            return value
        return cls(value=value)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)

    def __float__(self) -> float:
        return self.value

    def __add__(self, other: Union["XReal", float, int]) -> "XReal":
        a, b = self.value, float(XReal.of(other))
        if math.isinf(a) and math.isinf(b) and a != b:
            raise IndeterminateFormError("inf - inf has no value")
        return XReal(value=a + b)

    __radd__ = __add__

    def __neg__(self) -> "XReal":
        return XReal(value=-self.value)

    def __sub__(self, other: Union["XReal", float, int]) -> "XReal":
        return self + (-XReal.of(other))

    def __rsub__(self, other: Union["XReal", float, int]) -> "XReal":
        return XReal.of(other) - self

    def __mul__(self, scalar: float) -> "XReal":
        # 0 * inf = 0, the measure-theory convention
        if scalar == 0:
            return XReal(value=0.0)
        return XReal(value=self.value * float(scalar))

    __rmul__ = __mul__

    def __abs__(self) -> "XReal":
        return XReal(value=abs(self.value))

    def __lt__(self, other: Union["XReal", float, int]) -> bool:
        return self.value < float(XReal.of(other))

    def __le__(self, other: Union["XReal", float, int]) -> bool:
        return self.value <= float(XReal.of(other))

    def __gt__(self, other: Union["XReal", float, int]) -> bool:
        return self.value > float(XReal.of(other))

    def __ge__(self, other: Union["XReal", float, int]) -> bool:
        return self.value >= float(XReal.of(other))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (XReal, int, float)):
            return self.value == float(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.value)


def xsum(values: Sequence[XReal]) -> XReal:
    total = XReal(value=0.0)
    for v in values:
        total = total + v
    return total


# ===== VECTORS AND OPERATORS =====
def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class CVec(BaseModel):
    """Complex vector of amplitudes"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: np.ndarray

    @field_validator("entries", mode="before")
    @classmethod
    def _as_vector(cls, v: Any) -> np.ndarray:
        arr = np.array(v, dtype=complex).reshape(-1)
        if arr.size == 0:
            raise InvalidDimensionError("vector dimension must be positive")
        return _frozen(arr)

    @classmethod
    def pure(cls, entries: Any, normalize: bool = False) -> "CVec":
        """Build a PureState; with normalize=False the input must already be unit."""
        vec = cls(entries=entries)
        n = vec.norm()
        if normalize:
            if n == 0:
                raise InvalidStateError("cannot normalize the zero vector")
            return cls(entries=vec.entries / n)
        if abs(n - 1.0) > UNIT_NORM_TOL:
            raise InvalidStateError(f"state norm {n!r} is not 1")
        return vec

    @classmethod
    def basis(cls, d: int, i: int) -> "CVec":
        if d < 1:
            raise InvalidDimensionError(f"dimension must be positive, got {d}")
        e = np.zeros(d, dtype=complex)
        e[i] = 1.0
        return cls(entries=e)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def is_pure_state(self) -> bool:
        return abs(self.norm() - 1.0) <= UNIT_NORM_TOL

    def inner(self, other: "CVec") -> complex:
        """<self|other>"""
        return complex(np.vdot(self.entries, other.entries))

    def projector(self) -> "HermitianOperator":
        x = self.entries
        return HermitianOperator(entries=np.outer(x, x.conj()))


class HermitianOperator(BaseModel):
    """d x d complex Hermitian matrix"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: np.ndarray

    @field_validator("entries", mode="before")
    @classmethod
    def _as_hermitian(cls, v: Any) -> np.ndarray:
        m = np.array(v, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise InvalidOperatorError(f"operator must be a non-empty square matrix, got shape {m.shape}")
        skew = float(np.max(np.abs(m - m.conj().T)))
        if skew > HERMITIAN_TOL:
            raise InvalidOperatorError(f"operator is not Hermitian (max |M - M^H| = {skew:.3e})")
        return _frozen((m + m.conj().T) / 2)

    @classmethod
    def identity(cls, d: int) -> "HermitianOperator":
        if d < 1:
            raise InvalidDimensionError(f"dimension must be positive, got {d}")
        return cls(entries=np.eye(d, dtype=complex))

    @classmethod
    def zero(cls, d: int) -> "HermitianOperator":
        return cls(entries=np.zeros((d, d), dtype=complex))

    @classmethod
    def from_columns(cls, columns: np.ndarray) -> "HermitianOperator":
        """Projector V V^H onto the span of orthonormal columns."""
        v = np.asarray(columns, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        return cls(entries=v @ v.conj().T)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    def eigenvalues(self) -> np.ndarray:
        return sla.eigvalsh(self.entries)

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def rank(self, tol: float = DEGENERACY_TOL) -> int:
        return int(np.sum(np.abs(self.eigenvalues()) > tol))

    def is_projector(self, tol: float = PROJECTOR_TOL) -> bool:
        m = self.entries
        return float(np.linalg.norm(m @ m - m)) <= tol

    def is_effect(self, tol: float = EFFECT_TOL) -> bool:
        w = self.eigenvalues()
        return bool(w[0] >= -tol and w[-1] <= 1.0 + tol)

    def is_density_matrix(self) -> bool:
        return bool(self.eigenvalues()[0] >= -EFFECT_TOL and abs(self.trace() - 1.0) <= TRACE_TOL)

    def distance(self, other: "HermitianOperator") -> float:
        """Frobenius distance"""
        return float(np.linalg.norm(self.entries - other.entries))

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(entries=self.entries + other.entries)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(entries=self.entries - other.entries)

    def __mul__(self, scalar: float) -> "HermitianOperator":
        return HermitianOperator(entries=float(scalar) * self.entries)

    __rmul__ = __mul__


State = Union[CVec, HermitianOperator]


def as_density(state: State) -> np.ndarray:
    """Density matrix of a PureState or DensityMatrix, validated."""
    if isinstance(state, CVec):
        if not state.is_pure_state():
            raise InvalidStateError(f"state norm {state.norm()!r} is not 1")
        x = state.entries
        return np.outer(x, x.conj())
    if isinstance(state, HermitianOperator):
        if not state.is_density_matrix():
            raise InvalidStateError("operator is not a density matrix")
        return state.entries
    raise InvalidStateError(f"unsupported state type {type(state).__name__}")


def require_effect(op: HermitianOperator) -> HermitianOperator:
    if not op.is_effect():
        raise InvalidOperatorError("operator is not an effect (eigenvalues outside [0, 1])")
    return op


# ===== CONTEXTS =====
class Context(BaseModel):
    """Ordered set of co-measured effects"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    members: Tuple[HermitianOperator, ...]
    complete: bool
    projective: bool

    @model_validator(mode="after")
    def _check_flags(self) -> "Context":
        if not self.members:
            raise InvalidPartitionError("context needs at least one member")
        d = self.members[0].dim
        for m in self.members:
            if m.dim != d:
                raise InvalidDimensionError("context members have different dimensions")
            require_effect(m)
        if self.complete and _completeness_gap(self.members) > COMPLETENESS_TOL:
            raise InvalidOperatorError("context marked complete but members do not sum to I")
        if self.projective and not _is_orthogonal_projector_set(self.members):
            raise InvalidOperatorError("context marked projective but members are not orthogonal projectors")
        return self

    @classmethod
    def of(cls, members: Sequence[HermitianOperator]) -> "Context":
        """Build a context, deriving the complete and projective flags from the members."""
        members = tuple(members)
        complete = bool(members) and _completeness_gap(members) <= COMPLETENESS_TOL
        projective = bool(members) and _is_orthogonal_projector_set(members)
        return cls(members=members, complete=complete, projective=projective)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def __len__(self) -> int:
        return len(self.members)

    def subset_sum(self, indices: Sequence[int]) -> HermitianOperator:
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for i in indices:
            total = total + self.members[i].entries
        return HermitianOperator(entries=total)


def _completeness_gap(members: Sequence[HermitianOperator]) -> float:
    d = members[0].dim
    total = sum((m.entries for m in members), np.zeros((d, d), dtype=complex))
    return float(np.linalg.norm(total - np.eye(d)))


def _is_orthogonal_projector_set(members: Sequence[HermitianOperator]) -> bool:
    if not all(m.is_projector() for m in members):
        return False
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            if np.linalg.norm(members[i].entries @ members[j].entries) > PROJECTOR_TOL:
                return False
    return True


def match_subset(op: HermitianOperator, ctx: Context, tol: float = SUBSET_MATCH_TOL) -> List[int]:
    """
    Identify op with a sum of context members.

    Depth-first search over subsets in member order, trying inclusion first.
    A branch is cut as soon as the remainder stops being positive semidefinite,
    since every member is an effect. Raises NotInContextAlgebraError when no
    subset leaves a zero remainder.
    """
    if op.dim != ctx.dim:
        raise InvalidDimensionError(f"operator dim {op.dim} does not match context dim {ctx.dim}")
    members = [m.entries for m in ctx.members]
    best = [math.inf]

    def search(i: int, remainder: np.ndarray, chosen: List[int]) -> Optional[List[int]]:
        leftover = float(np.linalg.norm(remainder))
        best[0] = min(best[0], leftover)
        if i == len(members):
            return chosen if leftover <= tol else None
        trial = remainder - members[i]
        if sla.eigvalsh(trial)[0] >= -tol:
            found = search(i + 1, trial, chosen + [i])
            if found is not None:
                return found
        return search(i + 1, remainder, chosen)

    chosen = search(0, np.array(op.entries), [])
    if chosen is None:
        raise NotInContextAlgebraError(
            f"operator is not a subset sum of the context members (closest leftover {best[0]:.3e})"
        )
    return chosen


# ===== SEEDED SAMPLING =====
def derive_seed(seed: int, *labels: Any) -> int:
    """Stable 64-bit child seed from a parent seed and labels."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed) & _SEED_MASK).encode())
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode())
    return int.from_bytes(h.digest(), "big")


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & _SEED_MASK)


def haar_random_unitary(d: int, seed: int) -> np.ndarray:
    """Haar-distributed d x d unitary via QR of a complex Ginibre matrix."""
    if d < 1:
        raise InvalidDimensionError(f"dimension must be positive, got {d}")
    rng = rng_for(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2.0)
    q, r = sla.qr(z)
    diag = np.diag(r)
    phases = diag / np.abs(diag)
    return q * phases[None, :]


def random_partition(d: int, n_blocks: int, rng: np.random.Generator) -> List[List[int]]:
    """Random partition of range(d) into n_blocks non-empty blocks."""
    if n_blocks < 1 or n_blocks > d:
        raise InvalidPartitionError(f"cannot split {d} directions into {n_blocks} blocks")
    perm = rng.permutation(d)
    cuts = sorted(int(c) for c in rng.choice(np.arange(1, d), size=n_blocks - 1, replace=False)) if n_blocks > 1 else []
    return [sorted(int(i) for i in block) for block in np.split(perm, cuts)]


def partition_context(unitary: np.ndarray, blocks: Sequence[Sequence[int]]) -> Context:
    """Complete projective context of projectors onto groups of unitary columns."""
    members = tuple(HermitianOperator.from_columns(unitary[:, list(b)]) for b in blocks)
    return Context(members=members, complete=True, projective=True)


def random_projective_context(d: int, n_blocks: int, seed: int) -> Context:
    if d < 1:
        raise InvalidDimensionError(f"dimension must be positive, got {d}")
    if n_blocks < 1 or n_blocks > d:
        raise InvalidPartitionError(f"n_blocks must lie in [1, {d}], got {n_blocks}")
    unitary = haar_random_unitary(d, seed)
    blocks = random_partition(d, n_blocks, rng_for(derive_seed(seed, "partition")))
    return partition_context(unitary, blocks)


def random_state(d: int, seed: int) -> CVec:
    if d < 1:
        raise InvalidDimensionError(f"dimension must be positive, got {d}")
    rng = rng_for(seed)
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return CVec(entries=z / np.linalg.norm(z))


def random_density_matrix(d: int, seed: int, rank: Optional[int] = None) -> HermitianOperator:
    """Random density matrix from a Ginibre matrix of the given rank."""
    if d < 1:
        raise InvalidDimensionError(f"dimension must be positive, got {d}")
    k = d if rank is None else rank
    rng = rng_for(seed)
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    return HermitianOperator(entries=rho / np.real(np.trace(rho)))


def random_effect(d: int, seed: int) -> HermitianOperator:
    rng = rng_for(seed)
    u = haar_random_unitary(d, derive_seed(seed, "effect-basis"))
    w = rng.uniform(0.0, 1.0, size=d)
    return HermitianOperator(entries=(u * w[None, :]) @ u.conj().T)


# ===== TENSOR PRODUCTS AND COARSE GRAINING =====
Tensorable = Union[CVec, HermitianOperator, np.ndarray]


def _kind(x: Tensorable) -> str:
    if isinstance(x, CVec):
        return "vector"
    if isinstance(x, HermitianOperator):
        return "operator"
    if isinstance(x, np.ndarray):
        return "vector" if x.ndim == 1 else "operator"
    raise TypeMismatchError(f"cannot take tensor product of {type(x).__name__}")


def tensor_product(a: Tensorable, b: Tensorable) -> Tensorable:
    if _kind(a) != _kind(b):
        raise TypeMismatchError(f"tensor product of a {_kind(a)} with a {_kind(b)}")
    if isinstance(a, CVec) and isinstance(b, CVec):
        return CVec(entries=np.kron(a.entries, b.entries))
    if isinstance(a, HermitianOperator) and isinstance(b, HermitianOperator):
        return HermitianOperator(entries=np.kron(a.entries, b.entries))
    left = a.entries if isinstance(a, (CVec, HermitianOperator)) else a
    right = b.entries if isinstance(b, (CVec, HermitianOperator)) else b
    return np.kron(left, right)


def coarse_grain(ctx: Context, partition: Sequence[Sequence[int]]) -> Context:
    """Context whose members are sums over the blocks of a partition of member indices."""
    n = len(ctx)
    seen: List[int] = []
    for block in partition:
        if not block:
            raise InvalidPartitionError("partition blocks must be non-empty")
        seen.extend(int(i) for i in block)
    if sorted(seen) != list(range(n)):
        raise InvalidPartitionError(f"partition must cover member indices 0..{n - 1} exactly once")
    members = tuple(ctx.subset_sum(block) for block in partition)
    return Context(members=members, complete=ctx.complete, projective=ctx.projective)


# ===== SPECTRAL DECOMPOSITION =====
def spectral_decompose(op: Union[HermitianOperator, np.ndarray]) -> List[Tuple[float, HermitianOperator]]:
    """
    Eigenvalue/projector pairs, eigenvalues descending.

    Adjacent eigenvalues within DEGENERACY_TOL of a cluster's first value are
    merged into one projector; the cluster mean is reported.
    """
    if not isinstance(op, HermitianOperator):
        op = HermitianOperator(entries=op)
    w, v = sla.eigh(op.entries)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]

    clusters: List[List[int]] = []
    for i in range(len(w)):
        if clusters and w[clusters[-1][0]] - w[i] <= DEGENERACY_TOL:
            clusters[-1].append(i)
        else:
            clusters.append([i])

    return [
        (float(np.mean(w[c])), HermitianOperator.from_columns(v[:, c]))
        for c in clusters
    ]


def reconstruct(decomposition: Sequence[Tuple[float, HermitianOperator]]) -> HermitianOperator:
    d = decomposition[0][1].dim
    total = np.zeros((d, d), dtype=complex)
    for value, proj in decomposition:
        total = total + value * proj.entries
    return HermitianOperator(entries=total)
