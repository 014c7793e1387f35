# bornlab/gleason.py - Least-squares regularity fit of frame functions
import logging
import math
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import linalg as sla

from .assignments import Assignment
from .exceptions import InvalidDimensionError, NotApplicableError, UnderdeterminedFitError
from .linalg import (
    HermitianOperator,
    State,
    derive_seed,
    haar_random_unitary,
    partition_context,
    random_density_matrix,
)

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 1e-6
RANK_TOL = 1e-10


class FitResult(BaseModel):
    """Best Hermitian rho_hat with <x|rho_hat|x> ~ mu(x) over sampled frames"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rho_hat: HermitianOperator
    residual_rms: float
    condition: float
    sample_count: int
    rank: int

    @property
    def weight(self) -> float:
        """Frame weight W = Tr rho_hat"""
        return self.rho_hat.trace()


def hermitian_basis(d: int) -> List[np.ndarray]:
    """Orthonormal (Hilbert-Schmidt) basis of the d^2-dimensional real space of Hermitian matrices."""
    basis: List[np.ndarray] = []
    for j in range(d):
        m = np.zeros((d, d), dtype=complex)
        m[j, j] = 1.0
        basis.append(m)
    s = 1.0 / math.sqrt(2.0)
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = s
            basis.append(sym)
            asym = np.zeros((d, d), dtype=complex)
            asym[j, k] = -1j * s
            asym[k, j] = 1j * s
            basis.append(asym)
    return basis


def fit_density(
    a: Assignment,
    d: int,
    n_frames: int,
    seed: int,
    state: Optional[State] = None,
) -> FitResult:
    """
    Fit rho_hat to mu on the rank-1 vectors of n_frames Haar frames.

    Args:
        a: Assignment to fit; must be defined on rank-1 projectors
        d: Hilbert-space dimension
        n_frames: Number of random orthonormal bases
        seed: Sampling seed
        state: State fed to state-consuming assignments (random density matrix if omitted)

    The trace of rho_hat is left free; no regularization is applied.
    """
    if d < 1:
        raise InvalidDimensionError(f"dimension must be positive, got {d}")
    if n_frames * d < d * d:
        raise UnderdeterminedFitError(f"{n_frames} frames give {n_frames * d} equations for {d * d} parameters")
    if a.domain != "operator":
        raise NotApplicableError(f"'{a.name}' is not defined on rank-1 projectors")
    if a.uses_tags:
        raise NotApplicableError(f"'{a.name}' needs exact tags, which Haar frames do not provide")
    if not a.supports_dim(d):
        raise NotApplicableError(f"'{a.name}' is undefined in d={d}")
    if a.uses_state and state is None:
        state = random_density_matrix(d, derive_seed(seed, "hidden-state"))

    basis = hermitian_basis(d)
    rows: List[np.ndarray] = []
    targets: List[float] = []
    for f in range(n_frames):
        u = haar_random_unitary(d, derive_seed(seed, "frame", f))
        frame = partition_context(u, [[i] for i in range(d)])
        for i, member in enumerate(frame.members):
            x = u[:, i]
            rows.append(np.array([np.real(np.vdot(x, b @ x)) for b in basis]))
            targets.append(a.evaluate(member, frame, state if a.uses_state else None).value)

    design = np.vstack(rows)
    y = np.asarray(targets, dtype=float)
    q, r, piv = sla.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > RANK_TOL * diag[0]))
    if rank < d * d:
        raise UnderdeterminedFitError(f"design matrix rank {rank} < {d * d}")

    coef = np.empty(d * d)
    coef[piv] = sla.solve_triangular(r, q.T @ y)
    residual = design @ coef - y
    rho_hat = sum((c * b for c, b in zip(coef, basis)), np.zeros((d, d), dtype=complex))
    result = FitResult(
        rho_hat=HermitianOperator(entries=rho_hat),
        residual_rms=float(np.sqrt(np.mean(residual * residual))),
        condition=float(diag[0] / diag[-1]),
        sample_count=len(targets),
        rank=rank,
    )
    logger.info("fit %s d=%d frames=%d: residual %.3e", a.name, d, n_frames, result.residual_rms)
    return result


def regularity_verdict(fit: FitResult, threshold: float = DEFAULT_THRESHOLD) -> str:
    """'regular' iff the fit residual is within threshold."""
    return "regular" if fit.residual_rms <= threshold else "non-regular"
