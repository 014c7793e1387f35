# bornlab/frequency.py - Finite-N frequency operator: deviation norms, brute-force oracle, mixture gap
import logging
import math
from fractions import Fraction
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy import stats

from .exact import as_rational
from .exceptions import InvalidGridError, InvalidSpecError, SizeLimitError
from .linalg import CVec

logger = logging.getLogger(__name__)

PROBABILITY_SUM_TOL = 1e-12
BRUTEFORCE_LIMIT = 2_000_000
BINOMIAL_WINDOW_SIGMAS = 40.0
MIN_STUDY_POINTS = 4


def _as_probability(v: Any) -> float:
    if isinstance(v, (Fraction, str)):
        return float(as_rational(v))
    return float(v)


# ===== SPECS AND SERIES =====
class FrequencySpec(BaseModel):
    """Outcome probabilities p_i, target outcome k and number of copies N"""
    probabilities: List[float]
    k: int = 0
    copies: int = 1

    @field_validator("probabilities", mode="before")
    @classmethod
    def _coerce(cls, v: Any) -> List[float]:
        return [_as_probability(p) for p in v]

    @model_validator(mode="after")
    def _check(self) -> "FrequencySpec":
        if not self.probabilities:
            raise InvalidSpecError("at least one outcome probability is required")
        if any(p < 0 or p > 1 or math.isnan(p) for p in self.probabilities):
            raise InvalidSpecError(f"probabilities must lie in [0, 1]: {self.probabilities}")
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > PROBABILITY_SUM_TOL:
            raise InvalidSpecError(f"probabilities sum to {total!r}, not 1")
        if not 0 <= self.k < len(self.probabilities):
            raise InvalidSpecError(f"target outcome {self.k} out of range for {len(self.probabilities)} outcomes")
        if self.copies < 1:
            raise InvalidSpecError(f"need at least one copy, got {self.copies}")
        return self

    @property
    def p(self) -> float:
        return self.probabilities[self.k]

    def with_copies(self, n: int) -> "FrequencySpec":
        return FrequencySpec(probabilities=self.probabilities, k=self.k, copies=n)


class ConvergenceSeries(BaseModel):
    """(N, value) points with a log-log power-law fit"""
    points: List[Tuple[int, float]]
    slope: Optional[float] = None
    prefactor: Optional[float] = None
    exact_convergence: bool = False
    limit: Optional[float] = None

    @model_validator(mode="after")
    def _increasing(self) -> "ConvergenceSeries":
        ns = [n for n, _ in self.points]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise InvalidGridError(f"N must be strictly increasing, got {ns}")
        return self

    @classmethod
    def fitted(cls, points: Sequence[Tuple[int, float]], limit: Optional[float] = None) -> "ConvergenceSeries":
        """Fit value ~ prefactor * N^slope over the positive points; all-zero series converge exactly."""
        pts = [(int(n), float(v)) for n, v in points]
        if pts and all(v == 0.0 for _, v in pts):
            return cls(points=pts, exact_convergence=True, limit=limit)
        positive = [(n, v) for n, v in pts if v > 0]
        if len(positive) < 2:
            return cls(points=pts, limit=limit)
        x = np.log([n for n, _ in positive])
        y = np.log([v for _, v in positive])
        slope, intercept = np.polyfit(x, y, 1)
        return cls(points=pts, slope=float(slope), prefactor=float(math.exp(intercept)), limit=limit)


def geometric_grid(start: int, stop: int, factor: int = 10) -> List[int]:
    if start < 1 or factor < 2 or stop < start:
        raise InvalidGridError(f"bad geometric grid start={start}, stop={stop}, factor={factor}")
    grid = []
    n = start
    while n <= stop:
        grid.append(n)
        n *= factor
    return grid


# ===== DEVIATION NORMS =====
def frequency_deviation_norm(spec: FrequencySpec) -> float:
    """
    ||(f_N^k - p_k) psi^(x)N|| from the binomial distribution of the count of k.

    Only counts within BINOMIAL_WINDOW_SIGMAS standard deviations of N p_k
    are summed; the rest carry less than double-precision mass.
    """
    p, n = spec.p, spec.copies
    if p == 0.0 or p == 1.0:
        return 0.0
    sigma = math.sqrt(n * p * (1 - p))
    lo = max(0, int(math.floor(n * p - BINOMIAL_WINDOW_SIGMAS * sigma)) - 1)
    hi = min(n, int(math.ceil(n * p + BINOMIAL_WINDOW_SIGMAS * sigma)) + 1)
    m = np.arange(lo, hi + 1)
    pmf = stats.binom.pmf(m, n, p)
    return math.sqrt(math.fsum(pmf * (m / n - p) ** 2))


def closed_form_deviation(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n)


def _outcome_probabilities(psi: CVec) -> List[float]:
    return [float(abs(a) ** 2) for a in psi.entries]


def _check_size(d: int, n: int) -> None:
    if n < 1:
        raise InvalidSpecError(f"need at least one copy, got {n}")
    if d**n > BRUTEFORCE_LIMIT:
        raise SizeLimitError(f"{d}^{n} outcome strings exceed the limit of {BRUTEFORCE_LIMIT}")


def _count_distribution(amplitudes: np.ndarray, k: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """|amplitude|^2 and count of outcome k over all d^N outcome strings."""
    d = len(amplitudes)
    indicator = (np.arange(d) == k).astype(float)
    amps = np.ones(1, dtype=complex)
    counts = np.zeros(1)
    for _ in range(n):
        amps = np.kron(amps, amplitudes)
        counts = np.add.outer(counts, indicator).ravel()
    return np.abs(amps) ** 2, counts


def frequency_apply_bruteforce(psi: CVec, k: int, n: int) -> float:
    """Deviation norm by explicit expansion of psi^(x)N over outcome strings."""
    if not psi.is_pure_state():
        raise InvalidSpecError("state must be a unit vector")
    if not 0 <= k < psi.dim:
        raise InvalidSpecError(f"target outcome {k} out of range for dim {psi.dim}")
    _check_size(psi.dim, n)
    weights, counts = _count_distribution(psi.entries, k, n)
    p = _outcome_probabilities(psi)[k]
    return math.sqrt(math.fsum(weights * (counts / n - p) ** 2))


# ===== MIXTURES =====
Mixture = Sequence[Tuple[float, CVec]]


class MixtureGap(BaseModel):
    """Frequency variance under rho^(x)N against the mixture of product states"""
    model_config = ConfigDict(frozen=True)

    iid: ConvergenceSeries
    mixture: ConvergenceSeries
    expectation_iid: float
    expectation_mixture: float
    q: float
    spread: float


def _check_mixture(mixture: Mixture, k: int) -> Tuple[List[float], List[float]]:
    if not mixture:
        raise InvalidSpecError("mixture needs at least one component")
    weights = [float(w) for w, _ in mixture]
    if any(w < 0 for w in weights) or abs(math.fsum(weights) - 1.0) > PROBABILITY_SUM_TOL:
        raise InvalidSpecError(f"mixture weights {weights} are not a probability vector")
    qs: List[float] = []
    for _, psi in mixture:
        if not psi.is_pure_state():
            raise InvalidSpecError("mixture components must be unit vectors")
        if not 0 <= k < psi.dim:
            raise InvalidSpecError(f"target outcome {k} out of range for dim {psi.dim}")
        qs.append(_outcome_probabilities(psi)[k])
    return weights, qs


def mixture_from_q(weights: Sequence[Any], qs: Sequence[Any]) -> List[Tuple[float, CVec]]:
    """d=2 components sqrt(q_j)|0> + sqrt(1-q_j)|1>, so outcome 0 has probability q_j."""
    if len(weights) != len(qs):
        raise InvalidSpecError(f"{len(weights)} weights for {len(qs)} q values")
    mixture = []
    for w, q in zip(weights, qs):
        qf = _as_probability(q)
        if not 0 <= qf <= 1:
            raise InvalidSpecError(f"q value {q} outside [0, 1]")
        mixture.append((_as_probability(w), CVec(entries=[math.sqrt(qf), math.sqrt(1 - qf)])))
    return mixture


def _frequency_moments(n: int, q: float) -> Tuple[float, float]:
    """Mean and variance of the frequency count/N under N i.i.d. draws with probability q."""
    # weighted sums can overshoot [0, 1] by an ulp
    q = min(max(q, 0.0), 1.0)
    mean, var = stats.binom.stats(n, q, moments="mv")
    return float(mean) / n, float(var) / (n * n)


def mixed_variance_gap(mixture: Mixture, k: int, n_grid: Sequence[int]) -> MixtureGap:
    """
    Var(f_N^k) under rho^(x)N (i.i.d. with q = sum_j p_j q_j) and under
    sum_j p_j (psi_j psi_j^H)^(x)N (a mixture of i.i.d. laws).

    The mixture moments come from each component's own binomial law by the
    law of total variance. The first series vanishes as 1/N; the second
    tends to Var_j(q_j).
    """
    weights, qs = _check_mixture(mixture, k)
    grid = [int(n) for n in n_grid]
    if not grid or any(n < 1 for n in grid):
        raise InvalidGridError(f"copies must be positive, got {list(n_grid)}")
    q = math.fsum(w * qj for w, qj in zip(weights, qs))
    spread = math.fsum(w * (qj - q) ** 2 for w, qj in zip(weights, qs))

    iid: List[Tuple[int, float]] = []
    mixed: List[Tuple[int, float]] = []
    expectation_iid = expectation_mixture = 0.0
    for n in grid:
        expectation_iid, var_iid = _frequency_moments(n, q)
        components = [_frequency_moments(n, qj) for qj in qs]
        expectation_mixture = math.fsum(w * m for w, (m, _) in zip(weights, components))
        var_mix = math.fsum(
            w * (v + (m - expectation_mixture) ** 2) for w, (m, v) in zip(weights, components)
        )
        iid.append((n, var_iid))
        mixed.append((n, var_mix))
    return MixtureGap(
        iid=ConvergenceSeries.fitted(iid, limit=0.0),
        mixture=ConvergenceSeries.fitted(mixed, limit=spread),
        expectation_iid=expectation_iid,
        expectation_mixture=expectation_mixture,
        q=q,
        spread=spread,
    )


class BruteForceMixture(BaseModel):
    var_iid: float
    var_mixture: float
    mean_iid: float
    mean_mixture: float


def mixture_bruteforce(mixture: Mixture, k: int, n: int) -> BruteForceMixture:
    """Expand both N-copy constructions over outcome strings and take moments of the frequency."""
    weights, _ = _check_mixture(mixture, k)
    d = mixture[0][1].dim
    _check_size(d, n)
    rho_diag = sum(w * np.abs(psi.entries) ** 2 for w, psi in mixture)
    p_iid, counts = _count_distribution(np.sqrt(rho_diag).astype(complex), k, n)
    freq = counts / n
    p_mix = sum(w * _count_distribution(psi.entries, k, n)[0] for w, psi in mixture)

    def moments(p: np.ndarray) -> Tuple[float, float]:
        mean = math.fsum(p * freq)
        return math.fsum(p * (freq - mean) ** 2), mean

    var_iid, mean_iid = moments(p_iid)
    var_mix, mean_mix = moments(p_mix)
    return BruteForceMixture(var_iid=var_iid, var_mixture=var_mix, mean_iid=mean_iid, mean_mixture=mean_mix)


# ===== CONVERGENCE STUDY =====
def hartle_convergence_study(spec: FrequencySpec, n_grid: Sequence[int]) -> ConvergenceSeries:
    """Deviation norms over n_grid with the fitted log-log slope (about -1/2 unless p_k is 0 or 1)."""
    grid = [int(n) for n in n_grid]
    if len(grid) < MIN_STUDY_POINTS:
        raise InvalidGridError(f"need at least {MIN_STUDY_POINTS} grid points, got {len(grid)}")
    if grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidGridError(f"grid must be positive and strictly increasing, got {grid}")
    points = [(n, frequency_deviation_norm(spec.with_copies(n))) for n in grid]
    series = ConvergenceSeries.fitted(points, limit=0.0)
    logger.info("frequency study p=%.6g: slope %s", spec.p, series.slope)
    return series
