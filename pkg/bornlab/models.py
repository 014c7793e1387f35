# bornlab/models.py - Serializable verdicts, matrices and reports
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .exceptions import BornLabError

SCHEMA_VERSION = "1"


def operator_payload(matrix: np.ndarray) -> Dict[str, List[List[float]]]:
    """Complex matrix as nested real/imag lists."""
    m = np.asarray(matrix, dtype=complex)
    return {"real": np.real(m).tolist(), "imag": np.imag(m).tolist()}


def payload_matrix(payload: Dict[str, List[List[float]]]) -> np.ndarray:
    return np.array(payload["real"], dtype=float) + 1j * np.array(payload["imag"], dtype=float)


# ===== PROPERTY VERDICTS =====
class Witness(BaseModel):
    """Single failing evaluation, enough to replay it"""
    dim: Optional[int] = None
    trial: int
    trial_seed: int
    labels: List[str]
    values: List[float]
    exact_values: Optional[List[str]] = None
    discrepancy: float
    description: str = ""
    operators: Dict[str, Dict[str, List[List[float]]]] = Field(default_factory=dict)


class PropertyVerdict(BaseModel):
    """Outcome of one property check for one assignment"""
    property: str
    assignment: str
    applicable: bool = True
    holds: Optional[bool] = None
    reason: Optional[str] = None
    trials: int = 0
    tolerance: float
    seed: int
    dims: List[int] = Field(default_factory=list)
    max_discrepancy: float = 0.0
    witness: Optional[Witness] = None
    note: Optional[str] = None
    extras: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _witness_matches_verdict(self) -> "PropertyVerdict":
        if not self.applicable:
            if self.holds is not None or self.witness is not None:
                raise BornLabError("not-applicable verdicts carry neither a verdict nor a witness")
            return self
        if self.holds is None:
            raise BornLabError("applicable verdicts must hold or fail")
        if self.holds == (self.witness is not None):
            raise BornLabError("a verdict fails exactly when it carries a witness")
        if self.witness is not None and not self.witness.discrepancy > self.tolerance:
            raise BornLabError("witness discrepancy must exceed the tolerance")
        return self

    @property
    def status(self) -> str:
        if not self.applicable:
            return "n/a"
        return "holds" if self.holds else "fails"


class PropertyMatrix(BaseModel):
    """Assignments x properties grid of verdicts"""
    rows: List[str] = Field(default_factory=list)
    columns: List[str] = Field(default_factory=list)
    cells: Dict[str, Dict[str, PropertyVerdict]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _populated(self) -> "PropertyMatrix":
        for row in self.rows:
            missing = [c for c in self.columns if c not in self.cells.get(row, {})]
            if missing:
                raise BornLabError(f"matrix row '{row}' is missing {missing}")
        return self

    def cell(self, assignment: str, prop: str) -> PropertyVerdict:
        return self.cells[assignment][prop]

    def statuses(self) -> Dict[str, Dict[str, str]]:
        return {r: {c: self.cells[r][c].status for c in self.columns} for r in self.rows}


class Lemma1Record(BaseModel):
    """strong-normalization == (additivity and normalization) on one assignment"""
    assignment: str
    strong: Optional[bool] = None
    additive: Optional[bool] = None
    normalized: Optional[bool] = None
    consistent: Optional[bool] = None
    skipped_reason: Optional[str] = None


# ===== CONTINUITY =====
class SeriesPoint(BaseModel):
    parameter: float
    value: float
    label: str = ""


class Jump(BaseModel):
    left: SeriesPoint
    right: SeriesPoint
    delta: float


class ContinuityResult(BaseModel):
    """Evaluated path and the jumps found along it"""
    assignment: str
    path: str
    tolerance: float
    step: float
    series: List[SeriesPoint]
    jumps: List[Jump] = Field(default_factory=list)

    @property
    def max_jump(self) -> float:
        return max((j.delta for j in self.jumps), default=0.0)


# ===== REPORT =====
class ExpectationOutcome(BaseModel):
    assignment: str
    property: str
    expected: str
    actual: str
    line: int = 0

    @property
    def agrees(self) -> bool:
        return self.expected == self.actual


class Report(BaseModel):
    """Everything a scenario run produces; timings are the only non-deterministic part"""
    schema_version: str = SCHEMA_VERSION
    version: str
    scenario: Dict[str, Any]
    seed: int
    matrix: PropertyMatrix = Field(default_factory=PropertyMatrix)
    lemma1: List[Lemma1Record] = Field(default_factory=list)
    harness: Dict[str, List[Dict[str, Any]]] = Field(default_factory=dict)
    expectations: List[ExpectationOutcome] = Field(default_factory=list)
    mismatches: List[str] = Field(default_factory=list)
    series: Dict[str, List[Tuple[float, float]]] = Field(default_factory=dict)
    timings: Dict[str, float] = Field(default_factory=dict)

    def deterministic_payload(self) -> Dict[str, Any]:
        """JSON-ready dump without wall times."""
        data = self.model_dump(mode="json")
        data.pop("timings", None)
        return data
