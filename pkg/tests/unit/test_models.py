# tests/unit/test_models.py - Test verdict, matrix and report models
import numpy as np
import pytest

from bornlab.exceptions import BornLabError
from bornlab.models import (
    ContinuityResult,
    ExpectationOutcome,
    Jump,
    PropertyMatrix,
    PropertyVerdict,
    Report,
    SeriesPoint,
    Witness,
    operator_payload,
    payload_matrix,
)


def make_witness(discrepancy=0.5):
    return Witness(
        dim=2, trial=0, trial_seed=11, labels=["lhs", "rhs"], values=[1.0, 0.5], discrepancy=discrepancy
    )


def make_verdict(**overrides):
    data = {"property": "additivity", "assignment": "born", "holds": True, "tolerance": 1e-9, "seed": 3}
    data.update(overrides)
    return PropertyVerdict(**data)


@pytest.mark.unit
class TestPropertyVerdict:
    """Test verdict and witness consistency"""

    def test_status(self):
        """holds / fails / n/a"""
        assert make_verdict().status == "holds"
        assert make_verdict(holds=False, witness=make_witness()).status == "fails"
        assert make_verdict(applicable=False, holds=None, reason="no tags").status == "n/a"

    def test_failure_needs_witness(self):
        """A failing verdict without a witness is rejected"""
        with pytest.raises(BornLabError, match="witness"):
            make_verdict(holds=False)

    def test_holding_rejects_witness(self):
        """A holding verdict cannot carry a witness"""
        with pytest.raises(BornLabError):
            make_verdict(holds=True, witness=make_witness())

    def test_witness_above_tolerance(self):
        """The witness discrepancy must exceed the tolerance"""
        with pytest.raises(BornLabError, match="tolerance"):
            make_verdict(holds=False, witness=make_witness(discrepancy=1e-12))

    def test_not_applicable_is_empty(self):
        """n/a verdicts carry nothing"""
        with pytest.raises(BornLabError):
            make_verdict(applicable=False, holds=False)
        with pytest.raises(BornLabError):
            make_verdict(holds=None)


@pytest.mark.unit
class TestPropertyMatrix:
    """Test matrix population"""

    def test_statuses(self):
        """Every (row, column) pair resolves to a status"""
        matrix = PropertyMatrix(
            rows=["born"],
            columns=["additivity"],
            cells={"born": {"additivity": make_verdict()}},
        )
        assert matrix.cell("born", "additivity").holds
        assert matrix.statuses() == {"born": {"additivity": "holds"}}

    def test_missing_cell(self):
        """Rows must cover every column"""
        with pytest.raises(BornLabError, match="missing"):
            PropertyMatrix(rows=["born"], columns=["additivity", "normalization"],
                           cells={"born": {"additivity": make_verdict()}})


@pytest.mark.unit
class TestContinuityAndReport:
    """Test continuity results and report payloads"""

    def test_max_jump(self):
        """Largest delta, or 0 without jumps"""
        a, b = SeriesPoint(parameter=0.0, value=0.0), SeriesPoint(parameter=0.1, value=1.0)
        result = ContinuityResult(assignment="zurek-patch", path="tag", tolerance=0.1, step=0.1,
                                  series=[a, b], jumps=[Jump(left=a, right=b, delta=1.0)])
        assert result.max_jump == 1.0
        assert ContinuityResult(assignment="born", path="tag", tolerance=0.1, step=0.1, series=[a]).max_jump == 0.0

    def test_deterministic_payload(self):
        """Timings are dropped from the comparable dump"""
        report = Report(version="1.0.0", scenario={"name": "x"}, seed=1, timings={"matrix": 0.25})
        payload = report.deterministic_payload()
        assert "timings" not in payload
        assert payload["schema_version"] == "1"
        assert payload["seed"] == 1

    def test_expectation_agrees(self):
        """Expected and actual statuses are compared verbatim"""
        assert ExpectationOutcome(assignment="born", property="additivity", expected="holds", actual="holds").agrees
        assert not ExpectationOutcome(assignment="born", property="additivity", expected="fails", actual="holds").agrees

    def test_operator_payload(self):
        """Complex matrices survive the real/imag split"""
        m = np.array([[1.0, 1j], [-1j, 0.0]])
        payload = operator_payload(m)
        assert payload["imag"][0][1] == 1.0
        assert np.array_equal(payload_matrix(payload), m)
