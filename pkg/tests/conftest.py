# tests/conftest.py - Pytest configuration and fixtures
import math
from pathlib import Path

import numpy as np
import pytest

from bornlab.lab import BornLab
from bornlab.linalg import CVec, Context, HermitianOperator
from bornlab.models import PropertyVerdict


# Operator fixtures
@pytest.fixture
def p0():
    """|0><0| in d=2"""
    return HermitianOperator(entries=np.diag([1.0, 0.0]))


@pytest.fixture
def p1():
    """|1><1| in d=2"""
    return HermitianOperator(entries=np.diag([0.0, 1.0]))


@pytest.fixture
def qubit_basis(p0, p1):
    """Computational-basis context in d=2"""
    return Context.of([p0, p1])


@pytest.fixture
def qutrit_basis():
    """Computational-basis context in d=3"""
    return Context.of([CVec.basis(3, i).projector() for i in range(3)])


@pytest.fixture
def plus_state():
    """(|0> + |1>)/sqrt2"""
    return CVec(entries=[1 / math.sqrt(2), 1 / math.sqrt(2)])


# Scenario fixtures
@pytest.fixture
def contradiction_text():
    """Scenario whose only expectation contradicts the Born verdict"""
    return (
        "name = contradiction\n"
        "seed = 1\n"
        "dims = 2\n"
        "trials = 20\n"
        "assignments = born\n"
        "properties = additivity\n"
        "expect born additivity = fails\n"
    )


@pytest.fixture
def quick_text():
    """Small scenario with a matrix, Lemma 1 and a few cheap harness blocks"""
    return (
        "name = quick\n"
        "seed = 7\n"
        "dims = 2, 3\n"
        "trials = 10\n"
        "lemma1 = true\n"
        "assignments = born, trace-squared, equal-rule\n"
        "properties = additivity, normalization, strong-normalization\n"
        "expect trace-squared additivity = fails\n"
        "expect equal-rule strong-normalization = holds\n"
        "\n"
        "[finegrain]\n"
        "pairs = 1:2, 2:3\n"
        "\n"
        "[hartle]\n"
        "p = 1/4, 3/4\n"
        "N = 100, 1000, 10000, 100000\n"
    )


@pytest.fixture
def write_scenario(tmp_path):
    """Write scenario text to a file under tmp_path and return its path"""
    def _write(text: str, name: str = "scenario.scn") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write


@pytest.fixture
def lab():
    """BornLab instance for testing"""
    with BornLab(seed=1) as instance:
        yield instance


# Test helpers
def assert_fails_with(verdict: PropertyVerdict, values, dim=None):
    """Helper to check a failing verdict and its witness values"""
    assert verdict.status == "fails"
    assert verdict.witness is not None
    assert verdict.witness.values == pytest.approx(values, abs=1e-12)
    if dim is not None:
        assert verdict.witness.dim == dim
