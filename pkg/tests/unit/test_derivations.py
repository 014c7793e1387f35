# tests/unit/test_derivations.py - Test envariance, fine graining and homogeneity harnesses
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bornlab.assignments import MATRIX_ASSIGNMENTS, TwoSlopeAssignment, get_assignment
from bornlab.derivations import (
    BipartiteState,
    ConstraintSystem,
    Equation,
    additive_pathology,
    busch_homogeneity_probe,
    discontinuity_witness,
    dyadic_tail_check,
    envariance_check,
    fine_grain,
    fine_grained_state,
    orthogonality_witness,
    shift_invariance_check,
    swap_derivation,
    swap_pair,
    swap_system,
    zurek_chain,
)
from bornlab.exact import ProbabilityTag, QuadRational
from bornlab.exceptions import (
    InvalidDimensionError,
    InvalidDimsError,
    InvalidScalingError,
    InvalidSplitError,
    InvalidStateError,
    MissingTagsError,
    NotApplicableError,
)
from bornlab.linalg import CVec, HermitianOperator, derive_seed, haar_random_unitary

SQRT_HALF = 1 / math.sqrt(2)


def random_unit(d, seed, label):
    return CVec(entries=haar_random_unitary(d, derive_seed(seed, label))[:, 0])


@pytest.mark.unit
class TestBipartiteState:
    """Test bipartite states and Schmidt forms"""

    def test_from_schmidt(self):
        """Computational Schmidt bases"""
        psi = BipartiteState.from_schmidt([SQRT_HALF, SQRT_HALF])
        assert psi.dims == (2, 2)
        assert psi.vector.entries == pytest.approx([SQRT_HALF, 0, 0, SQRT_HALF])

    def test_not_unit(self):
        """Coefficients must give a unit vector"""
        with pytest.raises(InvalidStateError):
            BipartiteState.from_schmidt([1.0, 1.0])

    def test_dims_do_not_factor(self):
        """Vector length must be d_S * d_E"""
        with pytest.raises(InvalidDimsError):
            BipartiteState(vector=CVec.basis(3, 0), dims=(2, 2))

    def test_schmidt_decompose(self):
        """SVD recovers the descending coefficients"""
        coeffs = [math.sqrt(0.3), math.sqrt(0.7)]
        psi = BipartiteState.from_schmidt(coeffs)
        bare = BipartiteState(vector=psi.vector, dims=psi.dims)
        terms = bare.schmidt_decompose().schmidt
        assert [t.coefficient for t in terms] == pytest.approx([math.sqrt(0.7), math.sqrt(0.3)])


@pytest.mark.unit
class TestEnvariance:
    """Test swap residuals and the exact swap derivation"""

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_equal_amplitudes_envariant(self, n):
        """Swapping two equal-amplitude branches is undone on E"""
        psi = BipartiteState.from_schmidt([1 / math.sqrt(n)] * n)
        u_s, u_e = swap_pair(psi, 0, n - 1)
        assert envariance_check(psi, u_s, u_e) < 1e-12

    def test_unequal_control(self):
        """sqrt2 |sqrt0.7 - sqrt0.3| for unequal amplitudes"""
        psi = BipartiteState.from_schmidt([math.sqrt(0.7), math.sqrt(0.3)])
        u_s, u_e = swap_pair(psi, 0, 1)
        residual = envariance_check(psi, u_s, u_e)
        assert residual == pytest.approx(math.sqrt(2) * (math.sqrt(0.7) - math.sqrt(0.3)))
        assert residual == pytest.approx(0.4086, abs=1e-4)

    def test_swap_on_rotated_bases(self):
        """Swaps are built from the Schmidt vectors, not the computational basis"""
        a = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        psi = BipartiteState.from_schmidt([SQRT_HALF, SQRT_HALF], system_basis=a)
        u_s, u_e = swap_pair(psi, 0, 1)
        assert envariance_check(psi, u_s, u_e) < 1e-12

    def test_wrong_unitary_shape(self):
        """Unitaries must act on S and E"""
        psi = BipartiteState.from_schmidt([SQRT_HALF, SQRT_HALF])
        with pytest.raises(InvalidDimsError):
            envariance_check(psi, np.eye(3), np.eye(2))

    @pytest.mark.parametrize("n", [1, 2, 4, 7])
    def test_swap_derivation(self, n):
        """p_i = 1/n exactly"""
        assert swap_derivation(n) == [Fraction(1, n)] * n

    @pytest.mark.slow
    def test_swap_derivation_sweep(self):
        """p_i = 1/n for every n up to 64"""
        for n in range(1, 65):
            assert swap_derivation(n) == [Fraction(1, n)] * n

    def test_system_rank(self):
        """n swap classes collapse to one unknown fixed by normalization"""
        values, rank = swap_system(4).solve()
        assert values == [Fraction(1, 4)] * 4
        assert rank == 4
        assert {e.provenance for e in swap_system(3).equations} == {"swap-symmetry", "weak-additivity"}

    def test_swaps_alone_underdetermined(self):
        """Without normalization the solution is not unique"""
        system = ConstraintSystem(n=3)
        system.add_swap(0, 1)
        system.add_swap(1, 2)
        assert system.solve() == (None, 2)

    def test_inconsistent(self):
        """Contradictory rows have no solution"""
        system = ConstraintSystem(
            n=1,
            equations=[
                Equation({0: Fraction(1)}, Fraction(1), "weak-additivity", "a"),
                Equation({0: Fraction(1)}, Fraction(0), "weak-additivity", "b"),
            ],
        )
        values, _ = system.solve()
        assert values is None


@pytest.mark.unit
class TestFineGraining:
    """Test fine graining and the conditional chain"""

    def test_fine_grain(self):
        """m of n equal branches weigh m/n"""
        assert fine_grain(2, 3) == (Fraction(2, 3), Fraction(1, 3))
        assert fine_grain(617, 1000) == (Fraction(617, 1000), Fraction(383, 1000))

    def test_state_layout(self):
        """m branches on x1, n - m on x2"""
        psi = fine_grained_state(1, 4)
        amplitudes = psi.vector.entries.reshape(2, 4)
        assert np.count_nonzero(amplitudes[0]) == 1
        assert np.count_nonzero(amplitudes[1]) == 3

    @pytest.mark.parametrize("m,n", [(0, 3), (4, 3), (1, 0)])
    def test_bad_split(self, m, n):
        """1 <= m <= n"""
        with pytest.raises(InvalidSplitError):
            fine_grain(m, n)

    def test_chain(self):
        """Product of (1 - 1/k)"""
        assert zurek_chain(5, 12) == Fraction(5, 12)
        assert zurek_chain(0, 4) == 0
        with pytest.raises(InvalidSplitError):
            zurek_chain(3, 2)

    @given(st.integers(min_value=1, max_value=60).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
    def test_chain_matches_ratio(self, pair):
        """The chain always telescopes to m/n"""
        m, n = pair
        assert zurek_chain(m, n) == Fraction(m, n)

    @pytest.mark.slow
    def test_fine_grain_matches_chain_sweep(self):
        """Both routes give m/n for every 1 <= m <= n <= 200"""
        for n in range(1, 201):
            for m in range(1, n + 1):
                assert fine_grain(m, n)[0] == zurek_chain(m, n) == Fraction(m, n)


@pytest.mark.unit
class TestOrthogonality:
    """Test the Gram-matrix obstruction"""

    def test_overlap_half(self):
        """<x1|x2> = 1/2 with orthogonal records"""
        x1 = CVec.basis(2, 0)
        x2 = CVec(entries=[0.5, math.sqrt(3) / 2])
        e0, e1, e2 = CVec.basis(2, 0), CVec.basis(2, 0), CVec.basis(2, 1)
        assert orthogonality_witness(x1, x2, e0, e1, e2) == pytest.approx(0.5)

    def test_orthogonal_inputs(self):
        """Orthogonal outcomes allow any records"""
        e = [CVec.basis(3, i) for i in range(3)]
        assert orthogonality_witness(CVec.basis(2, 0), CVec.basis(2, 1), *e) == pytest.approx(0.0)

    def test_identical_records(self):
        """Records that do not distinguish the outcomes impose nothing"""
        e0 = CVec.basis(2, 1)
        x2 = CVec(entries=[SQRT_HALF, SQRT_HALF])
        assert orthogonality_witness(CVec.basis(2, 0), x2, e0, e0, e0) == pytest.approx(0.0)

    def test_non_unit(self):
        """Inputs must be unit vectors"""
        with pytest.raises(InvalidStateError):
            orthogonality_witness(CVec(entries=[1, 1]), CVec.basis(2, 0), *[CVec.basis(2, 0)] * 3)

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(50))
    def test_random_quintuples(self, seed):
        """The witness is |<x1|x2> (1 - <E1|E2>)| for random unit vectors"""
        ds, de = 2 + seed % 3, 2 + seed % 2
        x1, x2 = random_unit(ds, seed, "x1"), random_unit(ds, seed, "x2")
        e0, e1, e2 = (random_unit(de, seed, label) for label in ("e0", "e1", "e2"))
        overlap = x1.inner(x2)
        expected = abs(overlap * (1 - e1.inner(e2)))
        assert orthogonality_witness(x1, x2, e0, e1, e2) == pytest.approx(expected, abs=1e-12)
        assert orthogonality_witness(x1, x2, e0, e1, e1) == pytest.approx(0.0, abs=1e-12)
        u = haar_random_unitary(de, derive_seed(seed, "records"))
        distinct = CVec(entries=u[:, 0]), CVec(entries=u[:, 1])
        assert orthogonality_witness(x1, x2, e0, *distinct) == pytest.approx(abs(overlap), abs=1e-12)


@pytest.mark.unit
class TestShiftInvariance:
    """Test expectation values under eigenvalue shifts"""

    def test_trace_squared_not_normalized(self):
        """Basis weights summing to 1/2 shift V by k/2"""
        result = shift_invariance_check(get_assignment("trace-squared"), CVec.basis(2, 0), [0.0, 1.0], 2.0)
        assert result.mu_sum == pytest.approx(0.5)
        assert result.gap == pytest.approx(1.0)

    def test_born_shift_invariant(self, plus_state):
        """Born weights sum to 1"""
        result = shift_invariance_check(get_assignment("born"), plus_state, [0.0, 1.0], 2.0)
        assert result.values == pytest.approx([0.5, 0.5])
        assert result.gap == pytest.approx(0.0, abs=1e-12)

    def test_errors(self, plus_state):
        """Eigenvalue count and assignment domain"""
        with pytest.raises(InvalidDimensionError):
            shift_invariance_check(get_assignment("born"), plus_state, [0.0, 1.0, 2.0], 1.0)
        with pytest.raises(NotApplicableError):
            shift_invariance_check(TwoSlopeAssignment(), plus_state, [0.0, 1.0], 1.0)

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(100))
    def test_random_shifts_across_catalog(self, seed):
        """gap = |k| |sum mu - 1|; normalized assignments are shift invariant"""
        rng = np.random.default_rng(seed)
        d = 2 + seed % 3
        psi = random_unit(d, seed, "psi")
        eigenvalues = rng.normal(size=d).tolist()
        k = float(rng.uniform(-5.0, 5.0))
        tags = [ProbabilityTag.rational(Fraction(1, d))] * d
        for name in MATRIX_ASSIGNMENTS:
            a = get_assignment(name)
            if not a.supports_dim(d):
                continue
            result = shift_invariance_check(a, psi, eigenvalues, k, tags=tags if a.uses_tags else None)
            assert result.gap == pytest.approx(abs(k) * abs(result.mu_sum - 1.0), abs=1e-9)
            if name == "trace-squared":
                assert result.mu_sum == pytest.approx(1 / d)
            else:
                assert result.gap == pytest.approx(0.0, abs=1e-9)


@pytest.mark.unit
class TestHomogeneity:
    """Test homogeneity probes and dyadic tails"""

    def test_born_homogeneous(self, p0):
        """mu(qA) = q mu(A) and the irrational point sits on the line"""
        rationals = [Fraction(k, 10) for k in range(1, 11)]
        result = busch_homogeneity_probe(get_assignment("born"), p0, rationals, [QuadRational(0, Fraction(1, 2))])
        assert result.base_value == pytest.approx(0.5)
        assert result.rational_deviation < 1e-12
        assert result.limit_gap < 1e-12
        assert result.real_series[0][1] == pytest.approx(math.sqrt(2) / 4)

    def test_trace_squared_quadratic(self, p0):
        """(q/2)^2 against q/4, worst at q = 1/2"""
        rationals = [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)]
        result = busch_homogeneity_probe(get_assignment("trace-squared"), p0, rationals, [])
        assert result.rational_deviation == pytest.approx(1 / 16)

    def test_zurek_limit_gap(self, p0):
        """Rational scalings follow Born, sqrt2/2 jumps to sqrt2"""
        result = busch_homogeneity_probe(
            get_assignment("zurek-patch"),
            p0,
            [Fraction(1, 2), Fraction(3, 4)],
            [QuadRational(0, Fraction(1, 2))],
            tag=ProbabilityTag.rational(1),
        )
        assert result.rational_deviation < 1e-12
        assert result.limit_gap == pytest.approx(math.sqrt(2) / 2, abs=1e-9)

    def test_zurek_needs_tag(self, p0):
        """The probed operator's tag is required"""
        with pytest.raises(MissingTagsError):
            busch_homogeneity_probe(get_assignment("zurek-patch"), p0, [Fraction(1, 2)], [])

    def test_scaling_leaves_effects(self, p0):
        """2A is not an effect"""
        with pytest.raises(InvalidScalingError):
            busch_homogeneity_probe(get_assignment("born"), p0, [Fraction(2)], [])

    def test_dyadic_born(self, p0):
        """Halving tails telescope exactly for Born"""
        result = dyadic_tail_check(get_assignment("born"), p0, 20)
        assert result.error < 1e-12
        assert len(result.partial_sums) == 20
        assert result.partial_sums[-1][1] == pytest.approx(0.5, abs=1e-6)

    def test_dyadic_trace_squared(self, p0):
        """Quadratic values leave a tail"""
        result = dyadic_tail_check(get_assignment("trace-squared"), p0, 10)
        assert result.error > 0.1

    def test_dyadic_depth(self, p0):
        """Depth of at least one"""
        with pytest.raises(InvalidSplitError):
            dyadic_tail_check(get_assignment("born"), p0, 0)
        with pytest.raises(NotApplicableError):
            dyadic_tail_check(TwoSlopeAssignment(), p0, 3)

    def test_explicit_state(self, p0):
        """A supplied state overrides the maximally mixed default"""
        rho = HermitianOperator(entries=np.diag([0.8, 0.2]))
        result = dyadic_tail_check(get_assignment("born"), p0, 5, state=rho)
        assert result.partial_sums[0][1] == pytest.approx(0.4)


@pytest.mark.unit
class TestAdditivePathology:
    """Test the two-slope pathology"""

    def test_witness(self):
        """sqrt2 and its convergent within 1e-6"""
        x, y = discontinuity_witness(1e-6)
        assert x == QuadRational.sqrt2()
        assert y == Fraction(1393, 985)

    def test_pathology(self):
        """Exactly additive and rationally homogeneous, yet far apart on nearby points"""
        result = additive_pathology(pairs=200, seed=3)
        assert result.cauchy_failures == 0
        assert result.homogeneity_failures == 0
        assert result.distance < 1e-6
        assert result.value_gap > 1
        assert result.c2 == "10000"

    def test_equal_slopes_continuous(self):
        """c1 = c2 is multiplication by c1"""
        result = additive_pathology(c1=2, c2=2, pairs=10)
        assert result.value_gap < 1e-5
