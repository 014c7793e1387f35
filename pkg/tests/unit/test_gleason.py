# tests/unit/test_gleason.py - Test frame-function regularity fits
import numpy as np
import pytest

from bornlab.assignments import get_assignment
from bornlab.exceptions import NotApplicableError, UnderdeterminedFitError
from bornlab.gleason import fit_density, hermitian_basis, regularity_verdict
from bornlab.linalg import HermitianOperator, derive_seed, haar_random_unitary, random_density_matrix


@pytest.mark.unit
class TestHermitianBasis:
    """Test the Hilbert-Schmidt basis"""

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_orthonormal(self, d):
        """d^2 Hermitian matrices with Tr(B_i B_j) = delta_ij"""
        basis = hermitian_basis(d)
        assert len(basis) == d * d
        gram = np.array([[np.trace(a @ b).real for b in basis] for a in basis])
        assert np.allclose(gram, np.eye(d * d), atol=1e-12)
        assert all(np.allclose(b, b.conj().T) for b in basis)


@pytest.mark.unit
class TestFitDensity:
    """Test least-squares density recovery"""

    def test_born_recovers_state(self):
        """Born frame functions are exactly <x|rho|x>"""
        rho = random_density_matrix(3, 17)
        fit = fit_density(get_assignment("born"), 3, 20, seed=4, state=rho)
        assert fit.residual_rms < 1e-10
        assert fit.rho_hat.distance(rho) < 1e-8
        assert fit.weight == pytest.approx(1.0)
        assert fit.sample_count == 60
        assert fit.rank == 9
        assert regularity_verdict(fit) == "regular"

    def test_born_hidden_state(self):
        """Without a state a hidden density matrix is drawn"""
        fit = fit_density(get_assignment("born"), 2, 10, seed=4)
        assert regularity_verdict(fit) == "regular"

    def test_trace_squared_constant(self):
        """(1/d)^2 on every ray is regular with weight 1/d"""
        fit = fit_density(get_assignment("trace-squared"), 3, 20, seed=1)
        assert regularity_verdict(fit) == "regular"
        assert fit.weight == pytest.approx(1 / 3)

    def test_hemisphere_not_regular(self):
        """The step function has no density"""
        fit = fit_density(get_assignment("bloch-hemisphere"), 2, 50, seed=3)
        assert fit.residual_rms > 1e-3
        assert regularity_verdict(fit) == "non-regular"
        assert regularity_verdict(fit, threshold=1.0) == "regular"

    def test_underdetermined(self):
        """Fewer equations than parameters"""
        with pytest.raises(UnderdeterminedFitError):
            fit_density(get_assignment("born"), 3, 2, seed=0)

    @pytest.mark.parametrize("name,d", [("zurek-patch", 2), ("two-slope", 2), ("bloch-hemisphere", 3)])
    def test_not_applicable(self, name, d):
        """Tag consumers, Q(sqrt2) functions and out-of-range dims are rejected"""
        with pytest.raises(NotApplicableError):
            fit_density(get_assignment(name), d, 20, seed=0)

    def test_reproducible(self):
        """Same seed, same fit"""
        a = get_assignment("equal-rule")
        first = fit_density(a, 2, 8, seed=6)
        second = fit_density(a, 2, 8, seed=6)
        assert first.residual_rms == second.residual_rms
        assert np.array_equal(first.rho_hat.entries, second.rho_hat.entries)


@pytest.mark.unit
@pytest.mark.slow
class TestFitSweeps:
    """Randomized recovery, covariance and non-regularity sweeps"""

    @pytest.mark.parametrize("seed", range(50))
    def test_born_recovers_random_states(self, seed):
        """Born frame functions give back rho for random states in d = 2..6"""
        d = 2 + seed % 5
        rho = random_density_matrix(d, derive_seed(seed, "target"))
        fit = fit_density(get_assignment("born"), d, 3 * d, seed=seed, state=rho)
        assert fit.residual_rms < 1e-9
        assert fit.rho_hat.distance(rho) < 1e-7
        assert fit.weight == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("seed", range(10))
    def test_unitary_covariance(self, seed):
        """Conjugating the state by U conjugates the fitted rho_hat by U"""
        d = 2 + seed % 3
        rho = random_density_matrix(d, derive_seed(seed, "target"))
        u = haar_random_unitary(d, derive_seed(seed, "rotation"))
        rotated = HermitianOperator(entries=u @ rho.entries @ u.conj().T)
        born = get_assignment("born")
        fit = fit_density(born, d, 3 * d, seed=seed, state=rho)
        fit_rotated = fit_density(born, d, 3 * d, seed=seed + 1000, state=rotated)
        expected = u @ fit.rho_hat.entries @ u.conj().T
        assert np.allclose(fit_rotated.rho_hat.entries, expected, atol=1e-7)

    @pytest.mark.parametrize("seed", range(10))
    def test_hemisphere_residual(self, seed):
        """No Hermitian rho_hat comes near the step function"""
        fit = fit_density(get_assignment("bloch-hemisphere"), 2, 50, seed=seed)
        assert fit.residual_rms >= 0.05
        assert regularity_verdict(fit) == "non-regular"
