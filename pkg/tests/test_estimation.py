import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ghzmetro.errors import (ConfigurationError, DegenerateMeasurementError, DomainError, NoInformationError,
                             SensitivityError, UnsupportedConfigurationError)
from ghzmetro.estimation import (GHZ_PROJECTION, QFI_BOUND, ProtocolBudget, classical_fisher_ghz, fit_scaling,
                                 golden_section, optimize_time, quantum_crb, quantum_fisher, survival_derivative,
                                 time_grid, uncertainty_ghz)
from ghzmetro.evolution import NoiseParams, survival_probability
from ghzmetro.oracle import dense_qfi


def richardson(f, x, h):
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3


class TestBudget:
    def test_repetitions(self):
        assert ProtocolBudget(2.0, 0.5).M == 4

    @pytest.mark.parametrize("t", [0.0, 1.5])
    def test_bad_time(self, t):
        with pytest.raises(DomainError):
            ProtocolBudget(1.0, t)


class TestClassicalFisher:
    def test_values(self):
        assert classical_fisher_ghz(0.5, 1.0) == 4
        assert classical_fisher_ghz(0.3, 0.0) == 0

    @pytest.mark.parametrize("P", [0.0, 1.0])
    def test_degenerate(self, P):
        with pytest.raises(DegenerateMeasurementError):
            classical_fisher_ghz(P, 0.2)

    def test_bounded_by_qfi(self):
        rng = np.random.default_rng(7)
        for _ in range(12):
            n = int(rng.integers(2, 5))
            theta, t = rng.uniform(0.2, 2.9), rng.uniform(0.02, 0.6)
            p = NoiseParams(*rng.uniform(0, 2, size=3))
            P = survival_probability(n, theta, p, t)
            F = classical_fisher_ghz(P, survival_derivative(n, theta, p, t))
            assert F <= quantum_fisher(n, theta, p, t) * (1 + 1e-9)


class TestSurvivalDerivative:
    def test_single_qubit(self):
        for theta in (0.3, 1.2, 2.5):
            g, gp, t = 0.7, 0.4, 0.9
            got = survival_derivative(1, theta, NoiseParams(0, g, gp), t)
            ref = math.sin(theta) * math.cos(theta) * (1 - math.exp(-2 * (g + gp) * t))
            assert got == pytest.approx(ref, abs=1e-15)

    @pytest.mark.parametrize("n", [3, 6, 10])
    def test_stationary_at_aligned_axes(self, n):
        assert abs(survival_derivative(n, 0.0, NoiseParams(0, 1, 1), 1e-4 / n ** 2)) < 1e-14

    def test_finite_differences(self):
        n, theta, p, t = 12, 0.9, NoiseParams(0.6, 0.8, 1.1), 0.05
        ref = richardson(lambda x: survival_probability(n, x, p, t), theta, 1e-3)
        got = survival_derivative(n, theta, p, t)
        assert got == pytest.approx(ref, rel=1e-6, abs=1e-10)


class TestUncertainty:
    def test_single_qubit_closed_form(self):
        theta, t, e = math.pi / 4, 0.1, math.exp(-0.2)
        s2 = math.sin(theta) ** 2
        P = (1 + s2 + e * (1 - s2)) / 2
        dP = math.sin(theta) * math.cos(theta) * (1 - e)
        res = uncertainty_ghz(1, theta, NoiseParams(gamma=1), t, 1.0)
        assert res.delta_theta == pytest.approx(math.sqrt(P * (1 - P)) / abs(dP) / math.sqrt(1 / t), rel=1e-12)

    def test_two_qubits_blind_to_collective_dephasing(self):
        # both GHZ branches pick up the same collective phase, so P is flat in theta
        with pytest.raises(SensitivityError):
            uncertainty_ghz(2, 1.0, NoiseParams(0, 1, 0), 0.5, 1.0)

    @given(st.integers(3, 30), st.floats(0.2, 2.9), st.floats(0.01, 1), st.floats(0.1, 2), st.floats(0, 2))
    def test_result_invariant(self, n, theta, t, gamma, gp):
        res = uncertainty_ghz(n, theta, NoiseParams(0, gamma, gp), t, 1.0)
        assert res.delta_theta > 0
        lhs = res.delta_theta * math.sqrt(1.0 / t)
        assert lhs == pytest.approx(math.sqrt(res.P * (1 - res.P)) / abs(res.dPdtheta), rel=1e-12)

    def test_insensitive_names_theta(self):
        with pytest.raises(SensitivityError, match="theta=0"):
            uncertainty_ghz(5, 0.0, NoiseParams(0, 1, 0), 0.01, 1.0)

    def test_time_rescaling(self):
        p, s = NoiseParams(0.3, 0.8, 0.5), 3.7
        a = uncertainty_ghz(9, 1.1, p, 0.02, 1.0).delta_theta
        b = uncertainty_ghz(9, 1.1, p.rescaled(s), 0.02 * s, 1.0 * s).delta_theta
        assert b == pytest.approx(a, rel=1e-12)

    def test_time_rescaling_lorentzian(self):
        p, s = NoiseParams(0, 0, 0.5, gamma0=1.0, tau_c=0.05), 0.25
        a = uncertainty_ghz(9, 1.1, p, 0.02, 1.0).delta_theta
        b = uncertainty_ghz(9, 1.1, p.rescaled(s), 0.02 * s, 1.0 * s).delta_theta
        assert b == pytest.approx(a, rel=1e-10)


class TestQuantumFisher:
    def test_zero_time(self):
        assert quantum_fisher(4, 1.0, NoiseParams(1, 1, 1), 0.0) == pytest.approx(0, abs=1e-20)

    def test_phi_unsupported(self):
        with pytest.raises(UnsupportedConfigurationError):
            quantum_fisher(3, 1.0, NoiseParams(1), 0.1, phi=0.2)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_matches_dense(self, n):
        rng = np.random.default_rng(n)
        for _ in range(3):
            theta, t = rng.uniform(0.3, 2.8), rng.uniform(0.05, 0.8)
            p = NoiseParams(*rng.uniform(0, 2, size=3))
            assert quantum_fisher(n, theta, p, t) == pytest.approx(dense_qfi(n, theta, p, t), rel=1e-6)

    def test_unitary_family_depends_on_omega_t(self):
        for n in (2, 5, 9):
            a = quantum_fisher(n, 0.8, NoiseParams(Omega=1.0), 0.6)
            b = quantum_fisher(n, 0.8, NoiseParams(Omega=3.0), 0.2)
            assert a == pytest.approx(b, rel=1e-12)

    def test_vector_times(self):
        p = NoiseParams(0.7, 0.2, 0.9)
        ts = np.array([0.01, 0.1, 0.5])
        batch = quantum_fisher(6, 1.0, p, ts, chunk=2)
        assert batch == pytest.approx([quantum_fisher(6, 1.0, p, t) for t in ts], rel=1e-12)


class TestQuantumCRB:
    def test_values(self):
        assert quantum_crb(4, 25) == pytest.approx(0.1)
        assert quantum_crb(3.0, 8) == pytest.approx(quantum_crb(3.0, 4) / math.sqrt(2))

    def test_no_information(self):
        with pytest.raises(NoInformationError):
            quantum_crb(0.0, 10)

    def test_needs_one_repetition(self):
        with pytest.raises(DomainError):
            quantum_crb(1.0, 0.5)

    def test_noiseless_two_qubits(self):
        p, t = NoiseParams(Omega=1.0), 0.4
        F_dense = dense_qfi(2, 1.0, p, t)
        assert quantum_crb(quantum_fisher(2, 1.0, p, t), 1) == pytest.approx(1 / math.sqrt(F_dense), rel=1e-7)


class TestGrid:
    def test_bounds(self):
        g = time_grid(10, NoiseParams(0.5, 2.0, 1.0), T_total=1.0)
        assert len(g) == 400
        assert g[0] == pytest.approx(1e-6 / (100 * 2.0))
        assert g[-1] == pytest.approx(1.0)
        assert time_grid(10, NoiseParams(0, 2.0, 0), 100.0)[-1] == pytest.approx(5.0)

    def test_no_rates(self):
        with pytest.raises(ConfigurationError):
            time_grid(4, NoiseParams(), 1.0)


class TestGoldenSection:
    def test_quadratic_in_log(self):
        x, fx = golden_section(lambda t: (math.log(t) - 1.0) ** 2, 0.1, 100.0)
        assert x == pytest.approx(math.e, rel=1e-6)
        assert fx == pytest.approx(0, abs=1e-12)

    def test_endpoint_minimum(self):
        x, _ = golden_section(lambda t: t, 2.0, 3.0)
        assert x == pytest.approx(2.0, rel=1e-5)


class TestOptimize:
    @pytest.mark.parametrize("params, scheme", [
        (NoiseParams(0, 1, 1), GHZ_PROJECTION),
        (NoiseParams(1, 0, 1), QFI_BOUND),
        (NoiseParams(0, 0, 1, gamma0=1, tau_c=0.01), GHZ_PROJECTION),
    ])
    def test_not_worse_than_grid(self, params, scheme):
        t_star, res = optimize_time(8, 1.0, params, 1.0, scheme)
        grid, values = res.scan
        best = int(np.argmin(values))
        assert res.delta_theta <= values[best]
        assert res.t == t_star and res.scheme == scheme
        lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, len(grid) - 1)]
        assert lo <= t_star <= hi

    def test_ghz_result_consistent(self):
        p = NoiseParams(0, 0, 1, gamma0=1, tau_c=0.01)
        t_star, res = optimize_time(16, 1.0, p, 1.0)
        direct = uncertainty_ghz(16, 1.0, p, t_star, 1.0)
        assert res.delta_theta == pytest.approx(direct.delta_theta, rel=1e-12)

    def test_qfi_result_carries_fisher(self):
        t_star, res = optimize_time(6, 1.0, NoiseParams(1, 0, 1), 1.0, QFI_BOUND)
        assert res.delta_theta == pytest.approx(quantum_crb(res.F_Q, 1.0 / t_star), rel=1e-12)

    def test_aligned_axes_is_insensitive(self):
        with pytest.raises(SensitivityError, match="theta=0"):
            optimize_time(8, 0.0, NoiseParams(0, 1, 1))

    def test_unknown_scheme(self):
        with pytest.raises(ConfigurationError):
            optimize_time(4, 1.0, NoiseParams(0, 1, 0), scheme="best")


class TestFitScaling:
    def test_exact_lines(self):
        ns = [4, 8, 16, 32]
        slope, icpt, resid = fit_scaling([(n, 3 / n) for n in ns])
        assert slope == pytest.approx(-1) and icpt == pytest.approx(math.log(3)) and resid < 1e-14
        slope, _, resid = fit_scaling([(n, 2 / math.sqrt(n)) for n in ns])
        assert slope == pytest.approx(-0.5) and resid < 1e-14

    @pytest.mark.parametrize("points", [[(1, 1), (2, 0.5)], [(1, 1), (2, -0.5), (4, 0.2)], [(0, 1), (2, 1), (3, 1)]])
    def test_rejects(self, points):
        with pytest.raises(DomainError):
            fit_scaling(points)
