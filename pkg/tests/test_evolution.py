import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ghzmetro.errors import DomainError
from ghzmetro.evolution import (AKRow, NoiseParams, ak_stream, collective_weight, evolve, evolve_many,
                                sector_weights, sector_weights_recurrence, short_time_probability,
                                survival_probability, survival_with_derivative, top_sector_weights)
from ghzmetro.overlaps import ghz_overlaps

from conftest import flip_sum, krawtchouk, unit_coefficients, units


class TestNoiseParams:
    @pytest.mark.parametrize("kwargs", [
        dict(gamma=-1), dict(gamma_prime=-0.1), dict(gamma0=1.0), dict(gamma0=1.0, tau_c=0.0),
        dict(gamma=1.0, gamma0=1.0, tau_c=1.0), dict(Omega=float("inf")),
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(DomainError):
            NoiseParams(**kwargs)

    def test_lorentzian_limits(self):
        fast = NoiseParams(gamma0=2.0, tau_c=1e-4)
        t = 0.5
        assert float(fast.accumulated_dephasing(t)) == pytest.approx(2.0 * t, rel=1e-4 / t)
        slow = NoiseParams(gamma0=2.0, tau_c=100.0)
        t = 1e-3
        assert float(slow.accumulated_dephasing(t)) == pytest.approx(2.0 * t * t / 200.0, rel=1e-4)

    def test_series_branch_is_continuous(self):
        p = NoiseParams(gamma0=1.0, tau_c=1.0)
        lo, hi = p.accumulated_dephasing([1e-3 * (1 - 1e-9), 1e-3 * (1 + 1e-9)])
        assert hi == pytest.approx(lo, rel=1e-6)

    @given(st.floats(0.01, 5), st.floats(1e-3, 10))
    def test_accumulated_dephasing_monotone(self, gamma0, tau_c):
        t = np.linspace(0, 10, 400)
        g = NoiseParams(gamma0=gamma0, tau_c=tau_c).accumulated_dephasing(t)
        assert g[0] == 0 and np.all(np.diff(g) >= 0)

    @pytest.mark.parametrize("tau_c", [1e-3, 0.125, 4.0])
    def test_rate_integrates_to_exponent(self, tau_c):
        from scipy.integrate import quad

        p = NoiseParams(gamma0=1.5, tau_c=tau_c)
        for t in (1e-4, 0.3, 2.0):
            integral, _ = quad(lambda s: float(p.collective_rate(s)), 0, t, epsabs=1e-14, epsrel=1e-12)
            assert float(p.accumulated_dephasing(t)) == pytest.approx(integral, rel=1e-9, abs=1e-18)


class TestCollectiveWeight:
    def test_diagonal_is_one(self):
        p = NoiseParams(1.3, 0.7, 0.2)
        assert collective_weight(0, np.array([0.0, 0.4, 3.0]), p) == pytest.approx(1)

    def test_value(self):
        p = NoiseParams(Omega=0.5, gamma=0.25)
        assert complex(collective_weight(2, 0.3, p)) == pytest.approx(np.exp(-2j * 0.5 * 2 * 0.3 - 2 * 0.25 * 0.3 * 4))

    def test_negative_time(self):
        with pytest.raises(DomainError):
            collective_weight(1, -1e-9, NoiseParams())


class TestAKRow:
    def test_initial_condition(self):
        first = next(iter(ak_stream(6, 1, -2)))
        assert first[-1] == 1 and np.all(first[:-1] == 0)

    def test_first_step_top_sector(self):
        for n in range(1, 9):
            for mu in range(n + 1):
                for mup in range(n + 1):
                    m, mp = Fraction(2 * mu - n, 2), Fraction(2 * mup - n, 2)
                    rows = AKRow(n, m, mp).exact()
                    next(rows)
                    assert next(rows)[-1] == 4 * m * mp / n

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_brute_force_flip_sums(self, n):
        U = units(n)
        worst = 0.0
        for mu in range(n + 1):
            for mup in range(n + 1):
                tm, tmp = 2 * mu - n, 2 * mup - n
                X = U[(n, tm, tmp)]
                rows = list(AKRow(n, Fraction(tm, 2), Fraction(tmp, 2)))
                for k in range(n + 1):
                    coeffs, resid = unit_coefficients(n, flip_sum(n, X, k), tm, tmp)
                    assert resid < 1e-10
                    for s, tj in enumerate(range(n % 2, n + 1, 2)):
                        worst = max(worst, abs(coeffs.get(tj, 0.0) - rows[k][s]))
        assert worst < 1e-10

    def test_double_flip_trace_six_qubits(self):
        row = list(AKRow(6, 1, 1))
        assert sum(row[2]) == pytest.approx(math.comb(6, 2), rel=1e-12)
        U = units(6)
        coeffs, resid = unit_coefficients(6, flip_sum(6, U[(6, 2, 2)], 2), 2, 2)
        assert resid < 1e-10 and sum(coeffs.values()) == pytest.approx(15, rel=1e-12)

    @pytest.mark.parametrize("n", [7, 16, 30])
    def test_top_row_is_krawtchouk_product(self, n):
        for mu, mup in [(0, 0), (2, 5), (n // 2, n // 2 + 1), (n, 1)]:
            x, xp = n - mu, n - mup
            ref = [krawtchouk(k, x, n) * krawtchouk(k, xp, n) / math.comb(n, k) for k in range(n + 1)]
            got = AKRow(n, Fraction(2 * mu - n, 2), Fraction(2 * mup - n, 2)).top_sector()
            np.testing.assert_allclose(got, ref, rtol=1e-13, atol=1e-12)

    def test_rows_are_real_and_trace_preserving(self):
        n = 30
        for mu in (0, 7, 15, 22):
            m = Fraction(2 * mu - n, 2)
            for k, row in enumerate(AKRow(n, m, m)):
                assert np.isrealobj(row)
                assert row.sum() == pytest.approx(math.comb(n, k), rel=1e-9)

    def test_bad_projection(self):
        with pytest.raises(DomainError):
            AKRow(4, 3, 0)


class TestSectorWeights:
    @pytest.mark.parametrize("n", [1, 2, 5, 8])
    def test_series_matches_recurrence(self, n):
        for tau in (0.0, 0.03, 0.4, 2.5):
            np.testing.assert_allclose(sector_weights(n, tau), sector_weights_recurrence(n, tau), atol=2e-14)

    def test_top_slice(self):
        taus = np.array([0.0, 0.1, 1.7])
        np.testing.assert_allclose(top_sector_weights(9, taus), sector_weights(9, taus)[:, -1], atol=1e-15)

    def test_chunking_is_invisible(self):
        taus = np.geomspace(1e-4, 3, 11)
        np.testing.assert_allclose(sector_weights(6, taus, chunk=3), sector_weights(6, taus, chunk=16),
                                   rtol=0, atol=1e-15)


class TestEvolve:
    def test_initial_state(self):
        s = evolve(5, (0.7, 0.2), NoiseParams(1, 1, 1), 0.0)
        assert s.trace() == pytest.approx(1, abs=1e-14)
        assert s.purity() == pytest.approx(1, abs=1e-14)
        assert all(np.abs(c).max() == 0 for tj, c in s.blocks.items() if tj < 5)

    def test_extremal_pair_decay(self):
        n, g, t = 6, 0.3, 0.2
        c = evolve(n, 0.0, NoiseParams(gamma=g), t).blocks[n]
        expected = np.zeros((n + 1, n + 1))
        expected[0, 0] = expected[-1, -1] = 0.5
        expected[0, -1] = expected[-1, 0] = math.exp(-2 * g * t * n * n) / 2
        np.testing.assert_allclose(c, expected, atol=1e-15)

    @given(st.integers(1, 12), st.floats(0, math.pi), st.floats(0, 2 * math.pi),
           st.floats(0, 2), st.floats(0, 2), st.floats(0, 2), st.floats(0, 1))
    def test_state_invariants(self, n, theta, phi, omega, gamma, gp, t):
        s = evolve(n, (theta, phi), NoiseParams(omega, gamma, gp), t)
        assert s.trace() == pytest.approx(1, abs=1e-10)
        assert s.hermiticity_error() < 1e-12
        assert s.min_eigenvalue() > -1e-10
        if gp == 0:
            assert set(s.blocks) == {n}

    def test_leakage_grows(self):
        ts = np.linspace(0.01, 2, 25)
        states = evolve_many(6, 1.0, NoiseParams(0.5, 0.5, 0.7), ts)
        leak = [1 - s.sector_traces()[6] for s in states]
        assert np.all(np.diff(leak) > 0)

    def test_field_only_keeps_purity(self):
        s = evolve(9, (1.1, 0.4), NoiseParams(Omega=2.0), 1.3)
        assert s.purity() == pytest.approx(1, abs=1e-12)
        w = np.linalg.eigvalsh(s.blocks[9])
        assert w[-1] == pytest.approx(1, abs=1e-12)

    def test_moments_at_start(self):
        theta = 0.9
        _, second = evolve(5, theta, NoiseParams(), 0.0).moments()
        c2 = math.cos(theta) ** 2
        assert second == pytest.approx(25 * c2 + 5 * (1 - c2), rel=1e-12)


class TestSurvival:
    def test_starts_at_one(self):
        assert survival_probability(7, (1.0, 0.5), NoiseParams(1, 1, 1), 0.0) == pytest.approx(1, abs=1e-14)

    @given(st.floats(0, math.pi), st.floats(0, 2), st.floats(0, 2), st.floats(0, 2))
    def test_single_qubit(self, theta, gamma, gp, t):
        P = survival_probability(1, theta, NoiseParams(0, gamma, gp), t)
        s2 = math.sin(theta) ** 2
        assert P == pytest.approx((1 + s2 + math.exp(-2 * (gamma + gp) * t) * (1 - s2)) / 2, abs=1e-14)

    def test_aligned_axes(self):
        n, g, gp, t = 5, 0.4, 0.9, 0.3
        P = survival_probability(n, 0.0, NoiseParams(0, g, gp), t)
        assert P == pytest.approx((1 + math.exp(-2 * g * t * n * n - 2 * gp * t * n)) / 2, abs=1e-14)

    def test_block_and_fast_path_agree(self):
        n, angles, p = 8, (0.7, 0.3), NoiseParams(0.8, 0.6, 0.4)
        ts = [0.05, 0.5]
        P = survival_probability(n, angles, p, ts)
        ov = ghz_overlaps(n, angles)
        v = ov.v[::-1]  # descending m, like the blocks
        for t, Pt in zip(ts, P):
            c = evolve(n, angles, p, t).blocks[n]
            assert Pt == pytest.approx(float(np.vdot(v, c @ v).real), abs=1e-13)

    def test_batch_matches_scalar(self):
        p = NoiseParams(0.3, 1.0, 0.5)
        ts = np.geomspace(1e-5, 2, 9)
        batch = survival_probability(12, 1.0, p, ts)
        assert batch == pytest.approx([survival_probability(12, 1.0, p, t) for t in ts], abs=1e-15)

    def test_large_n_in_range(self):
        P, dP = survival_with_derivative(200, (1.0, 0.2), NoiseParams(0.5, 1, 1), np.geomspace(1e-8, 1, 50))
        assert np.all((P >= 0) & (P <= 1)) and np.all(np.isfinite(dP))

    @pytest.mark.parametrize("n", [20, 30])
    def test_phi_dependence_is_exponentially_small(self, n):
        theta, p = 1.0, NoiseParams(0.4, 1.0, 1.0)
        ts = np.geomspace(1e-6, 1, 40)
        base = survival_probability(n, theta, p, ts)
        for phi in (0.3, 1.0, 2.0, 3.0):
            diff = np.abs(survival_probability(n, (theta, phi), p, ts) - base)
            bound = 2 * math.sin(theta) ** n * abs(1 - math.cos(n * phi))
            assert diff.max() <= bound + 1e-15


class TestShortTime:
    def test_formula(self):
        assert short_time_probability(4, 0.0, 0.5, 0.2, 1e-3) == pytest.approx(1 - 0.5e-3 * 16 - 0.2e-3 * 4)
        ref = 1 - 1e-4 * (9 * math.cos(1) ** 2 + 3 * math.sin(1) ** 2 + 3)
        assert short_time_probability(3, 1.0, 1, 1, 1e-4) == pytest.approx(ref, abs=1e-15)
        assert ref == pytest.approx(0.99922483, abs=1e-7)
        # the exact value differs at second order, (n^2 gamma t + n gamma' t)^2 / 2 ~ 7e-7 here
        exact = survival_probability(3, 1.0, NoiseParams(0, 1, 1), 1e-4)
        assert abs(exact - ref) <= 50 * (9e-4 + 3e-4) ** 2

    def test_error_is_second_order(self):
        p = NoiseParams(0, 1, 1)
        errs = [abs(survival_probability(6, 1.0, p, t) - short_time_probability(6, 1.0, 1, 1, t))
                for t in (1e-4, 1e-5)]
        assert errs[0] / errs[1] == pytest.approx(100, rel=0.02)

    @pytest.mark.parametrize("n", [3, 6, 10])
    def test_second_order_error(self, n):
        t = 1e-4 / n ** 2
        for theta in (0.0, 0.5, 1.0, 2.0):
            exact = survival_probability(n, theta, NoiseParams(0, 1, 1), t)
            approx = short_time_probability(n, theta, 1, 1, t)
            assert abs(exact - approx) <= 50 * (n * n * t + n * t) ** 2
