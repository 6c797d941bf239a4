import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from buridan import feature_stats as fs
from buridan.errors import DegenerateError, DomainError
from buridan.hybrid_sim import PoissonParams, Trajectory, PolygonTargets, simulate_line, simulate_poisson, simulate_polygon
from buridan.markov_core import TauMatrix


class TestMoments:
    def test_constant(self):
        m = fs.empirical_moments([0.5, 0.5, 0.5])
        assert (m.mean, m.variance) == (0.5, 0.0)

    def test_two_points(self):
        m = fs.empirical_moments([0.0, 1.0])
        assert (m.mean, m.variance) == (0.5, 0.25)

    def test_predicted_values(self):
        m = fs.predicted_moments(0.05, 0.08, 0.1)
        assert m.mean == pytest.approx(0.384615, abs=1e-6)
        assert m.variance == pytest.approx(0.102907, abs=1e-6)

    def test_symmetric_mean(self):
        assert fs.predicted_moments(0.03, 0.03, 0.2).mean == 0.5

    def test_bernoulli_limit(self):
        m = fs.predicted_moments(0.05, 0.08, 1e9)
        assert m.variance == pytest.approx(0.05 * 0.08 / 0.13 ** 2, rel=1e-8)

    def test_long_run_mean(self):
        traj = simulate_line(TauMatrix.two_state(0.05, 0.08), n_steps=1_000_000, seed=1)
        assert fs.empirical_moments(traj.positions).mean == pytest.approx(5 / 13, abs=0.01)

    def test_degenerate_rates(self):
        with pytest.raises(DegenerateError):
            fs.predicted_moments(0.0, 0.0, 0.1)


class TestFrequency:
    def test_examples(self):
        assert fs.transition_frequency([0, 0, 0, 0]) == 0
        assert fs.transition_frequency([0, 1, 0, 1]) == 1
        assert fs.transition_frequency([0, 1, 0, 1], (0, 1)) == pytest.approx(2 / 3)

    def test_predicted(self):
        assert fs.predicted_frequency(0.05, 0.08) == pytest.approx(0.0307692, abs=1e-7)
        assert fs.predicted_frequency(0.04, 0.04) == pytest.approx(0.02)
        assert fs.predicted_frequency(0.0, 0.3) == 0

    def test_long_run_directed_frequency(self):
        traj = simulate_line(TauMatrix.two_state(0.05, 0.08), n_steps=1_000_000, seed=2)
        assert fs.transition_frequency(traj.states, (0, 1)) == pytest.approx(0.004 / 0.13, rel=0.03)


def quadrature_power(traj):
    """F at the final time by adaptive quadrature of v^4 |p(t) - g|^2 on every step."""
    v = traj.v
    g = traj.targets.vertices
    total = 0.0
    for k in range(len(traj.times) - 1):
        p, goal = traj.positions[k], g[traj.states[k]]
        dt = traj.times[k + 1] - traj.times[k]
        dist2 = float(np.sum((p - goal) ** 2))
        total += quad(lambda s: v ** 4 * dist2 * math.exp(-2 * v * s), 0, dt, epsabs=1e-18)[0]
    return total


class TestCumulativePower:
    def test_single_segment(self):
        traj = simulate_line(TauMatrix.two_state(0.0, 0.0), v=0.1, n_steps=10)
        F = fs.cumulative_power(traj).F
        assert F[-1] == pytest.approx(0.1 ** 3 * 0.25 * (1 - math.exp(-2)) / 2, rel=1e-12)
        assert F[-1] == pytest.approx(1.08083e-4, rel=1e-5)
        assert F[-1] == pytest.approx(quadrature_power(traj), rel=1e-9)

    def test_matches_quadrature_with_switches(self):
        traj = simulate_polygon(TauMatrix(3, {(i, j): 0.1 for i in range(3) for j in range(3) if i != j}),
                                v=0.2, n_steps=200, seed=3)
        assert fs.cumulative_power(traj).F[-1] == pytest.approx(quadrature_power(traj), rel=1e-9)

    def test_zero_length(self):
        traj = simulate_line(TauMatrix.two_state(0.1, 0.1), n_steps=0)
        np.testing.assert_array_equal(fs.cumulative_power(traj).F, [0.0])

    def test_poisson_record(self):
        params = PoissonParams(2, {(0, 1): 3.0, (1, 0): 5.0})
        traj = simulate_poisson(params, v=0.3, horizon=60.0, sample_dt=2.0, seed=4)
        # quadrature over the exact jump record
        g = traj.targets.vertices
        cuts = list(traj.jump_times) + [60.0]
        p, total = traj.positions[0].copy(), 0.0
        for (a, b), s in zip(zip(cuts[:-1], cuts[1:]), traj.jump_states):
            b = min(b, 60.0)
            if b <= a:
                continue
            d2 = float(np.sum((p - g[s]) ** 2))
            total += quad(lambda u: 0.3 ** 4 * d2 * math.exp(-0.6 * u), 0, b - a, epsabs=1e-18)[0]
            p = g[s] + (p - g[s]) * math.exp(-0.3 * (b - a))
        assert fs.cumulative_power(traj).F[-1] == pytest.approx(total, rel=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.001, 0.5), st.floats(0.001, 0.5), st.floats(0.01, 1.0), st.integers(0, 1000))
    def test_bounded_by_v4_t(self, t01, t10, v, seed):
        traj = simulate_line(TauMatrix.two_state(t01, t10), v=v, n_steps=500, seed=seed)
        F = fs.cumulative_power(traj).F
        assert np.all(F <= v ** 4 * traj.times)
        assert np.all(np.diff(F) >= 0)

    def test_predicted_slope(self):
        assert fs.predicted_power_slope(0.05, 0.08, 0.1) == pytest.approx(1.33779e-5, rel=1e-5)
        a, v = 0.03, 0.2
        assert fs.predicted_power_slope(a, a, v) == pytest.approx(v ** 4 * a / (2 * (2 * a + v)))

    def test_empirical_slope(self):
        traj = simulate_line(TauMatrix.two_state(0.05, 0.08), v=0.1, n_steps=1_000_000, seed=0)
        slope = fs.cumulative_power(traj).slope()
        assert slope == pytest.approx(fs.predicted_power_slope(0.05, 0.08, 0.1), rel=0.05)


class TestLogGamma:
    @settings(max_examples=200)
    @given(st.floats(1e-3, 1e3))
    def test_against_mpmath(self, x):
        ref = float(mpmath.loggamma(x))
        assert fs.log_gamma(x) == pytest.approx(ref, rel=1e-13, abs=1e-14)

    @settings(max_examples=200)
    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_log_beta_against_mpmath(self, a, b):
        ref = float(mpmath.log(mpmath.beta(a, b)))
        assert fs.log_beta_function(a, b) == pytest.approx(ref, rel=1e-13, abs=1e-13)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            fs.log_gamma(0.0)
        with pytest.raises(DomainError):
            fs.log_beta_function(1.0, -1.0)


class TestBetaDensity:
    def test_uniform(self):
        np.testing.assert_allclose(fs.log_beta_density([0.1, 0.5, 0.9], 1.0, 1.0), 0.0, atol=1e-14)

    def test_linear(self):
        x = np.array([0.1, 0.3, 0.8])
        np.testing.assert_allclose(fs.log_beta_density(x, 2.0, 1.0), np.log(2 * x), rtol=1e-14)

    def test_quadrature_normalizer(self):
        a, b = 0.5, 0.8
        norm = quad(lambda t: t ** (a - 1) * (1 - t) ** (b - 1), 0, 1, limit=200)[0]
        expected = (a - 1) * math.log(0.3) + (b - 1) * math.log(0.7) - math.log(norm)
        assert fs.log_beta_density(0.3, a, b) == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize("x", [0.0, 1.0, -0.1])
    def test_outside_unit_interval(self, x):
        with pytest.raises(DomainError):
            fs.log_beta_density(x, 2.0, 2.0)
