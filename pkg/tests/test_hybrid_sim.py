import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from buridan.errors import DomainError, InvalidParametersError
from buridan.hybrid_sim import (
    POISSON,
    PoissonParams,
    PolygonTargets,
    add_noise,
    observe,
    simulate_line,
    simulate_poisson,
    simulate_polygon,
)
from buridan.markov_core import TauMatrix, build_transition_matrix, stationary_minor_determinant


def stepwise(traj):
    """Reference recursion: one exact unit step at a time."""
    g = traj.targets.vertices
    p = traj.positions[0].copy()
    out = [p.copy()]
    for s in traj.states[:-1]:
        p = g[s] + (p - g[s]) * math.exp(-traj.v)
        out.append(p.copy())
    return np.array(out)


class TestTargets:
    def test_line_and_triangle(self):
        assert PolygonTargets.line().dim == 1
        assert PolygonTargets.triangle().n_vertices == 3

    @pytest.mark.parametrize("verts", [
        [[0, 0], [1, 0], [2, 0]],  # collinear
        [[0, 0], [1, 0], [0, 0]],  # duplicate
        [[0, 0], [1, 1]],          # no interior
        [[0], [0.5], [1]],         # three targets on a line
        [[0, 0], [2, 0], [1, 0.2], [1, 2]],  # reflex vertex
    ])
    def test_rejects_bad_vertices(self, verts):
        with pytest.raises(InvalidParametersError):
            PolygonTargets(np.array(verts, dtype=float))

    def test_contains_strictly(self):
        tri = PolygonTargets.triangle()
        assert list(tri.contains_strictly([[0.2, 0.2], [0.5, 0.5], [0.0, 0.3], [0.6, 0.6]])) == [
            True, False, False, False]


class TestLine:
    def test_first_step(self):
        traj = simulate_line(TauMatrix.two_state(0.0, 0.0), v=0.1, n_steps=1)
        assert traj.positions[1, 0] == pytest.approx(0.452419, abs=1e-6)
        ode = solve_ivp(lambda t, x: -0.1 * x, (0, 1), [0.5], rtol=1e-12, atol=1e-14)
        assert traj.positions[1, 0] == pytest.approx(ode.y[0, -1], rel=1e-10)

    def test_no_switching_decays_without_reaching_target(self):
        traj = simulate_line(TauMatrix.two_state(0.0, 0.0), v=1.0, n_steps=2000)
        x = traj.positions[:, 0]
        assert np.all(np.diff(x) <= 0)
        assert np.all(x > 0)
        assert np.all(traj.states == 0)

    def test_shapes(self, line_traj):
        assert line_traj.positions.shape == (10_001, 1)
        assert len(line_traj.states) == 10_001
        np.testing.assert_array_equal(line_traj.times, np.arange(10_001))

    def test_matches_stepwise_recursion(self, line_traj):
        np.testing.assert_allclose(line_traj.positions, stepwise(line_traj), rtol=0, atol=1e-12)

    def test_deterministic(self):
        tau = TauMatrix.two_state(0.05, 0.08)
        a, b = simulate_line(tau, seed=3), simulate_line(tau, seed=3)
        np.testing.assert_array_equal(a.positions, b.positions)
        np.testing.assert_array_equal(a.states, b.states)
        assert not np.array_equal(a.states, simulate_line(tau, seed=4).states)

    def test_occupancy_matches_stationary_vector(self):
        tau = TauMatrix.two_state(0.05, 0.08)
        traj = simulate_line(tau, n_steps=1_000_000, seed=11)
        freq = np.bincount(traj.states, minlength=2) / len(traj.states)
        expected = stationary_minor_determinant(build_transition_matrix(tau))
        np.testing.assert_allclose(freq, expected, atol=0.01)
        assert freq[0] == pytest.approx(0.6154, abs=0.01)

    @pytest.mark.parametrize("kwargs", [{"x0": 0.0}, {"x0": 1.2}, {"v": 0.0}, {"n_steps": -1},
                                        {"initial_state": 2}])
    def test_rejects_bad_inputs(self, kwargs):
        with pytest.raises((DomainError, InvalidParametersError)):
            simulate_line(TauMatrix.two_state(0.1, 0.1), **kwargs)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0.001, 2.0), st.integers(0, 10_000))
    def test_stays_strictly_inside(self, t01, t10, v, seed):
        traj = simulate_line(TauMatrix.two_state(t01, t10), v=v, n_steps=500, seed=seed)
        x = traj.positions[:, 0]
        assert np.all((x > 0) & (x < 1))


class TestPolygon:
    def test_first_step_toward_origin(self, triangle_tau):
        traj = simulate_polygon(TauMatrix(3, {}), v=0.01, n_steps=1)
        np.testing.assert_allclose(traj.positions[1], [math.exp(-0.01) / 3] * 2, rtol=1e-15)

    def test_straight_line_toward_vertex(self):
        traj = simulate_polygon(TauMatrix(3, {}), v=0.05, n_steps=50, initial_state=1)
        y = traj.positions[:, 1]
        np.testing.assert_allclose(y[1:], y[:-1] * math.exp(-0.05), rtol=1e-14)
        assert np.all(np.diff(traj.positions[:, 0]) > 0)

    def test_matches_stepwise_recursion(self, triangle_traj):
        np.testing.assert_allclose(triangle_traj.positions, stepwise(triangle_traj), atol=1e-12)

    def test_square_pen(self):
        square = PolygonTargets(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))
        tau = TauMatrix(4, {(i, j): 0.01 for i in range(4) for j in range(4) if i != j})
        traj = simulate_polygon(tau, square, v=0.05, n_steps=5000, seed=1)
        assert np.all(square.contains_strictly(traj.positions))
        assert set(np.unique(traj.states)) == {0, 1, 2, 3}

    def test_occupancy_matches_stationary_vector(self, triangle_tau):
        traj = simulate_polygon(triangle_tau, n_steps=1_000_000, seed=5)
        freq = np.bincount(traj.states, minlength=3) / len(traj.states)
        expected = stationary_minor_determinant(build_transition_matrix(triangle_tau))
        np.testing.assert_allclose(freq, expected, atol=0.01)

    def test_state_count_must_match_targets(self):
        with pytest.raises(InvalidParametersError):
            simulate_polygon(TauMatrix.two_state(0.1, 0.1))

    def test_start_outside_rejected(self, triangle_tau):
        with pytest.raises(DomainError):
            simulate_polygon(triangle_tau, p0=[0.8, 0.8])


class TestPoisson:
    PARAMS = PoissonParams(3, {(0, 1): 10.0, (0, 2): 30.0, (1, 0): 20.0, (1, 2): 20.0,
                               (2, 0): 10.0, (2, 1): 30.0})

    def test_holding_and_jump_probabilities(self):
        p = PoissonParams(3, {(1, 0): 10.0, (1, 2): 30.0, (0, 1): 5.0, (2, 1): 5.0})
        assert p.mean_holding_time(1) == pytest.approx(7.5)
        assert p.jump_probability(1, 0) == pytest.approx(0.75)

    def test_empirical_rates(self):
        traj = simulate_poisson(self.PARAMS, horizon=400_000.0, sample_dt=10.0, seed=2)
        src, dst = traj.jump_states[:-1], traj.jump_states[1:]
        hold = np.diff(traj.jump_times)
        out_of_0 = src == 0
        assert hold[out_of_0].mean() == pytest.approx(7.5, rel=0.03)
        assert np.mean(dst[out_of_0] == 1) == pytest.approx(0.75, abs=0.01)

    def test_two_state_holding_is_exponential(self):
        params = PoissonParams(2, {(0, 1): 4.0, (1, 0): 6.0})
        traj = simulate_poisson(params, v=0.1, horizon=1_000_000.0, sample_dt=50.0, seed=0)
        hold = np.diff(traj.jump_times)[traj.jump_states[:-1] == 0]
        assert len(hold) > 100_000
        assert hold.mean() == pytest.approx(4.0, rel=0.02)

    def test_grid_positions_follow_jump_record(self):
        traj = simulate_poisson(self.PARAMS, v=0.05, horizon=500.0, sample_dt=0.5, seed=9)
        assert traj.model == POISSON
        g = traj.targets.vertices
        p, t, k = traj.positions[0].copy(), 0.0, 0
        jumps = list(zip(traj.jump_times[1:], traj.jump_states[1:])) + [(math.inf, None)]
        state = traj.jump_states[0]
        for tj, sj in jumps:
            while k < len(traj.times) and traj.times[k] < tj:
                expected = g[state] + (p - g[state]) * math.exp(-0.05 * (traj.times[k] - t))
                np.testing.assert_allclose(traj.positions[k], expected, atol=1e-12)
                assert traj.states[k] == state
                k += 1
            if sj is None:
                break
            p = g[state] + (p - g[state]) * math.exp(-0.05 * (tj - t))
            t, state = tj, sj

    def test_rejects_bad_mu(self):
        with pytest.raises(InvalidParametersError):
            PoissonParams(2, {(0, 1): 0.0})


class TestNoise:
    def test_zero_sigma_is_identity(self, triangle_traj):
        obs = add_noise(triangle_traj, 0.0, seed=1)
        np.testing.assert_array_equal(obs.positions, triangle_traj.positions)

    def test_noise_level(self, triangle_traj):
        obs = add_noise(triangle_traj, 0.01, seed=1)
        std = (obs.positions - triangle_traj.positions).std(axis=0)
        np.testing.assert_allclose(std, 0.01, rtol=0.05)

    def test_deterministic(self, triangle_traj):
        a = add_noise(triangle_traj, 0.01, seed=4)
        b = add_noise(triangle_traj, 0.01, seed=4)
        np.testing.assert_array_equal(a.positions, b.positions)

    def test_negative_sigma(self, triangle_traj):
        with pytest.raises(DomainError):
            add_noise(triangle_traj, -1.0)

    def test_observe_copies(self, triangle_traj):
        obs = observe(triangle_traj)
        np.testing.assert_array_equal(obs.positions, triangle_traj.positions)
        assert obs.positions is not triangle_traj.positions
