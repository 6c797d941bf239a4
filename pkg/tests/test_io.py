import numpy as np
import pytest

from buridan.errors import DomainError
from buridan.estimators import EstimationReport
from buridan.hybrid_sim import add_noise
from buridan.io import (
    read_observations_csv,
    read_report,
    read_trajectory_csv,
    write_observations_csv,
    write_report,
    write_trajectory_csv,
)
from buridan.markov_core import TauMatrix


def test_trajectory_round_trip_is_exact(tmp_path, triangle_traj):
    path = tmp_path / "traj.csv"
    write_trajectory_csv(triangle_traj, path)
    assert path.read_text().splitlines()[0] == "t,x,y,state"
    back = read_trajectory_csv(path, v=0.01)
    np.testing.assert_array_equal(back.positions, triangle_traj.positions)
    np.testing.assert_array_equal(back.states, triangle_traj.states)
    np.testing.assert_array_equal(back.times, triangle_traj.times)


def test_line_header(tmp_path, line_traj):
    path = tmp_path / "line.csv"
    write_trajectory_csv(line_traj, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x,state"
    assert len(lines) == len(line_traj) + 1


def test_observations_round_trip(tmp_path, triangle_traj):
    obs = add_noise(triangle_traj, 0.01, seed=1)
    path = tmp_path / "obs.csv"
    write_observations_csv(obs, path)
    assert path.read_text().splitlines()[0] == "t,x,y"
    back = read_observations_csv(path)
    np.testing.assert_array_equal(back.positions, obs.positions)


def test_rejects_malformed(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(DomainError):
        read_observations_csv(path)
    path.write_text("t,x\n1,zz\n")
    with pytest.raises(DomainError):
        read_observations_csv(path)


def test_report_round_trip(tmp_path):
    rep = EstimationReport("mle", TauMatrix.two_state(0.045, 0.085), TauMatrix.two_state(0.05, 0.08))
    path = tmp_path / "r.json"
    write_report(rep, path)
    back = read_report(path)
    assert back.estimates == rep.estimates
    assert back.relative_errors == pytest.approx(rep.relative_errors)
