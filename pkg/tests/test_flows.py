import csv
import json

import numpy as np
import pytest

from cplab.errors import EmptyTrajectory, ForbiddenTimePath
from cplab.flows import (
    Trajectory,
    commutator_drift,
    eigen_tracks,
    hamiltonian_log,
    integrate_matrix_flow,
    write_eigen_csv,
    write_trajectory_json,
)
from cplab.reduction import ParticleState, orbit_embed, stabilizer_gauge
from cplab.systems import MatrixState, ParamSet


def zero_state(n, t):
    return MatrixState(np.zeros((n, n)), np.zeros((n, n)), t)


def orbit_point(rng, x, y, g, t):
    X, Y = orbit_embed(ParticleState(np.asarray(x), np.asarray(y), t, g))
    G = stabilizer_gauge(rng, len(x))
    Gi = np.linalg.inv(G)
    return MatrixState(G @ X @ Gi, G @ Y @ Gi, t)


def test_pii_origin_is_stationary():
    tr = integrate_matrix_flow("PII", ParamSet.of("PII", theta=0), zero_state(1, 0), 1.0)
    for s in tr.samples:
        assert np.all(s.q == 0) and np.all(s.p == 0)


@pytest.mark.parametrize("n", [1, 2])
def test_stationary_hamiltonian_series(n):
    tr = integrate_matrix_flow("PII", ParamSet.of("PII", theta=0), zero_state(n, 0), 1.0)
    log = hamiltonian_log(tr)
    assert len(log) == len(tr.samples)
    for t, h in log:
        assert h == pytest.approx(-n * t**2 / 8, abs=1e-15)


def test_pii_orbit_drift():
    rng = np.random.default_rng(4)
    st = orbit_point(rng, [0.5 + 0.1j, -0.4 + 0.2j], [0.1, -0.2j], 0.3, 1.0)
    tr = integrate_matrix_flow("PII", ParamSet.of("PII", theta=0), st, 1.5, tol=1e-10)
    assert commutator_drift(tr) <= 1e-8


def test_pi_random_drift():
    rng = np.random.default_rng(8)
    n = 2
    q = 0.3 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    p = 0.3 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    tr = integrate_matrix_flow("PI", ParamSet.of("PI"), MatrixState(q, p, 0), 1.0, tol=1e-10)
    assert commutator_drift(tr) <= 1e-8


def test_drift_improves_with_tolerance():
    rng = np.random.default_rng(9)
    st = orbit_point(rng, [0.6, -0.3 + 0.4j, -0.2 - 0.5j], [0.2, 0.1j, -0.1], 0.4, 0.0)
    par = ParamSet.of("PII", theta=0.2)
    loose = commutator_drift(integrate_matrix_flow("PII", par, st, 1.0, tol=1e-4))
    tight = commutator_drift(integrate_matrix_flow("PII", par, st, 1.0, tol=1e-10))
    assert tight <= loose


def test_pvi_path_through_one():
    st = MatrixState(0.5 * np.eye(1), 0.1 * np.eye(1), 0.5)
    with pytest.raises(ForbiddenTimePath):
        integrate_matrix_flow("PVI", ParamSet.of("PVI"), st, 1.5)


def test_single_sample_and_empty():
    par = ParamSet.of("PII")
    one = Trajectory("PII", par, (zero_state(2, 0.3),), 1e-10)
    assert commutator_drift(one) == 0.0
    assert len(hamiltonian_log(one)) == 1
    empty = Trajectory("PII", par, (), 1e-10)
    with pytest.raises(EmptyTrajectory):
        commutator_drift(empty)
    with pytest.raises(EmptyTrajectory):
        hamiltonian_log(empty)


def test_time_reversal_roundtrip():
    rng = np.random.default_rng(12)
    st = orbit_point(rng, [0.3, -0.5j], [0.2, 0.1], 0.25, 0.0)
    par = ParamSet.of("PIV", theta0=0.3, theta1=-0.1)
    tol = 1e-10
    fwd = integrate_matrix_flow("PIV", par, st, 0.5 + 0.2j, tol=tol)
    back = integrate_matrix_flow("PIV", par, fwd.samples[-1], 0.0, tol=tol)
    end = back.samples[-1]
    err = max(np.abs(end.q - st.q).max(), np.abs(end.p - st.p).max())
    assert err <= 10 * tol


def test_convergence_against_reference():
    rng = np.random.default_rng(13)
    st = orbit_point(rng, [0.4, -0.3 + 0.3j], [0.1, 0.2], 0.3, 0.0)
    par = ParamSet.of("PII", theta=0.1)
    # two samples only, so the step size is set by the tolerance alone
    ref = integrate_matrix_flow("PII", par, st, 2.0, tol=1e-13, n_samples=2).samples[-1]
    errs = []
    for tol in (1e-4, 1e-7, 1e-10):
        end = integrate_matrix_flow("PII", par, st, 2.0, tol=tol, n_samples=2).samples[-1]
        errs.append(np.abs(end.q - ref.q).max())
    assert errs[0] >= errs[1] >= errs[2]
    assert errs[2] <= 1e-8


def test_json_and_csv_outputs(tmp_path):
    rng = np.random.default_rng(1)
    st = orbit_point(rng, [0.5, -0.5], [0.0, 0.0], 0.3, 0.0)
    tr = integrate_matrix_flow("PII", ParamSet.of("PII", theta=0.2), st, 0.5, n_samples=5, g=0.3)
    jpath = tmp_path / "traj.json"
    write_trajectory_json(tr, jpath)
    doc = json.loads(jpath.read_text())
    assert set(doc) == {"system", "params", "n", "g", "tol", "samples"}
    assert doc["system"] == "PII" and doc["n"] == 2 and len(doc["samples"]) == 5
    s0 = doc["samples"][0]
    assert set(s0) == {"t_re", "t_im", "q", "p"}
    q0 = np.array([complex(*z) for z in s0["q"]]).reshape(2, 2)
    np.testing.assert_array_equal(q0, st.q)

    cpath = tmp_path / "eig.csv"
    write_eigen_csv(tr, cpath)
    rows = list(csv.reader(cpath.open()))
    assert rows[0] == ["t_re", "t_im", "x1_re", "x1_im", "x2_re", "x2_im"]
    assert len(rows) == 6
    tracks = eigen_tracks(tr)
    assert float(rows[-1][2]) == tracks[-1, 0].real


def test_eigen_tracks_follow_continuity():
    rng = np.random.default_rng(2)
    st = orbit_point(rng, [0.5, -0.5], [0.3, -0.3], 0.3, 0.0)
    tr = integrate_matrix_flow("PII", ParamSet.of("PII"), st, 1.0, n_samples=41)
    tracks = eigen_tracks(tr)
    assert np.abs(np.diff(tracks, axis=0)).max() < 0.1
