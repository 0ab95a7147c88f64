"""Closed-loop simulator: sequences, flows, rule firing, CSV output."""

import csv

import numpy as np
import pytest

from minjump import (
    DwellRange,
    ImpulsiveSpec,
    MinJumpCertificate,
    ModeWeights,
    SwitchedSpec,
    augment_impulsive,
    augment_switched,
    gen_sequence,
    lyapunov_trace,
    simulate_impulsive,
    simulate_switched,
    write_csv,
)
from minjump.errors import ConfigError, DivergenceError
from minjump.linalg import expm
from minjump.sim import SamplingSequence

from conftest import EX2_PERIOD


@pytest.fixture
def ex2_loop(ex2_model, ex2_cert):
    seq = gen_sequence(DwellRange(EX2_PERIOD, EX2_PERIOD), "periodic",
                       count=100, period=EX2_PERIOD)
    return ex2_model, ex2_cert, seq


def test_gen_sequence_periodic():
    seq = gen_sequence(DwellRange(0.01, 0.05), "periodic", count=10, period=0.02)
    assert len(seq.dwells) == 10
    assert np.allclose(seq.dwells, 0.02)
    assert seq.times[0] == 0.0


def test_gen_sequence_random_reproducible():
    dwell = DwellRange(0.01, 0.05)
    a = gen_sequence(dwell, "uniform_random", count=50, seed=3)
    b = gen_sequence(dwell, "uniform_random", count=50, seed=3)
    assert np.array_equal(a.times, b.times)
    dwells = np.asarray(a.dwells)
    assert (dwells >= 0.01 - 1e-12).all() and (dwells <= 0.05 + 1e-12).all()
    c = gen_sequence(dwell, "uniform_random", count=50, seed=4)
    assert not np.array_equal(a.times, c.times)


def test_gen_sequence_validation():
    dwell = DwellRange(0.01, 0.05)
    with pytest.raises(ConfigError):
        gen_sequence(dwell, "periodic", count=5)  # period missing
    with pytest.raises(ConfigError):
        gen_sequence(dwell, "periodic", count=5, period=0.2)  # out of range
    with pytest.raises(ConfigError):
        gen_sequence(dwell, "sorted", count=5)


def test_sampling_sequence_validation():
    with pytest.raises(ConfigError):
        SamplingSequence(times=(0.5, 1.0))  # must start at zero
    with pytest.raises(ConfigError):
        SamplingSequence(times=(0.0, 0.2, 0.2))  # not strictly increasing
    with pytest.raises(ConfigError):
        SamplingSequence(times=(0.0, 0.2, 0.3), dwell=DwellRange(0.15, 0.18))


def test_lyapunov_strictly_decreases(ex2_loop):
    model, cert, seq = ex2_loop
    traj = simulate_impulsive(model, cert, seq, [1.0, 1.0])
    v = traj.lyapunov
    assert (np.diff(v) < 0.0).all()
    assert v[0] / v[-1] > 1e3


def test_lyapunov_trace_matches_stored(ex2_loop):
    model, cert, seq = ex2_loop
    traj = simulate_impulsive(model, cert, seq, [1.0, 1.0])
    assert np.array_equal(lyapunov_trace(traj, cert), traj.lyapunov)


def test_zero_state_stays_zero(ex2_loop):
    model, cert, seq = ex2_loop
    traj = simulate_impulsive(model, cert, seq, [0.0, 0.0])
    assert not traj.pre_states.any()
    assert not traj.post_states.any()
    assert (traj.modes == traj.modes[0]).all()


def test_dense_output_is_exact(ex2_loop):
    # every dense point must equal the matrix exponential applied directly
    model, cert, seq = ex2_loop
    traj = simulate_impulsive(model, cert, seq, [1.0, 1.0], substeps=4)
    A = model.drift()
    for k in range(min(20, traj.samples - 1)):
        t0 = traj.times[k]
        start = traj.post_states[k]
        sel = slice(k * 4, (k + 1) * 4)
        for tq, xq in zip(traj.dense_times[sel], traj.dense_states[sel]):
            want = expm(A, tq - t0) @ start
            assert np.linalg.norm(xq - want, np.inf) <= 1e-10 * max(
                1.0, np.linalg.norm(want, np.inf))


def test_substep_count_does_not_change_samples(ex2_loop):
    model, cert, seq = ex2_loop
    one = simulate_impulsive(model, cert, seq, [1.0, 1.0], substeps=1)
    eight = simulate_impulsive(model, cert, seq, [1.0, 1.0], substeps=8)
    assert np.linalg.norm(one.pre_states - eight.pre_states, np.inf) <= 1e-10
    assert np.array_equal(one.modes, eight.modes)


def test_single_mode_switched_equals_impulsive():
    """With one mode, no inputs and an identity jump the two loops coincide.

    The impulsive rule scores before jumping, the switched rule after; the
    identity jump makes those the same number, so trajectories, modes and
    stored values must agree bit for bit.
    """
    A = [[-0.3, 1.0], [0.0, -0.5]]
    imp = augment_impulsive(ImpulsiveSpec(A, J=[np.eye(2).tolist()]))
    sw = augment_switched(SwitchedSpec([A], J=[[np.eye(2).tolist()]]))
    P = [[2.0, 0.3], [0.3, 1.0]]
    cert = MinJumpCertificate([P], ModeWeights([[1.0]]))
    seq = gen_sequence(DwellRange(0.05, 0.3), "uniform_random", count=40, seed=9)
    a = simulate_impulsive(imp, cert, seq, [1.0, -2.0])
    b = simulate_switched(sw, cert, seq, [1.0, -2.0])
    assert np.array_equal(a.pre_states, b.pre_states)
    assert np.array_equal(a.post_states, b.post_states)
    assert np.array_equal(a.lyapunov, b.lyapunov)
    assert np.array_equal(a.modes, b.modes)


def test_switched_loop_flows_with_selected_mode(ex3_reference_model,
                                                ex3_reference_cert):
    seq = gen_sequence(DwellRange(0.01, 0.05), "uniform_random", count=60, seed=2)
    traj = simulate_switched(ex3_reference_model, ex3_reference_cert, seq,
                             [1.0, 1.0], substeps=3)
    v = traj.lyapunov
    assert (np.diff(v) < 0.0).all()
    # both modes should fire on this system
    assert set(np.unique(traj.modes)) == {0, 1}
    # each interval's flow is the selected mode's exponential
    for k in range(10):
        dt = traj.times[k + 1] - traj.times[k]
        E = expm(ex3_reference_model.drift(traj.modes[k]), dt)
        want = E @ traj.post_states[k]
        assert np.allclose(want, traj.pre_states[k + 1], atol=1e-9)


def test_divergence_raises():
    model = augment_impulsive(
        ImpulsiveSpec([[3.0, 0.0], [1.0, 1.0]], J=[np.eye(2).tolist()]))
    cert = MinJumpCertificate([np.eye(2)], ModeWeights([[1.0]]))
    seq = gen_sequence(DwellRange(0.5, 0.5), "periodic", count=60, period=0.5)
    with pytest.raises(DivergenceError) as err:
        simulate_impulsive(model, cert, seq, [1.0, 1.0])
    assert err.value.last_time is not None


def test_initial_mode_validation(ex3_reference_model, ex3_reference_cert):
    from minjump.errors import ModelError
    seq = gen_sequence(DwellRange(0.01, 0.05), "uniform_random", count=5, seed=1)
    with pytest.raises(ModelError):
        simulate_switched(ex3_reference_model, ex3_reference_cert, seq,
                          [1.0, 1.0], initial_mode=7)


def test_csv_round_trip(tmp_path, ex2_loop):
    model, cert, seq = ex2_loop
    traj = simulate_impulsive(model, cert, seq, [1.0, 1.0], substeps=4)
    path = tmp_path / "traj.csv"
    write_csv(traj, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x1", "x2", "sigma", "V", "post"]
    # two rows per sample plus the interior dense points
    assert len(rows) - 1 == 2 * traj.samples + (traj.samples - 1) * 3
    # float repr carries enough digits to reconstruct the state exactly
    pre0 = np.array([float(v) for v in rows[1][1:3]])
    assert np.array_equal(pre0, traj.pre_states[0][:2])
    post0 = np.array([float(v) for v in rows[2][1:3]])
    assert np.array_equal(post0, traj.post_states[0][:2])
    assert rows[1][5] == "0" and rows[2][5] == "1"
    # modes are written 1-based
    assert rows[2][3] == str(traj.modes[0] + 1)
