from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cancellation.processes import (ProcessError, ProcessSpec, empirical_moments, iid,
                                    marginal_moments, markov, mean_cancel, pointwise_cancel,
                                    rotation, save_run, simulate_process)
from cancellation.seqgen import GOLDEN, gen_iid, gen_rotation

SPECS = [
    rotation(GOLDEN),
    rotation(Fraction(1, 3)),
    iid("symmetric-two-point"),
    iid("uniform-disk"),
    iid("complex-gaussian"),
    markov([[0.9, 0.1], [0.3, 0.7]], [1, -1j]),
    ProcessSpec("product", components=(rotation(0.25), markov([[0.5, 0.5], [0.2, 0.8]], [2, -1]))),
]


def test_simulate_examples():
    y = simulate_process(rotation(0.0), 4, 100)
    assert np.abs(y - y[0]).max() < 1e-12 and abs(abs(y[0]) - 1) < 1e-12
    m = markov(np.eye(3), [5, 6, 7], stationary=[1, 0, 0])
    assert np.all(simulate_process(m, 1, 50) == 5)
    assert np.array_equal(simulate_process(SPECS[5], 9, 300), simulate_process(SPECS[5], 9, 300))


@pytest.mark.slow
def test_iid_lag_one_correlation():
    y = simulate_process(iid(), 3, 10**6)
    assert abs(np.mean(y[1:] * np.conj(y[:-1]))) < 0.005


def test_markov_validation():
    with pytest.raises(ProcessError):
        markov([[0.5, 0.4], [0.5, 0.5]], [1, 2])
    with pytest.raises(ProcessError):
        markov([[0.5, 0.5], [0.5, 0.5]], [1, 2], stationary=[0.9, 0.1])
    m = markov([[0.9, 0.1], [0.3, 0.7]], [1, 2])
    assert m.stationary == pytest.approx((0.75, 0.25))


def test_markov_stationary_frequencies():
    m = SPECS[5]
    y = simulate_process(m, 12, 2 * 10**5)
    assert np.mean(y == 1) == pytest.approx(0.75, abs=0.01)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
def test_stationarity_first_two_moments(spec):
    ens = 400
    m1, m2, se1, se2 = marginal_moments(spec, [1, 1001], ens, base_seed=100)
    assert abs(m1[0] - m1[1]) <= 3 * np.hypot(se1[0], se1[1]) + 1e-12
    assert abs(m2[0] - m2[1]) <= 3 * np.hypot(se2[0], se2[1]) + 1e-12


def test_spec_json_roundtrip():
    for s in SPECS:
        t = ProcessSpec.from_json(s.to_json())
        assert np.array_equal(simulate_process(s, 5, 200), simulate_process(t, 5, 200))


def test_conjugate_rotation_never_cancels():
    a = GOLDEN
    x = gen_rotation(-a, 1, 10**5)
    run = pointwise_cancel(x, rotation(a), [1, 2, 3], [10, 10**4, 10**5])
    assert np.abs(run.per_path - 1).max() < 1e-9
    assert run.non_cancelling.all()
    curve = mean_cancel(x, rotation(a), 8, [10, 10**5])
    assert np.abs(curve.rms - 1).max() < 1e-9


@pytest.mark.slow
def test_sqrt_sequence_cancels_rotations(sqrt_seq_1e6):
    # oracle: the product x_n * conj... is a plain exponential sum, summed directly
    n = np.arange(1, 10**6 + 1)
    for m in (0, 1, -1, 2, -2):
        run = pointwise_cancel(sqrt_seq_1e6, rotation(m * GOLDEN), [m + 10], [10**6])
        assert run.per_path[0, 0] < 0.02
        direct = abs(np.exp(2j * np.pi * ((n + np.sqrt(n)) * GOLDEN + n * m * GOLDEN)).mean())
        assert run.per_path[0, 0] == pytest.approx(direct, abs=1e-6)
    curve = mean_cancel(sqrt_seq_1e6, rotation(0.125), 4, [10**6])
    assert curve.at(10**6) < 0.05


@pytest.mark.slow
def test_iid_against_iid():
    x = gen_iid("symmetric-two-point", 5, 10**6)
    run = pointwise_cancel(x, iid(), [77], [10**6])
    assert run.per_path[0, 0] < 0.005


def test_mean_cancel_scaling_and_bounds():
    x = gen_iid("symmetric-two-point", 8, 4 * 10**4)
    curve = mean_cancel(x, iid("uniform-disk"), 64, [10**4, 4 * 10**4], base_seed=1000)
    assert abs(curve.rms[1] / curve.rms[0] - 0.5) < 0.15
    assert curve.run.bound_ok()
    with pytest.raises(ProcessError):
        mean_cancel(x, iid(), 1, [10])
    with pytest.raises(ProcessError):
        pointwise_cancel(x, iid(), [1], [10**6])


@settings(max_examples=15, deadline=None)
@given(perm_seed=st.integers(0, 10**6), spec_i=st.integers(0, len(SPECS) - 1))
def test_bound_and_seed_permutation(perm_seed, spec_i):
    spec = SPECS[spec_i]
    x = gen_iid("uniform-disk", 3, 500)
    seeds = list(range(10))
    run = pointwise_cancel(x, spec, seeds, [50, 500])
    if np.isfinite(spec.bound):
        assert run.bound_ok()
    shuffled = list(np.random.default_rng(perm_seed).permutation(seeds))
    other = pointwise_cancel(x, spec, shuffled, [50, 500])
    np.testing.assert_allclose(other.l2_estimate, run.l2_estimate, rtol=1e-12)


def test_empirical_moments():
    x = gen_rotation(GOLDEN, 1, 5000)
    tab = empirical_moments(x, [(1, 1)], [0, 1, 7])
    for tau in (0, 1, 7):
        assert tab[(1, 1, tau)] == pytest.approx(np.exp(-2j * np.pi * tau * GOLDEN), abs=1e-9)
    with pytest.raises(ProcessError):
        empirical_moments(x, [(1, 1)], [-1])


@pytest.mark.slow
def test_sqrt_moments(sqrt_seq_1e6):
    tab = empirical_moments(sqrt_seq_1e6, [(1, 0), (1, 1)], [0, 3])
    assert abs(tab[(1, 0, 0)]) < 0.01
    assert abs(tab[(1, 1, 3)] - np.exp(-2j * np.pi * 3 * GOLDEN)) < 0.05


def test_save_run(tmp_path):
    x = gen_iid("symmetric-two-point", 1, 100)
    run = pointwise_cancel(x, iid(), [1, 2], [10, 100])
    save_run(run, tmp_path)
    lines = (tmp_path / "cancel.csv").read_text().splitlines()
    assert lines[0] == "seed,T,absA" and len(lines) == 5
    assert (tmp_path / "cancel.json").exists()
