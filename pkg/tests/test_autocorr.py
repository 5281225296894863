import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cancellation.autocorr import (AutocorrError, atom_functional, autocorr_profile,
                                   density_bad_tau, density_profile, fast_autocorr,
                                   geometric_windows, naive_autocorr, subseq_density)
from cancellation.seqgen import GOLDEN, gen_iid, gen_rotation


def test_fft_matches_naive_on_random_sequences():
    rng = np.random.default_rng(7)
    for _ in range(200):
        N = int(rng.integers(1, 120))
        tau = int(rng.integers(0, 40))
        v = rng.standard_normal(N + tau) + 1j * rng.standard_normal(N + tau)
        want = naive_autocorr(v, N, tau)
        got = fast_autocorr(v, N, tau)
        scale = max(1.0, np.abs(want).max())
        assert np.abs(got - want).max() <= 1e-9 * scale


def test_chunked_lags_match_single_transform():
    rng = np.random.default_rng(3)
    v = rng.standard_normal(3000) + 1j * rng.standard_normal(3000)
    whole = fast_autocorr(v, 1000, 1500)
    small = fast_autocorr(v, 1000, 1500, memory_budget=16 * 4 * 1100)
    assert np.abs(whole - small).max() < 1e-12


def test_rotation_profile_closed_form():
    x = gen_rotation(GOLDEN, 1, 5000)
    prof = autocorr_profile(x, [1000, 4000], 50)
    tau = np.arange(51)
    want = np.exp(2j * np.pi * GOLDEN * tau)
    assert np.abs(prof.row(4000) - want).max() < 1e-9
    assert prof.rho(1000, 0) == 1.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), N=st.integers(1, 300), tau_max=st.integers(0, 60))
def test_cauchy_schwarz_and_lag_zero(seed, N, tau_max):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(N + tau_max) + 1j * rng.standard_normal(N + tau_max)
    prof = autocorr_profile(v, [N], tau_max)
    r = prof.row(N)
    assert r[0].imag == 0 and r[0].real == pytest.approx(np.mean(np.abs(v[:N]) ** 2))
    for tau in range(tau_max + 1):
        bound = np.sqrt(np.mean(np.abs(v[:N]) ** 2) * np.mean(np.abs(v[tau:tau + N]) ** 2))
        assert abs(r[tau]) <= bound * (1 + 1e-9) + 1e-12


def test_profile_errors():
    with pytest.raises(AutocorrError, match="insufficient"):
        autocorr_profile(np.ones(100), [90], 20)
    with pytest.raises(AutocorrError):
        autocorr_profile(np.ones(100), [0], 2)


def test_geometric_windows():
    assert geometric_windows(10, 100) == [10, 20, 40, 80, 100]
    assert geometric_windows(10000, 20000) == [10000, 20000]
    assert geometric_windows(5, 5) == [5]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), e1=st.floats(0.01, 1), e2=st.floats(0.01, 1))
def test_density_monotone_in_epsilon(seed, e1, e2):
    lo, hi = sorted((e1, e2))
    v = gen_iid("complex-gaussian", seed % 1000, 600).values
    prof = autocorr_profile(v, [50, 100, 200], 300)
    a = density_bad_tau(prof, lo, 50, 200, 300)
    b = density_bad_tau(prof, hi, 50, 200, 300)
    assert b.density <= a.density
    # widening the window can only add bad lags
    c = density_bad_tau(prof, lo, 100, 200, 300)
    assert c.density <= a.density


def test_density_examples():
    x = gen_rotation(GOLDEN, 1, 3000)
    assert density_profile(x, 0.5, 100, 1000, 1000).density == 1.0
    z = np.zeros(3000)
    assert density_profile(z, 0.1, 100, 1000, 1000).density == 0.0


@pytest.mark.slow
def test_iid_density_small(iid_seq_1e6):
    rep = density_profile(iid_seq_1e6, 0.2, 10**4, 2 * 10**4, 10**3)
    assert rep.windows == (10**4, 2 * 10**4)
    assert rep.density < 0.01


def test_dense_mode_agrees_with_fft():
    v = gen_iid("uniform-disk", 5, 1500).values
    dense = density_profile(v, 0.05, 100, 400, 200, dense=True)
    prof = autocorr_profile(v, range(100, 401), 200)
    fft = density_bad_tau(prof, 0.05, 100, 400, 200)
    assert dense.bad_count == fft.bad_count
    sparse = density_profile(v, 0.05, 100, 400, 200)
    assert sparse.bad_count <= dense.bad_count
    with pytest.raises(AutocorrError, match="dense"):
        density_profile(v, 0.05, 100, 20000, 10, dense=True)


def test_subseq_density():
    v = gen_rotation(GOLDEN, 1, 2000).values
    prof = autocorr_profile(v, [100, 200, 400, 800], 800)
    rep = subseq_density(prof, [100, 200, 400, 800], 0.5, 2, 3, 1)
    assert rep.T == 100 and rep.windows == (200, 400) and rep.density == 1.0
    with pytest.raises(AutocorrError):
        subseq_density(prof, [100, 300], 0.5, 1, 2, 1)
    with pytest.raises(AutocorrError):
        subseq_density(prof, [200, 100], 0.5, 1, 2, 1)


def test_atom_functional():
    x = gen_rotation(GOLDEN, 1, 3000)
    assert atom_functional(x, 500, 2000) == pytest.approx(1.0, abs=1e-9)
    u = gen_iid("symmetric-two-point", 2, 10**5 + 100)
    # lag 0 contributes 1/T; the remaining lags are O(1/sqrt(N))
    assert atom_functional(u, 100, 10**5) < 0.01 + 3 / np.sqrt(10**5)
