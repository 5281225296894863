"""Windowed auto-correlation and the bad-lag density criteria.

``rho_N(tau) = (1/N) sum_{n=1}^N x_{n+tau} conj(x_n)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from .seqgen import ComplexSeq

DEFAULT_MEMORY = 2 * 1024**3
DENSE_N_LIMIT = 10_000


class AutocorrError(ValueError):
    pass


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, ComplexSeq) else np.asarray(x, dtype=np.complex128)


def _descriptor(x):
    return x.meta.to_dict() if isinstance(x, ComplexSeq) else None


def naive_autocorr(v: np.ndarray, N: int, tau_max: int) -> np.ndarray:
    """Reference double loop, ``O(N * tau_max)``."""
    out = np.empty(tau_max + 1, dtype=np.complex128)
    for tau in range(tau_max + 1):
        acc = 0j
        for n in range(N):
            acc += v[n + tau] * np.conj(v[n])
        out[tau] = acc / N
    return out


def fast_autocorr(v: np.ndarray, N: int, tau_max: int, memory_budget: int = DEFAULT_MEMORY) -> np.ndarray:
    """``rho_N(0..tau_max)`` by padded FFT cross-correlation of ``x[1..N]`` with ``x[1..N+tau_max]``.

    Lags are split into chunks so a single transform stays under ``memory_budget`` bytes.
    """
    if v.size < N + tau_max:
        raise AutocorrError(f"need {N + tau_max} samples, have {v.size}")
    head = v[:N]
    # bytes per transform length: padded input, its spectrum and the product, complex128
    max_len = max(1024, memory_budget // (16 * 4))
    out = np.empty(tau_max + 1, dtype=np.complex128)
    chunk = max(1, max_len - N)
    lo = 0
    while lo <= tau_max:
        hi = min(tau_max, lo + chunk - 1)
        seg = v[lo:N + hi]
        # c[tau'] = sum_n seg[n + tau'] conj(head[n]); n + tau' < seg.size, so no wrap-around
        L = sfft.next_fast_len(seg.size, real=False)
        spec = sfft.fft(seg, L) * np.conj(sfft.fft(head, L))
        c = sfft.ifft(spec)
        out[lo:hi + 1] = c[:hi - lo + 1]
        lo = hi + 1
    return out / N


def geometric_windows(N_lo: int, N_hi: int, ratio: float = 2.0) -> list[int]:
    """``N_lo, N_lo*ratio, ...`` inside the window, plus both endpoints."""
    if N_lo < 1 or N_hi < N_lo:
        raise AutocorrError(f"bad window [{N_lo}, {N_hi}]")
    out = []
    n = float(N_lo)
    while round(n) < N_hi:
        out.append(int(round(n)))
        n *= ratio
    out.append(N_hi)
    return sorted(set(out))


@dataclass(frozen=True)
class AutocorrProfile:
    Ns: tuple[int, ...]
    tau_max: int
    values: np.ndarray          # len(Ns) x (tau_max + 1)
    source: dict | None = None

    def rho(self, N: int, tau: int) -> complex:
        return complex(self.values[self.Ns.index(N), tau])

    def row(self, N: int) -> np.ndarray:
        return self.values[self.Ns.index(N)]

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            fh.write("N,tau,re,im,abs\n")
            for i, N in enumerate(self.Ns):
                for tau, r in enumerate(self.values[i]):
                    fh.write(f"{N},{tau},{r.real:.17g},{r.imag:.17g},{abs(r):.17g}\n")
        return path


def autocorr_profile(x, Ns: Sequence[int], tau_max: int,
                     memory_budget: int = DEFAULT_MEMORY) -> AutocorrProfile:
    v = _values(x)
    Ns = tuple(sorted(set(int(n) for n in Ns)))
    if not Ns or Ns[0] < 1:
        raise AutocorrError("window sizes must be positive")
    if tau_max < 0:
        raise AutocorrError("tau_max must be nonnegative")
    need = Ns[-1] + tau_max
    if v.size < need:
        raise AutocorrError(f"insufficient prefix: need length {need}, have {v.size}")
    vals = np.vstack([fast_autocorr(v, N, tau_max, memory_budget) for N in Ns])
    # lag 0 is a mean square; remove the imaginary round-off
    vals[:, 0] = [np.mean(np.abs(v[:N]) ** 2) for N in Ns]
    return AutocorrProfile(Ns, tau_max, vals, _descriptor(x))


@dataclass(frozen=True)
class DensityReport:
    epsilon: float
    N_lo: int
    N_hi: int
    T: int
    windows: tuple[int, ...]  # window sizes actually consulted
    bad_count: int
    density: float
    bad_taus: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {
            "criterion": "|{0 < tau <= T : exists N_lo <= N <= N_hi, |rho_N(tau)| >= epsilon}| / T",
            "epsilon": self.epsilon,
            "N_lo": self.N_lo,
            "N_hi": self.N_hi,
            "T": self.T,
            "windows": list(self.windows),
            "bad_count": self.bad_count,
            "density": self.density,
            "bad_taus_sample": list(self.bad_taus),
        }

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_json(), indent=2))
        return path


def _count(profile: AutocorrProfile, windows: Sequence[int], epsilon: float, T: int,
           N_lo: int, N_hi: int, sample: int) -> DensityReport:
    if T < 1:
        raise AutocorrError("lag horizon T must be positive")
    if T > profile.tau_max:
        raise AutocorrError(f"T = {T} exceeds profile tau_max = {profile.tau_max}")
    if not windows:
        raise AutocorrError(f"no profiled window size in [{N_lo}, {N_hi}]")
    rows = np.abs(profile.values[[profile.Ns.index(n) for n in windows], 1:T + 1])
    bad = rows.max(axis=0) >= epsilon
    idx = np.flatnonzero(bad) + 1
    count = int(idx.size)
    return DensityReport(float(epsilon), N_lo, N_hi, T, tuple(windows), count, count / T,
                         tuple(int(t) for t in idx[:sample]))


def density_bad_tau(profile: AutocorrProfile, epsilon: float, N_lo: int, N_hi: int, T: int,
                    sample: int = 20) -> DensityReport:
    """Fraction of lags ``0 < tau <= T`` with ``|rho_N(tau)| >= epsilon`` for some profiled ``N`` in the window."""
    windows = [n for n in profile.Ns if N_lo <= n <= N_hi]
    return _count(profile, windows, epsilon, T, N_lo, N_hi, sample)


def density_profile(x, epsilon: float, N_lo: int, N_hi: int, T: int, ratio: float = 2.0,
                    dense: bool = False, sample: int = 20) -> DensityReport:
    """Profile ``x`` on a window sample and count bad lags.

    ``dense`` uses every integer ``N`` in the window (allowed up to
    ``N_hi = 10^4``); otherwise windows are geometric with the given ratio
    plus both endpoints, which undercounts the all-``N`` quantity.
    """
    if dense:
        if N_hi > DENSE_N_LIMIT:
            raise AutocorrError(f"dense mode is limited to N_hi <= {DENSE_N_LIMIT}")
        Ns = list(range(N_lo, N_hi + 1))
        prof = _dense_profile(_values(x), Ns, T, _descriptor(x))
    else:
        Ns = geometric_windows(N_lo, N_hi, ratio)
        prof = autocorr_profile(x, Ns, T)
    return density_bad_tau(prof, epsilon, N_lo, N_hi, T, sample)


def _dense_profile(v: np.ndarray, Ns: Sequence[int], tau_max: int, source) -> AutocorrProfile:
    """All windows at once from running sums of the lagged products."""
    N_hi = max(Ns)
    if v.size < N_hi + tau_max:
        raise AutocorrError(f"insufficient prefix: need length {N_hi + tau_max}, have {v.size}")
    vals = np.empty((len(Ns), tau_max + 1), dtype=np.complex128)
    idx = np.asarray(Ns) - 1
    for tau in range(tau_max + 1):
        run = np.cumsum(v[tau:tau + N_hi] * np.conj(v[:N_hi]))
        vals[:, tau] = run[idx] / np.asarray(Ns)
    return AutocorrProfile(tuple(Ns), tau_max, vals, source)


def subseq_density(profile: AutocorrProfile, T_seq: Sequence[int], epsilon: float,
                   r_lo: int, r_hi: int, l: int, sample: int = 20) -> DensityReport:
    """Bad-lag density with windows restricted to ``T_seq[r]`` for ``r_lo <= r <= r_hi``, lag horizon ``T_seq[l]``.

    Indices are 1-based into the declared increasing sequence ``T_seq``; every
    selected window must have been profiled.
    """
    T_seq = [int(t) for t in T_seq]
    if any(b <= a for a, b in zip(T_seq, T_seq[1:])):
        raise AutocorrError("declared sequence must be strictly increasing")
    if not (1 <= r_lo <= r_hi <= len(T_seq)) or not (1 <= l <= len(T_seq)):
        raise AutocorrError("subsequence indices out of range")
    windows = [T_seq[r - 1] for r in range(r_lo, r_hi + 1)]
    missing = [n for n in windows if n not in profile.Ns]
    if missing:
        raise AutocorrError(f"windows {missing} are not in the profile")
    return _count(profile, windows, epsilon, T_seq[l - 1], windows[0], windows[-1], sample)


def atom_functional(x, T: int, N: int) -> float:
    """``(1/T) sum_{tau=0}^{T-1} |rho_N(tau)|``."""
    v = _values(x)
    if T < 1 or N < 1:
        raise AutocorrError("T and N must be positive")
    if v.size < N + T - 1:
        raise AutocorrError(f"insufficient data: need length {N + T - 1}, have {v.size}")
    rho = fast_autocorr(v, N, T - 1)
    return float(np.abs(rho).mean())
