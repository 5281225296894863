"""Weyl averages, Fourier-Bohr spectrum scans and 2-torus equidistribution checks.

Angles are in turns: ``z = exp(2 pi i theta)`` with ``theta`` in ``[0, 1)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from .seqgen import ComplexSeq, rotation_phase

UNIT_TOL = 1e-9
RENORM_EVERY = 2**14
DEFAULT_GRID = 512
ATOM_THRESHOLD = 0.1
ZOOM = 8


class SpectralError(ValueError):
    pass


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, ComplexSeq) else np.asarray(x, dtype=np.complex128)


def _check_T(v: np.ndarray, T: int) -> int:
    T = int(T)
    if T < 1:
        raise SpectralError("truncation T must be positive")
    if T > v.size:
        raise SpectralError(f"T = {T} exceeds available prefix {v.size}")
    return T


def unit_powers(z: complex, T: int, renorm_every: int = RENORM_EVERY) -> np.ndarray:
    """``z^1 .. z^T`` by phase recurrence, renormalized to unit modulus every ``renorm_every`` steps.

    Within a block the powers come from a cumulative product; block
    multipliers advance by ``z^B`` and are renormalized each time.
    """
    z = complex(z)
    B = min(renorm_every, T)
    base = np.cumprod(np.full(B, z, dtype=np.complex128))
    base /= np.abs(base)
    step = base[-1]
    nblocks = -(-T // B)
    out = np.empty(nblocks * B, dtype=np.complex128)
    mult = 1.0 + 0.0j
    for b in range(nblocks):
        out[b * B:(b + 1) * B] = mult * base
        mult *= step
        mult /= abs(mult)
    return out[:T]


def weyl_avg(x, z: complex, T: int) -> complex:
    """``(1/T) sum_{n=1}^T x_n z^n``."""
    v = _values(x)
    T = _check_T(v, T)
    if abs(abs(complex(z)) - 1.0) > UNIT_TOL:
        raise SpectralError(f"|z| must be 1, got {abs(complex(z))!r}")
    return complex(np.dot(v[:T], unit_powers(z, T)) / T)


def grid_sums(v: np.ndarray, M: int) -> np.ndarray:
    """``sum_n v_n exp(2 pi i j n / M)`` for ``j = 0..M-1``, ``n`` 1-based.

    Terms are folded by ``n mod M`` and evaluated with one length-``M`` transform.
    """
    n = np.arange(1, v.size + 1) % M
    folded = np.bincount(n, weights=v.real, minlength=M) + 1j * np.bincount(n, weights=v.imag, minlength=M)
    return sfft.ifft(folded) * M


@dataclass(frozen=True)
class SpectrumScan:
    angles: np.ndarray       # length M, strictly increasing in [0, 1)
    Ts: tuple[int, ...]
    magnitudes: np.ndarray   # |Ts| x M, |S_T(z_j)|
    values: np.ndarray       # complex S_T(z_j)
    l1_means: tuple[float, ...]  # (1/T) sum |x_n|, the triangle-inequality bound

    def max_magnitude(self, T: int | None = None) -> float:
        row = -1 if T is None else self.Ts.index(T)
        return float(self.magnitudes[row].max())

    def nearest(self, theta: float) -> int:
        d = np.abs((self.angles - theta + 0.5) % 1.0 - 0.5)
        return int(np.argmin(d))

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            fh.write("angle,T,magnitude\n")
            for i, T in enumerate(self.Ts):
                for a, m in zip(self.angles, self.magnitudes[i]):
                    fh.write(f"{a:.17g},{T},{m:.17g}\n")
        return path


def fb_scan(x, M: int = DEFAULT_GRID, Ts: Sequence[int] | None = None,
            direct_below: int = 16) -> SpectrumScan:
    """``|S_T(z)|`` on the uniform ``M``-grid for every truncation in ``Ts``.

    Grids smaller than ``direct_below`` are evaluated point by point with
    :func:`weyl_avg`; larger ones by folding and one FFT per truncation.
    """
    v = _values(x)
    if M < 1:
        raise SpectralError("grid size must be positive")
    Ts = (v.size,) if Ts is None else tuple(int(t) for t in Ts)
    if any(b <= a for a, b in zip(Ts, Ts[1:])):
        raise SpectralError("truncations must be strictly increasing")
    for T in Ts:
        _check_T(v, T)
    angles = np.arange(M) / M
    vals = np.empty((len(Ts), M), dtype=np.complex128)
    for i, T in enumerate(Ts):
        if M < direct_below:
            vals[i] = [weyl_avg(v, np.exp(2j * np.pi * a), T) for a in angles]
        else:
            vals[i] = grid_sums(v[:T], M) / T
    l1 = tuple(float(np.abs(v[:T]).sum() / T) for T in Ts)
    return SpectrumScan(angles, Ts, np.abs(vals), vals, l1)


# ---------------------------------------------------------------------------
# atom candidates

@dataclass(frozen=True)
class Atom:
    angle: float
    magnitudes: tuple[float, ...]   # |S_T| at the refined angle, one per T used
    grid_index: int                 # coarse cell holding the atom

    def to_json(self) -> dict:
        return {"angle": self.angle, "magnitudes": list(self.magnitudes), "grid_index": self.grid_index}


def fine_spectrum(v: np.ndarray, T: int, zoom: int = ZOOM):
    """``|S_T|`` on a zero-padded grid of spacing at most ``1/(zoom*T)``."""
    size = 1 << max(0, math.ceil(math.log2(zoom * T)))
    size = max(size, 1)
    angles = np.arange(size) / size
    padded = np.zeros(size, dtype=np.complex128)
    padded[:T] = v[:T]
    # sum_{n=1}^T v_n e^{2 pi i j n / size} = e^{2 pi i j / size} * size * ifft(v)[j]
    s = sfft.ifft(padded) * size * np.exp(2j * np.pi * angles)
    return angles, np.abs(s) / T


def find_atoms(x, M: int = DEFAULT_GRID, Ts: Sequence[int] | None = None,
               threshold: float = ATOM_THRESHOLD, zoom: int = ZOOM) -> list[Atom]:
    """Candidate Fourier-Bohr atoms.

    Every coarse cell of width ``1/M`` is scanned at resolution
    ``1/(zoom*T)`` for the largest truncation; the peak of each cell is then
    re-evaluated with :func:`weyl_avg` at the two largest truncations and
    kept when both magnitudes reach ``threshold``.
    """
    v = _values(x)
    Ts = (v.size,) if Ts is None else tuple(int(t) for t in Ts)
    used = Ts[-2:]
    T = used[-1]
    angles, mags = fine_spectrum(v, T, zoom)
    cell = np.minimum((angles * M + 0.5).astype(np.int64) % M, M - 1)
    hot = mags >= threshold
    atoms = []
    for j in np.unique(cell[hot]):
        sel = np.flatnonzero(hot & (cell == j))
        peak = angles[sel[np.argmax(mags[sel])]]
        z = np.exp(2j * np.pi * peak)
        ms = tuple(abs(weyl_avg(v, z, t)) for t in used)
        if all(m >= threshold for m in ms):
            atoms.append(Atom(float(peak), ms, int(j)))
    return atoms


def atoms_json(atoms: Sequence[Atom], path: str | Path, extra: dict | None = None) -> Path:
    path = Path(path)
    doc = dict(extra or {})
    doc["atoms"] = [a.to_json() for a in atoms]
    path.write_text(json.dumps(doc, indent=2))
    return path


# ---------------------------------------------------------------------------
# the pair (n beta, sqrt(n) alpha) on the 2-torus

def _torus_turns(beta, alpha, N: int):
    n = np.arange(1, N + 1, dtype=np.int64)
    first = rotation_phase(beta, n)
    second = np.mod(np.sqrt(n.astype(np.float64)) * float(alpha), 1.0)
    return first, second


def torus_weyl(beta, alpha: float, m1: int, m2: int, N: int) -> complex:
    """``(1/N) sum_{n=1}^N exp(2 pi i (m1 n beta + m2 sqrt(n) alpha))``."""
    if N < 1:
        raise SpectralError("N must be positive")
    if m1 == 0 and m2 == 0:
        return 1.0 + 0.0j
    if float(alpha) == 0.0 and m1 == 0:
        raise SpectralError("alpha = 0 with m1 = 0 has constant phase; no decay to test")
    first, second = _torus_turns(beta, alpha, N)
    turns = np.mod(m1 * first + m2 * second, 1.0)
    return complex(np.exp(2j * np.pi * turns).mean())


@dataclass(frozen=True)
class DiscrepancyResult:
    value: float
    fraction: float
    area: float
    decays: bool   # False when beta is rational, where no equidistribution is expected


def discrepancy_2torus(beta, alpha: float, N: int, box) -> DiscrepancyResult:
    """``|#{n <= N : (n beta, sqrt(n) alpha) mod 1 in box}/N - area(box)|``.

    ``box`` is ``((a1, b1), (a2, b2))`` with ``0 <= a < b <= 1``; arcs are
    half-open ``[a, b)`` except that ``b = 1`` closes the circle.
    """
    (a1, b1), (a2, b2) = box
    for a, b in ((a1, b1), (a2, b2)):
        if not (0.0 <= a < b <= 1.0):
            raise SpectralError(f"degenerate or out-of-range arc [{a}, {b}]")
    first, second = _torus_turns(beta, alpha, N)
    inside = (first >= a1) & (first < b1) & (second >= a2) & (second < b2)
    frac = float(inside.mean())
    area = (b1 - a1) * (b2 - a2)
    rational = isinstance(beta, Fraction) or float(beta) == round(float(beta))
    return DiscrepancyResult(abs(frac - area), frac, area, decays=not rational)
