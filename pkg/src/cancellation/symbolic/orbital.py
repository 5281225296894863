"""Empirical cylinder measures along orbits, single and paired."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .construct import BlockLayout, ceil_third
from .words import PeriodicWord, SymbolicError, Word, _code_words


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Frequencies of length-``k`` cylinders over the first ``horizon`` shifts.

    For a paired measure each key is ``(x_cylinder, y_cylinder)``.
    """

    k: int
    horizon: int
    counts: dict
    paired: bool = False

    def freq(self, key) -> float:
        return self.counts.get(key, 0) / self.horizon

    def table(self) -> dict:
        return {key: n / self.horizon for key, n in self.counts.items()}

    def total(self) -> float:
        return sum(self.counts.values()) / self.horizon

    def diagonal_mass(self) -> float:
        if not self.paired:
            raise SymbolicError("diagonal mass needs a paired measure")
        return sum(n for (a, b), n in self.counts.items() if a == b) / self.horizon

    def shifted_diagonal_mass(self) -> float:
        """Mass of pairs ``(v, w)`` with ``w`` continuing ``v`` one step later, ``w[:-1] == v[1:]``.

        These are the cylinders charged by the push-forward through
        ``z -> (z, sigma z)``. Needs ``k >= 2``.
        """
        if not self.paired:
            raise SymbolicError("shifted-diagonal mass needs a paired measure")
        if self.k < 2:
            return math.nan
        return sum(n for (a, b), n in self.counts.items() if b[:-1] == a[1:]) / self.horizon

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            fh.write("cyl,count,freq\n")
            for key in sorted(self.counts):
                name = f"{key[0]}|{key[1]}" if self.paired else key
                fh.write(f"{name},{self.counts[key]},{self.counts[key] / self.horizon:.17g}\n")
        return path


def _codes(w) -> np.ndarray:
    return w.materialize().codes if isinstance(w, PeriodicWord) else w.codes


def _name(key: int, k: int, alphabet) -> str:
    base = len(alphabet)
    out = []
    for _ in range(k):
        key, r = divmod(key, base)
        out.append(alphabet[r])
    return "".join(reversed(out))


def _measures_at(keys: np.ndarray, stops: Sequence[int]) -> list[dict]:
    """Counts of ``keys[:t]`` for every stop time ``t``, one pass over sorted stops."""
    order = sorted(range(len(stops)), key=lambda i: stops[i])
    out: list[dict] = [None] * len(stops)  # type: ignore[list-item]
    running: dict[int, int] = {}
    pos = 0
    for i in order:
        t = stops[i]
        if t > pos:
            u, c = np.unique(keys[pos:t], return_counts=True)
            for a, b in zip(u.tolist(), c.tolist()):
                running[a] = running.get(a, 0) + b
            pos = t
        out[i] = dict(running)
    return out


def orbital_measure(x: Word, T: int, k: int) -> EmpiricalMeasure:
    """``(1/T) sum_{n<T} delta_{sigma^n x}`` on length-``k`` cylinders."""
    codes = _codes(x)
    if T + k - 1 > codes.size:
        raise SymbolicError(f"horizon {T} with cylinder length {k} needs {T + k - 1} symbols")
    keys = _code_words(codes[:T + k - 1], k, len(x.alphabet))
    (counts,) = _measures_at(keys, [T])
    return EmpiricalMeasure(k, T, {_name(a, k, x.alphabet): n for a, n in counts.items()})


@dataclass(frozen=True)
class PairOrbitalResult:
    family_A: list[EmpiricalMeasure]
    family_B: list[EmpiricalMeasure]
    misaligned: list[int] = field(default_factory=list)  # blocks where y does not carry the cover word

    @property
    def aligned(self) -> bool:
        return not self.misaligned


def pair_orbital_measures(x: Word, y: Word, stop_times_A: Sequence[int], stop_times_B: Sequence[int],
                          k: int, layout: BlockLayout | None = None,
                          blocks: Sequence[int] | None = None) -> PairOrbitalResult:
    """Paired cylinder frequencies of ``(sigma^n x, sigma^n y)`` for ``n`` below each stop time.

    When ``layout`` and ``blocks`` are given, every listed block is checked
    for ``y`` carrying the block's cover word on its copied third; failures
    are flagged but the measures are still computed.
    """
    if x.alphabet != y.alphabet:
        raise SymbolicError("x and y use different alphabets")
    xc, yc = _codes(x), _codes(y)
    stops = list(stop_times_A) + list(stop_times_B)
    if not stops:
        return PairOrbitalResult([], [], [])
    need = max(stops) + k - 1
    if need > min(xc.size, yc.size):
        raise SymbolicError(f"stop time {max(stops)} with k={k} needs {need} symbols in both words")
    if min(stops) < 1:
        raise SymbolicError("stop times are positive")
    base = len(x.alphabet)
    kx = _code_words(xc[:need], k, base)
    ky = _code_words(yc[:need], k, base)
    keys = kx * base**k + ky
    raw = _measures_at(keys, stops)

    def wrap(counts, t):
        named = {}
        for key, n in counts.items():
            a, b = divmod(key, base**k)
            named[(_name(a, k, x.alphabet), _name(b, k, x.alphabet))] = n
        return EmpiricalMeasure(k, t, named, paired=True)

    fam = [wrap(c, t) for c, t in zip(raw, stops)]
    nA = len(stop_times_A)

    misaligned = []
    if layout is not None and blocks is not None:
        for n in blocks:
            s, L, w = layout.starts[n], layout.lengths[n], layout.words[n]
            c = ceil_third(L)
            ref = w.codes_range(0, c) if isinstance(w, PeriodicWord) else w.codes[:c]
            if s + c > yc.size or not np.array_equal(yc[s:s + c], ref):
                misaligned.append(n)
    return PairOrbitalResult(fam[:nA], fam[nA:], misaligned)
