"""Points built from a stream of cover words.

The stream ``a'_1, a'_2, ...`` concatenates the words of covers ``k = 1, 2, ...``
in order. Block ``n`` occupies global positions ``start_n + 1 .. start_n + |a'_n|``
with ``start_1 = 0``. In the split construction the first ``ceil(|a'_n|/3)``
positions of a block copy ``a'_n`` and the rest copy it delayed by one symbol,
so block-local symbol ``ceil(|a'_n|/3)`` appears twice and the last symbol of
``a'_n`` is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .covers import CoverSpec, chain_lengths, is_cover
from .generic import _periodic_generic, is_strongly_generic
from .words import (FreqOracle, PeriodicOracle, PeriodicWord, SymbolicError, Word,
                    primitive_period, word_length)


class PreconditionError(SymbolicError):
    def __init__(self, failures: Sequence[str]):
        self.failures = tuple(failures)
        super().__init__("; ".join(failures))


def ceil_third(L: int) -> int:
    return -(-L // 3)


@dataclass(frozen=True)
class BlockLayout:
    """Where each stream word sits in the constructed point (0-based starts)."""

    words: tuple
    scale: tuple[int, ...]     # k(n), 1-based
    index: tuple[int, ...]     # position r of the word inside its cover, 1-based
    starts: tuple[int, ...]
    lengths: tuple[int, ...]

    @classmethod
    def from_covers(cls, covers: Sequence[CoverSpec]) -> "BlockLayout":
        words, scale, index, starts, lengths = [], [], [], [], []
        pos = 0
        for k, cover in enumerate(covers, start=1):
            for r, w in enumerate(cover.words, start=1):
                L = word_length(w)
                words.append(w)
                scale.append(k)
                index.append(r)
                starts.append(pos)
                lengths.append(L)
                pos += L
        return cls(tuple(words), tuple(scale), tuple(index), tuple(starts), tuple(lengths))

    def __len__(self) -> int:
        return len(self.words)

    @property
    def total_length(self) -> int:
        return self.starts[-1] + self.lengths[-1] if self.words else 0

    def cut(self, n: int) -> int:
        return ceil_third(self.lengths[n])

    def partial_time(self, n: int) -> int:
        """``|a'_{n-1}| + ceil(|a'_n|/3)`` with cumulative ``|a'_{n-1}|``."""
        return self.starts[n] + self.cut(n)

    def end_time(self, n: int) -> int:
        return self.starts[n] + self.lengths[n]

    def blocks_within(self, T: int) -> list[int]:
        return [n for n in range(len(self)) if self.end_time(n) <= T]


def _block_codes(w, L: int, need: int, split: bool) -> np.ndarray:
    def take(a, b):
        if isinstance(w, PeriodicWord):
            return w.codes_range(a, b)
        return w.codes[a:b]

    need = min(need, L)
    if not split:
        return take(0, need)
    c = ceil_third(L)
    if need <= c:
        return take(0, need)
    return np.concatenate([take(0, c), take(c - 1, need - 1)])


def _emit(layout: BlockLayout, T: int, split: bool) -> Word:
    if T < 1:
        raise SymbolicError("prefix length must be positive")
    if T > layout.total_length:
        raise PreconditionError([f"prefix T = {T} exceeds total stream length {layout.total_length}"])
    parts = []
    for n in range(len(layout)):
        s = layout.starts[n]
        if s >= T:
            break
        parts.append(_block_codes(layout.words[n], layout.lengths[n], T - s, split))
    return Word(np.concatenate(parts), layout.words[0].alphabet)


def hochman_failures(covers: Sequence[CoverSpec], Ms: Sequence[int],
                     oracle: FreqOracle | None) -> list[str]:
    """Every violated precondition of the split construction, as readable inequalities."""
    fails = []
    if len(Ms) != len(covers):
        fails.append(f"{len(Ms)} window sizes for {len(covers)} covers")
        return fails
    prev_last = None
    for k, (cover, M) in enumerate(zip(covers, Ms), start=1):
        eps = 2.0 ** -k
        N = cover.N
        if prev_last is not None and not N > k * prev_last:
            fails.append(f"k={k}: N_k = {N} is not > k*|a_(k-1,p)| = {k * prev_last}")
        if not N > 3 * 2**k * M:
            fails.append(f"k={k}: N_k = {N} is not > 3*2^k*M_k = {3 * 2**k * M}")
        if oracle is not None:
            chk = is_cover(cover.words, oracle, eps, N)
            fails.extend(f"k={k}: {v}" for v in chk.violations)
            for r, w in enumerate(cover.words, start=1):
                res = is_strongly_generic(w, oracle, eps, M)
                if not res.ok:
                    fails.append(f"k={k}: a_(k,{r}) good-window fraction {res.fraction!r} "
                                 f"is not > 1 - eps_k = {1 - eps!r}")
        prev_last = word_length(cover.words[-1])
    return fails


@dataclass(frozen=True)
class ConstructedPoint:
    word: Word
    layout: BlockLayout
    split: bool

    def stop_times_A(self, blocks: Sequence[int] | None = None) -> list[int]:
        blocks = self.layout.blocks_within(len(self.word)) if blocks is None else blocks
        return [self.layout.partial_time(n) for n in blocks]

    def stop_times_B(self, blocks: Sequence[int] | None = None) -> list[int]:
        blocks = self.layout.blocks_within(len(self.word)) if blocks is None else blocks
        return [self.layout.end_time(n) for n in blocks]


def build_hochman_point(covers: Sequence[CoverSpec], Ms: Sequence[int], T: int,
                        oracle: FreqOracle | None = None, check: bool = True) -> ConstructedPoint:
    """Prefix of length ``T`` of the split-block point.

    With ``check`` the per-scale conditions (eps_k = 2^-k, strong genericity
    of every word, ``N_k > k |a_(k-1,p)|`` and ``N_k > 3 * 2^k * M_k``) are
    verified first; genericity needs ``oracle``.
    """
    if check:
        fails = hochman_failures(covers, Ms, oracle)
        if fails:
            raise PreconditionError(fails)
    layout = BlockLayout.from_covers(covers)
    return ConstructedPoint(_emit(layout, T, split=True), layout, True)


def build_simple_point(covers: Sequence[CoverSpec], T: int, oracle: FreqOracle | None = None,
                       check: bool = True) -> ConstructedPoint:
    """Prefix of length ``T`` of the plain concatenation of the stream."""
    if check:
        fails = []
        prev_last = None
        for k, cover in enumerate(covers, start=1):
            if prev_last is not None and not cover.N > k * prev_last:
                fails.append(f"k={k}: N_k = {cover.N} is not > k*|a_(k-1,p)| = {k * prev_last}")
            if oracle is not None:
                fails.extend(f"k={k}: {v}" for v in is_cover(cover.words, oracle, 2.0 ** -k, cover.N).violations)
            prev_last = word_length(cover.words[-1])
        if fails:
            raise PreconditionError(fails)
    layout = BlockLayout.from_covers(covers)
    return ConstructedPoint(_emit(layout, T, split=False), layout, False)


# ---------------------------------------------------------------------------
# periodic instantiation

def periodic_window_size(u: Word, oracle: PeriodicOracle, epsilon: float) -> int:
    """Smallest power-of-two multiple of the period for which every window is epsilon-generic."""
    q = primitive_period(u)
    M = q
    while True:
        if all(_periodic_generic(u, t, M, oracle, epsilon).ok for t in range(q)):
            return M
        M *= 2
        if M > 2**62:
            raise SymbolicError("no generic window size found")


@dataclass(frozen=True)
class PeriodicInstance:
    covers: tuple[CoverSpec, ...]
    Ms: tuple[int, ...]
    oracle: PeriodicOracle
    growth: float

    def source(self) -> dict:
        return {"kind": "periodic", "u": str(self.oracle.u), "scales": len(self.covers),
                "growth": self.growth}


def periodic_hochman_instance(u: Word | str, scales: int, growth: float = 3.0) -> PeriodicInstance:
    """Covers ``k = 1..scales`` of the periodic measure of ``u^inf`` meeting every split-construction condition.

    Words are lazy prefixes of the shifts of ``u^inf``; every length is a
    multiple of the period, so each block starts in phase with ``u^inf``.
    ``growth`` forces each word to be at least ``growth`` times everything
    emitted before it (3 gives the shortest admissible lengths).
    """
    oracle = PeriodicOracle(u)
    root = oracle.u
    q = oracle.p
    covers, Ms = [], []
    total = 0
    prev_last = None
    for k in range(1, scales + 1):
        eps = 2.0 ** -k
        M = periodic_window_size(root, oracle, eps)
        # also covers the strong-genericity need (L - M)/L > 1 - eps, i.e. L > M * 2^k
        floor_N = 3 * 2**k * M
        if prev_last is not None:
            floor_N = max(floor_N, k * prev_last)
        lengths = chain_lengths(floor_N + 1, q, growth=growth, base=total, multiple_of=q, minimum=q)
        N = lengths[0] - 1
        covers.append(CoverSpec(tuple(PeriodicWord(root, s, L) for s, L in enumerate(lengths)), eps, N))
        Ms.append(M)
        total += sum(lengths)
        prev_last = lengths[-1]
    return PeriodicInstance(tuple(covers), tuple(Ms), oracle, growth)


def typical_points(oracle: PeriodicOracle, T: int) -> list[Word]:
    """The ``p`` points of the periodic orbit, each carrying mass ``1/p``, as length-``T`` prefixes."""
    return [PeriodicWord(oracle.u, s, T).materialize() for s in range(oracle.p)]


def aligned_blocks(layout: BlockLayout, y: Word, T: int | None = None) -> list[int]:
    """Blocks ``n`` (ending within ``T``) on which ``y`` carries the stream word itself."""
    T = len(y) if T is None else T
    out = []
    for n in layout.blocks_within(T):
        s, L, w = layout.starts[n], layout.lengths[n], layout.words[n]
        c = ceil_third(L)
        codes = w.codes_range(0, c) if isinstance(w, PeriodicWord) else w.codes[:c]
        if np.array_equal(y.codes[s:s + c], codes):
            out.append(n)
    return out


def symbolic_from_source(source: Mapping, T: int):
    """Regenerate a substituted symbolic sequence from its descriptor source."""
    from ..seqgen import gen_from_symbolic

    if source.get("kind") != "periodic":
        raise SymbolicError(f"cannot regenerate symbolic source {source!r}")
    inst = periodic_hochman_instance(source["u"], int(source["scales"]), float(source["growth"]))
    mode = source.get("mode", "split")
    if mode == "split":
        pt = build_hochman_point(inst.covers, inst.Ms, T, inst.oracle, check=False)
    else:
        pt = build_simple_point(inst.covers, T, check=False)
    return gen_from_symbolic(pt.word, source["substitution"], T, inst.oracle, source=dict(source))
