"""epsilon-genericity and strong (epsilon, M)-genericity of finite words.

Occurrences are counted at every start position (overlaps allowed) and
normalized by the length of the word being tested, not by the number of
start positions. Words longer than the tested word simply have frequency 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .words import (as_word, FreqOracle, PeriodicOracle, PeriodicWord, SymbolicError, Word,
                    _code_words, packable, primitive_period)


@dataclass(frozen=True)
class GenericResult:
    ok: bool
    offender: str | None  # worst word beta, None when no word was checked
    gap: float            # |mu(beta) - freq(beta)| for the offender


@dataclass(frozen=True)
class StrongResult:
    ok: bool
    fraction: float       # good windows / |alpha|
    good: int
    windows: int


def max_word_length(epsilon: float) -> int:
    """Longest checked word, ``floor(1/epsilon)``."""
    if not epsilon > 0:
        raise SymbolicError("epsilon must be positive")
    return int(math.floor(1.0 / epsilon + 1e-12))


def _decode(key: int, k: int, alphabet) -> str:
    base = len(alphabet)
    out = []
    for _ in range(k):
        key, r = divmod(key, base)
        out.append(alphabet[r])
    return "".join(reversed(out))


def _encode(text: str, alphabet) -> int:
    base = len(alphabet)
    key = 0
    for ch in text:
        key = key * base + alphabet.index(ch)
    return key


def _same_cycle(v: Word, oracle: FreqOracle) -> bool:
    if not isinstance(oracle, PeriodicOracle) or v.alphabet != oracle.alphabet:
        return False
    q = primitive_period(v)
    if q != oracle.p:
        return False
    doubled = np.concatenate([oracle.u.codes, oracle.u.codes])
    root = v.codes[:q]
    return any(np.array_equal(doubled[r:r + q], root) for r in range(q))


# ---------------------------------------------------------------------------
# explicit words

def _length_table(codes: np.ndarray, ell: int, oracle: FreqOracle, alphabet):
    """Dense ids of length-``ell`` factors plus the mass of every id.

    Returns ``(ids, mu, names, absent_max)`` where ``absent_max`` is the
    largest mass of a support word that never occurs in ``codes``.
    """
    base = len(alphabet)
    support = oracle.support(ell)
    n = codes.size - ell + 1
    if packable(ell, base):
        keys = _code_words(codes, ell, base) if n > 0 else np.empty(0, np.int64)
        uniq, ids = np.unique(keys, return_inverse=True)
        names = [_decode(int(k), ell, alphabet) for k in uniq]
    else:
        text = "".join(alphabet[c] for c in codes)
        facs = [text[i:i + ell] for i in range(max(n, 0))]
        names = sorted(set(facs))
        pos = {w: i for i, w in enumerate(names)}
        ids = np.fromiter((pos[w] for w in facs), dtype=np.int64, count=len(facs))
    mu = np.array([support.get(w, 0.0) for w in names])
    present = set(names)
    absent = [(m, w) for w, m in support.items() if w not in present]
    absent_max = max(absent) if absent else (0.0, None)
    return ids, mu, names, absent_max


def is_eps_generic(word, oracle: FreqOracle, epsilon: float) -> GenericResult:
    """Every word of length ``<= floor(1/epsilon)`` occurs with frequency strictly within ``epsilon`` of its mass."""
    word = as_word(word, oracle.alphabet)
    if isinstance(word, PeriodicWord):
        if _same_cycle(word.period, oracle):
            return _periodic_generic(word.period, word.shift, word.length, oracle, epsilon)
        word = word.materialize()
    K = max_word_length(epsilon)
    L = len(word)
    # the offender is taken from the shortest failing length; ties go to
    # under-represented words, so a missing symbol is named before its excess twin
    worst = GenericResult(True, None, 0.0)
    for ell in range(1, K + 1):
        ids, mu, names, (amax, aname) = _length_table(word.codes, ell, oracle, word.alphabet)
        best = (-1.0, False, None)
        if names:
            freq = np.bincount(ids, minlength=len(names)) / L
            gaps = np.abs(mu - freq)
            j = max(range(len(names)), key=lambda i: (gaps[i], freq[i] < mu[i]))
            best = (float(gaps[j]), bool(freq[j] < mu[j]), names[j])
        if aname is not None and (amax, True) > best[:2]:
            best = (float(amax), True, aname)
        if best[2] is not None and (best[0] > worst.gap or worst.offender is None):
            worst = GenericResult(True, best[2], best[0])
        if worst.gap >= epsilon:
            return GenericResult(False, worst.offender, worst.gap)
    return worst


def window_generic_mask(word: Word, oracle: FreqOracle, epsilon: float, M: int,
                        starts: np.ndarray | None = None) -> np.ndarray:
    """Boolean mask over 0-based window starts: is ``word[s:s+M]`` epsilon-generic.

    Vectorized over windows: per word length, counts in every window come
    from cumulative occurrence tables.
    """
    L = len(word)
    if M > L:
        raise SymbolicError(f"window M={M} exceeds word length {L}")
    if starts is None:
        starts = np.arange(L - M + 1)
    starts = np.asarray(starts, dtype=np.int64)
    K = max_word_length(epsilon)
    good = np.ones(starts.size, dtype=bool)
    for ell in range(1, K + 1):
        ids, mu, names, (amax, _) = _length_table(word.codes, ell, oracle, word.alphabet)
        if amax >= epsilon:
            # a positive-mass word that never occurs anywhere
            return np.zeros(starts.size, dtype=bool)
        if ell > M:
            # no factor fits in a window; every support word has frequency 0
            if any(m >= epsilon for m in oracle.support(ell).values()):
                return np.zeros(starts.size, dtype=bool)
            continue
        k = len(names)
        cum = np.zeros((k, ids.size + 1), dtype=np.int32)
        np.cumsum(ids[None, :] == np.arange(k)[:, None], axis=1, out=cum[:, 1:])
        counts = cum[:, starts + (M - ell + 1)] - cum[:, starts]
        gaps = np.abs(mu[:, None] - counts / M)
        good &= gaps.max(axis=0) < epsilon
        if not good.any():
            break
    return good


def _strong_threshold(good: int, length: int, epsilon: float) -> bool:
    # exact comparison good/length > 1 - epsilon, safe for huge integer lengths
    return Fraction(good) > (1 - Fraction(epsilon)) * length


def is_strongly_generic(word, oracle: FreqOracle, epsilon: float, M: int) -> StrongResult:
    """Fraction of start positions ``1 <= i < |alpha| - M + 1`` whose ``M``-window is epsilon-generic, over ``|alpha|``; strong iff above ``1 - epsilon``."""
    word = as_word(word, oracle.alphabet)
    if isinstance(word, PeriodicWord):
        if word.length < M:
            raise SymbolicError(f"M={M} exceeds word length {word.length}")
        if _same_cycle(word.period, oracle):
            return _periodic_strong(word, oracle, epsilon, M)
        word = word.materialize()
    L = len(word)
    if M > L:
        raise SymbolicError(f"M={M} exceeds word length {L}")
    # 1-based i < L - M + 1  <=>  0-based start s <= L - M - 1
    n_windows = L - M
    if n_windows <= 0:
        good = 0
    else:
        good = int(window_generic_mask(word, oracle, epsilon, M, np.arange(n_windows)).sum())
    return StrongResult(_strong_threshold(good, L, epsilon), good / L, good, n_windows)


# ---------------------------------------------------------------------------
# periodic words against an oracle of the same cycle, closed form

def _residue_count(t: int, r: int, q: int, m: int) -> int:
    """``#{0 <= i <= m : (t + i) % q == r}``."""
    if m < 0:
        return 0
    i0 = (r - t) % q
    return 0 if i0 > m else (m - i0) // q + 1


def _periodic_generic(v: Word, t: int, length: int, oracle: PeriodicOracle,
                      epsilon: float) -> GenericResult:
    q = primitive_period(v)
    K = max_word_length(epsilon)
    # rotate v so that residues line up with the oracle's reading positions
    doubled = np.concatenate([oracle.u.codes, oracle.u.codes])
    off = next(r for r in range(q) if np.array_equal(doubled[r:r + q], v.codes[:q]))
    t = (t + off) % q
    worst_gap, worst_name = -1.0, None
    for ell in range(1, K + 1):
        m = length - ell
        counts: dict[str, int] = {}
        if ell < q:
            for r in range(q):
                name = "".join(oracle.alphabet[c] for c in oracle.reading(r, ell))
                counts[name] = counts.get(name, 0) + _residue_count(t, r, q, m)
            masses = oracle.support(ell)
            for name in set(counts) | set(masses):
                gap = abs(masses.get(name, 0.0) - counts.get(name, 0) / length)
                if gap > worst_gap:
                    worst_gap, worst_name = gap, name
        else:
            # readings from distinct residues are distinct, each of mass 1/q
            for r in range(q):
                gap = abs(1.0 / q - _residue_count(t, r, q, m) / length)
                if gap > worst_gap:
                    worst_gap = gap
                    worst_name = f"<reading r={r}, length {ell}>"
        if worst_gap >= epsilon:
            break
    return GenericResult(worst_gap < epsilon, worst_name, float(worst_gap))


def _periodic_strong(word: PeriodicWord, oracle: PeriodicOracle, epsilon: float,
                     M: int) -> StrongResult:
    v, q, L = word.period, primitive_period(word.period), word.length
    n_windows = L - M
    good = 0
    for c in range(q):
        cnt = _residue_count(word.shift % q, c, q, n_windows - 1)
        if cnt and _periodic_generic(v, c, M, oracle, epsilon).ok:
            good += cnt
    frac = float(Fraction(good, L))
    return StrongResult(_strong_threshold(good, L, epsilon), frac, good, max(n_windows, 0))


def lemma10_check(word, oracle: FreqOracle, epsilon: float, M: int) -> bool:
    """Strongly (epsilon, M)-generic implies 2*epsilon-generic; vacuously true otherwise."""
    if not is_strongly_generic(word, oracle, epsilon, M).ok:
        return True
    return is_eps_generic(word, oracle, 2 * epsilon).ok
