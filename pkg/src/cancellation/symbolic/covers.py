"""(epsilon, N)-covers: validation, pruning to strongly generic words, periodic tall covers."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .generic import is_strongly_generic, _same_cycle
from .words import (FreqOracle, PeriodicWord, SymbolicError, Word,
                    as_word, primitive_period, word_length)


@dataclass(frozen=True)
class CoverSpec:
    words: tuple
    epsilon: float
    N: int

    def lengths(self) -> list[int]:
        return [word_length(w) for w in self.words]

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "N": self.N, "words": [word_to_json(w) for w in self.words]}

    @classmethod
    def from_json(cls, d: dict, alphabet: Sequence[str] | None = None) -> "CoverSpec":
        return cls(tuple(word_from_json(w, alphabet) for w in d["words"]), float(d["epsilon"]), int(d["N"]))


@dataclass(frozen=True)
class CoverCheck:
    ok: bool
    mass: float
    violations: tuple[str, ...] = ()


@dataclass(frozen=True)
class PruneResult:
    cover: CoverSpec
    removed: tuple
    mass_before: float
    mass_after: float
    certified_epsilon: float  # an (e, N)-cover for every e > certified_epsilon
    meets_4eps: bool          # mass_after > 1 - 4*epsilon
    vacuous: bool = False


def word_to_json(w):
    if isinstance(w, PeriodicWord):
        return {"periodic": str(w.period), "shift": w.shift, "length": str(w.length)}
    return str(w)


def word_from_json(d, alphabet=None):
    if isinstance(d, dict):
        return PeriodicWord(Word.from_text(d["periodic"], alphabet), int(d["shift"]), int(d["length"]))
    return Word.from_text(d, alphabet)


def cylinder_mass(w, oracle: FreqOracle) -> float:
    """``mu([w])``; closed form for lazy periodic words of the oracle's own cycle."""
    if isinstance(w, PeriodicWord) and _same_cycle(w.period, oracle):
        q = oracle.p
        if w.length >= q:
            return 1.0 / q
        return oracle.measure(str(w.materialize()))
    if isinstance(w, PeriodicWord):
        w = w.materialize()
    return oracle.measure(str(w))


def is_prefix(a, b) -> bool:
    """Is word ``a`` a prefix of word ``b``."""
    la, lb = word_length(a), word_length(b)
    if la > lb:
        return False
    if isinstance(a, PeriodicWord) and isinstance(b, PeriodicWord) and a.period == b.period:
        n = min(la, len(a.period))
        return np.array_equal(a.codes_range(0, n), b.codes_range(0, n))
    ca = a.materialize().codes if isinstance(a, PeriodicWord) else a.codes
    cb = b.codes_range(0, la) if isinstance(b, PeriodicWord) else b.codes[:la]
    return np.array_equal(ca, cb)


def union_mass(words, oracle: FreqOracle) -> float:
    """``mu`` of the union of cylinders.

    Cylinders of prefix-incompatible words are disjoint and a longer word's
    cylinder lies inside that of any of its prefixes, so only words without
    a prefix among the others contribute.
    """
    words = list(words)
    total = 0.0
    for j, w in enumerate(words):
        if any(i != j and word_length(v) < word_length(w) and is_prefix(v, w) for i, v in enumerate(words)):
            continue
        total += cylinder_mass(w, oracle)
    return total


def is_cover(words, oracle: FreqOracle, epsilon: float, N: int) -> CoverCheck:
    words = [as_word(w, oracle.alphabet) for w in words]
    if not words:
        raise SymbolicError("a cover needs at least one word")
    violations = []
    lengths = [word_length(w) for w in words]
    if not lengths[0] > N:
        violations.append(f"|a_1| = {lengths[0]} is not > N = {N}")
    for i in range(len(lengths) - 1):
        if not lengths[i + 1] > 3 * lengths[i]:
            violations.append(f"|a_{i + 2}| = {lengths[i + 1]} is not > 3|a_{i + 1}| = {3 * lengths[i]}")
    mass = union_mass(words, oracle)
    if not mass > 1 - epsilon:
        violations.append(f"covered mass {mass!r} is not > 1 - epsilon = {1 - epsilon!r}")
    return CoverCheck(not violations, mass, tuple(violations))


def prune_cover(cover: CoverSpec, oracle: FreqOracle, epsilon: float, M: int) -> PruneResult:
    """Drop the words that are not strongly (epsilon, M)-generic and report what the survivors certify."""
    keep, removed = [], []
    for w in cover.words:
        (keep if is_strongly_generic(w, oracle, epsilon, M).ok else removed).append(w)
    before = union_mass(cover.words, oracle)
    after = union_mass(keep, oracle) if keep else 0.0
    pruned = CoverSpec(tuple(keep), cover.epsilon, cover.N)
    certified = 1.0 if not keep else min(1.0, max(0.0, 1.0 - after))
    return PruneResult(pruned, tuple(removed), before, after, certified,
                       meets_4eps=after > 1 - 4 * epsilon, vacuous=not keep)


def _round_up(n: int, q: int) -> int:
    return -(-n // q) * q


def chain_lengths(first_above: int, count: int, growth: float = 3.0, base: int = 0,
                  multiple_of: int = 1, minimum: int = 1) -> list[int]:
    """Strictly >3x-growing lengths, the first strictly above ``first_above``.

    Each length is at least ``growth`` times the running total ``base`` plus
    the lengths already emitted, rounded up to ``multiple_of``.
    """
    out = []
    total = base
    prev = None
    for _ in range(count):
        if prev is None:
            L = max(first_above + 1, minimum)
        else:
            L = 3 * prev + 1
        if growth > 3 and total:
            L = max(L, int(-(-growth * total // 1)))
        L = _round_up(L, multiple_of)
        out.append(L)
        total += L
        prev = L
    return out


def periodic_tall_cover(u, period: int, epsilon: float, N: int, depth: int = 1,
                        growth: float = 3.0) -> list[CoverSpec]:
    """Covers of the periodic measure on the orbit of ``u^inf`` by prefixes of its ``period`` shifts.

    Each cover holds one word per shift, each of mass ``1/period``, so the
    covered mass is 1 and the cover is valid for every epsilon. Successive
    covers continue the length chain, the next one's ``N`` being the previous
    last length.
    """
    u = as_word(u)
    if isinstance(u, PeriodicWord):
        u = u.materialize()
    if len(u) != period:
        raise SymbolicError(f"periodic point of length {len(u)} does not have period {period}")
    if primitive_period(u) != period:
        raise SymbolicError(f"shifts of {str(u)!r} have colliding prefixes (smaller period "
                            f"{primitive_period(u)})")
    covers = []
    n_cur = N
    total = 0
    for _ in range(depth):
        lengths = chain_lengths(n_cur, period, growth=growth, base=total, minimum=period)
        words = tuple(PeriodicWord(u, s, L) for s, L in enumerate(lengths))
        covers.append(CoverSpec(words, epsilon, n_cur))
        total += sum(lengths)
        n_cur = lengths[-1]
    return covers


def save_covers(covers: Sequence[CoverSpec], oracle: FreqOracle, path: str | Path,
                Ms: Sequence[int] | None = None) -> Path:
    path = Path(path)
    doc = {"oracle": oracle.to_json(), "covers": [c.to_json() for c in covers]}
    if Ms is not None:
        doc["Ms"] = list(Ms)
    path.write_text(json.dumps(doc, indent=2))
    return path


def load_covers(path: str | Path):
    from .words import oracle_from_json

    doc = json.loads(Path(path).read_text())
    oracle = oracle_from_json(doc["oracle"])
    covers = [CoverSpec.from_json(c, oracle.alphabet) for c in doc["covers"]]
    return covers, oracle, doc.get("Ms")
