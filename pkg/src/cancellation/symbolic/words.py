"""Finite words over a finite alphabet and cylinder-frequency oracles."""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

# materialization guard for lazily represented periodic words
MAX_MATERIALIZE = 50_000_000


class SymbolicError(ValueError):
    pass


def _alphabet_from(symbols: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(set(symbols)))


class Word:
    """A nonempty finite word, stored as ``uint8`` codes into ``alphabet``."""

    __slots__ = ("codes", "alphabet")

    def __init__(self, codes, alphabet: Sequence[str]):
        alphabet = tuple(alphabet)
        if not alphabet:
            raise SymbolicError("empty alphabet")
        if len(alphabet) > 255:
            raise SymbolicError("alphabet larger than 255 symbols")
        arr = np.asarray(codes, dtype=np.uint8)
        if arr.ndim != 1 or arr.size == 0:
            raise SymbolicError("words are nonempty one-dimensional")
        if arr.max() >= len(alphabet):
            raise SymbolicError("symbol code outside the alphabet")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self.codes = arr
        self.alphabet = alphabet

    @classmethod
    def from_text(cls, text: str, alphabet: Sequence[str] | None = None) -> "Word":
        alphabet = tuple(alphabet) if alphabet is not None else _alphabet_from(text)
        index = {s: i for i, s in enumerate(alphabet)}
        try:
            codes = np.fromiter((index[ch] for ch in text), dtype=np.uint8, count=len(text))
        except KeyError as exc:
            raise SymbolicError(f"symbol {exc.args[0]!r} not in alphabet {alphabet}") from None
        return cls(codes, alphabet)

    def __len__(self) -> int:
        return int(self.codes.size)

    def __str__(self) -> str:
        return "".join(self.alphabet[c] for c in self.codes)

    def __repr__(self) -> str:
        s = str(self) if len(self) <= 40 else str(self.prefix(37)) + "..."
        return f"Word({s!r})"

    def __eq__(self, other) -> bool:
        if isinstance(other, PeriodicWord):
            other = other.materialize()
        if not isinstance(other, Word):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self.codes, other.codes)

    def __hash__(self) -> int:
        return hash((self.alphabet, self.codes.tobytes()))

    def prefix(self, n: int) -> "Word":
        if n > len(self):
            raise SymbolicError(f"prefix {n} longer than word of length {len(self)}")
        return Word(self.codes[:n], self.alphabet)

    def window(self, start: int, length: int) -> "Word":
        """0-based window ``[start, start+length)``."""
        return Word(self.codes[start:start + length], self.alphabet)

    def materialize(self, n: int | None = None) -> "Word":
        return self if n is None or n == len(self) else self.prefix(n)

    def startswith(self, other: "Word | PeriodicWord") -> bool:
        if len(other) > len(self):
            return False
        other_codes = other.materialize().codes if isinstance(other, PeriodicWord) else other.codes
        return np.array_equal(self.codes[: len(other)], other_codes)

    def symbol_code(self, s: str) -> int:
        return self.alphabet.index(s)


class PeriodicWord:
    """Lazy prefix of length ``length`` of the shifted periodic point ``sigma^shift(u^inf)``.

    Lengths may be astronomically large; symbols are only produced on
    :meth:`materialize`.
    """

    __slots__ = ("period", "shift", "length")

    def __init__(self, period: Word, shift: int, length: int):
        if length < 1:
            raise SymbolicError("words are nonempty")
        self.period = period
        self.shift = int(shift) % len(period)
        self.length = int(length)

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.period.alphabet

    @property
    def p(self) -> int:
        return len(self.period)

    def __len__(self) -> int:
        # __len__ must fit an index; callers working with huge words use .length
        return self.length if self.length < 2**62 else 2**62

    def __repr__(self) -> str:
        return f"PeriodicWord({str(self.period)!r}, shift={self.shift}, length={self.length})"

    def __eq__(self, other) -> bool:
        if isinstance(other, PeriodicWord):
            return (self.length == other.length and self.period == other.period
                    and self.shift == other.shift)
        if isinstance(other, Word):
            return len(other) == self.length and other == self.materialize()
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.period, self.shift, self.length))

    def codes_range(self, start: int, stop: int) -> np.ndarray:
        """Codes at 0-based positions ``start..stop-1`` without building the whole word."""
        stop = min(stop, self.length)
        idx = (self.shift + np.arange(start, stop, dtype=np.int64)) % self.p
        return self.period.codes[idx]

    def materialize(self, n: int | None = None) -> Word:
        n = self.length if n is None else min(n, self.length)
        if n > MAX_MATERIALIZE:
            raise SymbolicError(f"refusing to materialize {n} symbols")
        return Word(self.codes_range(0, n), self.alphabet)

    def prefix(self, n: int) -> Word:
        if n > self.length:
            raise SymbolicError(f"prefix {n} longer than word of length {self.length}")
        return self.materialize(n)

    @property
    def codes(self) -> np.ndarray:
        return self.materialize().codes

    def __str__(self) -> str:
        return str(self.materialize())


def as_word(w, alphabet: Sequence[str] | None = None) -> Word | PeriodicWord:
    if isinstance(w, (Word, PeriodicWord)):
        return w
    if isinstance(w, str):
        return Word.from_text(w, alphabet)
    raise SymbolicError(f"cannot interpret {type(w).__name__} as a word")


def word_length(w) -> int:
    return w.length if isinstance(w, PeriodicWord) else len(w)


def primitive_period(u: Word) -> int:
    """Smallest ``q`` dividing ``len(u)`` with ``u`` a power of its length-``q`` prefix."""
    p = len(u)
    codes = u.codes
    for q in range(1, p + 1):
        if p % q == 0 and np.array_equal(codes, np.tile(codes[:q], p // q)):
            return q
    return p


# ---------------------------------------------------------------------------
# frequency oracles

def _code_words(codes: np.ndarray, k: int, base: int) -> np.ndarray:
    """Integer code of every length-``k`` factor, packed in base ``base``.

    Only valid while ``base**k`` fits in int64.
    """
    n = codes.size - k + 1
    if n <= 0:
        return np.empty(0, dtype=np.int64)
    out = np.zeros(n, dtype=np.int64)
    c = codes.astype(np.int64)
    for j in range(k):
        out = out * base + c[j:j + n]
    return out


def packable(k: int, base: int) -> bool:
    return base ** k < 2**62


class FreqOracle:
    """Cylinder-frequency oracle ``beta -> mu([beta])`` for a shift-invariant measure."""

    mode = "abstract"
    alphabet: tuple[str, ...]

    def measure(self, beta) -> float:
        raise NotImplementedError

    def support(self, k: int) -> dict[str, float]:
        """All words of length ``k`` with positive mass, as text -> mass."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


class PeriodicOracle(FreqOracle):
    """Exact frequencies of the periodic measure carried by the orbit of ``u^inf``.

    ``mu([beta])`` is the number of cyclic start positions of ``u`` at which
    ``beta`` is read, divided by the period.
    """

    mode = "exact_periodic"

    def __init__(self, u: Word | str, alphabet: Sequence[str] | None = None):
        u = as_word(u, alphabet)
        if isinstance(u, PeriodicWord):
            u = u.materialize()
        q = primitive_period(u)
        self.u = u.prefix(q)
        self.alphabet = u.alphabet
        self.p = q
        self._cache: dict[int, dict[str, float]] = {}

    def reading(self, r: int, k: int) -> np.ndarray:
        idx = (r + np.arange(k)) % self.p
        return self.u.codes[idx]

    def support(self, k: int) -> dict[str, float]:
        if k not in self._cache:
            counts: Counter = Counter()
            for r in range(self.p):
                counts["".join(self.alphabet[c] for c in self.reading(r, k))] += 1
            self._cache[k] = {w: n / self.p for w, n in counts.items()}
        return self._cache[k]

    def measure(self, beta) -> float:
        text = str(beta) if not isinstance(beta, str) else beta
        if not text:
            return 1.0
        if len(text) > 64:
            # long words: only the residues whose first symbols agree can match
            b = as_word(text, self.alphabet)
            hits = sum(1 for r in range(self.p) if np.array_equal(self.reading(r, len(text)), b.codes))
            return hits / self.p
        return self.support(len(text)).get(text, 0.0)

    def to_json(self) -> dict:
        return {"mode": self.mode, "alphabet": list(self.alphabet), "periodic_point": str(self.u)}


class EmpiricalOracle(FreqOracle):
    """Frequencies estimated from one long sample, over ``L - k + 1`` start positions normalized by ``L``.

    With this normalization the masses of all length-``k`` words sum to
    ``1 - (k - 1)/L``, inside the ``[1 - k/L, 1]`` band.
    """

    mode = "empirical"

    def __init__(self, sample: Word | str, alphabet: Sequence[str] | None = None):
        w = as_word(sample, alphabet)
        if isinstance(w, PeriodicWord):
            w = w.materialize()
        self.sample = w
        self.alphabet = w.alphabet
        self.L = len(w)
        self._cache: dict[int, dict[str, float]] = {}

    def support(self, k: int) -> dict[str, float]:
        if k not in self._cache:
            base = len(self.alphabet)
            if packable(k, base):
                keys, counts = np.unique(_code_words(self.sample.codes, k, base), return_counts=True)
                out = {}
                for key, n in zip(keys.tolist(), counts.tolist()):
                    syms = []
                    for _ in range(k):
                        key, r = divmod(key, base)
                        syms.append(self.alphabet[r])
                    out["".join(reversed(syms))] = n / self.L
            else:
                text = str(self.sample)
                cnt = Counter(text[i:i + k] for i in range(self.L - k + 1))
                out = {w: n / self.L for w, n in cnt.items()}
            self._cache[k] = out
        return self._cache[k]

    def measure(self, beta) -> float:
        text = str(beta) if not isinstance(beta, str) else beta
        if not text:
            return 1.0
        return self.support(len(text)).get(text, 0.0)

    def to_json(self) -> dict:
        return {"mode": self.mode, "alphabet": list(self.alphabet), "sample": str(self.sample)}


def chacon_block(n: int) -> Word:
    """Chacon block ``B_n`` with ``B_0 = a`` and ``B_{k+1} = B_k B_k b B_k``."""
    block = "a"
    for _ in range(n):
        block = block + block + "b" + block
    return Word.from_text(block, ("a", "b"))


def chacon_oracle(n: int = 10) -> EmpiricalOracle:
    """Empirical oracle over the Chacon block ``B_n`` (length ``(3^{n+1}-1)/2``)."""
    return EmpiricalOracle(chacon_block(n))


def oracle_from_json(d: Mapping) -> FreqOracle:
    if d["mode"] == "exact_periodic":
        return PeriodicOracle(d["periodic_point"], d.get("alphabet"))
    if d["mode"] == "empirical":
        return EmpiricalOracle(d["sample"], d.get("alphabet"))
    raise SymbolicError(f"unknown oracle mode {d['mode']!r}")


def write_word(w: Word | PeriodicWord, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(str(w) + "\n", encoding="utf-8")
    return path


def read_word(path: str | Path, alphabet: Sequence[str] | None = None) -> Word:
    return Word.from_text(Path(path).read_text(encoding="utf-8").strip(), alphabet)


def save_oracle(oracle: FreqOracle, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(oracle.to_json(), indent=2))
    return path
