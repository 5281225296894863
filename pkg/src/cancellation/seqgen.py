"""Generators for the sequence families studied by the laboratory.

Every generator returns a :class:`ComplexSeq` carrying the descriptor that
produced it, so ``generate(seq.meta)`` rebuilds the same array bit-for-bit.

Indexing: formulas are 1-indexed (``n = 1..T``), storage is 0-indexed, so
``values[j]`` holds ``x_{j+1}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

FAMILIES = ("rotation", "sqrt_rotation", "iid", "sum", "symbolic")
IID_DISTS = ("symmetric-two-point", "uniform-disk", "complex-gaussian")

# sup |x_n| for the offered i.i.d. laws
_IID_BOUND = {
    "symmetric-two-point": 1.0,
    "uniform-disk": 1.0,
    "complex-gaussian": math.inf,
}

UNIT_TOL = 1e-9


class GeneratorError(ValueError):
    """Raised when a generator's preconditions are violated."""


def _alpha_to_json(alpha):
    if alpha is None:
        return None
    if isinstance(alpha, Fraction):
        return f"{alpha.numerator}/{alpha.denominator}"
    return float(alpha)


def _alpha_from_json(value):
    if value is None or isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        if value == "golden":
            return GOLDEN
        return Fraction(value)
    return float(value)


@dataclass(frozen=True)
class GeneratorDescriptor:
    """Everything needed to regenerate a sequence.

    ``alpha`` is either a :class:`fractions.Fraction` (phases computed with
    exact integer arithmetic, then rounded once to double) or a float
    (phases ``n*alpha mod 1`` in double precision).
    """

    family: str
    T: int
    alpha: float | Fraction | None = None
    c: complex = 1.0 + 0.0j
    seed: int | None = None
    dist: str | None = None
    components: tuple["GeneratorDescriptor", ...] = ()
    source: Mapping[str, Any] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise GeneratorError(f"unknown family {self.family!r}")
        if abs(abs(complex(self.c)) - 1.0) > UNIT_TOL:
            raise GeneratorError(f"|c| must be 1, got {abs(complex(self.c))!r}")

    def to_dict(self) -> dict:
        c = complex(self.c)
        return {
            "family": self.family,
            "T": self.T,
            "alpha": _alpha_to_json(self.alpha),
            "c": [c.real, c.imag],
            "seed": self.seed,
            "dist": self.dist,
            "components": [d.to_dict() for d in self.components],
            "source": dict(self.source) if self.source is not None else None,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "GeneratorDescriptor":
        c = d.get("c", [1.0, 0.0])
        if not isinstance(c, (list, tuple)):
            c = [complex(c).real, complex(c).imag]
        return cls(
            family=d["family"],
            T=int(d["T"]),
            alpha=_alpha_from_json(d.get("alpha")),
            c=complex(c[0], c[1]),
            seed=d.get("seed"),
            dist=d.get("dist"),
            components=tuple(cls.from_dict(x) for x in d.get("components", ())),
            source=d.get("source"),
        )


@dataclass(frozen=True, eq=False)
class ComplexSeq:
    values: np.ndarray
    meta: GeneratorDescriptor
    bound: float = math.inf

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.complex128)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size == 0:
            raise GeneratorError("sequence values must be a nonempty 1-d array")
        if v.size != self.meta.T:
            raise GeneratorError(f"length {v.size} disagrees with descriptor T={self.meta.T}")

    @property
    def T(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size

    def x(self, n: int) -> complex:
        """1-indexed access, ``x(1)`` is the first term."""
        if not 1 <= n <= self.T:
            raise IndexError(n)
        return complex(self.values[n - 1])

    def prefix(self, T: int) -> np.ndarray:
        if T > self.T:
            raise GeneratorError(f"prefix {T} exceeds available length {self.T}")
        return self.values[:T]


def _check_T(T):
    if int(T) != T or T < 1:
        raise GeneratorError(f"T must be a positive integer, got {T!r}")
    return int(T)


def rotation_phase(alpha, n: np.ndarray) -> np.ndarray:
    """Fractional part of ``n*alpha`` in turns."""
    if isinstance(alpha, Fraction):
        p, q = alpha.numerator, alpha.denominator
        if abs(p) < 2**31 and q < 2**31:
            r = (n.astype(np.int64) * p) % q
            return r.astype(np.float64) / q
        return np.array([float((int(k) * alpha) % 1) for k in n])
    return np.mod(n * float(alpha), 1.0)


def _turns_to_unit(turns: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * turns)


def gen_rotation(alpha=GOLDEN, c: complex = 1.0, T: int = 1) -> ComplexSeq:
    """``x_n = c * exp(2 pi i n alpha)`` for ``n = 1..T``."""
    T = _check_T(T)
    desc = GeneratorDescriptor("rotation", T, alpha=alpha, c=complex(c))
    n = np.arange(1, T + 1, dtype=np.int64)
    vals = complex(c) * _turns_to_unit(rotation_phase(alpha, n))
    return ComplexSeq(vals, desc, bound=1.0)


def gen_sqrt_rotation(alpha=GOLDEN, T: int = 1) -> ComplexSeq:
    """``x_n = exp(2 pi i (n + sqrt(n)) alpha)``.

    The square root is taken in double precision; for ``T <= 1e8`` the phase
    error is below 1e-8 turns and is not compensated.
    """
    T = _check_T(T)
    desc = GeneratorDescriptor("sqrt_rotation", T, alpha=alpha)
    n = np.arange(1, T + 1, dtype=np.int64)
    turns = rotation_phase(alpha, n) + np.mod(np.sqrt(n.astype(np.float64)) * float(alpha), 1.0)
    return ComplexSeq(_turns_to_unit(np.mod(turns, 1.0)), desc, bound=1.0)


def philox(seed: int) -> np.random.Generator:
    """Counter-based generator; one independent stream per 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=int(seed) % 2**64))


def _draw_iid(dist: str, rng: np.random.Generator, T: int) -> np.ndarray:
    if dist == "symmetric-two-point":
        return (2.0 * rng.integers(0, 2, size=T) - 1.0).astype(np.complex128)
    if dist == "uniform-disk":
        r = np.sqrt(rng.random(T))
        th = rng.random(T)
        return r * np.exp(2j * np.pi * th)
    if dist == "complex-gaussian":
        z = rng.standard_normal((2, T))
        return (z[0] + 1j * z[1]) / math.sqrt(2.0)
    raise GeneratorError(f"unknown distribution {dist!r}; expected one of {IID_DISTS}")


def gen_iid(dist: str = "symmetric-two-point", seed: int = 0, T: int = 1) -> ComplexSeq:
    """Seeded i.i.d. draws from a mean-zero, finite-variance law."""
    T = _check_T(T)
    if dist not in IID_DISTS:
        raise GeneratorError(f"unknown distribution {dist!r}; expected one of {IID_DISTS}")
    desc = GeneratorDescriptor("iid", T, seed=int(seed), dist=dist)
    return ComplexSeq(_draw_iid(dist, philox(seed), T), desc, bound=_IID_BOUND[dist])


def gen_sum(a: ComplexSeq, b: ComplexSeq) -> ComplexSeq:
    if a.T != b.T:
        raise GeneratorError(f"length mismatch: {a.T} vs {b.T}")
    desc = GeneratorDescriptor("sum", a.T, components=(a.meta, b.meta))
    return ComplexSeq(a.values + b.values, desc, bound=a.bound + b.bound)


def gen_from_symbolic(word, substitution: Mapping[str, float], T: int,
                      measure, source: Mapping[str, Any] | None = None,
                      tol: float = 1e-9) -> ComplexSeq:
    """Substitute real values for the symbols of a word.

    ``measure`` is either a mapping ``symbol -> mass`` or a frequency oracle
    from :mod:`cancellation.symbolic`; the substitution must have zero
    expectation under it.
    """
    from .symbolic.words import as_word

    T = _check_T(T)
    w = as_word(word)
    if len(w) < T:
        raise GeneratorError(f"word of length {len(w)} is shorter than T={T}")
    missing = [s for s in w.alphabet if s not in substitution]
    if missing:
        raise GeneratorError(f"symbols without image: {missing}")
    if isinstance(measure, Mapping):
        masses = {s: float(measure.get(s, 0.0)) for s in w.alphabet}
    else:
        masses = {s: float(measure.measure(s)) for s in w.alphabet}
    mean = sum(masses[s] * float(substitution[s]) for s in w.alphabet)
    if abs(mean) > tol:
        raise GeneratorError(f"substitution has nonzero expectation {mean!r}")
    table = np.array([float(substitution[s]) for s in w.alphabet])
    vals = table[w.prefix(T).codes].astype(np.complex128)
    src = dict(source or {})
    src.setdefault("substitution", {s: float(substitution[s]) for s in w.alphabet})
    desc = GeneratorDescriptor("symbolic", T, source=src)
    return ComplexSeq(vals, desc, bound=float(np.max(np.abs(table))))


def generate(desc: GeneratorDescriptor | Mapping[str, Any]) -> ComplexSeq:
    """Rebuild a sequence from its descriptor."""
    if not isinstance(desc, GeneratorDescriptor):
        desc = GeneratorDescriptor.from_dict(desc)
    if desc.family == "rotation":
        return gen_rotation(desc.alpha, desc.c, desc.T)
    if desc.family == "sqrt_rotation":
        return gen_sqrt_rotation(desc.alpha, desc.T)
    if desc.family == "iid":
        return gen_iid(desc.dist, desc.seed, desc.T)
    if desc.family == "sum":
        a, b = (generate(d) for d in desc.components)
        return gen_sum(a, b)
    if desc.family == "symbolic":
        from .symbolic.construct import symbolic_from_source

        return symbolic_from_source(desc.source, desc.T)
    raise GeneratorError(f"unknown family {desc.family!r}")


def cesaro_second_moment(seq: ComplexSeq | np.ndarray) -> float:
    """``sup_N (1/N) sum_{n<=N} |x_n|^2`` over the emitted prefix."""
    v = seq.values if isinstance(seq, ComplexSeq) else np.asarray(seq)
    running = np.cumsum(np.abs(v) ** 2) / np.arange(1, v.size + 1)
    return float(running.max())


# ---------------------------------------------------------------------------
# serialization

def dump_binary(seq: ComplexSeq, path: str | Path) -> Path:
    """Write ``path`` (little-endian interleaved f64 re/im) and ``path.json``."""
    path = Path(path)
    inter = np.empty(2 * seq.T, dtype="<f8")
    inter[0::2] = seq.values.real
    inter[1::2] = seq.values.imag
    path.write_bytes(inter.tobytes())
    sidecar = {"descriptor": seq.meta.to_dict(), "bound": seq.bound, "dtype": "<f8", "layout": "re,im"}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, allow_nan=True))
    return path


def load_binary(path: str | Path) -> ComplexSeq:
    path = Path(path)
    side = json.loads(Path(str(path) + ".json").read_text())
    inter = np.frombuffer(path.read_bytes(), dtype="<f8")
    vals = inter[0::2] + 1j * inter[1::2]
    return ComplexSeq(vals, GeneratorDescriptor.from_dict(side["descriptor"]), bound=float(side["bound"]))


def write_csv(seq: ComplexSeq, path: str | Path) -> Path:
    path = Path(path)
    n = np.arange(1, seq.T + 1)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("n,re,im\n")
        for k, re, im in zip(n, seq.values.real, seq.values.imag):
            fh.write(f"{k},{re:.17g},{im:.17g}\n")
    return path
