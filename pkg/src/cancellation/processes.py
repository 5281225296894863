"""Stationary processes and empirical cancellation tests.

For a sequence ``x`` and a path ``Y(omega)`` the running average is
``A_T = (1/T) sum_{n=1}^T x_n Y_n``. Pointwise cancellation is judged per
path at finitely many checkpoints; mean cancellation by the root mean
square of ``|A_T|`` over an ensemble of independent paths.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .seqgen import ComplexSeq, IID_DISTS, _IID_BOUND, _draw_iid, philox, rotation_phase

KINDS = ("rotation_process", "iid_process", "markov", "product")
DEFAULT_CHECKPOINTS = (10**4, 10**5, 10**6)
DEFAULT_ENSEMBLE = 64


class ProcessError(ValueError):
    pass


@dataclass(frozen=True)
class ProcessSpec:
    """A stationary process.

    ``rotation_process``: ``Y_n = omega * z0^n`` with ``omega`` uniform on the
    circle and ``z0 = exp(2 pi i z0_turns)``.
    ``iid_process``: independent draws from ``dist``.
    ``markov``: finite chain with transition ``matrix`` started from
    ``stationary``, emitting ``values[state]``.
    ``product``: pointwise product of two independent component processes.
    """

    kind: str
    z0_turns: float | Fraction | None = None
    dist: str | None = None
    matrix: tuple[tuple[float, ...], ...] | None = None
    values: tuple[complex, ...] | None = None
    stationary: tuple[float, ...] | None = None
    components: tuple["ProcessSpec", ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ProcessError(f"unknown process kind {self.kind!r}")
        if self.kind == "rotation_process" and self.z0_turns is None:
            raise ProcessError("rotation_process needs z0_turns")
        if self.kind == "iid_process" and self.dist not in IID_DISTS:
            raise ProcessError(f"unknown distribution {self.dist!r}")
        if self.kind == "markov":
            self._check_markov()
        if self.kind == "product" and len(self.components) != 2:
            raise ProcessError("product needs exactly two components")

    def _check_markov(self):
        if self.matrix is None or self.values is None:
            raise ProcessError("markov needs matrix and values")
        P = np.asarray(self.matrix, dtype=float)
        k = len(self.values)
        if P.shape != (k, k):
            raise ProcessError(f"matrix shape {P.shape} does not match {k} state values")
        if (P < 0).any() or np.abs(P.sum(axis=1) - 1.0).max() > 1e-12:
            raise ProcessError("rows of the transition matrix must be probability vectors")
        if self.stationary is None:
            object.__setattr__(self, "stationary", tuple(stationary_vector(P)))
        pi = np.asarray(self.stationary, dtype=float)
        if pi.shape != (k,) or (pi < 0).any() or abs(pi.sum() - 1.0) > 1e-12:
            raise ProcessError("stationary vector must be a probability vector")
        if np.abs(pi @ P - pi).max() > 1e-10:
            raise ProcessError("declared stationary vector is not fixed by the matrix")

    @property
    def z0(self) -> complex:
        return complex(np.exp(2j * np.pi * float(self.z0_turns)))

    @property
    def bound(self) -> float:
        if self.kind == "rotation_process":
            return 1.0
        if self.kind == "iid_process":
            return _IID_BOUND[self.dist]
        if self.kind == "markov":
            return float(max(abs(complex(v)) for v in self.values))
        a, b = self.components
        return a.bound * b.bound

    def to_json(self) -> dict:
        d: dict[str, Any] = {"kind": self.kind}
        if self.z0_turns is not None:
            zt = self.z0_turns
            d["z0_turns"] = f"{zt.numerator}/{zt.denominator}" if isinstance(zt, Fraction) else float(zt)
        if self.dist is not None:
            d["dist"] = self.dist
        if self.matrix is not None:
            d["matrix"] = [list(r) for r in self.matrix]
            d["values"] = [[complex(v).real, complex(v).imag] for v in self.values]
            d["stationary"] = list(self.stationary)
        if self.components:
            d["components"] = [c.to_json() for c in self.components]
        return d

    @classmethod
    def from_json(cls, d: Mapping[str, Any]) -> "ProcessSpec":
        kind = d.get("kind")
        zt = d.get("z0_turns")
        if isinstance(zt, str):
            zt = Fraction(zt)
        vals = d.get("values")
        if vals is not None:
            vals = tuple(complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v) for v in vals)
        return cls(
            kind=kind,
            z0_turns=zt,
            dist=d.get("dist"),
            matrix=tuple(tuple(float(a) for a in r) for r in d["matrix"]) if d.get("matrix") else None,
            values=vals,
            stationary=tuple(d["stationary"]) if d.get("stationary") else None,
            components=tuple(cls.from_json(c) for c in d.get("components", ())),
        )


# JSON schema of process spec files, checked structurally by ProcessSpec.from_json
PROCESS_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "z0_turns": {"type": ["number", "string"]},
        "dist": {"enum": list(IID_DISTS)},
        "matrix": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "values": {"type": "array"},
        "stationary": {"type": "array", "items": {"type": "number"}},
        "components": {"type": "array", "minItems": 2, "maxItems": 2},
    },
}


def rotation(z0_turns) -> ProcessSpec:
    return ProcessSpec("rotation_process", z0_turns=z0_turns)


def iid(dist: str = "symmetric-two-point") -> ProcessSpec:
    return ProcessSpec("iid_process", dist=dist)


def markov(matrix, values, stationary=None) -> ProcessSpec:
    return ProcessSpec("markov", matrix=tuple(tuple(float(a) for a in r) for r in matrix),
                       values=tuple(complex(v) for v in values),
                       stationary=None if stationary is None else tuple(float(a) for a in stationary))


def stationary_vector(P: np.ndarray) -> np.ndarray:
    """Left eigenvector of ``P`` for eigenvalue 1, normalized to a probability vector."""
    w, V = np.linalg.eig(np.asarray(P, dtype=float).T)
    i = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(V[:, i])
    pi = np.abs(pi) / np.abs(pi).sum()
    return pi


def _child_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(int(seed) % 2**64).generate_state(n, dtype=np.uint64)]


def simulate_process(spec: ProcessSpec, seed: int, T: int) -> np.ndarray:
    """Path ``Y_1..Y_T``, stationary by construction."""
    if T < 1:
        raise ProcessError("T must be positive")
    rng = philox(seed)
    if spec.kind == "rotation_process":
        omega = np.exp(2j * np.pi * rng.random())
        n = np.arange(1, T + 1, dtype=np.int64)
        return omega * np.exp(2j * np.pi * rotation_phase(spec.z0_turns, n))
    if spec.kind == "iid_process":
        return _draw_iid(spec.dist, rng, T)
    if spec.kind == "markov":
        P = np.asarray(spec.matrix, dtype=float)
        cum = np.cumsum(P, axis=1)
        cum[:, -1] = 1.0
        pi_cum = np.cumsum(spec.stationary)
        pi_cum[-1] = 1.0
        u = rng.random(T)
        states = np.empty(T, dtype=np.int64)
        s = int(np.searchsorted(pi_cum, u[0], side="right"))
        states[0] = s
        rows = [cum[i] for i in range(P.shape[0])]
        for t in range(1, T):
            s = int(np.searchsorted(rows[s], u[t], side="right"))
            states[t] = s
        return np.asarray(spec.values, dtype=np.complex128)[states]
    a, b = spec.components
    sa, sb = _child_seeds(seed, 2)
    return simulate_process(a, sa, T) * simulate_process(b, sb, T)


def _x_values(x) -> np.ndarray:
    return x.values if isinstance(x, ComplexSeq) else np.asarray(x, dtype=np.complex128)


def running_averages(x: np.ndarray, Y: np.ndarray, Ts: Sequence[int]) -> np.ndarray:
    """``A_T`` at every checkpoint, accumulated in index order."""
    Tmax = max(Ts)
    csum = np.cumsum(x[:Tmax] * Y[:Tmax])
    return np.array([csum[T - 1] / T for T in Ts])


@dataclass(frozen=True)
class CancellationRun:
    x_descriptor: dict | None
    process: ProcessSpec
    seeds: tuple[int, ...]
    Ts: tuple[int, ...]
    A: np.ndarray            # seeds x Ts, complex A_T
    l1_means: tuple[float, ...]
    tolerance: float

    @property
    def per_path(self) -> np.ndarray:
        return np.abs(self.A)

    @property
    def l2_estimate(self) -> np.ndarray:
        return np.sqrt(np.mean(self.per_path ** 2, axis=0))

    @property
    def non_cancelling(self) -> np.ndarray:
        """Paths whose ``|A_T|`` is not below tolerance at both of the two largest checkpoints."""
        last = self.per_path[:, -2:] if len(self.Ts) >= 2 else self.per_path[:, -1:]
        return (last >= self.tolerance).any(axis=1)

    def bound_ok(self) -> bool:
        """``|A_T| <= sup|Y| (1/T) sum |x_n|`` on every path and checkpoint (bounded processes)."""
        M = self.process.bound
        if not math.isfinite(M):
            return True
        lim = M * np.asarray(self.l1_means)
        return bool((self.per_path <= lim[None, :] * (1 + 1e-12) + 1e-15).all())

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            fh.write("seed,T,absA\n")
            for i, s in enumerate(self.seeds):
                for j, T in enumerate(self.Ts):
                    fh.write(f"{s},{T},{self.per_path[i, j]:.17g}\n")
        return path

    def summary(self) -> dict:
        return {
            "x": self.x_descriptor,
            "process": self.process.to_json(),
            "seeds": list(self.seeds),
            "Ts": list(self.Ts),
            "l2_estimate": [float(v) for v in self.l2_estimate],
            "tolerance": self.tolerance,
            "non_cancelling_seeds": [s for s, f in zip(self.seeds, self.non_cancelling) if f],
            "bound_ok": self.bound_ok(),
        }


def pointwise_cancel(x, spec: ProcessSpec, seeds: Sequence[int], Ts: Sequence[int] = DEFAULT_CHECKPOINTS,
                     tolerance: float = 0.05) -> CancellationRun:
    v = _x_values(x)
    Ts = tuple(int(t) for t in Ts)
    if not Ts or min(Ts) < 1:
        raise ProcessError("checkpoints must be positive")
    if max(Ts) > v.size:
        raise ProcessError(f"checkpoint {max(Ts)} exceeds sequence length {v.size}")
    seeds = tuple(int(s) for s in seeds)
    A = np.vstack([running_averages(v, simulate_process(spec, s, max(Ts)), Ts) for s in seeds])
    l1 = tuple(float(np.abs(v[:T]).sum() / T) for T in Ts)
    desc = x.meta.to_dict() if isinstance(x, ComplexSeq) else None
    return CancellationRun(desc, spec, seeds, Ts, A, l1, float(tolerance))


@dataclass(frozen=True)
class MeanCurve:
    Ts: tuple[int, ...]
    rms: np.ndarray
    stderr: np.ndarray
    run: CancellationRun

    def at(self, T: int) -> float:
        return float(self.rms[self.Ts.index(T)])


def mean_cancel(x, spec: ProcessSpec, ensemble_size: int = DEFAULT_ENSEMBLE,
                Ts: Sequence[int] = DEFAULT_CHECKPOINTS, base_seed: int = 0) -> MeanCurve:
    """Root mean square of ``|A_T|`` over ``ensemble_size`` independent paths, with a delta-method standard error."""
    if ensemble_size < 2:
        raise ProcessError("ensemble needs at least two paths")
    seeds = [base_seed + i for i in range(ensemble_size)]
    run = pointwise_cancel(x, spec, seeds, Ts)
    sq = run.per_path ** 2
    ms = sq.mean(axis=0)
    rms = np.sqrt(ms)
    se_ms = sq.std(axis=0, ddof=1) / math.sqrt(ensemble_size)
    with np.errstate(divide="ignore", invalid="ignore"):
        se = np.where(rms > 0, se_ms / (2 * rms), 0.0)
    return MeanCurve(run.Ts, rms, se, run)


def empirical_moments(x, powers: Sequence[tuple[int, int]], lags: Sequence[int]) -> dict:
    """``(1/T) sum_{n=1}^T x_n^p conj(x_{n+tau})^q`` with ``T = len(x) - max(lags)``."""
    v = _x_values(x)
    lags = [int(t) for t in lags]
    if min(lags) < 0:
        raise ProcessError("lags are nonnegative")
    T = v.size - max(lags)
    if T < 1:
        raise ProcessError("sequence too short for the requested lags")
    out = {}
    for p, q in powers:
        if p < 0 or q < 0:
            raise ProcessError("powers are nonnegative")
        head = v[:T] ** p
        for tau in lags:
            out[(p, q, tau)] = complex(np.mean(head * np.conj(v[tau:tau + T]) ** q))
    return out


def marginal_moments(spec: ProcessSpec, indices: Sequence[int], ensemble: int, base_seed: int = 0):
    """Ensemble mean, mean square and their standard errors of ``Y_n`` at 1-based ``indices``."""
    T = max(indices)
    paths = np.vstack([simulate_process(spec, base_seed + i, T) for i in range(ensemble)])
    cols = paths[:, [i - 1 for i in indices]]
    m1 = cols.mean(axis=0)
    m2 = (np.abs(cols) ** 2).mean(axis=0)
    se1 = np.sqrt((np.abs(cols - m1) ** 2).mean(axis=0) / ensemble)
    se2 = (np.abs(cols) ** 2).std(axis=0, ddof=1) / math.sqrt(ensemble)
    return m1, m2, se1, se2


def save_run(run: CancellationRun, outdir: str | Path) -> None:
    outdir = Path(outdir)
    run.to_csv(outdir / "cancel.csv")
    (outdir / "cancel.json").write_text(json.dumps(run.summary(), indent=2))
