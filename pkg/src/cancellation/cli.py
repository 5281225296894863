"""Batch runner: one command per invocation, JSON config in, CSV/JSON artifacts out.

Every run writes ``manifest.json`` (resolved config and tool version) and
``summary.json`` (the key scalar consumed by ``report``) into a fresh output
directory. Re-running with ``--config <previous manifest>`` reproduces the
numeric artifacts byte for byte.

Exit codes: 0 success, 2 config schema violation, 3 computational
precondition failure, 4 I/O failure. Errors are printed to stderr as a
single JSON record.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
from scipy import fft as sfft

from . import __version__
from .autocorr import (AutocorrError, _dense_profile, autocorr_profile, density_bad_tau,
                       geometric_windows)
from .processes import ProcessError, ProcessSpec, pointwise_cancel
from .seqgen import (GOLDEN, ComplexSeq, GeneratorDescriptor, GeneratorError,
                     cesaro_second_moment, dump_binary, generate, load_binary, write_csv)
from .spectral import (SpectralError, atoms_json, discrepancy_2torus, fb_scan, find_atoms,
                       torus_weyl)
from .symbolic import (PeriodicOracle, SymbolicError, aligned_blocks, build_hochman_point,
                       build_simple_point, chacon_oracle, is_cover, is_eps_generic,
                       is_strongly_generic, lemma10_check, pair_orbital_measures,
                       periodic_hochman_instance, periodic_tall_cover, typical_points)
from .symbolic.covers import load_covers, save_covers
from .symbolic.words import Word, write_word

EXIT_SCHEMA, EXIT_PRECONDITION, EXIT_IO = 2, 3, 4
COMMANDS = ("gen", "spectrum", "autocorr", "density", "cancel", "torus", "symbolic", "hochman", "report")
CSV_LIMIT = 100_000  # gen writes the per-term CSV by default only up to this length


class ConfigError(Exception):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(message)


# ---------------------------------------------------------------------------
# schemas

_num = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}
_int_list = {"type": "array", "items": _pos_int, "minItems": 1}
_real = {"anyOf": [{"type": "number"}, {"type": "string", "pattern": r"^(golden|-?\d+/\d+)$"}]}
_seq_ref = {"anyOf": [{"type": "string"}, {"type": "object"}]}

SCHEMAS: dict[str, dict] = {
    "gen": {
        "properties": {
            "family": {"enum": ["rotation", "sqrt_rotation", "iid", "symbolic"]},
            "alpha": _real,
            "c": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
            "T": _pos_int,
            "seed": {"type": "integer"},
            "dist": {"enum": ["symmetric-two-point", "uniform-disk", "complex-gaussian"]},
            "u": {"type": "string", "minLength": 1},
            "scales": _pos_int,
            "growth": _num,
            "mode": {"enum": ["simple", "split"]},
            "substitution": {"type": "object", "additionalProperties": _num},
            "descriptor": _seq_ref,
            "csv": {"type": "boolean"},
        },
        "required": ["T"],
        "defaults": {"alpha": "golden", "c": [1.0, 0.0], "seed": 0, "dist": "symmetric-two-point",
                     "growth": 64.0, "mode": "split"},
    },
    "spectrum": {
        "properties": {"in": _seq_ref, "grid": _pos_int, "Ts": _int_list, "threshold": _num,
                       "atoms": {"type": "boolean"}},
        "required": ["in"],
        "defaults": {"grid": 512, "threshold": 0.1, "atoms": True},
    },
    "autocorr": {
        "properties": {"in": _seq_ref, "Ns": _int_list, "tau_max": {"type": "integer", "minimum": 0}},
        "required": ["in", "Ns", "tau_max"],
        "defaults": {},
    },
    "density": {
        "properties": {"in": _seq_ref, "epsilon": {"type": "number", "exclusiveMinimum": 0},
                       "N_lo": _pos_int, "N_hi": _pos_int, "T": _pos_int,
                       "ratio": {"type": "number", "exclusiveMinimum": 1},
                       "dense": {"type": "boolean"}},
        "required": ["in", "epsilon", "N_lo", "N_hi", "T"],
        "defaults": {"ratio": 2.0, "dense": False},
    },
    "cancel": {
        "properties": {"x": _seq_ref, "process": _seq_ref,
                       "seeds": {"anyOf": [_int_list, _pos_int]},
                       "Ts": _int_list, "tolerance": _num, "base_seed": {"type": "integer"}},
        "required": ["x", "process", "seeds", "Ts"],
        "defaults": {"tolerance": 0.05, "base_seed": 0},
    },
    "torus": {
        "properties": {"beta": _real, "alpha": _num,
                       "m1": {"anyOf": [{"type": "integer"}, {"type": "array", "items": {"type": "integer"}}]},
                       "m2": {"anyOf": [{"type": "integer"}, {"type": "array", "items": {"type": "integer"}}]},
                       "N": _pos_int,
                       "box": {"type": "array", "minItems": 2, "maxItems": 2,
                               "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}}},
        "required": ["beta", "alpha", "m1", "m2", "N"],
        "defaults": {"box": [[0.0, 0.5], [0.0, 0.5]]},
    },
    "symbolic": {
        "properties": {"op": {"enum": ["generic", "strong", "lemma10", "cover", "tall_cover"]},
                       "u": {"type": "string", "minLength": 1}, "chacon": _pos_int,
                       "word": {"type": "string", "minLength": 1},
                       "words": {"type": "array", "items": {"type": "string", "minLength": 1}},
                       "epsilon": {"type": "number", "exclusiveMinimum": 0},
                       "M": _pos_int, "N": {"type": "integer", "minimum": 0}, "depth": _pos_int},
        "required": ["op", "epsilon"],
        "defaults": {"depth": 1},
    },
    "hochman": {
        "properties": {"covers": {"type": "string"}, "u": {"type": "string", "minLength": 1},
                       "scales": _pos_int, "growth": _num, "T": _pos_int,
                       "mode": {"enum": ["simple", "split"]}, "k": _pos_int,
                       "y_shifts": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
        "required": ["T"],
        "defaults": {"mode": "split", "k": 2, "growth": 64.0, "scales": 12},
    },
    "report": {
        "properties": {"dirs": {"type": "array", "items": {"type": "string"}}},
        "required": ["dirs"],
        "defaults": {},
    },
}


def params_schema(command: str) -> dict:
    s = SCHEMAS[command]
    return {"type": "object", "properties": s["properties"], "required": s["required"],
            "additionalProperties": False}


def validate(command: str, params: dict) -> dict:
    """Apply defaults and check ``params`` against the command's schema."""
    if command not in SCHEMAS:
        raise ConfigError("command", f"unknown command {command!r}")
    full = {**SCHEMAS[command]["defaults"], **params}
    errors = sorted(jsonschema.Draft202012Validator(params_schema(command)).iter_errors(full),
                    key=lambda e: [str(x) for x in e.absolute_path])
    if errors:
        e = errors[0]
        if e.validator == "required":
            missing = e.message.split("'")[1]
            raise ConfigError(f"params.{missing}", e.message)
        path = ".".join(["params"] + [str(p) for p in e.absolute_path])
        raise ConfigError(path, e.message)
    return full


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("--config", help="JSON config or a previous run's manifest")
    p.add_argument("--out", default=S, help="output directory (must not exist)")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--threads", type=int, default=S, help="FFT worker cap (default: all cores)")


def _ints(s: str) -> list[int]:
    return [int(float(t)) for t in s.split(",") if t]


def _int_or_ints(s: str):
    v = _ints(s)
    return v[0] if len(v) == 1 else v


def _real_arg(s: str):
    try:
        return float(s)
    except ValueError:
        return s


def _json_arg(s: str):
    return json.loads(s) if s.lstrip().startswith("{") else s


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    ap = argparse.ArgumentParser(prog="cancellation", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a sequence")
    _add_common(p)
    p.add_argument("--family", default=S)
    p.add_argument("--alpha", type=_real_arg, default=S, help="float, p/q or 'golden'")
    p.add_argument("--T", type=int, default=S)
    p.add_argument("--dist", default=S)
    p.add_argument("--u", default=S, help="periodic word for the symbolic family")
    p.add_argument("--scales", type=int, default=S)
    p.add_argument("--mode", choices=["simple", "split"], default=S)
    p.add_argument("--substitution", type=json.loads, default=S, help='e.g. \'{"a": -1, "b": 1}\'')
    p.add_argument("--descriptor", type=_json_arg, default=S, help="descriptor JSON file or inline object")
    p.add_argument("--csv", action=argparse.BooleanOptionalAction, default=S)

    p = sub.add_parser("spectrum", help="Fourier-Bohr grid scan and atom candidates")
    _add_common(p)
    p.add_argument("--in", dest="in", type=_json_arg, default=S)
    p.add_argument("--grid", type=int, default=S)
    p.add_argument("--Ts", type=_ints, default=S)
    p.add_argument("--threshold", type=float, default=S)

    p = sub.add_parser("autocorr", help="windowed auto-correlation profile")
    _add_common(p)
    p.add_argument("--in", dest="in", type=_json_arg, default=S)
    p.add_argument("--Ns", type=_ints, default=S)
    p.add_argument("--tau-max", dest="tau_max", type=int, default=S)

    p = sub.add_parser("density", help="bad-lag density")
    _add_common(p)
    p.add_argument("--in", dest="in", type=_json_arg, default=S)
    p.add_argument("--epsilon", type=float, default=S)
    p.add_argument("--N-lo", dest="N_lo", type=int, default=S)
    p.add_argument("--N-hi", dest="N_hi", type=int, default=S)
    p.add_argument("--T", type=int, default=S)
    p.add_argument("--ratio", type=float, default=S)
    p.add_argument("--dense", action=argparse.BooleanOptionalAction, default=S)

    p = sub.add_parser("cancel", help="running averages against a stationary process")
    _add_common(p)
    p.add_argument("--x", type=_json_arg, default=S)
    p.add_argument("--process", type=_json_arg, default=S, help="process spec JSON file or inline object")
    p.add_argument("--seeds", type=_int_or_ints, default=S, help="seed list, or a count")
    p.add_argument("--Ts", type=_ints, default=S)
    p.add_argument("--tolerance", type=float, default=S)

    p = sub.add_parser("torus", help="Weyl sums and discrepancy of (n beta, sqrt(n) alpha)")
    _add_common(p)
    p.add_argument("--beta", type=_real_arg, default=S)
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--m1", type=_int_or_ints, default=S)
    p.add_argument("--m2", type=_int_or_ints, default=S)
    p.add_argument("--N", type=int, default=S)
    p.add_argument("--box", type=json.loads, default=S, help="[[a1, b1], [a2, b2]]")

    p = sub.add_parser("symbolic", help="covers and genericity checks")
    _add_common(p)
    p.add_argument("--op", default=S)
    p.add_argument("--u", default=S, help="periodic point of the exact oracle")
    p.add_argument("--chacon", type=int, default=S, help="Chacon block level of the empirical oracle")
    p.add_argument("--word", default=S)
    p.add_argument("--words", type=lambda s: s.split(","), default=S)
    p.add_argument("--epsilon", type=float, default=S)
    p.add_argument("--M", type=int, default=S)
    p.add_argument("--N", type=int, default=S)
    p.add_argument("--depth", type=int, default=S)

    p = sub.add_parser("hochman", help="constructed point and paired orbital measures")
    _add_common(p)
    p.add_argument("--covers", default=S, help="covers JSON (with oracle and Ms)")
    p.add_argument("--u", default=S, help="periodic point for the built-in instance")
    p.add_argument("--scales", type=int, default=S)
    p.add_argument("--growth", type=float, default=S)
    p.add_argument("--T", type=int, default=S)
    p.add_argument("--mode", choices=["simple", "split"], default=S)
    p.add_argument("--k", type=int, default=S)
    p.add_argument("--y-shifts", dest="y_shifts", type=_ints, default=S)

    p = sub.add_parser("report", help="consolidate run directories")
    _add_common(p)
    p.add_argument("--dirs", nargs="*", default=S)
    return ap


COMMON = ("config", "out", "seed", "threads", "command")


def resolve(ns: argparse.Namespace) -> dict:
    """Merge the config file with flags (flags win) into a resolved config."""
    cfg: dict[str, Any] = {"command": ns.command, "params": {}}
    if getattr(ns, "config", None):
        try:
            doc = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"not valid JSON: {exc}") from exc
        if "manifest_version" in doc:
            doc = doc["config"]
        if not isinstance(doc, dict):
            raise ConfigError("config", "config must be a JSON object")
        if doc.get("command", ns.command) != ns.command:
            raise ConfigError("command", f"config is for {doc['command']!r}, not {ns.command!r}")
        cfg["params"] = dict(doc.get("params", {}))
        for key in ("out", "seed", "threads"):
            if key in doc:
                cfg[key] = doc[key]
    for key, val in vars(ns).items():
        if key in COMMON:
            if key in ("out", "seed", "threads"):
                cfg[key] = val
            continue
        cfg["params"][key] = val
    if "out" not in cfg or cfg["out"] is None:
        raise ConfigError("out", "an output directory is required")
    cfg.setdefault("seed", None)
    cfg.setdefault("threads", None)
    # a top-level seed feeds the command's own seed field unless that is set
    seed_field = {"gen": "seed", "cancel": "base_seed"}.get(ns.command)
    if cfg["seed"] is not None and seed_field and seed_field not in cfg["params"]:
        cfg["params"][seed_field] = cfg["seed"]
    cfg["params"] = validate(ns.command, cfg["params"])
    return cfg


# ---------------------------------------------------------------------------
# helpers

def _real_value(v):
    if isinstance(v, str):
        return GOLDEN if v == "golden" else Fraction(v)
    return float(v)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def load_sequence(ref) -> ComplexSeq:
    """A sequence from a gen run directory, a ``.bin`` file, or a descriptor (file or object)."""
    if isinstance(ref, dict):
        return generate(ref)
    path = Path(ref)
    if path.is_dir():
        path = path / "seq.bin"
    if path.suffix == ".bin":
        return load_binary(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if "descriptor" in doc:
        doc = doc["descriptor"]
    return generate(doc)


def _load_json_ref(ref):
    return ref if isinstance(ref, dict) else json.loads(Path(ref).read_text(encoding="utf-8"))


def _abs_ref(ref):
    # record file references absolutely so a manifest can be replayed from anywhere
    return ref if isinstance(ref, dict) else str(Path(ref).resolve())


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, allow_nan=True) + "\n", encoding="utf-8")


def _summary(out: Path, criterion: str, value, family=None, epsilon=None, detail=None) -> dict:
    doc = {"criterion": criterion, "value": value, "family": family, "epsilon": epsilon, "detail": detail}
    _write_json(out / "summary.json", doc)
    return doc


# ---------------------------------------------------------------------------
# commands

def cmd_gen(p: dict, out: Path) -> dict:
    if "descriptor" in p:
        seq = generate(_load_json_ref(p["descriptor"]))
    else:
        fam = p.get("family")
        if fam is None:
            raise ConfigError("params.family", "'family' is a required property")
        if fam == "symbolic":
            if "u" not in p or "substitution" not in p:
                raise ConfigError("params.substitution" if "u" in p else "params.u",
                                  "symbolic family needs 'u' and 'substitution'")
            src = {"kind": "periodic", "u": p["u"], "scales": p.get("scales", 12),
                   "growth": p["growth"], "mode": p["mode"], "substitution": p["substitution"]}
            desc = GeneratorDescriptor("symbolic", p["T"], source=src)
        else:
            desc = GeneratorDescriptor(fam, p["T"], alpha=_real_value(p["alpha"]), c=complex(*p["c"]),
                                       seed=p["seed"] if fam == "iid" else None,
                                       dist=p["dist"] if fam == "iid" else None)
        seq = generate(desc)
    dump_binary(seq, out / "seq.bin")
    if p.get("csv", seq.T <= CSV_LIMIT):
        write_csv(seq, out / "seq.csv")
    return _summary(out, "cesaro_second_moment", cesaro_second_moment(seq), seq.meta.family,
                    detail={"T": seq.T, "bound": seq.bound})


def cmd_spectrum(p: dict, out: Path) -> dict:
    seq = load_sequence(p["in"])
    Ts = p.get("Ts") or [seq.T]
    scan = fb_scan(seq, p["grid"], Ts)
    scan.to_csv(out / "spectrum.csv")
    atoms = find_atoms(seq, p["grid"], Ts, p["threshold"]) if p["atoms"] else []
    atoms_json(atoms, out / "atoms.json", {"grid": p["grid"], "Ts": list(scan.Ts), "threshold": p["threshold"]})
    return _summary(out, "max|S_T|", scan.max_magnitude(), seq.meta.family,
                    detail={"T": scan.Ts[-1], "atoms": [a.angle for a in atoms]})


def cmd_autocorr(p: dict, out: Path) -> dict:
    seq = load_sequence(p["in"])
    prof = autocorr_profile(seq, p["Ns"], p["tau_max"])
    prof.to_csv(out / "autocorr.csv")
    top = float(np.abs(prof.values[-1, 1:]).max()) if prof.tau_max else math.nan
    return _summary(out, "max_{tau>0}|rho_N(tau)| at largest N", top, seq.meta.family,
                    detail={"N": prof.Ns[-1], "tau_max": prof.tau_max})


def cmd_density(p: dict, out: Path) -> dict:
    seq = load_sequence(p["in"])
    if p["N_hi"] < p["N_lo"]:
        raise ConfigError("params.N_hi", "N_hi must be >= N_lo")
    if p["dense"]:
        if p["N_hi"] > 10_000:
            raise AutocorrError("dense mode is limited to N_hi <= 10000")
        Ns = list(range(p["N_lo"], p["N_hi"] + 1))
        need = p["N_hi"] + p["T"]
        if seq.T < need:
            raise AutocorrError(f"insufficient prefix: need length {need}, have {seq.T}")
        prof = _dense_profile(seq.values, Ns, p["T"], seq.meta.to_dict())
    else:
        Ns = geometric_windows(p["N_lo"], p["N_hi"], p["ratio"])
        prof = autocorr_profile(seq, Ns, p["T"])
    rep = density_bad_tau(prof, p["epsilon"], p["N_lo"], p["N_hi"], p["T"])
    rep.save(out / "density.json")
    with (out / "density.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "bad_count", "density", "max_abs_rho"])
        for N in rep.windows:
            one = density_bad_tau(prof, p["epsilon"], N, N, p["T"])
            w.writerow([N, one.bad_count, _fmt(one.density), _fmt(float(np.abs(prof.row(N)[1:]).max()))])
    return _summary(out, "density_bad_tau", rep.density, seq.meta.family, p["epsilon"],
                    detail={"windows": list(rep.windows), "T": rep.T})


def cmd_cancel(p: dict, out: Path) -> dict:
    seq = load_sequence(p["x"])
    spec = ProcessSpec.from_json(_load_json_ref(p["process"]))
    seeds = p["seeds"]
    if isinstance(seeds, int):
        seeds = [p["base_seed"] + i for i in range(seeds)]
    if len(seeds) < 2:
        raise ProcessError("the l2 estimate needs at least two seeds")
    run = pointwise_cancel(seq, spec, seeds, p["Ts"], p["tolerance"])
    run.to_csv(out / "cancel.csv")
    _write_json(out / "cancel.json", run.summary())
    with (out / "l2.csv").open("w", encoding="utf-8") as fh:
        fh.write("T,l2\n")
        for T, v in zip(run.Ts, run.l2_estimate):
            fh.write(f"{T},{_fmt(v)}\n")
    return _summary(out, "l2 at max T", float(run.l2_estimate[-1]), seq.meta.family,
                    detail={"process": spec.kind, "T": run.Ts[-1],
                            "non_cancelling": int(run.non_cancelling.sum()), "bound_ok": run.bound_ok()})


def cmd_torus(p: dict, out: Path) -> dict:
    beta = _real_value(p["beta"])
    m1s = p["m1"] if isinstance(p["m1"], list) else [p["m1"]]
    m2s = p["m2"] if isinstance(p["m2"], list) else [p["m2"]]
    rows = []
    with (out / "torus.csv").open("w", encoding="utf-8") as fh:
        fh.write("m1,m2,N,re,im,abs\n")
        for a in m1s:
            for b in m2s:
                s = torus_weyl(beta, p["alpha"], a, b, p["N"])
                rows.append((a, b, abs(s)))
                fh.write(f"{a},{b},{p['N']},{_fmt(s.real)},{_fmt(s.imag)},{_fmt(abs(s))}\n")
    box = tuple(tuple(x) for x in p["box"])
    d = discrepancy_2torus(beta, p["alpha"], p["N"], box)
    nonzero = [r[2] for r in rows if (r[0], r[1]) != (0, 0)]
    doc = {"N": p["N"], "box": p["box"], "discrepancy": d.value, "fraction": d.fraction, "area": d.area,
           "decays": d.decays, "max_nonzero_abs": max(nonzero) if nonzero else None}
    _write_json(out / "torus.json", doc)
    return _summary(out, "max nonzero-frequency |weyl|", doc["max_nonzero_abs"], "torus",
                    detail={"discrepancy": d.value, "decays": d.decays})


def _oracle(p: dict):
    if "u" in p:
        return PeriodicOracle(p["u"])
    if "chacon" in p:
        return chacon_oracle(p["chacon"])
    raise ConfigError("params.u", "an oracle is needed: give 'u' or 'chacon'")


def _need(p: dict, key: str):
    if key not in p:
        raise ConfigError(f"params.{key}", f"'{key}' is required for op {p['op']!r}")
    return p[key]


def cmd_symbolic(p: dict, out: Path) -> dict:
    op, eps = p["op"], p["epsilon"]
    if op == "tall_cover":
        u = _need(p, "u")
        covers = periodic_tall_cover(u, len(u), eps, _need(p, "N"), p["depth"])
        oracle = PeriodicOracle(u)
        save_covers(covers, oracle, out / "covers.json")
        checks = [is_cover(c.words, oracle, eps, c.N) for c in covers]
        doc = {"lengths": [c.lengths() for c in covers], "ok": all(c.ok for c in checks),
               "masses": [c.mass for c in checks]}
        value = float(all(c.ok for c in checks))
    elif op == "cover":
        oracle = _oracle(p)
        chk = is_cover(_need(p, "words"), oracle, eps, _need(p, "N"))
        doc = {"ok": chk.ok, "mass": chk.mass, "violations": list(chk.violations)}
        value = float(chk.ok)
    else:
        oracle = _oracle(p)
        word = Word.from_text(_need(p, "word"), oracle.alphabet)
        if op == "generic":
            r = is_eps_generic(word, oracle, eps)
            doc = {"ok": r.ok, "offender": r.offender, "gap": r.gap}
        elif op == "strong":
            r = is_strongly_generic(word, oracle, eps, _need(p, "M"))
            doc = {"ok": r.ok, "fraction": r.fraction, "good": r.good, "windows": r.windows}
        else:
            doc = {"ok": lemma10_check(word, oracle, eps, _need(p, "M"))}
        value = float(doc["ok"])
    doc["op"] = op
    _write_json(out / "symbolic.json", doc)
    return _summary(out, f"symbolic {op}", value, "symbolic", eps, detail=doc)


def cmd_hochman(p: dict, out: Path) -> dict:
    if "covers" in p:
        covers, oracle, Ms = load_covers(p["covers"])
        if p["mode"] == "split" and Ms is None:
            raise ConfigError("params.covers", "the split construction needs 'Ms' in the covers file")
    else:
        inst = periodic_hochman_instance(p.get("u", "ab"), p["scales"], p["growth"])
        covers, oracle, Ms = inst.covers, inst.oracle, inst.Ms
        save_covers(covers, oracle, out / "covers.json", Ms)
    k, T = p["k"], p["T"]
    if p["mode"] == "split":
        pt = build_hochman_point(covers, Ms, T + k - 1, oracle)
    else:
        pt = build_simple_point(covers, T + k - 1, oracle)
    write_word(pt.word.prefix(T), out / "point.txt")
    if not isinstance(oracle, PeriodicOracle):
        return _summary(out, "hochman", None, "symbolic", detail={"T": T, "note": "no typical points"})
    ys = typical_points(oracle, len(pt.word))
    shifts = p.get("y_shifts", list(range(len(ys))))
    rows = []
    with (out / "orbital.csv").open("w", encoding="utf-8") as fh:
        fh.write("y_shift,block,family,stop_time,diagonal,shifted_diagonal\n")
        for s in shifts:
            y = ys[s % len(ys)]
            blocks = [n for n in aligned_blocks(pt.layout, y) if pt.layout.end_time(n) <= T]
            if not blocks:
                continue
            res = pair_orbital_measures(pt.word, y, pt.stop_times_A(blocks), pt.stop_times_B(blocks), k,
                                        layout=pt.layout, blocks=blocks)
            for fam, ms in (("A", res.family_A), ("B", res.family_B)):
                for n, m in zip(blocks, ms):
                    fh.write(f"{s},{n},{fam},{m.horizon},{_fmt(m.diagonal_mass())},"
                             f"{_fmt(m.shifted_diagonal_mass())}\n")
            res.family_A[-1].to_csv(out / f"orbital_A_y{s}.csv")
            res.family_B[-1].to_csv(out / f"orbital_B_y{s}.csv")
            rows.append({"y_shift": s, "block": blocks[-1],
                         "A_diagonal": res.family_A[-1].diagonal_mass(),
                         "B_diagonal": res.family_B[-1].diagonal_mass(),
                         "B_shifted": res.family_B[-1].shifted_diagonal_mass()})
    _write_json(out / "hochman.json", {"mode": p["mode"], "T": T, "k": k, "results": rows})
    first = rows[0] if rows else {}
    return _summary(out, "diagonal masses (A, B, B shifted)", first.get("B_diagonal"), "symbolic",
                    detail=first)


def cmd_report(p: dict, out: Path) -> dict:
    rows = []
    for d in p["dirs"]:
        d = Path(d)
        man, summ = d / "manifest.json", d / "summary.json"
        if not man.is_file() or not summ.is_file():
            rows.append({"dir": str(d), "command": None, "family": None, "criterion": None,
                         "epsilon": None, "value": None, "flag": "missing manifest"})
            continue
        m = json.loads(man.read_text(encoding="utf-8"))
        s = json.loads(summ.read_text(encoding="utf-8"))
        rows.append({"dir": str(d), "command": m["config"]["command"], "family": s.get("family"),
                     "criterion": s.get("criterion"), "epsilon": s.get("epsilon"),
                     "value": s.get("value"), "flag": ""})
    rows.sort(key=lambda r: (r["epsilon"] is None, r["epsilon"] if r["epsilon"] is not None else 0.0,
                             r["command"] or "", r["dir"]))
    cols = ["dir", "command", "family", "criterion", "epsilon", "value", "flag"]
    with (out / "report.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow(["" if r[c] is None else (_fmt(r[c]) if isinstance(r[c], float) else r[c]) for c in cols])
    _write_json(out / "report.json", rows)
    for r in rows:
        print("\t".join("" if r[c] is None else str(r[c]) for c in cols))
    return {"criterion": "report", "value": len(rows), "family": None, "epsilon": None, "detail": None}


HANDLERS = {"gen": cmd_gen, "spectrum": cmd_spectrum, "autocorr": cmd_autocorr, "density": cmd_density,
            "cancel": cmd_cancel, "torus": cmd_torus, "symbolic": cmd_symbolic, "hochman": cmd_hochman,
            "report": cmd_report}

# path-valued parameters recorded absolutely in the manifest
_REF_KEYS = {"in", "x", "process", "descriptor", "covers"}


def run(cfg: dict) -> dict:
    out = Path(cfg["out"])
    if out.exists():
        raise FileExistsError(f"output directory {out} already exists")
    params = {k: (_abs_ref(v) if k in _REF_KEYS else v) for k, v in cfg["params"].items()}
    if cfg["command"] == "report":
        params["dirs"] = [str(Path(d).resolve()) for d in params["dirs"]]
    cfg = {**cfg, "params": params}
    out.mkdir(parents=True)
    threads = cfg.get("threads") or os.cpu_count() or 1
    try:
        with sfft.set_workers(threads):
            summary = HANDLERS[cfg["command"]](params, out)
    except Exception as exc:
        _write_json(out / "error.json", {"status": "error", "type": type(exc).__name__, "message": str(exc),
                                         "config": cfg})
        raise
    manifest = {"manifest_version": 1, "tool": "cancellation", "version": __version__,
                "config": {**cfg, "out": str(out)}}
    _write_json(out / "manifest.json", manifest)
    return summary


def _fail(kind: str, code: int, message: str, path: str | None = None) -> int:
    rec = {"status": "error", "kind": kind, "exit_code": code, "message": message}
    if path is not None:
        rec["path"] = path
    print(json.dumps(rec), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SCHEMA if exc.code else 0
    try:
        cfg = resolve(ns)
        summary = run(cfg)
    except ConfigError as exc:
        return _fail("schema", EXIT_SCHEMA, str(exc), exc.path)
    except (GeneratorError, SpectralError, AutocorrError, ProcessError, SymbolicError) as exc:
        return _fail("precondition", EXIT_PRECONDITION, str(exc))
    except (OSError, json.JSONDecodeError) as exc:
        return _fail("io", EXIT_IO, str(exc))
    print(json.dumps({"status": "ok", "out": str(cfg["out"]), "summary": summary}, allow_nan=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
