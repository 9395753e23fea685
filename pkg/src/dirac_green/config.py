"""Run configuration: YAML file, dotted overrides, validation and hashing.

A config file is a YAML mapping with the sections below; every key is
optional and falls back to :data:`DEFAULTS`::

    spec:
      mass: 1.0
      lattice: half          # half | full
      start: 0               # first site of a half-line
      mode: dirac            # dirac | jacobi
      nu1: 1
      nu2: 1
      potential:
        V1: {family: oscillating, amplitude: 3.0, power: 1.0}
        W1: {family: power, amplitude: [0.3, 0.1]}
    green: {lambda: [0.0, 1.0], site: null, spin: down, tol: 1e-12}
    scan: {x1: 1.2, x2: 2.0, x_grid: 200, eps_grid: [1e-1, 1e-2, 1e-3, 1e-4]}
    output: {dir: out, formats: both}

Overrides are ``section.key=value`` tokens whose value is parsed as a YAML
scalar or flow collection, e.g. ``spec.mass=0`` or ``scan.eps_grid=[0.1,0.01]``.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import os

import yaml

from .errors import ConfigError
from .model import FullLine, HalfLine, OperatorSpec
from .potentials import PotentialPair, Sequence, family_from_dict

__all__ = ["DEFAULTS", "load_config", "apply_overrides", "validate", "config_hash",
           "build_spec", "resolve_threads"]

DEFAULTS = {
    "spec": {
        "mass": 0.0,
        "lattice": "half",
        "start": 0,
        "mode": "dirac",
        "nu1": 1,
        "nu2": 1,
        "potential": {},
    },
    "green": {
        "lambda": [0.0, 1.0],
        "site": None,
        "spin": "down",
        "tol": 1e-12,
        "max_depth": 1_000_000,
        "seed": "periodic",
        "use_bound": True,
        "backend": None,
    },
    "scan": {
        "x1": 1.2,
        "x2": 2.0,
        "x_grid": 200,
        "eps_grid": [1e-1, 1e-2, 1e-3, 1e-4],
        "site": None,
        "spin": "down",
        "thresholds": {"bounded_exponent": 0.1, "growth_exponent": 0.5, "ratio": 2.0},
        "plot_script": False,
    },
    "density": {
        "x1": -3.0,
        "x2": 3.0,
        "x_grid": 200,
        "eps": 1e-3,
        "site": None,
    },
    "verify": {
        "cases": 20,
        "N": 2000,
        "tol": 1e-6,
        "energies": 5,
        "imag": [0.3, 0.5, 1.0],
    },
    "eigs": {
        "n0": 3,
        "mass": None,
        "tol": 1e-8,
    },
    "output": {
        "dir": "out",
        "formats": "both",
    },
    "threads": 1,
    "rng_seed": 0,
}

# never part of the hash: they change where/how fast, not what is computed
_UNHASHED = (("threads",), ("output", "dir"))


def _merge(base: dict, extra: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and key != "potential":
            if not isinstance(val, dict):
                raise ConfigError(f"{where!r} must be a mapping")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path) -> dict:
    """Read a YAML config and merge it over :data:`DEFAULTS`.

    Raises
    ------
    ConfigError
        Unreadable file, invalid YAML or unknown keys.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    return _merge(DEFAULTS, raw)


def apply_overrides(cfg: dict, tokens) -> dict:
    """Apply ``a.b.c=value`` tokens; later tokens win.

    Keys must exist in :data:`DEFAULTS`, except below ``spec.potential``
    where components and family parameters are free-form.
    """
    cfg = copy.deepcopy(cfg)
    for tok in tokens or ():
        key, sep, text = tok.partition("=")
        parts = [p for p in key.strip().split(".") if p]
        if not sep or not parts:
            raise ConfigError(f"override {tok!r} is not of the form key=value")
        try:
            value = yaml.safe_load(text) if text.strip() else None
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse value in {tok!r}: {exc}") from exc
        node, ref = cfg, DEFAULTS
        for i, p in enumerate(parts[:-1]):
            if ref is not None:
                if not isinstance(ref, dict) or p not in ref:
                    raise ConfigError(f"unknown config key {'.'.join(parts[:i + 1])!r}")
                ref = None if p == "potential" else ref[p]
            if not isinstance(node.get(p), dict):
                node[p] = {}
            node = node[p]
        if ref is not None and (not isinstance(ref, dict) or parts[-1] not in ref):
            raise ConfigError(f"unknown config key {key.strip()!r}")
        node[parts[-1]] = value
    return cfg


def _float(x, name, *, positive=False):
    # PyYAML reads "1e-12" as a string
    try:
        v = float(x)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {x!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite")
    if positive and not v > 0:
        raise ConfigError(f"{name} must be > 0")
    return v


def _int(x, name, *, minimum=None):
    if isinstance(x, bool) or x is None:
        raise ConfigError(f"{name} must be an integer, got {x!r}")
    try:
        v = int(x)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {x!r}") from None
    if v != float(x):
        raise ConfigError(f"{name} must be an integer, got {x!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{name} must be >= {minimum}")
    return v


def _opt_int(x, name):
    return None if x is None else _int(x, name)


def _complex(x, name):
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(_float(x[0], name), _float(x[1], name))
    if isinstance(x, str):
        try:
            return complex(x.replace(" ", ""))
        except ValueError:
            raise ConfigError(f"{name} must be [re, im] or a complex literal") from None
    return complex(_float(x, name), 0.0)


def _spin(x, name):
    if x not in ("up", "down"):
        raise ConfigError(f"{name} must be 'up' or 'down'")
    return x


def _eps_grid(x, name):
    if not isinstance(x, (list, tuple)) or not x:
        raise ConfigError(f"{name} must be a non-empty list")
    eps = [_float(e, name, positive=True) for e in x]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError(f"{name} must be strictly decreasing")
    return eps


def validate(cfg: dict) -> dict:
    """Normalise types and check ranges; returns a new dict.

    Raises
    ------
    ConfigError
    """
    c = copy.deepcopy(cfg)
    s = c["spec"]
    s["mass"] = _float(s["mass"], "spec.mass")
    if s["mass"] < 0:
        raise ConfigError("spec.mass must be >= 0")
    if s["lattice"] not in ("half", "full"):
        raise ConfigError("spec.lattice must be 'half' or 'full'")
    if s["mode"] not in ("dirac", "jacobi"):
        raise ConfigError("spec.mode must be 'dirac' or 'jacobi'")
    s["start"] = _int(s["start"], "spec.start")
    s["nu1"] = _int(s["nu1"], "spec.nu1", minimum=1)
    s["nu2"] = _int(s["nu2"], "spec.nu2", minimum=1)
    if not isinstance(s["potential"], dict):
        raise ConfigError("spec.potential must be a mapping")
    for comp, fam in s["potential"].items():
        if comp not in ("V1", "V2", "W1", "W2", "V"):
            raise ConfigError(f"unknown potential component {comp!r}")
        if fam is not None and not isinstance(fam, dict):
            raise ConfigError(f"spec.potential.{comp} must be a mapping")

    g = c["green"]
    lam = _complex(g["lambda"], "green.lambda")
    if not lam.imag > 0:
        raise ConfigError("green.lambda needs a positive imaginary part")
    g["lambda"] = [lam.real, lam.imag]
    g["site"] = _opt_int(g["site"], "green.site")
    g["spin"] = _spin(g["spin"], "green.spin")
    g["tol"] = _float(g["tol"], "green.tol", positive=True)
    g["max_depth"] = _int(g["max_depth"], "green.max_depth", minimum=1)
    if g["seed"] not in ("periodic", "imaginary_unit"):
        raise ConfigError("green.seed must be 'periodic' or 'imaginary_unit'")
    g["use_bound"] = bool(g["use_bound"])
    if g["backend"] not in (None, "cython", "python"):
        raise ConfigError("green.backend must be null, 'cython' or 'python'")

    sc = c["scan"]
    sc["x1"], sc["x2"] = _float(sc["x1"], "scan.x1"), _float(sc["x2"], "scan.x2")
    if not sc["x1"] < sc["x2"]:
        raise ConfigError("scan.x1 must be < scan.x2")
    sc["x_grid"] = _int(sc["x_grid"], "scan.x_grid", minimum=1)
    sc["eps_grid"] = _eps_grid(sc["eps_grid"], "scan.eps_grid")
    sc["site"] = _opt_int(sc["site"], "scan.site")
    sc["spin"] = _spin(sc["spin"], "scan.spin")
    th = sc["thresholds"]
    if not isinstance(th, dict):
        raise ConfigError("scan.thresholds must be a mapping")
    full_th = dict(DEFAULTS["scan"]["thresholds"])
    for k, v in th.items():
        if k not in full_th:
            raise ConfigError(f"unknown key scan.thresholds.{k}")
        full_th[k] = _float(v, f"scan.thresholds.{k}", positive=True)
    sc["thresholds"] = full_th
    sc["plot_script"] = bool(sc["plot_script"])

    d = c["density"]
    d["x1"], d["x2"] = _float(d["x1"], "density.x1"), _float(d["x2"], "density.x2")
    if not d["x1"] < d["x2"]:
        raise ConfigError("density.x1 must be < density.x2")
    d["x_grid"] = _int(d["x_grid"], "density.x_grid", minimum=2)
    d["eps"] = _float(d["eps"], "density.eps", positive=True)
    d["site"] = _opt_int(d["site"], "density.site")

    v = c["verify"]
    v["cases"] = _int(v["cases"], "verify.cases", minimum=1)
    v["N"] = _int(v["N"], "verify.N", minimum=2)
    v["tol"] = _float(v["tol"], "verify.tol", positive=True)
    v["energies"] = _int(v["energies"], "verify.energies", minimum=1)
    if not isinstance(v["imag"], (list, tuple)) or not v["imag"]:
        raise ConfigError("verify.imag must be a non-empty list")
    v["imag"] = [_float(x, "verify.imag", positive=True) for x in v["imag"]]

    e = c["eigs"]
    e["n0"] = _int(e["n0"], "eigs.n0", minimum=1)
    e["mass"] = None if e["mass"] is None else _float(e["mass"], "eigs.mass")
    e["tol"] = _float(e["tol"], "eigs.tol", positive=True)

    o = c["output"]
    if not isinstance(o["dir"], str) or not o["dir"]:
        raise ConfigError("output.dir must be a non-empty string")
    if o["formats"] not in ("csv", "json", "both"):
        raise ConfigError("output.formats must be 'csv', 'json' or 'both'")

    c["threads"] = _int(c["threads"], "threads", minimum=0)
    c["rng_seed"] = _int(c["rng_seed"], "rng_seed", minimum=0)
    return c


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical JSON form, ignoring thread count and output directory."""
    c = copy.deepcopy(cfg)
    for path in _UNHASHED:
        node = c
        for p in path[:-1]:
            node = node.get(p, {})
        node.pop(path[-1], None)
    blob = json.dumps(c, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _component(fam, rng_seed):
    if fam is None:
        return Sequence()
    fam = dict(fam)
    if fam.get("family") == "iid_uniform" and "seed" not in fam:
        fam["seed"] = rng_seed
    try:
        return Sequence(family_from_dict(fam))
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad potential family {fam!r}: {exc}") from exc


def build_spec(cfg: dict) -> OperatorSpec:
    """:class:`OperatorSpec` from a validated config.

    ``potential.V`` is shorthand for ``V1 = V2 = V`` (and is the scalar
    potential in Jacobi mode); explicit ``V1``/``V2`` entries win.
    """
    s = cfg["spec"]
    pot = dict(s["potential"])
    seed = cfg.get("rng_seed", 0)
    shared = pot.pop("V", None)
    comps = {}
    for name in ("V1", "V2", "W1", "W2"):
        fam = pot.get(name, shared if name in ("V1", "V2") else None)
        comps[name] = _component(fam, seed)
    try:
        pair = PotentialPair(**comps)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    lattice = HalfLine(s["start"]) if s["lattice"] == "half" else FullLine()
    return OperatorSpec(mass=s["mass"], lattice=lattice, potential=pair, mode=s["mode"],
                        nu1=s["nu1"], nu2=s["nu2"])


def resolve_threads(n: int) -> int:
    """``0`` means one worker per available CPU."""
    if n == 0:
        return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity")
                   else (os.cpu_count() or 1))
    return n
