"""Potential sequences over the integer lattice.

Every sequence is a total function on Z, evaluated on integer numpy arrays.
Named families are closed-form (or counter-hashed for the random one), so
evaluation is pure and thread-safe without a cache.  Shifts, reflections,
negation and complex conjugation are index/value maps layered on top of a
family by :class:`Sequence`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

__all__ = [
    "Family",
    "Zero",
    "Power",
    "Oscillating",
    "PeriodicDecay",
    "BumpTable",
    "IIDUniform",
    "Sequence",
    "PotentialPair",
    "ZERO",
    "family_from_dict",
]


def _decay(n, origin, power):
    return 1.0 / (np.abs(n - origin) + 1.0) ** power


class Family:
    """Base class for named families.  Subclasses implement ``values``."""

    name = "family"

    def values(self, n: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def sup(self) -> float:
        raise NotImplementedError

    @property
    def is_real(self) -> bool:
        return True

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(Family):
    name = "zero"

    def values(self, n):
        return np.zeros(np.shape(n))

    @property
    def sup(self):
        return 0.0

    def to_dict(self):
        return {"family": "zero"}


@dataclass(frozen=True)
class Power(Family):
    """``amplitude / (|n - origin| + 1)^power``."""

    amplitude: complex = 1.0
    power: float = 1.0
    origin: int = 0
    name = "power"

    def values(self, n):
        return self.amplitude * _decay(np.asarray(n), self.origin, self.power)

    @property
    def sup(self):
        return abs(self.amplitude)

    @property
    def is_real(self):
        return complex(self.amplitude).imag == 0

    def to_dict(self):
        return {"family": "power", "amplitude": _num(self.amplitude),
                "power": self.power, "origin": self.origin}


@dataclass(frozen=True)
class Oscillating(Family):
    """``(-1)^n amplitude / (|n - origin| + 1)^power``; ``V - tau^2 V`` is summable for ``power > 0``."""

    amplitude: complex = 1.0
    power: float = 1.0
    origin: int = 0
    name = "oscillating"

    def values(self, n):
        n = np.asarray(n)
        sign = 1.0 - 2.0 * (n & 1)
        return sign * self.amplitude * _decay(n, self.origin, self.power)

    @property
    def sup(self):
        return abs(self.amplitude)

    @property
    def is_real(self):
        return complex(self.amplitude).imag == 0

    def to_dict(self):
        return {"family": "oscillating", "amplitude": _num(self.amplitude),
                "power": self.power, "origin": self.origin}


@dataclass(frozen=True)
class PeriodicDecay(Family):
    """``amplitude cos(2 pi n / period + phase) / (|n - origin| + 1)^power``."""

    amplitude: complex = 1.0
    power: float = 1.0
    period: int = 3
    phase: float = 0.0
    origin: int = 0
    name = "periodic_decay"

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("period must be >= 1")

    def values(self, n):
        n = np.asarray(n)
        mod = np.cos(2.0 * math.pi * (n % self.period) / self.period + self.phase)
        return self.amplitude * mod * _decay(n, self.origin, self.power)

    @property
    def sup(self):
        return abs(self.amplitude)

    @property
    def is_real(self):
        return complex(self.amplitude).imag == 0

    def to_dict(self):
        return {"family": "periodic_decay", "amplitude": _num(self.amplitude),
                "power": self.power, "period": self.period, "phase": self.phase,
                "origin": self.origin}


@dataclass(frozen=True)
class BumpTable(Family):
    """Explicit finite table ``{site: value}``, zero elsewhere."""

    table: tuple = ()
    name = "bump_table"

    def __init__(self, table: Mapping[int, complex] | tuple = ()):
        items = table.items() if isinstance(table, Mapping) else table
        object.__setattr__(self, "table", tuple(sorted((int(k), v) for k, v in items)))

    def values(self, n):
        n = np.asarray(n)
        cplx = not self.is_real
        out = np.zeros(n.shape, dtype=complex if cplx else float)
        for site, v in self.table:
            out[n == site] = v
        return out

    @property
    def sup(self):
        return max((abs(v) for _, v in self.table), default=0.0)

    @property
    def is_real(self):
        return all(complex(v).imag == 0 for _, v in self.table)

    def to_dict(self):
        return {"family": "bump_table",
                "table": {str(k): _num(v) for k, v in self.table}}


_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = (x + np.uint64(0x9E3779B97F4A7C15)) & _MASK64
        x = ((x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
        x = ((x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
        return x ^ (x >> np.uint64(31))


@dataclass(frozen=True)
class IIDUniform(Family):
    """Independent uniform values on ``[-amplitude, amplitude]``.

    Site ``n`` is hashed together with ``seed`` (splitmix64), so any window of
    the lattice can be evaluated in any order and gives the same numbers.
    Does not decay: exploratory only.
    """

    amplitude: float = 1.0
    seed: int = 0
    name = "iid_uniform"

    def values(self, n):
        n = np.asarray(n, dtype=np.int64)
        with np.errstate(over="ignore"):
            key = _splitmix64(np.full(n.shape, np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF)))
            h = _splitmix64(n.astype(np.uint64) ^ key)
        u = (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
        return self.amplitude * (2.0 * u - 1.0)

    @property
    def sup(self):
        return abs(self.amplitude)

    def to_dict(self):
        return {"family": "iid_uniform", "amplitude": self.amplitude, "seed": self.seed}


def _num(v):
    v = complex(v)
    return v.real if v.imag == 0 else [v.real, v.imag]


def _amp(v):
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    v = complex(v)
    return v.real if v.imag == 0 else v


def family_from_dict(d: Mapping | None) -> Family:
    """Build a family from its config mapping, e.g. ``{"family": "power", "amplitude": 2}``."""
    if d is None:
        return Zero()
    d = dict(d)
    kind = d.pop("family", "zero")
    if kind == "zero":
        return Zero()
    if kind == "power":
        return Power(_amp(d.get("amplitude", 1.0)), float(d.get("power", 1.0)), int(d.get("origin", 0)))
    if kind == "oscillating":
        return Oscillating(_amp(d.get("amplitude", 1.0)), float(d.get("power", 1.0)), int(d.get("origin", 0)))
    if kind == "periodic_decay":
        return PeriodicDecay(_amp(d.get("amplitude", 1.0)), float(d.get("power", 1.0)),
                             int(d.get("period", 3)), float(d.get("phase", 0.0)),
                             int(d.get("origin", 0)))
    if kind == "bump_table":
        table = {int(k): _amp(v) for k, v in dict(d.get("table", {})).items()}
        return BumpTable(table)
    if kind == "iid_uniform":
        return IIDUniform(float(d.get("amplitude", 1.0)), int(d.get("seed", 0)))
    raise ValueError(f"unknown potential family {kind!r}")


@dataclass(frozen=True)
class Sequence:
    """``n -> scale * conj?(family(flip * n + offset))``.

    ``flip`` is +1 or -1.  Shifts and reflections compose by updating
    ``flip``/``offset`` so the family is always evaluated once per site.
    """

    family: Family = field(default_factory=Zero)
    flip: int = 1
    offset: int = 0
    scale: complex = 1.0
    conj: bool = False

    def __call__(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        v = self.family.values(self.flip * n + self.offset)
        if self.conj:
            v = np.conj(v)
        if self.scale != 1.0:
            v = self.scale * v
        return v

    def at(self, n: int) -> complex:
        v = self(np.array([n]))[0]
        return complex(v)

    def shifted(self, j: int) -> "Sequence":
        """``(tau^j s)(n) = s(n + j)``."""
        return replace(self, offset=self.offset + self.flip * j)

    def reflected(self) -> "Sequence":
        """``(S s)(n) = s(-n)``."""
        return replace(self, flip=-self.flip)

    def scaled(self, k: complex) -> "Sequence":
        k = complex(k)
        k = k.real if k.imag == 0 else k
        return replace(self, scale=self.scale * k)

    def conjugated(self) -> "Sequence":
        return replace(self, conj=not self.conj, scale=complex(self.scale).conjugate()
                       if complex(self.scale).imag else self.scale)

    @property
    def sup(self) -> float:
        return abs(self.scale) * self.family.sup

    @property
    def is_zero(self) -> bool:
        return isinstance(self.family, Zero) or self.scale == 0

    @property
    def is_real(self) -> bool:
        return self.family.is_real and complex(self.scale).imag == 0

    def to_dict(self) -> dict:
        d = self.family.to_dict()
        if (self.flip, self.offset, self.scale, self.conj) != (1, 0, 1.0, False):
            d["transform"] = {"flip": self.flip, "offset": self.offset,
                              "scale": _num(self.scale), "conj": self.conj}
        return d


ZERO = Sequence()


def _seq(x) -> Sequence:
    if x is None:
        return ZERO
    if isinstance(x, Sequence):
        return x
    if isinstance(x, Family):
        return Sequence(x)
    if isinstance(x, Mapping):
        return Sequence(family_from_dict(x))
    raise TypeError(f"cannot make a potential sequence from {type(x).__name__}")


@dataclass(frozen=True)
class PotentialPair:
    """Electric part ``(V1, V2)`` (real) and hopping part ``(W1, W2)`` (complex).

    In Jacobi mode only ``V1`` is read and plays the role of the scalar
    potential ``V``.
    """

    V1: Sequence = ZERO
    V2: Sequence = ZERO
    W1: Sequence = ZERO
    W2: Sequence = ZERO

    def __post_init__(self):
        for name in ("V1", "V2", "W1", "W2"):
            object.__setattr__(self, name, _seq(getattr(self, name)))
        for name in ("V1", "V2"):
            if not getattr(self, name).is_real:
                raise ValueError(f"{name} must be real-valued")

    def shifted(self, j: int) -> "PotentialPair":
        """``(tau^j V, tau^j W)``."""
        return PotentialPair(self.V1.shifted(j), self.V2.shifted(j),
                             self.W1.shifted(j), self.W2.shifted(j))

    def reflected(self) -> "PotentialPair":
        """``(S V, S W)`` componentwise."""
        return PotentialPair(self.V1.reflected(), self.V2.reflected(),
                             self.W1.reflected(), self.W2.reflected())

    def validity_violations(self, sites) -> np.ndarray:
        """Sites among ``sites`` where ``W1 = -1`` or ``W2 = 1``."""
        sites = np.asarray(sites, dtype=np.int64)
        bad = (np.abs(1.0 + self.W1(sites)) == 0) | (np.abs(1.0 - self.W2(sites)) == 0)
        return sites[bad]

    def is_valid(self, sites) -> bool:
        return self.validity_violations(sites).size == 0

    def to_dict(self) -> dict:
        return {k: getattr(self, k).to_dict() for k in ("V1", "V2", "W1", "W2")}
