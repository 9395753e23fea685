"""Energy-window scans, spectral-density profiles and boundedness verdicts.

A scan evaluates one Green entry on a grid ``x + i eps`` with ``x`` inside an
energy window and ``eps`` decreasing to zero.  If ``S(eps) = sup_x |G|``
stays bounded as ``eps`` goes to zero, the spectrum in the window is
absolutely continuous; a finite grid can only give evidence for that, so the
verdict is a heuristic and every artifact says so.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DiracGreenError, InsufficientData
from .green import diagonal_green
from .halfplane import hyp_dist
from .model import FullLine, HalfLine, OperatorSpec, free_band_edges
from .oracle import finite_section_green
from .potentials import Oscillating, PotentialPair, Power, Sequence

log = logging.getLogger(__name__)

__all__ = [
    "Window",
    "EntrySelector",
    "Thresholds",
    "ScanReport",
    "scan_window",
    "density_profile",
    "boundedness_verdict",
    "fit_growth_exponent",
    "random_decaying_potential",
    "band_energies",
    "oracle_suite",
    "SuiteReport",
    "BOUNDED",
    "GROWTH",
    "INCONCLUSIVE",
]

BOUNDED = "BoundedEvidence"
GROWTH = "GrowthDetected"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Window:
    """Energy window ``(x1, x2)`` with ``x_grid`` interior points and an ``eps`` ladder."""

    x1: float
    x2: float
    x_grid: int
    eps_grid: tuple

    def __post_init__(self):
        if not self.x1 < self.x2:
            raise ValueError("window needs x1 < x2")
        if int(self.x_grid) < 1:
            raise ValueError("x_grid must be a positive integer")
        eps = tuple(float(e) for e in self.eps_grid)
        if not eps:
            raise ValueError("eps_grid must not be empty")
        if any(e <= 0 for e in eps):
            raise ValueError("every eps must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps_grid must be strictly decreasing")
        object.__setattr__(self, "eps_grid", eps)
        object.__setattr__(self, "x_grid", int(self.x_grid))

    @property
    def xs(self) -> np.ndarray:
        """Uniform grid on the open interval: endpoints excluded."""
        k = np.arange(1, self.x_grid + 1)
        return self.x1 + (self.x2 - self.x1) * k / (self.x_grid + 1)


@dataclass(frozen=True)
class EntrySelector:
    """Which diagonal resolvent entry a scan follows.

    ``site=None`` means the first site of a half-line (site 0 on the full line).
    """

    site: int | None = None
    spin: str = "down"

    def __post_init__(self):
        if self.spin not in ("up", "down"):
            raise ValueError(f"spin must be 'up' or 'down', got {self.spin!r}")


@dataclass(frozen=True)
class Thresholds:
    """Verdict thresholds (engineering choices, not derived quantities)."""

    bounded_exponent: float = 0.1
    growth_exponent: float = 0.5
    ratio: float = 2.0


@dataclass
class ScanReport:
    """Result of :func:`scan_window`.

    Arrays are indexed ``[eps_index, x_index]``; failed grid points hold
    ``nan`` and their exception name in ``status``.
    """

    window: Window
    xs: np.ndarray
    values: np.ndarray
    dist_to_i: np.ndarray
    status: np.ndarray
    depths: np.ndarray
    thresholds: Thresholds = field(default_factory=Thresholds)
    verdict: str = INCONCLUSIVE
    growth_exponent: float = float("nan")
    heuristic: bool = True

    @property
    def eps(self) -> tuple:
        return self.window.eps_grid

    @property
    def abs_g(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def complete(self) -> np.ndarray:
        """Per-eps flag: every grid point succeeded."""
        return np.all(self.status == "ok", axis=1)

    @property
    def sup(self) -> np.ndarray:
        """``S(eps)``: max of ``|G|`` over the successful points (``nan`` if none)."""
        out = np.full(len(self.eps), np.nan)
        for i in range(len(self.eps)):
            ok = self.status[i] == "ok"
            if np.any(ok):
                out[i] = float(np.max(self.abs_g[i][ok]))
        return out

    def levels(self, complete_only: bool = True) -> dict:
        """``{eps: S(eps)}`` over complete levels (or every level with data)."""
        s = self.sup
        keep = self.complete if complete_only else ~np.isnan(s)
        return {e: float(v) for e, v, k in zip(self.eps, s, keep) if k}

    @property
    def n_failed(self) -> int:
        return int(np.sum(self.status != "ok"))

    def to_meta(self) -> dict:
        s = self.sup
        return {
            "heuristic": self.heuristic,
            "verdict": self.verdict,
            "growth_exponent": _json_float(self.growth_exponent),
            "thresholds": {
                "bounded_exponent": self.thresholds.bounded_exponent,
                "growth_exponent": self.thresholds.growth_exponent,
                "ratio": self.thresholds.ratio,
            },
            "window": {"x1": self.window.x1, "x2": self.window.x2,
                       "x_grid": self.window.x_grid, "eps_grid": list(self.eps)},
            "sup_table": [
                {"eps": e, "sup_abs_g": _json_float(v), "complete": bool(c)}
                for e, v, c in zip(self.eps, s, self.complete)
            ],
            "failed_points": self.n_failed,
        }


def _json_float(v):
    v = float(v)
    return v if math.isfinite(v) else None


def fit_growth_exponent(levels: Mapping[float, float]) -> float:
    """Least-squares slope of ``log S(eps)`` against ``log(1/eps)``.

    Raises
    ------
    InsufficientData
        With fewer than three levels.
    """
    pts = [(float(e), float(s)) for e, s in levels.items()
           if s is not None and math.isfinite(float(s)) and float(s) > 0]
    if len(pts) < 3:
        raise InsufficientData(f"need at least 3 eps levels to fit, have {len(pts)}")
    x = np.log([1.0 / e for e, _ in pts])
    y = np.log([s for _, s in pts])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)


def boundedness_verdict(report, thresholds: Thresholds | None = None):
    """Verdict and fitted exponent from a report or an ``{eps: S}`` mapping.

    ``BoundedEvidence`` when the exponent is below ``bounded_exponent`` and
    ``S(eps_min) / S(eps_max) < ratio``; ``GrowthDetected`` when it exceeds
    ``growth_exponent``; otherwise ``Inconclusive``.  Only complete levels of
    a report enter the fit.

    Returns
    -------
    (str, float)
    """
    if isinstance(report, ScanReport):
        thresholds = thresholds or report.thresholds
        levels = report.levels(complete_only=True)
    else:
        levels = {float(e): s for e, s in dict(report).items()
                  if s is not None and math.isfinite(float(s))}
    thresholds = thresholds or Thresholds()
    slope = fit_growth_exponent(levels)
    eps = sorted(levels)
    ratio = levels[eps[0]] / levels[eps[-1]]
    if slope < thresholds.bounded_exponent and ratio < thresholds.ratio:
        return BOUNDED, slope
    if slope > thresholds.growth_exponent:
        return GROWTH, slope
    return INCONCLUSIVE, slope


def _map(fn, items, threads):
    if threads is None or threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def scan_window(spec: OperatorSpec, window: Window, selector: EntrySelector | None = None, *,
                threads: int = 1, thresholds: Thresholds | None = None,
                green_opts: dict | None = None) -> ScanReport:
    """Evaluate the selected Green entry on the whole ``(x, eps)`` grid.

    Grid points that raise a package error are recorded as holes (``nan``
    with the error name in ``status``); the verdict fit then uses the
    complete eps levels only.  Results do not depend on ``threads``.
    """
    selector = selector or EntrySelector()
    thresholds = thresholds or Thresholds()
    opts = dict(green_opts or {})
    xs = window.xs
    grid = [(i, j, complex(x, e)) for i, e in enumerate(window.eps_grid) for j, x in enumerate(xs)]

    def point(item):
        _, _, lam = item
        try:
            r = diagonal_green(spec, lam, selector.site, selector.spin, **opts)
            return r.value, hyp_dist(r.value, 1j), "ok", r.depth
        except DiracGreenError as exc:
            log.debug("grid point %s failed: %s", lam, exc)
            return complex("nan+nanj"), float("nan"), type(exc).__name__, -1

    results = _map(point, grid, threads)
    shape = (len(window.eps_grid), len(xs))
    values = np.full(shape, np.nan, dtype=complex)
    dist = np.full(shape, np.nan)
    status = np.empty(shape, dtype=object)
    depths = np.zeros(shape, dtype=np.int64)
    for (i, j, _), (v, d, st, dep) in zip(grid, results):
        values[i, j], dist[i, j], status[i, j], depths[i, j] = v, d, st, dep
    report = ScanReport(window, xs, values, dist, status, depths, thresholds)
    try:
        report.verdict, report.growth_exponent = boundedness_verdict(report)
    except InsufficientData as exc:
        log.warning("no verdict: %s", exc)
        report.verdict, report.growth_exponent = INCONCLUSIVE, float("nan")
    return report


def density_profile(spec: OperatorSpec, xs, eps: float, site: int | None = None, *,
                    threads: int = 1, green_opts: dict | None = None) -> np.ndarray:
    """Smoothed spectral densities ``Im G(x + i eps) / pi`` at one site.

    Returns
    -------
    ndarray of shape ``(len(xs), 4)``
        Columns ``x, rho_up, rho_down, rho_total``.  In Jacobi mode there is
        a single component, reported as ``rho_down`` with ``rho_up = 0``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    opts = dict(green_opts or {})
    xs = np.asarray(xs, dtype=float)

    def point(x):
        lam = complex(x, eps)
        down = diagonal_green(spec, lam, site, "down", **opts).value.imag / math.pi
        up = 0.0 if spec.is_jacobi else diagonal_green(spec, lam, site, "up", **opts).value.imag / math.pi
        return up, down

    rows = _map(point, list(xs), threads)
    out = np.empty((len(xs), 4))
    out[:, 0] = xs
    out[:, 1] = [r[0] for r in rows]
    out[:, 2] = [r[1] for r in rows]
    out[:, 3] = out[:, 1] + out[:, 2]
    return out


# ---------------------------------------------------------------------------
# recursion vs finite-section comparison suite

SUITE_IMAG = (0.3, 0.5, 1.0)
SUITE_ENTRIES = ("half_line", "full_line_down", "full_line_up")


def random_decaying_potential(rng: np.random.Generator, *, with_hopping: bool) -> PotentialPair:
    """Random ``V`` (amplitude up to 3) and optionally ``W`` (modulus up to 0.9), decay power in [1, 2]."""

    def fam(amp):
        kind = Power if rng.random() < 0.5 else Oscillating
        return kind(amp, float(rng.uniform(1.0, 2.0)), int(rng.integers(-3, 4)))

    V1 = Sequence(fam(float(rng.uniform(-3.0, 3.0))))
    V2 = Sequence(fam(float(rng.uniform(-3.0, 3.0))))
    if not with_hopping:
        return PotentialPair(V1, V2)
    W = []
    for _ in range(2):
        r, phase = rng.uniform(0.0, 0.9), rng.uniform(0.0, 2.0 * math.pi)
        W.append(Sequence(fam(complex(r * math.cos(phase), r * math.sin(phase)))))
    return PotentialPair(V1, V2, W[0], W[1])


def band_energies(m: float, count: int = 5) -> np.ndarray:
    """``count`` energies strictly inside the free bands, alternating positive and negative band."""
    _, _, lo, hi = free_band_edges(m)
    out = []
    for k in range(count):
        t = (k // 2 + 1) / (count // 2 + 2)
        x = lo + t * (hi - lo)
        out.append(x if k % 2 == 0 else -x)
    return np.sort(np.array(out))


@dataclass
class SuiteReport:
    """Per-comparison absolute errors of :func:`oracle_suite`."""

    rows: list
    tol: float
    N: int

    @property
    def max_error(self) -> float:
        errs = [r["abs_error"] for r in self.rows]
        return float(max(errs)) if errs else float("nan")

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(r["status"] == "ok" and r["abs_error"] <= self.tol
                                       for r in self.rows)

    def to_dict(self) -> dict:
        return {"N": self.N, "tol": self.tol, "cases": len({r["case"] for r in self.rows}),
                "comparisons": len(self.rows), "max_error": _json_float(self.max_error),
                "passed": self.passed,
                "rows": [dict(r, abs_error=_json_float(r["abs_error"])) for r in self.rows]}


def oracle_suite(n_cases: int = 20, *, seed: int = 0, N: int = 2000, tol: float = 1e-6,
                 n_energies: int = 5, imag=SUITE_IMAG, threads: int = 1,
                 green_opts: dict | None = None) -> SuiteReport:
    """Compare recursion values against finite-section solves on random specs.

    Case ``i`` uses mass ``i % 2`` and hopping terms when ``(i // 2) % 2 == 1``,
    so every mass/hopping combination occurs.  For each spectral parameter the
    suite checks the half-line value at site 0, the glued full-line spin-down
    entry at site 0 and the full-line spin-up entry (charge conjugation).
    """
    rng = np.random.default_rng(seed)
    opts = dict(green_opts or {})
    jobs = []
    for case in range(n_cases):
        m = float(case % 2)
        pot = random_decaying_potential(rng, with_hopping=(case // 2) % 2 == 1)
        for x in band_energies(m, n_energies):
            for eta in imag:
                lam = complex(float(x), float(eta))
                for kind in SUITE_ENTRIES:
                    jobs.append((case, m, pot, lam, kind))

    def run(job):
        case, m, pot, lam, kind = job
        lat = HalfLine(0) if kind == "half_line" else FullLine()
        spec = OperatorSpec(mass=m, lattice=lat, potential=pot)
        spin = "up" if kind == "full_line_up" else "down"
        row = {"case": case, "mass": m, "re_lambda": lam.real, "im_lambda": lam.imag,
               "entry": kind, "hopping": not pot.W1.is_zero}
        try:
            got = diagonal_green(spec, lam, 0, spin, **opts).value
            want = finite_section_green(spec, lam, N, (0, spin))
        except DiracGreenError as exc:
            row.update(status=type(exc).__name__, abs_error=float("inf"))
            return row
        row.update(status="ok", recursion=[got.real, got.imag], oracle=[want.real, want.imag],
                   abs_error=float(abs(got - want)))
        return row

    rows = _map(run, jobs, threads)
    return SuiteReport(rows, tol, N)
