"""Batch driver: ``dirac-green <command> --config <path> [--out DIR] [--threads N] [key=value ...]``.

Exit status is 0 on success, 1 for configuration problems (bad or missing
config, unwritable output directory) and 2 when the computation fails or a
verification does not pass.  Computation errors are also written to the
command's JSON file.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__, _backend
from .certify import EntrySelector, Thresholds, Window, density_profile, oracle_suite, scan_window
from .config import apply_overrides, build_spec, config_hash, load_config, resolve_threads, validate
from .errors import ConfigError, DiracGreenError
from .green import SeedStrategy, diagonal_green
from .oracle import embedded_eigenvalue_demo

log = logging.getLogger("dirac_green")

COMMANDS = ("green", "scan", "density", "verify", "eigs")
EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2

_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
           "info": logging.INFO, "debug": logging.DEBUG}

PLOT_SCRIPT = '''"""Plot sup |G| per eps and |G|(x) per eps from scan.csv (needs matplotlib)."""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "scan.csv"
rows = defaultdict(list)
with open(path) as fh:
    reader = csv.DictReader(line for line in fh if not line.startswith("#"))
    for r in reader:
        if r["status"] == "ok":
            rows[float(r["eps"])].append((float(r["x"]), float(r["abs_g"])))
fig, ax = plt.subplots()
for eps in sorted(rows, reverse=True):
    xs, ys = zip(*rows[eps])
    ax.semilogy(xs, ys, label=f"eps={eps:g}")
ax.set_xlabel("x")
ax.set_ylabel("|G(x + i eps)|")
ax.legend()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''


def _setup_logging():
    level = _LEVELS.get(os.environ.get("DIRAC_GREEN_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _fmt(v) -> str:
    v = float(v)
    return format(v, ".17g") if math.isfinite(v) else "nan"


def _clean(obj):
    """JSON-safe copy: non-finite floats become ``null``, numpy scalars become Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def write_json(path, payload):
    text = json.dumps(_clean(payload), indent=2, allow_nan=False, ensure_ascii=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def write_csv(path, digest, header, rows):
    buf = io.StringIO()
    buf.write(f"# config_sha256={digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([c if isinstance(c, str) else _fmt(c) for c in r])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _check_out_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
        with tempfile.TemporaryFile(dir=path):
            pass
    except OSError as exc:
        raise ConfigError(f"output directory {path!r} is not writable: {exc.strerror or exc}") from exc


class Run:
    """One CLI invocation: validated config, spec, hash and output location."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.spec = build_spec(cfg)
        self.digest = config_hash(cfg)
        self.out = cfg["output"]["dir"]
        self.threads = resolve_threads(cfg["threads"])
        self.formats = cfg["output"]["formats"]

    def path(self, name):
        return os.path.join(self.out, name)

    def stamp(self, command) -> dict:
        return {"command": command, "version": __version__, "config_sha256": self.digest}

    def green_opts(self) -> dict:
        g = self.cfg["green"]
        opts = {"tol": g["tol"], "max_depth": g["max_depth"], "use_bound": g["use_bound"],
                "seed": SeedStrategy(g["seed"])}
        if g["backend"] is not None:
            opts["backend"] = _backend.get_backend(g["backend"])
        return opts

    def echo(self) -> dict:
        c = dict(self.cfg)
        c.pop("threads", None)
        c["output"] = {k: v for k, v in c["output"].items() if k != "dir"}
        return c


def cmd_green(run: Run) -> int:
    g = run.cfg["green"]
    lam = complex(*g["lambda"])
    r = diagonal_green(run.spec, lam, g["site"], g["spin"], **run.green_opts())
    payload = run.stamp("green")
    payload.update(ok=True, **{"lambda": [lam.real, lam.imag]}, site=g["site"], spin=g["spin"])
    payload.update(r.to_dict())
    write_json(run.path("green.json"), payload)
    log.info("green: %r (depth %d, %s)", r.value, r.depth, r.stop_reason)
    return EXIT_OK


def cmd_scan(run: Run) -> int:
    sc = run.cfg["scan"]
    window = Window(sc["x1"], sc["x2"], sc["x_grid"], tuple(sc["eps_grid"]))
    report = scan_window(run.spec, window, EntrySelector(sc["site"], sc["spin"]),
                         threads=run.threads, thresholds=Thresholds(**sc["thresholds"]),
                         green_opts=run.green_opts())
    rows = []
    for i, eps in enumerate(window.eps_grid):
        for j, x in enumerate(report.xs):
            v = report.values[i, j]
            rows.append((x, eps, abs(v), v.imag, report.dist_to_i[i, j], str(report.status[i, j])))
    header = ["x", "eps", "abs_g", "im_g", "dist_to_i", "status"]
    if run.formats in ("csv", "both"):
        write_csv(run.path("scan.csv"), run.digest, header, rows)
    if run.formats in ("json", "both"):
        write_json(run.path("scan.json"), {**run.stamp("scan"), "columns": header,
                                           "rows": [list(r) for r in rows]})
    meta = run.stamp("scan")
    meta.update(report.to_meta())
    meta["config"] = run.echo()
    write_json(run.path("scan_meta.json"), meta)
    if sc["plot_script"]:
        with open(run.path("plot_scan.py"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(PLOT_SCRIPT)
    log.info("scan verdict %s (exponent %.4g)", report.verdict, report.growth_exponent)
    return EXIT_OK


def cmd_density(run: Run) -> int:
    d = run.cfg["density"]
    xs = np.linspace(d["x1"], d["x2"], d["x_grid"])
    table = density_profile(run.spec, xs, d["eps"], d["site"], threads=run.threads,
                            green_opts=run.green_opts())
    header = ["x", "rho_up", "rho_down", "rho_total"]
    if run.formats in ("csv", "both"):
        write_csv(run.path("density.csv"), run.digest, header, table.tolist())
    if run.formats in ("json", "both"):
        write_json(run.path("density.json"), {**run.stamp("density"), "eps": d["eps"],
                                              "columns": header, "rows": table.tolist()})
    return EXIT_OK


def cmd_verify(run: Run) -> int:
    v = run.cfg["verify"]
    report = oracle_suite(v["cases"], seed=run.cfg["rng_seed"], N=v["N"], tol=v["tol"],
                          n_energies=v["energies"], imag=tuple(v["imag"]), threads=run.threads,
                          green_opts=run.green_opts())
    payload = run.stamp("verify")
    payload.update(report.to_dict())
    write_json(run.path("verify.json"), payload)
    log.info("verify: max error %.3e over %d comparisons", report.max_error, len(report.rows))
    return EXIT_OK if report.passed else EXIT_COMPUTE


def cmd_eigs(run: Run) -> int:
    e = run.cfg["eigs"]
    mass = run.spec.mass if e["mass"] is None else e["mass"]
    demo = embedded_eigenvalue_demo(e["n0"], mass, tol=e["tol"])
    payload = run.stamp("eigs")
    payload.update(demo.to_dict())
    write_json(run.path("eigs.json"), payload)
    return EXIT_OK if demo.passed else EXIT_COMPUTE


HANDLERS = {"green": cmd_green, "scan": cmd_scan, "density": cmd_density,
            "verify": cmd_verify, "eigs": cmd_eigs}
_ERROR_FILE = {"green": "green.json", "verify": "verify.json", "eigs": "eigs.json"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dirac-green", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    p.add_argument("--threads", type=int, default=None, help="worker threads, 0 = one per CPU")
    p.add_argument("overrides", nargs="*", metavar="key=value",
                   help="dotted config overrides, e.g. spec.mass=1")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def prepare(args) -> Run:
    cfg = apply_overrides(load_config(args.config), args.overrides)
    if args.out is not None:
        cfg["output"]["dir"] = args.out
    if args.threads is not None:
        cfg["threads"] = args.threads
    cfg = validate(cfg)
    _check_out_dir(cfg["output"]["dir"])
    return Run(cfg)


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_intermixed_args(argv)
    try:
        run = prepare(args)
    except ConfigError as exc:
        print(f"dirac-green: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return HANDLERS[args.command](run)
    except (DiracGreenError, ValueError) as exc:
        log.error("%s failed: %s: %s", args.command, type(exc).__name__, exc)
        payload = run.stamp(args.command)
        payload.update(ok=False, error={"type": type(exc).__name__, "message": str(exc)})
        write_json(run.path(_ERROR_FILE.get(args.command, "error.json")), payload)
        return EXIT_COMPUTE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
