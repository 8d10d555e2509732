"""Command-line interface: figure data, density tables, simulation and checks.

Exit codes: 0 success, 2 usage error, 3 failed check, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import closedform as cf
from .errormodel import ErrorModel
from .hermitian import DensityMatrix, HermitianMatrix, bloch_density
from .montecarlo import SimulationConfig, default_histogram_range, histogram, simulate_outcomes
from .numerics import find_peaks
from .stats import cdf_from_density, ks_critical, ks_statistic
from .verify import SUITES, run_suite

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CHECK = 3
EXIT_IO = 4

OUTPUT_DIR_ENV = "QMERR_OUTPUT_DIR"
FIGURE_POINTS = 801

FIGURES = {
    1: {"law": "uniform", "a": 1.0, "c": 3.0},
    2: {"law": "mixed", "a": 1.0, "c": 3.0, "eta": 1.0},
    3: {"law": "sd", "spectrum": [-1.0, 0.5, 1.0], "c": 2.0},
}


class UsageError(Exception):
    pass


def _count(text: str) -> int:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if v != int(v) or v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(v)


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def parse_density_matrix(text: str, dim: int) -> DensityMatrix:
    """``mixed``, ``bloch:x,y,z`` (2x2 only) or ``diag:p1,...,pN``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "mixed":
            return DensityMatrix.maximally_mixed(dim)
        if kind == "bloch":
            if dim != 2:
                raise UsageError("bloch density matrices need a 2x2 observable")
            return bloch_density(_float_list(rest))
        if kind == "diag":
            p = _float_list(rest)
            if len(p) != dim:
                raise UsageError(f"diag state needs {dim} weights, got {len(p)}")
            return DensityMatrix(np.diag(p))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    raise UsageError(f"unknown density matrix spec {text!r}")


def _output_path(path: str | None, default_name: str) -> Path | None:
    if path == "-":
        return None
    if path:
        return Path(path)
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / default_name


def _write(path: Path | None, text: str):
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _fmt(x: float) -> str:
    return repr(float(x))


def _csv_text(header: list[str], rows, meta: dict | None = None) -> str:
    buf = io.StringIO()
    if meta:
        for k, v in meta.items():
            buf.write(f"# {k}: {json.dumps(v) if not isinstance(v, str) else v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _sidecar(path: Path | None, fmt: str) -> Path | None:
    if path is None:
        return None
    return path.with_name(f"{path.stem}_peaks.{fmt}")


# --- density tables ---------------------------------------------------------

def density_for(params: dict):
    """Return (callable density, (lo, hi)) for a parameter dict."""
    law = params["law"]
    c = params["c"]
    if law == "uniform":
        a = params["a"]
        half = a + cf.WINDOW / math.sqrt(c)
        return (lambda x: cf.pdf2_uniform(x, a, c)), (-half, half)
    if law == "mixed":
        a, eta = params["a"], params["eta"]
        half = a + cf.WINDOW / math.sqrt(c)
        return (lambda x: cf.pdf2_mixed(x, a, c, eta)), (-half, half)
    if law == "sd":
        spec = cf.Spectrum(params["spectrum"])
        return (lambda x: cf.marginal_sd(x, spec, c)), cf.default_window(spec.values, c)
    raise UsageError(f"unknown law {law!r}")


def figure_data(k: int, points: int = FIGURE_POINTS):
    params = dict(FIGURES[k])
    f, (lo, hi) = density_for(params)
    grid = cf.tabulate(f, lo, hi, points)
    peaks = find_peaks(f, lo, hi, n_scan=4001)
    return params, grid, peaks


def _emit_density(params, grid, peaks, path, fmt, name):
    if fmt == "csv":
        _write(path, _csv_text(["x", "density"], zip(grid.grid, grid.values)))
        side = _csv_text(["peak_location", "peak_height"], peaks)
    else:
        _write(path, _json_text({
            "name": name, "parameters": params, "version": __version__,
            "x": grid.grid.tolist(), "density": grid.values.tolist()}))
        side = _json_text({"name": name, "parameters": params,
                           "peaks": [{"peak_location": x, "peak_height": y} for x, y in peaks]})
    side_path = _sidecar(path, fmt)
    if side_path is None:
        sys.stdout.write(side)
    else:
        _write(side_path, side)


def cmd_figure(args) -> int:
    k = int(args.command[-1])
    params, grid, peaks = figure_data(k)
    path = _output_path(args.output, f"figure{k}.{args.format}")
    _emit_density(params, grid, peaks, path, args.format, f"figure{k}")
    for x, y in peaks:
        print(f"peak at {x:+.4f} (height {y:.4f})", file=sys.stderr)
    return EXIT_OK


def cmd_pdf(args) -> int:
    params: dict = {"law": args.law, "c": args.c}
    if args.c <= 0:
        raise UsageError("--c must be positive")
    if args.law in ("uniform", "mixed"):
        if args.a is None or args.a <= 0:
            raise UsageError("--a must be given and positive")
        params["a"] = args.a
        if args.law == "mixed":
            if args.eta is None or abs(args.eta) > args.a:
                raise UsageError("--eta must be given with |eta| <= a")
            params["eta"] = args.eta
    else:
        if not args.spectrum:
            raise UsageError("--spectrum is required for the steepest-descent law")
        params["spectrum"] = args.spectrum
    try:
        f, (lo, hi) = density_for(params)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    lo = args.lo if args.lo is not None else lo
    hi = args.hi if args.hi is not None else hi
    if not hi > lo:
        raise UsageError("need lo < hi")
    grid = cf.tabulate(f, lo, hi, args.points)
    peaks = find_peaks(f, lo, hi, n_scan=max(64, 4 * args.points))
    path = _output_path(args.output, f"pdf_{args.law}.{args.format}")
    _emit_density(params, grid, peaks, path, args.format, f"pdf_{args.law}")
    return EXIT_OK


# --- simulation ---------------------------------------------------------------

def build_config(args) -> SimulationConfig:
    if not args.observable:
        raise UsageError("--observable needs at least one eigenvalue")
    try:
        observable = HermitianMatrix.diag(args.observable)
        state = parse_density_matrix(args.density_matrix, observable.dim)
        model = ErrorModel(args.c1, args.c2)
        return SimulationConfig(observable, state, model, args.n, args.seed, args.n_workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def simulation_metadata(args, cfg: SimulationConfig) -> dict:
    return {
        "qmerr_version": __version__,
        "seed": cfg.seed,
        "n_workers": cfg.n_workers,
        "n_samples": cfg.n_samples,
        "observable": list(map(float, args.observable)),
        "density_matrix": args.density_matrix,
        "c1": cfg.model.c1,
        "c2": cfg.model.c2,
    }


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    samples = simulate_outcomes(cfg)
    meta = simulation_metadata(args, cfg)
    path = _output_path(args.output, f"samples.{args.format}")
    if args.histogram:
        lo, hi = default_histogram_range(args.observable, cfg.model.c1)
        lo = args.lo if args.lo is not None else lo
        hi = args.hi if args.hi is not None else hi
        if not hi > lo:
            raise UsageError("need lo < hi")
        h = histogram(samples, lo, hi, args.bins)
        meta.update(bins=args.bins, lo=lo, hi=hi, total=h.total)
        if args.format == "csv":
            rows = zip(h.edges[:-1], h.edges[1:], h.counts, h.density())
            text = _csv_text(["bin_lo", "bin_hi", "count", "density"], rows, meta)
        else:
            text = _json_text({"metadata": meta, "edges": h.edges.tolist(),
                               "counts": h.counts.tolist(), "total": h.total})
    elif args.format == "csv":
        text = _csv_text(["x"], ((s,) for s in samples), meta)
    else:
        text = _json_text({"metadata": meta, "samples": samples.tolist()})
    _write(path, text)
    return EXIT_OK


def read_samples(path: Path) -> np.ndarray:
    """Samples from a ``simulate`` output file (CSV or JSON)."""
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        return np.asarray(json.loads(text)["samples"], dtype=float)
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not rows or rows[0].strip() != "x":
        raise UsageError(f"{path} is not a sample file (expected an 'x' column)")
    return np.array([float(v) for v in rows[1:]])


# --- verification -----------------------------------------------------------

def _print_table(checks) -> bool:
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}")
    ok = all(c.passed for c in checks)
    print(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return ok


def cmd_verify(args) -> int:
    if args.suite == "ks":
        return _verify_ks(args)
    checks = run_suite(args.suite)
    return EXIT_OK if _print_table(checks) else EXIT_CHECK


def _verify_ks(args) -> int:
    if not args.samples:
        raise UsageError("verify ks needs --samples FILE")
    samples = read_samples(Path(args.samples))
    params = {"law": args.law, "c": args.c}
    if args.law in ("uniform", "mixed"):
        params["a"] = args.a
        if args.law == "mixed":
            params["eta"] = args.eta
    else:
        params["spectrum"] = args.spectrum
    try:
        f, (lo, hi) = density_for(params)
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"bad density parameters: {exc}") from exc
    cdf = cdf_from_density(f, lo, hi, 8193)
    d = ks_statistic(samples, cdf)
    threshold = args.threshold if args.threshold is not None else ks_critical(samples.size)
    from .verify import Check
    return EXIT_OK if _print_table([Check(
        f"KS distance to the {args.law} law", d < threshold,
        f"D = {d:.5f} (threshold {threshold:.5f}, n = {samples.size})")]) else EXIT_CHECK


# --- parser -------------------------------------------------------------------

def _add_output(p, default_format="csv"):
    p.add_argument("-o", "--output", help=f"output file ('-' for stdout; default under ${OUTPUT_DIR_ENV})")
    p.add_argument("--format", choices=("csv", "json"), default=default_format)


def _add_law(p, law_required=True):
    p.add_argument("--law", choices=("uniform", "mixed", "sd"), required=law_required,
                   default=None if law_required else "uniform")
    p.add_argument("--a", type=float, help="eigenvalue of diag(a, -a)")
    p.add_argument("--c", type=float, default=3.0, help="error parameter")
    p.add_argument("--eta", type=float, help="tr(rho A) for the mixed law")
    p.add_argument("--spectrum", type=_float_list, help="comma-separated eigenvalues")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmerr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for k in (1, 2, 3):
        p = sub.add_parser(f"figure{k}", help=f"density data and peak report for figure {k}")
        _add_output(p)

    p = sub.add_parser("pdf", help="tabulate a closed-form outcome density")
    _add_law(p)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--points", type=_count, default=FIGURE_POINTS)
    _add_output(p)

    p = sub.add_parser("simulate", help="Monte Carlo measurement outcomes")
    p.add_argument("--observable", type=_float_list, required=True,
                   help="eigenvalues of the (diagonal) observable, e.g. '1,-1'")
    p.add_argument("--density-matrix", default="mixed",
                   help="'mixed', 'bloch:x,y,z' or 'diag:p1,...,pN'")
    p.add_argument("--c1", type=float, required=True)
    p.add_argument("--c2", type=float, default=0.0)
    p.add_argument("--n", type=_count, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-workers", type=_count, default=1)
    p.add_argument("--histogram", action="store_true", help="write a histogram instead of samples")
    p.add_argument("--bins", type=_count, default=200)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    _add_output(p)

    p = sub.add_parser("verify", help="run a fixed-seed verification suite")
    p.add_argument("suite", choices=SUITES + ("all", "ks"))
    p.add_argument("--samples", help="sample file for the ks suite")
    p.add_argument("--threshold", type=float, help="KS pass threshold (default 1.63/sqrt(n))")
    _add_law(p, law_required=False)
    return parser


COMMANDS = {
    "figure1": cmd_figure,
    "figure2": cmd_figure,
    "figure3": cmd_figure,
    "pdf": cmd_pdf,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qmerr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"qmerr {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
