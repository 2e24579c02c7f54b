"""Batch command-line interface with machine-readable output.

Every subcommand echoes its inputs and emits outputs tagged with a
``method`` provenance field (closed-form, pfaffian, quadrature or
monte-carlo with its seed).  JSON is the default format (schema 1, floats
at 17 significant digits so values round-trip exactly); ``--format csv``
writes a flat table.  Identical argv and seed give byte-identical output.

Exit codes: 0 success, 1 usage error, 2 precondition violation,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__, correlations, counts, fields, goe, validation
from .covariance import ModelError, moment_inequality_check, parse_model_spec
from .quadrature import QuadratureError

USAGE_ERROR = 1
PRECONDITION_ERROR = 2
NUMERICAL_ERROR = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; the interface contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{inner}"{key}": {_to_json(val, indent + 1)}' for key, val in obj.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{_to_json(val, indent + 1)}" for val in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    return '"' + str(obj).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _emit(report: dict, table, args) -> None:
    """Write the report as JSON, or the row table as CSV."""
    if args.format == "csv":
        header, rows = table
        lines = [",".join(header)]
        for row in rows:
            lines.append(
                ",".join(
                    _fmt_float(v) if isinstance(v, (float, np.floating)) else str(v)
                    for v in row
                )
            )
        text = "\n".join(lines) + "\n"
    else:
        text = _to_json(report) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_grid(spec: str) -> np.ndarray:
    """``start:stop:step`` (linear) or ``start:stop:count:log|lin``."""
    parts = spec.split(":")
    try:
        if len(parts) == 3:
            start, stop, step = map(float, parts)
            if step <= 0 or stop < start:
                raise ValueError
            n = int(round((stop - start) / step))
            return start + step * np.arange(n + 1)
        if len(parts) == 4:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            kind = parts[3]
            if count < 1:
                raise ValueError
            if kind == "log":
                if start <= 0 or stop <= 0:
                    raise ValueError
                return np.geomspace(start, stop, count)
            if kind == "lin":
                return np.linspace(start, stop, count)
        raise ValueError
    except ValueError:
        raise ModelError(
            f"malformed grid {spec!r}: use start:stop:step or start:stop:count:log|lin"
        ) from None


def _parse_pair(spec: str) -> tuple:
    try:
        i1, i2 = (int(p) for p in spec.split(","))
        return (i1, i2)
    except ValueError:
        raise ModelError(f"malformed index pair {spec!r}: use i1,i2") from None


def _base_report(args, command: str) -> dict:
    inputs = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in ("func", "output", "format") and v is not None
    }
    return {"schema": 1, "version": __version__, "command": command, "inputs": inputs}


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("CRITPOINT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ModelError(f"CRITPOINT_THREADS={env!r} is not an integer") from None
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_goe_density(args) -> int:
    grid = _parse_grid(args.grid)
    if not 1 <= args.k <= args.N:
        raise ModelError(f"k must be in 1..{args.N}")
    method = args.method
    if method == "auto":
        method = "closed-form" if (2 <= args.N <= 5) else "pfaffian"
    out = {}
    if method in ("closed-form", "both") or args.cross_check:
        out["closed-form"] = np.asarray(goe.closed_form_density(args.N, args.k, grid))
    if method == "pfaffian" or args.cross_check:
        out["pfaffian"] = np.array(
            [goe.ordered_eigen_density(args.N, args.k, l) for l in grid]
        )
    primary = method if method in out else next(iter(out))
    report = _base_report(args, "goe-density")
    report["outputs"] = {
        "ell": list(grid),
        "density": list(out[primary]),
        "method": primary,
    }
    header = ["ell", "density"]
    rows = [[l, v] for l, v in zip(grid, out[primary])]
    if args.cross_check:
        gap = float(np.max(np.abs(out["closed-form"] - out["pfaffian"])))
        report["outputs"]["cross_check"] = {
            "methods": ["closed-form", "pfaffian"],
            "sup_gap": gap,
        }
        header = ["ell", "closed_form", "pfaffian"]
        rows = [
            [l, a, b] for l, a, b in zip(grid, out["closed-form"], out["pfaffian"])
        ]
    _emit(report, (header, rows), args)
    return 0


def _cmd_goe_sample(args) -> int:
    spectra = goe.sample_goe_spectra(args.N, args.samples, seed=args.seed)
    report = _base_report(args, "goe-sample")
    report["outputs"] = {
        "eigenvalues": [list(row) for row in spectra],
        "method": "monte-carlo",
        "seed": args.seed,
    }
    header = [f"lambda_{k}" for k in range(1, args.N + 1)]
    _emit(report, (header, [list(r) for r in spectra]), args)
    return 0


def _cmd_counts(args) -> int:
    model = parse_model_spec(args.model)
    gate = moment_inequality_check(model, args.N)
    outputs = []
    if args.k is not None and args.u is not None:
        val = counts.mean_count_index_above(model, args.N, args.k, args.u, args.volume)
        outputs.append(
            {"name": f"mean_count_index_{args.k}_above_u", "value": val,
             "method": "pfaffian+quadrature"}
        )
    elif args.k is not None:
        val = counts.mean_count_index(model, args.N, args.k, args.volume)
        outputs.append(
            {"name": f"mean_count_index_{args.k}", "value": val,
             "method": "pfaffian+quadrature"}
        )
    else:
        val = counts.mean_count_total(model, args.N, args.volume)
        outputs.append(
            {"name": "mean_count_total", "value": val, "method": "pfaffian+quadrature"}
        )
        if args.cross_check and args.N == 2:
            closed = counts.mean_count_total_closed_n2(model, args.volume)
            outputs.append(
                {"name": "mean_count_total", "value": closed, "method": "closed-form"}
            )
            outputs.append(
                {"name": "cross_check_gap", "value": abs(val - closed),
                 "method": "closed-form vs pfaffian+quadrature"}
            )
    report = _base_report(args, "counts")
    report["outputs"] = {
        "values": outputs,
        "moment_inequalities_passed": gate.passed,
    }
    header = ["name", "value", "method"]
    rows = [[o["name"], o["value"], o["method"]] for o in outputs]
    _emit(report, (header, rows), args)
    return 0


def _cmd_fractions(args) -> int:
    fracs = counts.index_fractions(args.N)
    report = _base_report(args, "fractions")
    report["outputs"] = {
        "fractions": list(fracs),
        "method": "pfaffian+quadrature",
        "paper_reference": args.N <= 4,
    }
    header = ["index", "fraction"]
    rows = [[k, f] for k, f in enumerate(fracs)]
    if args.cross_check and args.N <= 4:
        exact = counts.exact_fraction_constants(args.N)
        gap = max(abs(a - b) for a, b in zip(fracs, exact))
        report["outputs"]["cross_check"] = {
            "exact_constants": list(exact),
            "method": "closed-form",
            "max_gap": gap,
        }
        header = ["index", "fraction", "exact"]
        rows = [[k, f, e] for k, (f, e) in enumerate(zip(fracs, exact))]
    _emit(report, (header, rows), args)
    return 0


def _cmd_corr_asymptote(args) -> int:
    model = parse_model_spec(args.model)
    grid = _parse_grid(args.rho_grid)
    if args.kind == "total":
        vals = [correlations.corr_asymptote_total(model, args.N, r) for r in grid]
        name = "corr_total"
    elif args.kind == "adjacent":
        if args.k is None:
            raise ModelError("--kind adjacent requires --k")
        vals = [
            correlations.corr_asymptote_adjacent(model, args.N, args.k, r)
            for r in grid
        ]
        name = f"corr_adjacent_{args.k}_{args.k + 1}"
    elif args.kind == "extrema-1d":
        if args.N != 1:
            raise ModelError("--kind extrema-1d is one-dimensional only")
        vals = [correlations.corr_1d_extrema_asymptote(model, r) for r in grid]
        name = "corr_extrema"
    else:  # pragma: no cover - argparse restricts choices
        raise ModelError(f"unknown kind {args.kind}")
    report = _base_report(args, "corr-asymptote")
    report["outputs"] = {
        "rho": list(grid),
        name: list(vals),
        "method": "quadrature",
    }
    _emit(report, (["rho", name], [[r, v] for r, v in zip(grid, vals)]), args)
    return 0


def _cmd_corr_mc(args) -> int:
    model = parse_model_spec(args.model)
    grid = _parse_grid(args.rho_grid)
    pair = _parse_pair(args.pair) if args.pair else None
    ests = [
        correlations.corr_mc(
            model, args.N, float(r), index_pair=pair, samples=args.samples,
            seed=(args.seed, i),
        )
        for i, r in enumerate(grid)
    ]
    report = _base_report(args, "corr-mc")
    report["outputs"] = {
        "rho": [e.rho for e in ests],
        "value": [e.value for e in ests],
        "std_error": [e.std_error for e in ests],
        "discarded": [e.discarded for e in ests],
        "method": "monte-carlo",
        "seed": args.seed,
    }
    header = ["rho", "value", "std_error"]
    rows = [[e.rho, e.value, e.std_error] for e in ests]
    if args.fit:
        slope, err = correlations.exponent_fit(ests)
        report["outputs"]["exponent_fit"] = {
            "slope": slope,
            "std_error": err,
            "method": "monte-carlo",
        }
    if args.cross_check:
        asym = [correlations.corr_asymptote_total(model, args.N, e.rho) for e in ests]
        report["outputs"]["cross_check"] = {
            "asymptote": asym,
            "method": "quadrature",
            "max_rel_gap": max(
                (abs(e.value / a - 1.0) for e, a in zip(ests, asym) if a), default=0.0
            ),
        }
        header.append("asymptote")
        rows = [row + [a] for row, a in zip(rows, asym)]
    _emit(report, (header, rows), args)
    return 0


def _cmd_simulate(args) -> int:
    model = parse_model_spec(args.model)
    threads = _threads(args)
    seeds = [(args.seed, r) for r in range(args.realizations)]

    def one(seed):
        grid = fields.synthesize(model, args.N, args.side, args.spacing, seed=seed)
        recs = fields.detect_critical_points(grid, lambda2=model.lambda2)
        return grid, recs

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]

    all_recs = [rec for _, recs in results for rec in recs]
    volume = sum(grid.volume for grid, _ in results)
    density = len(all_recs) / volume
    report = _base_report(args, "simulate")
    outputs = {
        "realizations": args.realizations,
        "points": len(all_recs),
        "density": density,
        "method": "monte-carlo",
        "seed": args.seed,
    }
    if len(all_recs) >= 1000:
        fracs, intervals = fields.empirical_index_fractions(all_recs, args.N)
        outputs["index_fractions"] = list(fracs)
        outputs["index_fraction_intervals"] = [list(iv) for iv in intervals]
    if args.cross_check:
        outputs["expected_density"] = counts.mean_count_total(model, args.N)
        outputs["expected_fractions"] = list(counts.index_fractions(args.N))
    if args.pair_bins:
        edges = _parse_grid(args.pair_bins)
        pair = _parse_pair(args.pair) if args.pair else None
        per_real = [recs for _, recs in results]
        extent = results[0][0].extent
        est = fields.empirical_pair_correlation(per_real, extent, edges, index_pair=pair)
        outputs["pair_correlation"] = {
            "bin_centers": list(est.bin_centers),
            "bin_width": est.bin_width,
            "a_value": list(est.a_value),
            "a_error": list(est.a_error),
            "g_value": list(est.g_value),
            "g_error": list(est.g_error),
            "counts": [int(c) for c in est.counts],
            "method": "monte-carlo",
        }
    if args.save_grid:
        fields.save_grid(results[0][0], args.save_grid)
        outputs["saved_grid"] = args.save_grid
    report["outputs"] = outputs
    header = ["name", "value"]
    rows = [["density", density], ["points", len(all_recs)]]
    if "index_fractions" in outputs:
        rows += [
            [f"fraction_{k}", f] for k, f in enumerate(outputs["index_fractions"])
        ]
    _emit(report, (header, rows), args)
    return 0


def _cmd_validate(args) -> int:
    results = validation.run_suite(args.suite, seed=args.seed)
    report = _base_report(args, "validate")
    report["outputs"] = {
        "suite": args.suite,
        "checks": [
            {
                "name": r.name,
                "passed": r.passed,
                "runtime_s": round(r.runtime, 2),
                "details": {k: str(v) for k, v in r.details.items()},
            }
            for r in results
        ],
        "all_passed": all(r.passed for r in results),
    }
    header = ["name", "passed"]
    rows = [[r.name, r.passed] for r in results]
    _emit(report, (header, rows), args)
    return 0 if all(r.passed for r in results) else NUMERICAL_ERROR


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="critpoints", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--output", help="write the report to this path")
        p.add_argument("--threads", type=int, default=None,
                       help="worker cap (default: CRITPOINT_THREADS or all cores)")
        p.add_argument("--cross-check", action="store_true",
                       help="also run an independent method and report the gap")

    p = sub.add_parser("goe-density", help="ordered-eigenvalue density on a grid")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--grid", required=True, help="start:stop:step")
    p.add_argument("--method", choices=("auto", "closed-form", "pfaffian"),
                   default="auto")
    common(p)
    p.set_defaults(func=_cmd_goe_density)

    p = sub.add_parser("goe-sample", help="sample sorted GOE spectra")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=_cmd_goe_sample)

    p = sub.add_parser("counts", help="mean critical point counts")
    p.add_argument("--model", required=True,
                   help="gaussian:a=<f> or moments:l2=..,l4=..[,l6=..][,l8=..]")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--u", type=float, default=None, help="level threshold")
    p.add_argument("--volume", type=float, default=1.0)
    common(p)
    p.set_defaults(func=_cmd_counts)

    p = sub.add_parser("fractions", help="index fractions of critical points")
    p.add_argument("--N", type=int, required=True)
    common(p)
    p.set_defaults(func=_cmd_fractions)

    p = sub.add_parser("corr-asymptote", help="small-separation correlation laws")
    p.add_argument("--model", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--rho-grid", required=True,
                   help="start:stop:step or start:stop:count:log|lin")
    p.add_argument("--kind", choices=("total", "adjacent", "extrema-1d"),
                   default="total")
    p.add_argument("--k", type=int, default=None, help="lower adjacent index")
    common(p)
    p.set_defaults(func=_cmd_corr_asymptote)

    p = sub.add_parser("corr-mc", help="Monte Carlo correlation function")
    p.add_argument("--model", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--rho-grid", required=True)
    p.add_argument("--pair", default=None, help="index pair i1,i2")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fit", action="store_true", help="weighted log-log slope fit")
    common(p)
    p.set_defaults(func=_cmd_corr_mc)

    p = sub.add_parser("simulate", help="synthesise fields and detect critical points")
    p.add_argument("--model", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--side", type=int, default=256)
    p.add_argument("--spacing", type=float, default=0.125)
    p.add_argument("--realizations", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pair-bins", default=None,
                   help="bin edges for the pair correlation, as a grid spec")
    p.add_argument("--pair", default=None, help="restrict pairs to indexes i1,i2")
    p.add_argument("--save-grid", default=None,
                   help="write the first realisation to this snapshot path")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("validate", help="run the cross-validation suite")
    p.add_argument("--suite", choices=tuple(validation.SUITES), default="quick")
    p.add_argument("--seed", type=int, default=None)
    common(p)
    p.set_defaults(func=_cmd_validate)

    return parser


#: Options whose values may begin with '-' (grids can start at negative
#: numbers with colons inside, which argparse would mistake for flags).
_GLUE_VALUE_FLAGS = ("--grid", "--rho-grid", "--pair-bins")


def _glue_negative_values(argv):
    out = []
    skip = False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        if (
            tok in _GLUE_VALUE_FLAGS
            and i + 1 < len(argv)
            and argv[i + 1].startswith("-")
        ):
            out.append(f"{tok}={argv[i + 1]}")
            skip = True
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(_glue_negative_values(list(argv)))
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args)
    except (ModelError, ValueError) as exc:
        # SingularSeparationError is a ValueError: out-of-range separation
        # is a precondition violation, not a numerical failure
        print(f"error: {exc}", file=sys.stderr)
        return PRECONDITION_ERROR
    except (QuadratureError, ArithmeticError, fields.EmbeddingError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
