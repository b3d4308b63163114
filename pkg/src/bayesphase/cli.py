"""Command-line entry point.

Every command writes machine-readable output (CSV by default) to ``--out``
or stdout.  Angles are in radians, MMSE values in radians squared.

Exit codes: 0 success, 2 usage or parse error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import adaptive, optimize, personick
from .errors import (DegeneratePosteriorError, DomainError, InvalidGaugeError,
                     InvalidOperatorError)
from .prior import parse_angle, parse_prior
from .states import noon, parse_state

EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def parse_int_range(value) -> list[int]:
    """``"1..5"``, ``"1,3,5"``, an int or a list of ints."""
    if isinstance(value, int):
        return [value]
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    text = str(value).strip()
    out = []
    for part in text.split(","):
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise DomainError(f"empty integer range {value!r}")
    return out


def parse_float_list(value) -> list[float]:
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [parse_angle(p) for p in str(value).split(",") if p.strip()]


def _num(x) -> str:
    return repr(float(x))


def _write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _complex_pairs(arr):
    arr = np.asarray(arr, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def cmd_mmse(args) -> str:
    prior = parse_prior(args.prior)
    state = parse_state(args.state)
    sol = personick.solve(state, prior)
    meas = sol.measurement
    if args.format == "json":
        return json.dumps({
            "prior": args.prior, "state": args.state,
            "coefficients": _complex_pairs(state.coeffs),
            "mmse": sol.mmse, "tr_gamma2": sol.tr_gamma2,
            "b_op": _complex_pairs(sol.b_op),
            "estimates": meas.estimates.tolist(),
            "projectors": _complex_pairs(meas.vectors),
        }, indent=2) + "\n"
    if args.format == "csv":
        rows = [("mmse", -1, sol.mmse, 0.0)]
        rows += [("estimate", k, float(e), 0.0) for k, e in enumerate(meas.estimates)]
        return _write_csv(["field", "index", "re", "im"], rows)
    lines = [f"prior      {args.prior}", f"state      {args.state}",
             f"mmse       {sol.mmse!r}", "B operator (re, im):"]
    for row in sol.b_op:
        lines.append("  " + "  ".join(f"({z.real:+.10f}, {z.imag:+.10f})" for z in row))
    lines.append("outcomes (estimate | projector):")
    for est, vec in zip(meas.estimates, meas.vectors):
        lines.append(f"  {est:+.10f} | " + "  ".join(f"({z.real:+.6f}, {z.imag:+.6f})" for z in vec))
    return "\n".join(lines) + "\n"


def cmd_noon_curve(args) -> str:
    ms = parse_float_list(args.m)
    rows = []
    for m in ms:
        if not 0 < m <= 2 * np.pi + 1e-12:
            raise DomainError(f"m must lie in (0, 2pi], got {m}")
        prior = parse_prior(f"trunc:0..{m!r}")
        for n in range(1, args.n_max + 1):
            closed = personick.mmse_noon_truncated_closed_form(n, m)
            pipeline = personick.solve(noon(n), prior).mmse
            rows.append((m, n, closed, pipeline))
    if args.format == "json":
        return json.dumps([dict(zip(("m", "n", "delta_trunc", "pipeline_delta"), r)) for r in rows],
                          indent=2) + "\n"
    return _write_csv(["m", "n", "delta_trunc", "pipeline_delta"], rows)


def cmd_optimize(args) -> str:
    prior = parse_prior(args.prior)
    ns = parse_int_range(args.n)
    if max(ns) > 30 or min(ns) < 1:
        raise DomainError("n must lie in 1..30")
    results = [(n, optimize.optimize_coefficients(n, prior, args.phases, restarts=args.restarts,
                                                  seed=args.seed)) for n in ns]
    width = max(ns) + 1
    if args.format == "json":
        return json.dumps([{"n": n, "delta_opt": r.mmse, "converged": r.converged,
                            "coefficients": _complex_pairs(r.state.coeffs)}
                           for n, r in results], indent=2) + "\n"
    header = ["n", "delta_opt", "converged"] + [f"a_{l}" for l in range(width)]
    if args.phases:
        header += [f"arg_{l}" for l in range(width)]
    rows = []
    for n, r in results:
        c = r.state.coeffs
        pad = [""] * (width - c.size)
        if args.phases:
            amps = list(np.abs(c)) + pad
            args_ = [float(np.angle(z)) if abs(z) > 1e-12 else 0.0 for z in c] + pad
            rows.append([n, r.mmse, int(r.converged)] + amps + args_)
        else:
            rows.append([n, r.mmse, int(r.converged)] + list(c.real) + pad)
    return _write_csv(header, rows)


def cmd_bs_optimize(args) -> str:
    rows = []
    for n in parse_int_range(args.n):
        tau, val = optimize.optimize_bs_transmissivity(n)
        rows.append((n, tau, val))
    if args.format == "json":
        return json.dumps([dict(zip(("n", "tau_opt", "mmse"), r)) for r in rows], indent=2) + "\n"
    return _write_csv(["n", "tau_opt", "mmse"], rows)


def cmd_adaptive(args) -> str:
    prior = parse_prior(args.prior)
    tree = adaptive.run_tree(prior, args.depth, args.policy, reoptimize=not args.no_reoptimize,
                             grid=args.grid, restarts=args.restarts, seed=args.seed)
    best = tree.step_mmse()
    spread = tree.step_spread()
    expected = [sum(n.path_probability * n.mmse for n in lvl) / sum(n.path_probability for n in lvl)
                for lvl in tree.levels]
    single = None
    if args.compare:
        rows = adaptive.compare_single_shot(prior, len(tree.levels), tree=tree,
                                            restarts=args.restarts, seed=args.seed)
        single = [r[2] for r in rows]
    if args.tree_out:
        with open(args.tree_out, "w") as fh:
            json.dump(adaptive.tree_to_dict(tree), fh)
            fh.write("\n")
    if args.format == "json":
        out = adaptive.tree_to_dict(tree)
        if single is not None:
            out["comparison"] = [{"s": s + 1, "adaptive_mmse": best[s], "single_shot_mmse": single[s]}
                                 for s in range(len(single))]
        return json.dumps(out) + "\n"
    header = ["s", "nodes", "adaptive_mmse", "expected_mmse", "mmse_spread"]
    rows = [[s + 1, len(lvl), best[s], expected[s], spread[s]] for s, lvl in enumerate(tree.levels)]
    if single is not None:
        header.append("single_shot_mmse")
        for row, val in zip(rows, single):
            row.append(val)
    return _write_csv(header, rows)


def _common(parser):
    parser.add_argument("--config", help="JSON file with default values for any flag")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--grid", type=int, default=None,
                        help="posterior grid nodes (default 4096)")
    parser.add_argument("--restarts", type=int, default=optimize.DEFAULT_RESTARTS)
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("--out", help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesphase",
                                     description="Bayesian MMSE phase estimation with fixed-photon probes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mmse", help="MMSE and optimal measurement for one state and prior")
    _common(p)
    p.add_argument("--prior", default="flat")
    p.add_argument("--state", required=False, default="noon:1")
    p.set_defaults(func=cmd_mmse)

    p = sub.add_parser("noon-curve", help="NOON MMSE versus n for truncated priors")
    _common(p)
    p.add_argument("--m", default="0.1,0.3,1,3", help="comma-separated truncation widths")
    p.add_argument("--n-max", type=int, default=20)
    p.set_defaults(func=cmd_noon_curve)

    p = sub.add_parser("optimize", help="optimal probe coefficients per photon number")
    _common(p)
    p.add_argument("--prior", default="flat")
    p.add_argument("--n", default="1..5", help="photon numbers, e.g. 1..5 or 1,3")
    p.add_argument("--phases", action="store_true", help="optimize relative phases too")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("bs-optimize", help="optimal beam-splitter transmissivity (flat prior)")
    _common(p)
    p.add_argument("--n", default="1,10,100")
    p.set_defaults(func=cmd_bs_optimize)

    p = sub.add_parser("adaptive", help="adaptive one-photon protocol")
    _common(p)
    p.add_argument("--prior", default="flat")
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--policy", choices=adaptive.POLICIES, default="all-branches")
    p.add_argument("--compare", action="store_true", help="add the single-shot column")
    p.add_argument("--no-reoptimize", action="store_true", help="keep the root probe at every step")
    p.add_argument("--tree-out", help="write the JSON tree here")
    p.set_defaults(func=cmd_adaptive)
    return parser


def _apply_config(parser, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    if not isinstance(cfg, dict):
        parser.error("config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    cfg.pop("command", None)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = set(cfg) - known
    if unknown:
        parser.error(f"unknown config keys: {', '.join(sorted(unknown))}")
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config(parser, argv)
    try:
        text = args.func(args)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidOperatorError, InvalidGaugeError, DegeneratePosteriorError,
            np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
