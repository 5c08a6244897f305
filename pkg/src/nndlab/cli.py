"""Experiment runner: every subsystem as a seeded subcommand with CSV/JSON output.

Exit codes: 0 success, 2 usage error, 3 domain/precondition error,
4 resource refusal.  Every output embeds its full config and seed, so
re-running a file's header reproduces it byte for byte.
"""

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from . import concordance, descent, diagnostics, rangequery, spaces
from .errors import InputError, NndlabError, ResourceLimitError
from .ranking import RankingOracle, exact_knn, recall

RECALL_LIMIT = 4096  # largest n for which the quadratic exact graph is built


def _count(text):
    value = float(text)
    if value != int(value) or value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return int(value)


def _resolve_out(path):
    outdir = os.environ.get("NNDLAB_OUTDIR")
    if path and outdir and not os.path.isabs(path):
        return os.path.join(outdir, path)
    return path


def _emit(text, out):
    out = _resolve_out(out)
    if out:
        os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_doc(config, data):
    return json.dumps({"config": config, "data": data}, indent=2, sort_keys=True) + "\n"


def _csv_doc(config, body):
    return "# config: " + json.dumps(config, sort_keys=True) + "\n" + body


def golden_schedule_checksum():
    params = rangequery.derive_params(1e7, 28, 4, 0.5)
    text = rangequery.schedule_csv(rangequery.compute_schedule(params))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def _build_space_table(args):
    name = args.space
    if name == "paris":
        space = spaces.paris_space(range(1, args.n + 1))
        return spaces.rank_table(space)
    if name == "circle":
        space = spaces.circle_sample(args.n, args.seed)
        return spaces.rank_table(space)
    if name == "powers2":
        space = spaces.powers_of_two_space(args.n)
        return spaces.rank_table(space)
    if name == "lcs":
        space = spaces.lcs_sample(args.n, args.lcs_m, seed=args.seed)
        return spaces.rank_table(space)
    if name == "random-ranking":
        return spaces.random_ranking_table(args.n, args.seed)
    if name == "generic-crs":
        return concordance.generic_crs(args.n, args.seed).table
    raise InputError(f"unknown space {name!r}")


def cmd_nnd(args):
    table = _build_space_table(args)
    oracle = RankingOracle(table)
    result = descent.run_nnd(
        oracle,
        n=table.n,
        K=args.k,
        mode=args.mode,
        seed=args.seed,
        max_rounds=args.rounds,
        stop=args.stop,
    )
    if table.n <= RECALL_LIMIT:
        result.recall = recall(result.graph, exact_knn(table, args.k))
    config = {
        "command": "nnd",
        "space": args.space,
        "n": args.n,
        "k": args.k,
        "mode": args.mode,
        "seed": args.seed,
        "rounds": args.rounds,
        "stop": args.stop,
    }
    _emit(_json_doc(config, descent.run_report(result)), args.out)
    return 0


def cmd_2nrq_schedule(args):
    params = rangequery.derive_params(args.n, args.k, args.d, args.alpha)
    schedule = rangequery.compute_schedule(params)
    config = {
        "command": "2nrq schedule",
        "n": args.n,
        "k": args.k,
        "d": args.d,
        "alpha": args.alpha,
    }
    if args.format == "csv":
        _emit(_csv_doc(config, rangequery.schedule_csv(schedule)), args.out)
    else:
        data = {
            "radii": list(schedule.radii),
            "rates": list(schedule.rates),
            "formulas": list(schedule.formulas),
            "t_prime": schedule.t_prime,
            "tau": schedule.tau,
            "beta": params.beta,
            "gamma": params.gamma,
            "gamma_star": params.gamma_star,
            "t_prime_bound": params.t_prime_bound,
        }
        _emit(_json_doc(config, data), args.out)
    return 0


def cmd_2nrq_simulate(args):
    result = rangequery.run_2nrq(
        args.n,
        args.k,
        args.d,
        args.alpha,
        args.seed,
        verify_rounds=True,
        sample_size=args.sample_vertices,
        idealized_inputs=args.idealized_inputs,
    )
    config = {
        "command": "2nrq simulate",
        "n": args.n,
        "k": args.k,
        "d": args.d,
        "alpha": args.alpha,
        "seed": args.seed,
        "sample_vertices": args.sample_vertices,
        "idealized_inputs": args.idealized_inputs,
    }
    _emit(_json_doc(config, result.report), args.out)
    return 0


def cmd_crs_enumerate(args):
    census = concordance.enumerate_small(args.n)
    config = {"command": "crs enumerate", "n": args.n}
    _emit(_json_doc(config, census.to_json_dict()), args.out)
    return 0


def cmd_crs_embed(args):
    if args.example == "concordant5":
        table, extension = concordance.concordant5_system()
        crs = concordance.concordancy_check(table)
        emb = concordance.linf_embed(crs, extension=extension)
        config = {"command": "crs embed", "example": "concordant5"}
    else:
        crs = concordance.generic_crs(args.n, args.seed)
        emb = concordance.linf_embed(crs, seed=args.seed)
        config = {"command": "crs embed", "n": args.n, "seed": args.seed}
    if args.format == "csv":
        _emit(_csv_doc(config, emb.to_csv()), args.out)
    else:
        data = {
            "columns": [list(p) for p in emb.column_pairs],
            "coords": emb.coords.tolist(),
            "verified": concordance.verify_embedding(crs, emb),
        }
        _emit(_json_doc(config, data), args.out)
    return 0


def cmd_crs_special(args):
    builders = {
        "powers2": concordance.powers_of_two_order,
        "baranyai": concordance.baranyai_order,
        "eulerian": concordance.eulerian_order,
    }
    order = builders[args.kind](args.n)
    config = {
        "command": "crs special",
        "kind": args.kind,
        "n": args.n,
        "check": args.check,
        "cap": args.cap,
    }
    data = {"pairs": [list(p) for p in order.pairs]}
    if args.check == "isolated":
        data["isolated"] = concordance.is_isolated(order)
    elif args.check == "component":
        component = concordance.white_component(order, cap=args.cap)
        data["component_size"] = len(component)
        data["complete"] = component.complete
    _emit(_json_doc(config, data), args.out)
    return 0


def cmd_crs_fraction(args):
    exact, empirical = concordance.white_edge_fraction(
        args.n, samples=args.samples, seed=args.seed
    )
    config = {
        "command": "crs fraction",
        "n": args.n,
        "samples": args.samples,
        "seed": args.seed,
    }
    data = {
        "exact": str(exact),
        "exact_float": float(exact),
        "empirical": empirical,
    }
    _emit(_json_doc(config, data), args.out)
    return 0


def cmd_diag_diameter(args):
    report = diagnostics.diameter_experiment(args.n, args.k, args.trials, args.eps, args.seed)
    config = {
        "command": "diag diameter",
        "n": args.n,
        "k": args.k,
        "trials": args.trials,
        "eps": args.eps,
        "seed": args.seed,
    }
    _emit(_json_doc(config, report.to_json_dict()), args.out)
    if args.histogram:
        _emit(_csv_doc(config, report.histogram_csv()), args.histogram)
    return 0


def cmd_diag_expansion(args):
    rng = np.random.default_rng(args.seed)
    F = descent.random_kout(args.n, args.k, rng)
    report = diagnostics.expansion_check(F, args.alpha, args.eps, args.sets, args.seed)
    config = {
        "command": "diag expansion",
        "n": args.n,
        "k": args.k,
        "alpha": args.alpha,
        "eps": args.eps,
        "sets": args.sets,
        "seed": args.seed,
    }
    _emit(_json_doc(config, report.to_json_dict()), args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nndlab",
        description="Nearest-neighbor descent, concordant ranking systems, and "
        "second-neighbor range queries: seeded experiments with CSV/JSON output.",
    )
    parser.add_argument(
        "--version",
        action="store_true",
        help="print version and the golden-schedule checksum, then exit",
    )
    parser.add_argument(
        "--threads",
        type=_count,
        default=1,
        help="worker cap (current implementations are single-threaded; results never depend on it)",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("nnd", help="run nearest-neighbor descent on an example space")
    p.add_argument("--space", required=True,
                   choices=["paris", "circle", "powers2", "lcs", "random-ranking", "generic-crs"])
    p.add_argument("--n", type=_count, required=True)
    p.add_argument("--k", type=_count, required=True)
    p.add_argument("--mode", choices=["batch", "pointwise"], default="batch")
    p.add_argument("--seed", type=_count, default=0)
    p.add_argument("--rounds", type=_count, default=None, help="round budget (default 2 log_K n)")
    p.add_argument("--stop", choices=["no_change", "budget"], default="no_change")
    p.add_argument("--lcs-m", type=_count, default=32, help="string length for --space lcs")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_nnd)

    p2 = sub.add_parser("2nrq", help="second-neighbor range query tools")
    sub2 = p2.add_subparsers(dest="subcommand", required=True)

    ps = sub2.add_parser("schedule", help="solve the radius/rate schedule (pure numerics)")
    ps.add_argument("--n", type=_count, required=True)
    ps.add_argument("--k", type=_count, required=True)
    ps.add_argument("--d", type=_count, required=True)
    ps.add_argument("--alpha", type=float, default=0.5)
    ps.add_argument("--format", choices=["csv", "json"], default="csv")
    ps.add_argument("--out", default=None)
    ps.set_defaults(func=cmd_2nrq_schedule)

    pm = sub2.add_parser("simulate", help="desk-scale Monte Carlo of the graph process")
    pm.add_argument("--n", type=_count, required=True)
    pm.add_argument("--k", type=_count, required=True)
    pm.add_argument("--d", type=_count, required=True)
    pm.add_argument("--alpha", type=float, default=0.5)
    pm.add_argument("--seed", type=_count, default=0)
    pm.add_argument("--sample-vertices", type=_count, default=500)
    pm.add_argument("--idealized-inputs", action="store_true",
                    help="feed each round an exact rate-theta sample (one-step diagnostic)")
    pm.add_argument("--out", default=None)
    pm.set_defaults(func=cmd_2nrq_simulate)

    p3 = sub.add_parser("crs", help="concordant-ranking-system tools")
    sub3 = p3.add_subparsers(dest="subcommand", required=True)

    pe = sub3.add_parser("enumerate", help="exhaustive census of pair orders (n <= 5)")
    pe.add_argument("--n", type=_count, required=True)
    pe.add_argument("--out", default=None)
    pe.set_defaults(func=cmd_crs_enumerate)

    pb = sub3.add_parser("embed", help="sup-norm embedding of a concordant system")
    pb.add_argument("--example", choices=["concordant5"], default=None)
    pb.add_argument("--n", type=_count, default=8)
    pb.add_argument("--seed", type=_count, default=0)
    pb.add_argument("--format", choices=["csv", "json"], default="csv")
    pb.add_argument("--out", default=None)
    pb.set_defaults(func=cmd_crs_embed)

    pc = sub3.add_parser("special", help="construct an extreme pair order")
    pc.add_argument("--kind", choices=["powers2", "baranyai", "eulerian"], required=True)
    pc.add_argument("--n", type=_count, required=True)
    pc.add_argument("--check", choices=["isolated", "component", "none"], default="none")
    pc.add_argument("--cap", type=_count, default=20000)
    pc.add_argument("--out", default=None)
    pc.set_defaults(func=cmd_crs_special)

    pf = sub3.add_parser("fraction", help="white-edge fraction, exact and Monte Carlo")
    pf.add_argument("--n", type=_count, required=True)
    pf.add_argument("--samples", type=_count, default=100000)
    pf.add_argument("--seed", type=_count, default=0)
    pf.add_argument("--out", default=None)
    pf.set_defaults(func=cmd_crs_fraction)

    p4 = sub.add_parser("diag", help="initial-graph diameter and expansion experiments")
    sub4 = p4.add_subparsers(dest="subcommand", required=True)

    pd = sub4.add_parser("diameter", help="measure undirected diameters of random K-out graphs")
    pd.add_argument("--n", type=_count, required=True)
    pd.add_argument("--k", type=_count, required=True)
    pd.add_argument("--trials", type=_count, default=50)
    pd.add_argument("--eps", type=float, default=0.5)
    pd.add_argument("--seed", type=_count, default=0)
    pd.add_argument("--out", default=None)
    pd.add_argument("--histogram", default=None, help="also write a diameter histogram CSV")
    pd.set_defaults(func=cmd_diag_diameter)

    px = sub4.add_parser("expansion", help="sample vertex sets and check the expansion inequality")
    px.add_argument("--n", type=_count, required=True)
    px.add_argument("--k", type=_count, required=True)
    px.add_argument("--alpha", type=float, default=0.05, help="set-size coefficient")
    px.add_argument("--eps", type=float, default=1.0)
    px.add_argument("--sets", type=_count, default=10000)
    px.add_argument("--seed", type=_count, default=0)
    px.add_argument("--out", default=None)
    px.set_defaults(func=cmd_diag_expansion)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.version:
        print(f"nndlab {__version__} (golden schedule sha256/12: {golden_schedule_checksum()})")
        return 0
    if not getattr(args, "func", None):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 4
    except (InputError, NndlabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
