"""Command line entry point: ``rgrl {run,oos,sweep,eval,gen}``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 I/O or
file format error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from . import data
from .exceptions import ConfigError, DataFormatError, NumericalError
from .metrics import evaluate
from .pipeline import RunConfig, run_full, run_oos, sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

_HP_FLAGS = ("alpha", "beta", "gamma", "norm")


def _add_run_options(p):
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory for artifacts")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--norm", choices=("l1", "l2"))
    p.add_argument("--rho", type=float)
    p.add_argument("--dsub", type=int)
    p.add_argument("--k", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="rgrl", description="Relation-guided subspace clustering")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_options(sub.add_parser("run", help="full pipeline on one dataset"))
    p = sub.add_parser("oos", help="train on a seed subset, label the rest by nearest neighbour")
    _add_run_options(p)
    p.add_argument("--seed-fraction", type=float)
    p.add_argument("--seed-size", type=int)
    p = sub.add_parser("sweep", help="grid search over beta and gamma")
    _add_run_options(p)
    p.add_argument("--beta-grid", type=float, nargs="+")
    p.add_argument("--gamma-grid", type=float, nargs="+")

    p = sub.add_parser("eval", help="clustering metrics for two label files")
    p.add_argument("truth")
    p.add_argument("predicted")

    p = sub.add_parser("gen", help="write a synthetic union-of-subspaces dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--k", type=int, default=3, help="number of subspaces")
    p.add_argument("--dsub", type=int, default=2, help="subspace dimension")
    p.add_argument("--ambient", type=int, default=20)
    p.add_argument("--per-subspace", type=int, default=30)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args, mode):
    cfg = RunConfig.from_json(args.config).to_dict()
    # `run` keeps an ablation-sc mode from the file; the other commands set their own
    if not (mode == "full-pipeline" and cfg["mode"] == "ablation-sc"):
        cfg["mode"] = mode
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["out"] = args.out
    for name in _HP_FLAGS:
        if getattr(args, name) is not None:
            cfg["hyperparams"][name] = getattr(args, name)
    for flag, key in (("rho", "rho"), ("dsub", "d_sub"), ("k", "k")):
        if getattr(args, flag) is not None:
            cfg["affinity"][key] = getattr(args, flag)
    if mode == "oos":
        if args.seed_fraction is not None:
            cfg["oos"] = {"seed_fraction": args.seed_fraction}
        if args.seed_size is not None:
            cfg["oos"] = {"seed_size": args.seed_size}
    if mode == "sweep":
        if args.beta_grid:
            cfg["sweep"]["beta"] = args.beta_grid
        if args.gamma_grid:
            cfg["sweep"]["gamma"] = args.gamma_grid
    return RunConfig.from_dict(cfg)


def print_metrics(metrics, prefix="", file=None):
    file = file or sys.stdout
    for name, value in metrics.items():
        if isinstance(value, dict):
            print_metrics(value, f"{prefix}{name}.", file)
        elif isinstance(value, float):
            print(f"{prefix}{name} {value:.6f}", file=file)
        else:
            print(f"{prefix}{name} {value}", file=file)


def _dispatch(args):
    if args.command == "eval":
        print_metrics(evaluate(data.read_labels(args.truth), data.read_labels(args.predicted)))
    elif args.command == "gen":
        ds = data.make_subspaces(args.k, args.dsub, args.ambient, args.per_subspace, args.noise, args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        data.write_matrix(out / "X.rgm", ds.X)
        data.write_labels(out / "labels.txt", ds.labels)
        with open(out / "meta.json", "w") as fh:
            json.dump(ds.meta, fh, indent=2, sort_keys=True)
        print(f"wrote {ds.n_samples} samples of dimension {ds.n_features} to {out}")
    elif args.command == "run":
        print_metrics(run_full(config_from_args(args, "full-pipeline")))
    elif args.command == "oos":
        print_metrics(run_oos(config_from_args(args, "oos")))
    elif args.command == "sweep":
        rows = sweep(config_from_args(args, "sweep"))
        print("beta\tgamma\tacc\tnmi\tpur\tbest")
        for r in rows:
            print(f"{r['beta']:g}\t{r['gamma']:g}\t{r['acc']:.6f}\t{r['nmi']:.6f}\t{r['pur']:.6f}\t"
                  f"{'*' if r['best'] else ''}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _dispatch(args)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, DataFormatError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
