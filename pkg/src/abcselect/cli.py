"""Command-line interface.

Subcommands: run a configured study, simulate from any model in the zoo,
compute a two-sample distance between CSV files, evaluate exact posteriors,
and validate a toad observation matrix.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .discrepancies import KernelSpec, cvm, log_transform, mmd2_unbiased, wasserstein1
from .errors import ConfigError
from .oracles import exact_posterior_expo, exact_posterior_normal_known
from .reporting import emit_outputs
from .samplers import (
    GandKParams,
    StableParams,
    sample_exponential,
    sample_gandk,
    sample_gamma,
    sample_lognormal,
    sample_normal,
    sample_stable,
    sample_uniform,
)
from .seeding import SeedSpec
from .studies import parse_config, run_study
from .toads import ToadConfig, load_toad_matrix, simulate_toads


def _read_column(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", ndmin=1)
    return np.asarray(data, dtype=float).ravel()


def _parse_params(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k] = float(v)
    return out


def _cmd_run(args):
    with open(args.config) as fh:
        raw = json.load(fh)
    if args.seed is not None:
        raw["master_seed"] = args.seed
    if args.workers is not None:
        raw["workers"] = args.workers
    elif "workers" not in raw and os.environ.get("ABCSELECT_WORKERS"):
        raw["workers"] = int(os.environ["ABCSELECT_WORKERS"])
    if args.out is not None:
        raw["out_dir"] = args.out
    cfg = parse_config(raw)
    table = run_study(cfg)
    out_dir = cfg.out_dir or "results"
    written = emit_outputs(table, out_dir, plots=cfg.plots or args.plots)
    cols = ("method", "quantile", "mae", "mse", "per")
    print("  ".join(f"{c:>14}" for c in cols))
    for row in table.rows:
        vals = [row[c] for c in cols]
        print("  ".join(
            f"{v:>14.4f}" if isinstance(v, float) else f"{str(v):>14}" for v in vals
        ))
    print(f"outputs: {', '.join(sorted(written))} -> {out_dir}")
    return 0


def _cmd_simulate(args):
    params = _parse_params(args.param)
    seed = SeedSpec(args.seed, 0)
    n = args.n
    name = args.model
    if name == "stable":
        data = sample_stable(
            StableParams(params.get("alpha", 1.7), params.get("gamma", 1.0)), n, seed)
    elif name == "gandk":
        data = sample_gandk(
            GandKParams(params.get("a", 0.0), params.get("b", 1.0),
                        params.get("g", 0.0), params.get("k", 0.0),
                        params.get("c", 0.8)), n, seed)
    elif name == "normal":
        data = sample_normal(params.get("mu", 0.0), params.get("sigma2", 1.0), n, seed)
    elif name == "exponential":
        data = sample_exponential(params.get("rate", 1.0), n, seed)
    elif name == "gamma":
        data = sample_gamma(params.get("shape", 2.0), params.get("rate", 1.0), n, seed)
    elif name == "lognormal":
        data = sample_lognormal(params.get("mu", 0.0), params.get("sigma2", 1.0), n, seed)
    elif name == "uniform":
        data = sample_uniform(params.get("lo", 0.0), params.get("hi", 1.0), n, seed)
    elif name in ("toad1", "toad2", "toad3"):
        model = int(name[-1])
        theta = [params.get("alpha", 1.7), params.get("gamma", 34.0),
                 params.get("p0", 0.6)]
        if model == 3:
            theta.append(params.get("d0", 758.0))
        cfg = ToadConfig(model, tuple(theta),
                         n_days=int(params.get("days", 63)),
                         n_toads=int(params.get("toads", 66)))
        data = simulate_toads(cfg, seed)
    else:
        raise ConfigError(f"unknown model {name!r}")
    out = np.atleast_1d(data)
    if args.out:
        np.savetxt(args.out, out, delimiter=",", fmt="%.17g")
        print(f"wrote {args.out}")
    else:
        np.savetxt(sys.stdout, out, delimiter=",", fmt="%.17g")
    return 0


def _cmd_distance(args):
    y = _read_column(args.file_a)
    z = _read_column(args.file_b)
    if args.log:
        y = log_transform(y)
        z = log_transform(z)
    if args.method == "wasserstein1":
        d = wasserstein1(y, z)
    elif args.method == "cvm":
        d = cvm(y, z)
    elif args.method == "mmd":
        kernel = (KernelSpec(bandwidth=args.bandwidth, rule="fixed")
                  if args.bandwidth else KernelSpec())
        d = mmd2_unbiased(y, z, kernel)
    elif args.method == "energy":
        d = mmd2_unbiased(y, z, KernelSpec(kind="energy"))
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown distance {args.method!r}")
    print(repr(float(d)))
    return 0


def _cmd_oracle(args):
    y = _read_column(args.datafile)
    if args.study == "expo_family":
        probs = exact_posterior_expo(y).model_probs
    elif args.study == "normal_known":
        probs = exact_posterior_normal_known(
            y, args.mu_tilde, args.sigma, args.c).model_probs
    else:  # pragma: no cover
        raise ConfigError(f"unknown oracle study {args.study!r}")
    print(",".join(repr(float(p)) for p in probs))
    return 0


def _cmd_toad_load(args):
    mat, report = load_toad_matrix(args.csv)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="abcselect",
        description="Likelihood-free Bayesian model selection (rejection ABC "
                    "with summary statistics or statistical distances).",
    )
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run a configured study")
    pr.add_argument("config", help="JSON experiment config")
    pr.add_argument("--seed", type=int, default=None, help="override master seed")
    pr.add_argument("--workers", type=int, default=None,
                    help="worker processes (default: config, else $ABCSELECT_WORKERS)")
    pr.add_argument("--out", default=None, help="output directory")
    pr.add_argument("--plots", action="store_true", help="also emit SVG plots")
    pr.set_defaults(func=_cmd_run)

    ps = sub.add_parser("simulate", help="draw from a model in the zoo")
    ps.add_argument("model", choices=[
        "stable", "gandk", "normal", "exponential", "gamma", "lognormal",
        "uniform", "toad1", "toad2", "toad3"])
    ps.add_argument("--n", type=int, default=100)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--out", default=None, help="write CSV here instead of stdout")
    ps.add_argument("--param", action="append", metavar="KEY=VALUE",
                    help="model parameter (repeatable)")
    ps.set_defaults(func=_cmd_simulate)

    pd = sub.add_parser("distance", help="two-sample distance between CSV files")
    pd.add_argument("method", choices=["wasserstein1", "cvm", "mmd", "energy"])
    pd.add_argument("file_a")
    pd.add_argument("file_b")
    pd.add_argument("--bandwidth", type=float, default=None,
                    help="fixed Gaussian bandwidth (default: median heuristic)")
    pd.add_argument("--log", action="store_true", help="log-transform both samples")
    pd.set_defaults(func=_cmd_distance)

    po = sub.add_parser("oracle", help="exact posterior probabilities")
    po.add_argument("study", choices=["expo_family", "normal_known"])
    po.add_argument("datafile")
    po.add_argument("--mu-tilde", dest="mu_tilde", type=float, default=3.0)
    po.add_argument("--sigma", type=float, default=1.0)
    po.add_argument("--c", type=float, default=100.0)
    po.set_defaults(func=_cmd_oracle)

    pt = sub.add_parser("toad-load", help="validate a toad observation matrix")
    pt.add_argument("csv")
    pt.set_defaults(func=_cmd_toad_load)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"abcselect: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
