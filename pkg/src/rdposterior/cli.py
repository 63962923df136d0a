"""Command-line harness: calibration queries, single releases, and sweeps.

Exit codes: 0 success, 1 usage or validation error, 2 release refused.
"""

import argparse
import json
import sys

import numpy as np

from . import glm as glm_mod
from .calibrate import find_m, find_r
from .data import (
    DatasetError,
    PreprocessConfig,
    load_csv,
    load_schema,
    parse_label_rule,
    preprocess_glm,
    synth_glm,
    write_matrix_csv,
)
from .expfam import BetaBernoulli, DirichletCategorical, GaussianMean, PrivacyBudget
from .experiments import ExperimentSpec, run_experiment, write_csv
from .mechanisms import (
    ReleaseRefusedError,
    RngStream,
    beta_stat_query,
    gaussian_baseline,
    sample_concentrated,
    sample_diffused,
    sample_direct,
)
from .metrics import glm_test_metrics

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REFUSED = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class UsageError(ValueError):
    pass


def _parse_system(text):
    name, _, args = text.partition(":")
    if name in ("beta", "beta_bernoulli"):
        return BetaBernoulli()
    if name in ("dirichlet", "dirichlet_categorical"):
        return DirichletCategorical(int(args))
    if name in ("gaussian", "gaussian_mean"):
        sigma, clip = (float(v) for v in args.split(","))
        return GaussianMean(sigma, clip)
    raise UsageError(f"unknown system {text!r}")


def _parse_prior(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"prior must be comma-separated numbers, got {text!r}") from None


def _budget(args):
    if args.lam is None or args.epsilon is None:
        raise UsageError("--lambda and --epsilon are required for this mode")
    return PrivacyBudget(args.lam, args.epsilon)


def _load_column(args, parser_name):
    if args.data is None:
        return None
    if args.schema:
        ds = load_csv(args.data, load_schema(args.schema))
        column = args.column or ds.label_column
        return [row[column] for row in ds.rows]
    values = []
    with open(args.data, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or (lineno == 1 and not _is_number(line)):
                continue  # blank or header line
            if not _is_number(line):
                raise DatasetError(f"{args.data}, line {lineno}: not a number: {line!r}")
            values.append(float(line))
    return values


def _is_number(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def _expfam_data(args):
    values = _load_column(args, "sample")
    if values is None:
        if args.ones is None and args.zeros is None:
            return []
        return [1.0] * (args.ones or 0) + [0.0] * (args.zeros or 0)
    return values


def cmd_calibrate(args):
    system = _parse_system(args.system)
    prior = _parse_prior(args.prior)
    budget = _budget(args)
    search = find_r if args.mode == "diffused" else find_m
    result = search(system, prior, args.n, budget, args.max_iters)
    print(json.dumps({
        "coefficient": result.coefficient,
        "achieved_sup": "inf" if result.achieved_sup == float("inf") else result.achieved_sup,
        "iterations_used": result.iterations_used,
        "satisfied": result.satisfied,
        "mode": args.mode,
    }))
    return EXIT_OK if result.satisfied else EXIT_REFUSED


def cmd_sample(args):
    system = _parse_system(args.system)
    prior = _parse_prior(args.prior)
    data = _expfam_data(args)
    rng = RngStream(args.seed)
    if args.mode == "direct":
        out = sample_direct(system, prior, data, rng)
    elif args.mode == "diffused":
        out = sample_diffused(system, prior, data, _budget(args), rng, args.max_iters)
    elif args.mode == "concentrated":
        out = sample_concentrated(system, prior, data, _budget(args), rng, args.max_iters)
    elif args.mode == "gaussian":
        out = gaussian_baseline(prior, data, _budget(args), rng)
    else:
        raise UsageError(f"sample does not support mode {args.mode!r}")
    print(json.dumps(out.to_json()))
    return EXIT_OK


def cmd_statquery(args):
    prior = _parse_prior(args.prior)
    values = _load_column(args, "statquery")
    if values is None:
        raise UsageError("statquery requires --data")
    rho = beta_stat_query(values, float, prior, _budget(args), args.mode, RngStream(args.seed),
                          args.max_iters)
    print(json.dumps({"rho": rho, "n": len(values), "mode": args.mode, "seed": args.seed}))
    return EXIT_OK


def _glm_train_data(args):
    if args.synth:
        n, d = (int(v) for v in args.synth.split(","))
        gen = np.random.Generator(np.random.PCG64(args.seed + 10_000))
        w_true = gen.standard_normal(d)
        w_true *= 10.0 / np.linalg.norm(w_true)
        train = synth_glm(n, d, w_true, args.link, args.seed + 10_001)
        test = synth_glm(max(200, n // 3), d, w_true, args.link, args.seed + 10_002)
        return train + test
    if not args.data or not args.schema:
        raise UsageError("glm-train needs --data/--schema or --synth n,d")
    ds = load_csv(args.data, load_schema(args.schema))
    cfg = PreprocessConfig(
        test_fraction=args.test_fraction,
        split_seed=args.split_seed,
        label_rule=parse_label_rule(args.label_rule),
    )
    split = preprocess_glm(ds, cfg)
    if args.cache_prefix:
        write_matrix_csv(args.cache_prefix + "_train.csv", split.train_x, split.train_y, split.feature_names)
        write_matrix_csv(args.cache_prefix + "_test.csv", split.test_x, split.test_y, split.feature_names)
    return split.train_x, split.train_y, split.test_x, split.test_y


def cmd_glm_train(args):
    train_x, train_y, test_x, test_y = _glm_train_data(args)
    spec = glm_mod.binary_spec(args.link, c=1.0)
    cfg = glm_mod.SamplerConfig(burn_in=args.burn_in)
    rng = RngStream(args.seed)
    if args.mode == "concentrated":
        ws = glm_mod.concentrated_glm(spec, train_x, train_y, args.beta0, _budget(args), cfg, rng)
    elif args.mode == "diffused":
        ws = glm_mod.diffuse_glm(spec, train_x, train_y, args.beta0, _budget(args), cfg, rng)
    elif args.mode == "ops":
        if args.epsilon is None:
            raise UsageError("--epsilon (pure-DP level) is required for ops")
        ws = glm_mod.ops_sample(spec, train_x, train_y, args.beta0, args.epsilon, cfg, rng)
    else:
        raise UsageError(f"glm-train does not support mode {args.mode!r}")
    metrics = glm_test_metrics(ws.w, spec, test_x, test_y)
    out = ws.to_json()
    out["metrics"] = metrics
    print(json.dumps(out))
    return EXIT_OK


def cmd_experiment(args):
    spec = ExperimentSpec.load(args.spec, seed=args.seed, replicates=args.replicates)
    records = run_experiment(spec)
    write_csv(records, args.out)
    print(f"wrote {len(records)} rows to {args.out}", file=sys.stderr)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="rdposterior", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, budget=True):
        p.add_argument("--system", default="beta_bernoulli")
        p.add_argument("--prior", default="6,18")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-iters", type=int, default=500)
        if budget:
            p.add_argument("--lambda", dest="lam", type=float)
            p.add_argument("--epsilon", type=float)

    p = sub.add_parser("calibrate", help="binary-search a release coefficient")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=("diffused", "concentrated"), default="diffused")
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("sample", help="release one posterior sample")
    common(p)
    p.add_argument("--mode", choices=("direct", "diffused", "concentrated", "gaussian"),
                   default="direct")
    p.add_argument("--data")
    p.add_argument("--schema")
    p.add_argument("--column")
    p.add_argument("--ones", type=int)
    p.add_argument("--zeros", type=int)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("statquery", help="release a privatized statistical query")
    common(p)
    p.add_argument("--mode", choices=("diffused", "concentrated"), default="diffused")
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--column")
    p.set_defaults(fn=cmd_statquery)

    p = sub.add_parser("glm-train", help="sample GLM weights under a budget")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--mode", choices=("concentrated", "diffused", "ops"), default="diffused")
    p.add_argument("--link", choices=("logistic", "probit", "cloglog"), default="logistic")
    p.add_argument("--data")
    p.add_argument("--schema")
    p.add_argument("--synth", help="n,d for synthetic sphere data")
    p.add_argument("--label-rule", help="lt:<x>, ge:<x>, or eq:<value>")
    p.add_argument("--beta0", type=float, default=1e-3)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--test-fraction", type=float, default=1.0 / 3.0)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--cache-prefix")
    p.set_defaults(fn=cmd_glm_train)

    p = sub.add_parser("experiment", help="run a sweep spec to CSV")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--replicates", type=int)
    p.set_defaults(fn=cmd_experiment)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ReleaseRefusedError as err:
        print(f"release refused: {err}", file=sys.stderr)
        return EXIT_REFUSED
    except (DatasetError, ValueError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
