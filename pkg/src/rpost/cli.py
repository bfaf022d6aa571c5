"""Command-line interface.

Subcommands: ``table-kld`` and ``regression`` run the replication
experiments and write the results table; ``predict`` fits a posterior to
a data file and tabulates a predictive density; ``diagnose-merging``
tracks the marginal/truth log-ratio across sample sizes. A JSON config
file can supply any experiment field; explicit flags override it. Given
the same seed, every command writes byte-identical CSV output.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from ._utils import derive_rng
from .estimators import arpde, erpde, hrpde
from .families import NormalLocation
from .posterior import ProposalSpec, discrete_posterior, importance_sample
from .priors import DiscretePrior, ImproperUniform, NormalConjugate, load_discrete_prior
from .simulate import (
    ExperimentSpec,
    run_merging_diagnostic,
    run_normal_mean_kld,
    run_regression_bias_mse,
)


def _alphas(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad alpha list {text!r}") from exc


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    # defaults stay None so a config file can fill unset flags
    p.add_argument("--n", type=int, default=None, help="sample size")
    p.add_argument("--eps", type=float, default=None, help="contamination proportion")
    p.add_argument("--alphas", type=_alphas, default=None,
                   help="comma-separated tuning values, e.g. 0,0.2,0.5,1")
    p.add_argument("--prior", choices=["uniform", "conjugate"], default=None)
    p.add_argument("--tau", type=float, default=None, help="conjugate prior scale")
    p.add_argument("--reps", type=int, default=None, help="replication count")
    p.add_argument("--draws", type=int, default=None, help="importance-sampling draws")
    p.add_argument("--seed", type=int, default=None, help="experiment seed")
    p.add_argument("--config", default=None, help="JSON file with experiment fields")
    p.add_argument("--json", dest="json_out", default=None,
                   help="also write the table as JSON to this path")
    p.add_argument("--out", required=True, help="output CSV path")


_SPEC_DEFAULTS = {
    "n": 20,
    "eps": 0.0,
    "alphas": (0.0, 0.2, 0.3, 0.5, 0.7, 0.8, 1.0),
    "prior": "uniform",
    "tau": 3.0,
    "reps": 200,
    "draws": 20000,
    "seed": 42,
}

_SPEC_FIELD = {"alphas": "alpha_grid", "reps": "replications"}


def _build_spec(args, experiment: str) -> ExperimentSpec:
    config = {}
    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise SystemExit(f"{args.config}: expected a JSON object")
    fields = {}
    for key, default in _SPEC_DEFAULTS.items():
        flag = getattr(args, key)
        value = flag if flag is not None else config.get(key, default)
        fields[_SPEC_FIELD.get(key, key)] = tuple(value) if key == "alphas" else value
    return ExperimentSpec(experiment=experiment, **fields)


def _cmd_table_kld(args) -> int:
    spec = _build_spec(args, "normal_mean_kld")
    table = run_normal_mean_kld(spec)
    table.to_csv(args.out)
    if args.json_out:
        table.to_json(args.json_out)
    return 0


def _cmd_regression(args) -> int:
    spec = _build_spec(args, "regression_bias_mse")
    table = run_regression_bias_mse(spec)
    table.to_csv(args.out)
    if args.json_out:
        table.to_json(args.json_out)
    return 0


def _read_sample(path) -> np.ndarray:
    values = []
    with open(path) as fh:
        for row in csv.reader(fh):
            for tok in row:
                tok = tok.strip()
                if not tok:
                    continue
                try:
                    values.append(float(tok))
                except ValueError:
                    # tolerate a header row
                    continue
    if not values:
        raise SystemExit(f"{path}: no numeric values found")
    return np.asarray(values)


def _cmd_predict(args) -> int:
    data = _read_sample(args.data)
    family = NormalLocation(sigma=args.sigma)
    if args.prior == "uniform":
        prior = ImproperUniform()
    elif args.prior == "conjugate":
        prior = NormalConjugate(np.array([args.theta0]), args.tau)
    else:
        prior = load_discrete_prior(args.prior_file)
    if isinstance(prior, DiscretePrior):
        wp = discrete_posterior(family, prior, data, args.alpha)
    else:
        if data.size < 2:
            raise SystemExit("need at least 2 observations for the sampling proposal")
        proposal = ProposalSpec(np.array([float(np.mean(data))]),
                                np.array([[float(np.var(data, ddof=1))]]), args.draws)
        wp = importance_sample(family, prior, data, args.alpha, proposal,
                               derive_rng(args.seed, 0))
    z_grid = np.linspace(args.zmin, args.zmax, args.zpoints)
    fn = {"erpde": erpde, "arpde": arpde, "hrpde": hrpde}[args.estimator]
    fn(family, wp, z_grid, alpha=args.alpha).to_csv(args.out)
    return 0


def _cmd_diagnose_merging(args) -> int:
    rows = run_merging_diagnostic(args.n_list, args.alpha, args.tau, args.seed)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "alpha", "statistic"])
        for n, alpha, stat in rows:
            writer.writerow([n, repr(alpha), repr(stat)])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpost",
        description="Robust pseudo-posterior experiments and predictive densities",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table-kld", help="predictive-density KLD table for the "
                                         "contaminated normal-mean experiment")
    _add_experiment_flags(p)
    p.set_defaults(func=_cmd_table_kld)

    p = sub.add_parser("regression", help="bias/MSE table for the contaminated "
                                          "fixed-design regression experiment")
    _add_experiment_flags(p)
    p.set_defaults(func=_cmd_regression)

    p = sub.add_parser("predict", help="fit a posterior to a data file and "
                                       "tabulate a predictive density")
    p.add_argument("--data", required=True, help="CSV file of observations")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--prior", choices=["uniform", "conjugate", "discrete"],
                   default="uniform")
    p.add_argument("--theta0", type=float, default=0.0, help="conjugate prior center")
    p.add_argument("--tau", type=float, default=3.0, help="conjugate prior scale")
    p.add_argument("--prior-file", default=None,
                   help="JSON support file for --prior discrete")
    p.add_argument("--sigma", type=float, default=1.0, help="known model scale")
    p.add_argument("--estimator", choices=["erpde", "arpde", "hrpde"], default="erpde")
    p.add_argument("--zmin", type=float, required=True)
    p.add_argument("--zmax", type=float, required=True)
    p.add_argument("--zpoints", type=int, default=1001)
    p.add_argument("--draws", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("diagnose-merging", help="marginal/truth log-ratio across "
                                                "sample sizes (conjugate prior)")
    p.add_argument("--n-list", type=_ints, required=True)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--tau", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_diagnose_merging)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "predict" and args.prior == "discrete" and not args.prior_file:
        raise SystemExit("--prior discrete requires --prior-file")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
