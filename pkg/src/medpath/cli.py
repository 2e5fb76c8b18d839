"""Command-line front end: fit, test, simulate, vine-test, reproduce.

Exit codes: 0 success, 2 input problems, 3 estimation failures, 4 internal
errors. All reports are JSON; datasets travel as headered CSV.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .abtest import AbConfig, run_mediation_test
from .data import Dataset
from .errors import EstimationError, InputError, MedpathError
from .gcopula import SemSpec, SemTemplate, fit_full_mle, fit_ifm, simulate_dataset
from .simstudy import Scenario, generate_scenario_data, reproduce
from .vine import pathway_independence_test, PATHWAYS

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ESTIMATION = 3
EXIT_INTERNAL = 4


def _write_json(payload: dict, output: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_dataset(args) -> Dataset:
    confounders = tuple(args.confounders or ())
    return Dataset.from_csv(
        args.input,
        exposure=args.exposure,
        mediator=args.mediator,
        outcome=args.outcome,
        confounders=confounders,
    )


def _add_role_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="input CSV with header row")
    parser.add_argument("--exposure", required=True, help="exposure column name")
    parser.add_argument("--mediator", required=True, help="mediator column name")
    parser.add_argument("--outcome", required=True, help="outcome column name")
    parser.add_argument(
        "--confounders",
        nargs="*",
        default=[],
        metavar="COL",
        help="confounder column names",
    )


def cmd_test(args) -> int:
    data = _load_dataset(args)
    config = AbConfig(
        B=args.B,
        lam=args.lam,
        seed=args.seed,
        contrast=(args.s_star, args.s),
    )
    report = run_mediation_test(data, args.method, args.family, config)
    _write_json(report.to_json_dict(), args.output)
    return EXIT_OK


def cmd_fit(args) -> int:
    data = _load_dataset(args)
    template = SemTemplate(
        exposure_family=args.exposure_family,
        mediator_family=args.mediator_family,
        outcome_family=args.outcome_family,
    )
    fit = fit_ifm(data, template) if args.method == "ifm" else fit_full_mle(data, template)
    _write_json(fit.to_config(), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.sem_config:
        with open(args.sem_config, encoding="utf-8") as fh:
            spec = SemSpec.from_config(json.load(fh))
        data = simulate_dataset(spec, np.empty((args.n, 0)), args.seed)
        resolved = spec.to_config()
    else:
        scenario = Scenario(
            alpha=args.alpha,
            beta=args.beta,
            gamma=args.gamma,
            sigma_m=args.sigma_m,
            sigma_y=args.sigma_y,
            n=args.n,
        )
        data = generate_scenario_data(scenario, args.seed)
        resolved = scenario.to_config()
    data.to_csv(args.output)
    manifest = {"seed": args.seed, "n": args.n, "scenario": resolved}
    with open(args.output + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def cmd_vine_test(args) -> int:
    ds = Dataset.from_csv(
        args.input,
        exposure=args.exposure,
        mediator=args.mediator,
        outcome=args.outcome,
        confounders=(args.node2,),
    )
    matrix = np.column_stack(
        [ds.exposure, ds.confounders[:, 0], ds.mediator, ds.outcome]
    )
    result = pathway_independence_test(matrix, args.pathway, B=args.B, seed=args.seed)
    _write_json(result.to_dict(), args.output)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    out = reproduce(
        args.outdir, master_seed=args.seed, scale=args.scale, threads=args.threads
    )
    summary = {"outputs": {k: out[k] for k in ("type1_qq", "power", "manifest")}}
    summary["empirical_size"] = out["sizes"]
    _write_json(summary, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="medpath",
        description="Copula-SEM mediation analysis: fitting, testing, simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run a mediation test on a CSV dataset")
    _add_role_flags(p_test)
    p_test.add_argument("--method", choices=["sobel", "boot", "ab"], default="ab")
    p_test.add_argument("--B", type=int, default=199, help="bootstrap replicates")
    p_test.add_argument("--lambda", type=float, default=2.0, dest="lam",
                        help="adaptive threshold")
    p_test.add_argument("--seed", type=int, default=0)
    p_test.add_argument(
        "--family", choices=["gaussian", "bernoulli", "poisson"], default="gaussian",
        help="outcome family",
    )
    p_test.add_argument("--s", type=float, default=1.0, help="exposure level s")
    p_test.add_argument("--s-star", type=float, default=0.0, dest="s_star",
                        help="reference exposure level s*")
    p_test.add_argument("--output", help="write the JSON report here (default stdout)")
    p_test.set_defaults(func=cmd_test)

    p_fit = sub.add_parser("fit", help="fit a Gaussian copula SEM")
    _add_role_flags(p_fit)
    p_fit.add_argument("--method", choices=["ifm", "mle"], default="ifm")
    for node in ("exposure", "mediator", "outcome"):
        p_fit.add_argument(
            f"--{node}-family",
            choices=["gaussian", "bernoulli", "poisson"],
            default="gaussian",
            dest=f"{node}_family",
        )
    p_fit.add_argument("--output")
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="simulate a mediation dataset to CSV")
    p_sim.add_argument("--n", type=int, default=500)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--alpha", type=float, default=0.0)
    p_sim.add_argument("--beta", type=float, default=0.0)
    p_sim.add_argument("--gamma", type=float, default=1.0)
    p_sim.add_argument("--sigma-m", type=float, default=0.5, dest="sigma_m")
    p_sim.add_argument("--sigma-y", type=float, default=0.5, dest="sigma_y")
    p_sim.add_argument(
        "--sem-config", dest="sem_config",
        help="JSON copula-SEM config; overrides the scenario flags",
    )
    p_sim.add_argument("--output", required=True, help="output CSV path")
    p_sim.set_defaults(func=cmd_simulate)

    p_vine = sub.add_parser(
        "vine-test", help="test pathway independence on a 4-node dataset"
    )
    p_vine.add_argument("--input", required=True)
    p_vine.add_argument("--exposure", required=True)
    p_vine.add_argument("--node2", required=True, help="first (upstream) mediator column")
    p_vine.add_argument("--mediator", required=True, help="second mediator column")
    p_vine.add_argument("--outcome", required=True)
    p_vine.add_argument("--pathway", choices=list(PATHWAYS), required=True)
    p_vine.add_argument("--B", type=int, default=199)
    p_vine.add_argument("--seed", type=int, default=0)
    p_vine.add_argument("--output")
    p_vine.set_defaults(func=cmd_vine_test)

    p_rep = sub.add_parser(
        "reproduce", help="run the full type-I-error and power studies"
    )
    p_rep.add_argument("--outdir", required=True)
    p_rep.add_argument("--seed", type=int, default=202406, help="master seed")
    p_rep.add_argument(
        "--scale", type=float, default=1.0,
        help="shrink replications and bootstrap size proportionally",
    )
    p_rep.add_argument("--threads", type=int, default=None)
    p_rep.add_argument("--output")
    p_rep.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EstimationError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except MedpathError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
