"""
Command-line entry point for the matching market simulator.
"""

import argparse
import json
import logging
import os
import sys
from typing import Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from matchmarket.config import settings
from matchmarket.core.gale_shapley import agent_optimal_matching
from matchmarket.exceptions import InvalidScenarioError, ScenarioIOError, UnknownAlgorithmError
from matchmarket.models.market import true_rankings
from matchmarket.models.presets import list_presets
from matchmarket.models.run import Algorithm, TraceLevel
from matchmarket.schemas.run import RunConfig
from matchmarket.services.simulation_service import SimulationService, resolve_scenario
from matchmarket.services.summary_service import regret_curve_frame
from matchmarket.utils.file_utils import write_regret_curve_csv, write_summary_json, write_trace_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID_SCENARIO = 1
EXIT_BAD_ARGUMENTS = 2
EXIT_IO_FAILURE = 3


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scenario",
        required=True,
        help="Scenario JSON file or preset name (see the presets subcommand)",
    )
    parser.add_argument("--horizon", type=int, default=None, help="Rounds T (default: scenario value)")
    parser.add_argument("--delta", type=float, default=None, help="sec4-delta-example gap delta (default: 0.1)")
    parser.add_argument(
        "--period-c", type=int, default=None, help="sec4-delta-example switch period C (default: 10)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matchmarket",
        description="Decentralized bandit learning in matching markets with latent environments",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # IETP-GS on the delta example, traces and summary in out/
  matchmarket run --scenario sec4-delta-example --delta 0.05 --algorithm ietpgs \\
      --horizon 100000 --seed 7 --out out/

  # Check a scenario file
  matchmarket validate --scenario my_market.json

  # Agent-optimal stable matching of every environment
  matchmarket oracle --scenario uniform-gap-basic
""",
    )
    parser.add_argument("--log-level", default=None, help=f"Logging level (default: {settings.log_level})")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Simulate a scenario and write trace and summary files")
    _add_scenario_flags(run)
    run.add_argument(
        "--algorithm",
        choices=[a.value for a in Algorithm],
        default=Algorithm.ETPGS.value,
        help="Agent algorithm (default: etpgs)",
    )
    run.add_argument("--seed", type=int, default=0, help="Root seed (default: 0)")
    run.add_argument("--replications", type=int, default=1, help="Independent replications (default: 1)")
    run.add_argument("--out", default="out", help="Output directory (default: out)")
    run.add_argument(
        "--trace-level",
        choices=[level.value for level in TraceLevel],
        default=TraceLevel.ROUNDS.value,
        help="Trace granularity (default: rounds)",
    )
    run.add_argument(
        "--skip-validation",
        action="store_true",
        help="Run scenarios that fail validation (negative controls)",
    )
    run.add_argument("--cd-h", type=float, default=None, help="CUSUM threshold h (default: c1 log(NT/gamma))")
    run.add_argument(
        "--cd-alpha", type=float, default=None, help="Forced exploration rate (default: c2 sqrt(gamma/T log(NT/gamma)))"
    )
    run.add_argument(
        "--cd-gamma", type=float, default=None, help="Anticipated number of changes (default: scenario count)"
    )
    run.add_argument(
        "--cd-reference",
        choices=["frozen", "rolling"],
        default=None,
        help=f"CUSUM baseline: frozen at warm-up end or refreshed every forced round (default: {settings.cd_reference_mode})",
    )
    run.add_argument("--workers", type=int, default=None, help=f"Replication pool size (default: {settings.max_workers})")

    validate = subparsers.add_parser("validate", help="Check a scenario and print the report")
    _add_scenario_flags(validate)

    subparsers.add_parser("presets", help="List built-in scenarios")

    oracle = subparsers.add_parser("oracle", help="Print the agent-optimal stable matching per environment")
    _add_scenario_flags(oracle)
    return parser


def _preset_params(args: argparse.Namespace) -> Dict[str, float]:
    params: Dict[str, float] = {}
    if args.delta is not None:
        params["delta"] = args.delta
    if args.period_c is not None:
        params["period_c"] = args.period_c
    return params


def _cmd_presets(args: argparse.Namespace) -> int:
    for info in list_presets():
        params = ", ".join(f"{k}={v}" for k, v in info.parameters.items())
        print(f"{info.name}: {info.description}" + (f" [{params}]" if params else ""))
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    schema = resolve_scenario(args.scenario, args.horizon, _preset_params(args))
    report = SimulationService().validate(schema, args.horizon)
    print(report.model_dump_json(indent=2))
    if not report.passed:
        logger.error(f"Scenario '{schema.name}' failed validation: {', '.join(report.clauses())}")
        return EXIT_INVALID_SCENARIO
    return EXIT_OK


def _cmd_oracle(args: argparse.Namespace) -> int:
    schema = resolve_scenario(args.scenario, args.horizon, _preset_params(args))
    instance = schema.to_instance(args.horizon)
    matchings: List[dict] = []
    for window in range(instance.n_windows):
        for env in range(instance.n_envs):
            rankings = true_rankings(instance, env, window)
            matching = agent_optimal_matching(rankings.tolist(), instance.environments[env])
            matchings.append({
                "window": window,
                "environment": instance.environments[env].env_id,
                "matching": {str(agent): arm for agent, arm in matching.as_dict().items()},
            })
    print(json.dumps({"scenario": schema.name, "matchings": matchings}, indent=2))
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    config = RunConfig(
        scenario=args.scenario,
        algorithm=args.algorithm,
        horizon=args.horizon,
        seed=args.seed,
        replications=args.replications,
        trace_level=args.trace_level,
        skip_validation=args.skip_validation,
        preset_params=_preset_params(args),
        cd_h=args.cd_h,
        cd_alpha=args.cd_alpha,
        cd_gamma=args.cd_gamma,
        cd_reference=args.cd_reference,
        workers=args.workers,
    )
    result = SimulationService().run(config)

    out_dir = args.out
    trace = result.trace_frame()
    if trace is not None:
        path = write_trace_csv(trace, os.path.join(out_dir, "trace.csv"))
        logger.info(f"Trace written to {path}")
    path = write_summary_json(result.summary, os.path.join(out_dir, "summary.json"))
    logger.info(f"Summary written to {path}")
    curves = np.stack([rep.cumulative for rep in result.replications])
    curve = regret_curve_frame(curves, [row.round for row in result.summary.checkpoints])
    path = write_regret_curve_csv(curve, os.path.join(out_dir, "regret_curve.csv"))
    logger.info(f"Regret curve written to {path}")
    print(f"Mean cumulative regret: {result.summary.final_regret_mean:.6g}")
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "validate": _cmd_validate,
    "presets": _cmd_presets,
    "oracle": _cmd_oracle,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments and dispatch a subcommand.

    Args:
        argv: argument list (``sys.argv[1:]`` when omitted)

    Returns:
        Exit code: 0 success, 1 invalid scenario, 2 bad arguments, 3 I/O failure
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format=settings.log_format,
    )
    try:
        return COMMANDS[args.command](args)
    except InvalidScenarioError as exc:
        logger.error(str(exc))
        if exc.report is not None:
            print(exc.report.model_dump_json(indent=2))
        return EXIT_INVALID_SCENARIO
    except (ScenarioIOError, OSError) as exc:
        logger.error(str(exc))
        return EXIT_IO_FAILURE
    except (ValidationError, UnknownAlgorithmError, KeyError, ValueError) as exc:
        logger.error(f"Bad arguments: {exc}")
        return EXIT_BAD_ARGUMENTS


if __name__ == "__main__":
    sys.exit(main())
