"""Command line entry point.

Exit codes: 0 success, 1 usage error, 2 invalid config, 3 runtime failure.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import SCENARIO_NAMES, ConfigError, load_config, shipped_scenario_path
from .runner import load_carry, paper_protocol, run_experiment, write_results

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="continual-aif", description="Continual-learning active inference experiments.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--config", required=True, help="scenario TOML file, or env1/env2/env3 for a shipped one")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output directory (default: config 'output' or results/<name>)")
    run.add_argument("--carry", help="final_a.json from an earlier run to start from")

    proto = sub.add_parser("paper-protocol", help="env1 -> env2 and env1 -> env3 relearning protocol")
    proto.add_argument("--out", required=True)
    proto.add_argument("--seed", type=int)

    val = sub.add_parser("validate", help="check scenario files without running them")
    val.add_argument("--config", required=True, nargs="+")
    return parser


def resolve_config_path(arg):
    path = Path(arg)
    if path.exists():
        return path
    if arg in SCENARIO_NAMES:
        return shipped_scenario_path(arg)
    raise UsageError(f"config file not found: {arg}")


def resolve_seed(flag):
    """Explicit flag, else the AIF_SEED environment variable, else None (use the config's)."""
    if flag is not None:
        return flag
    env = os.environ.get("AIF_SEED")
    if env is None or env == "":
        return None
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"AIF_SEED must be an integer, got {env!r}") from None


def _cmd_run(args):
    config = load_config(resolve_config_path(args.config))
    carry = load_carry(args.carry) if args.carry else None
    result = run_experiment(config, carry=carry, seed=resolve_seed(args.seed))
    out = args.out or config.output or f"results/{config.name}"
    write_results(result, out)
    last = result.reports[-1]
    print(f"{config.name}: {config.iterations} iterations, final {config.scope_label} score "
          f"{last.total_norm:.4f} ({result.duration:.2f}s) -> {out}")


def _cmd_protocol(args):
    seed = resolve_seed(args.seed)
    results = paper_protocol(seed=0 if seed is None else seed)
    for name, result in results.items():
        out = Path(args.out) / name
        write_results(result, out)
        print(f"{name}: final {result.config.scope_label} score {result.reports[-1].total_norm:.4f} -> {out}")


def _cmd_validate(args):
    failed = False
    for arg in args.config:
        path = resolve_config_path(arg)
        try:
            config = load_config(path)
        except ConfigError as exc:
            failed = True
            print(f"{path}: invalid", file=sys.stderr)
            for err in exc.errors:
                print(f"  {err}", file=sys.stderr)
        else:
            print(f"{path}: ok ({config.name}, {config.iterations} iterations)")
    if failed:
        return EXIT_CONFIG
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": _cmd_run, "paper-protocol": _cmd_protocol, "validate": _cmd_validate}
    try:
        return handlers[args.command](args) or EXIT_OK
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
