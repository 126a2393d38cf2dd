# File Summary: Primary application bootstrap handling environment setup, flag parsing and dispatch.

"""
kgdbw - kernel regression with decreasing bandwidth, experiment runner.

Subcommands are resolved through commands_registry; every command writes CSV
to --out (stdout by default) and a boxed summary to stderr.

Exit codes: 0 success, 1 failed verification or library error, 2 usage error.
"""

import argparse
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

from . import output
from .commands.common import parse_kernels
from .commands_registry import get_command_module, list_available_commands
from .errors import KernelRegressionError, UsageError
from .models.schema import ExperimentConfig, Settings
from .results import package_version

USER_ENV_PATH = Path.home() / ".config" / "kgdbw" / ".env"

ENV_SETTINGS = {
    "KGDBW_SEED": "seed",
    "KGDBW_JOBS": "jobs",
    "KGDBW_REPS": "reps",
}


def _load_additional_env(user_env: Optional[Path] = None):
    """Load .env defaults without overriding variables already set.

    Load order (first one that sets a variable wins):
      1) Existing process environment
      2) Project .env (cwd/.env)
      3) User config .env (~/.config/kgdbw/.env)
    """
    try:
        from dotenv import dotenv_values, load_dotenv
    except ImportError:
        return
    load_dotenv(Path.cwd() / ".env", override=False)
    path = user_env if user_env is not None else USER_ENV_PATH
    if path.is_file():
        for key, value in dotenv_values(path).items():
            if value is not None:
                os.environ.setdefault(key, value)


def load_settings(environ: Optional[Dict[str, str]] = None) -> Settings:
    """Validate KGDBW_* defaults; a bad value is a usage error."""
    environ = os.environ if environ is None else environ
    values = {field: environ[var] for var, field in ENV_SETTINGS.items() if environ.get(var, "").strip()}
    try:
        return Settings(**values)
    except Exception as e:
        raise UsageError(f"Invalid environment configuration: {e}")


# ============================================================================
# ARGUMENT PARSING
# ============================================================================

def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS keeps a flag given before the subcommand from being reset by the subparser
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("global")
    group.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed, 0 <= seed < 2^64 (env KGDBW_SEED)")
    group.add_argument("--out", default=argparse.SUPPRESS, help="output CSV path, '-' for stdout (default stdout)")
    group.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker threads (env KGDBW_JOBS)")
    group.add_argument("--kernel", default=argparse.SUPPRESS, help="comma-separated kernel ids")
    group.add_argument("--reps", type=int, default=argparse.SUPPRESS, help="repetitions (env KGDBW_REPS, default 20)")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _global_flags()
    parser = argparse.ArgumentParser(
        prog="kgdbw",
        description="Kernel regression with a decreasing bandwidth: fits, comparisons, sweeps and bound checks.",
        parents=[parent],
    )
    parser.add_argument("--version", action="store_true", help="show the version and exit")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name in list_available_commands():
        module = get_command_module(name)
        sub = subparsers.add_parser(name, help=module.HELP, description=module.HELP, parents=[parent])
        module.add_arguments(sub)
    return parser


def build_config(args: argparse.Namespace, settings: Settings, default_kernels) -> ExperimentConfig:
    try:
        return ExperimentConfig(
            command=args.command,
            seed=getattr(args, "seed", settings.seed),
            out=getattr(args, "out", None),
            kernels=parse_kernels(getattr(args, "kernel", None), default_kernels),
            reps=getattr(args, "reps", settings.reps),
            jobs=getattr(args, "jobs", settings.jobs),
        )
    except UsageError:
        raise
    except Exception as e:
        raise UsageError(f"Invalid global flags: {e}")


def _print_version():
    body = "\n".join([
        f"{output.Color.ACCENT}{output.Color.BOLD}kgdbw v{package_version()}{output.Color.RESET}",
        "kernel regression with a decreasing bandwidth",
    ])
    output.print_boxed("Version", body, style="info")


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    _load_additional_env()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else (0 if e.code is None else 2)

    if args.version:
        _print_version()
        return 0
    if not args.command:
        parser.print_usage(sys.stderr)
        output.print_error(f"a command is required: {', '.join(list_available_commands())}")
        return 2

    try:
        settings = load_settings()
        module = get_command_module(args.command)
        config = build_config(args, settings, module.DEFAULT_KERNELS)
        return int(module.call(args, config))
    except UsageError as e:
        output.print_error(str(e))
        return 2
    except KernelRegressionError as e:
        output.print_error(f"{type(e).__name__}: {e}")
        return 1
    except KeyboardInterrupt:
        output.print_warning("Interrupted.")
        return 130


if __name__ == "__main__":
    sys.exit(main())
