"""
Entry point for the lab.

Usage:
    python -m entropy_lab COMMAND [OPTIONS]
    OR
    ckn-entropy-lab COMMAND [OPTIONS] (if installed)

Results go to stdout as ``key = value`` lines; logs go to stderr.
Exit codes: 0 all verdicts passed, 1 a verdict failed, 2 usage error.
"""

import argparse
import re
import sys
from collections.abc import Sequence
from pathlib import Path

from entropy_lab.app import EXIT_USAGE, exit_code_for, lab
from entropy_lab.config import RunConfig
from entropy_lab.errors import ConfigError
from entropy_lab.observability import get_logger, setup_logging
from entropy_lab.serialization import format_summary

GLOBAL_FIELDS = ("out_dir", "seed", "threads", "tol")

# option values such as -6:2:200 or -.5e-3 that argparse would read as options
_NEGATIVE_VALUE = re.compile(r"^-[\d.]")


def discover_available_commands() -> list[tuple[str, str]]:
    """Scan the commands directory; every module not starting with "_" is a command.

    Returns:
        List of (command_name, module_path) tuples
    """
    commands_dir = Path(__file__).parent / "commands"
    return [(path.stem, f"entropy_lab.commands.{path.stem}") for path in sorted(commands_dir.glob("*.py")) if not path.name.startswith("_")]


AVAILABLE_COMMANDS = discover_available_commands()


def load_commands() -> None:
    """Import every command module to trigger its @lab.command() registration."""
    logger = get_logger(__name__)
    for name, module_path in AVAILABLE_COMMANDS:
        try:
            __import__(module_path)
        except Exception as e:
            logger.exception("command_load_failed", command=name, error=str(e))
            print(f"Warning: Failed to load {name}: {e}", file=sys.stderr)
    logger.debug("commands_loaded", count=len(lab.commands), commands=sorted(lab.commands))


def list_commands() -> None:
    """Print available commands with their one-line help."""
    load_commands()
    print("\nAvailable lab commands:\n")
    print("=" * 50)
    for name, _ in AVAILABLE_COMMANDS:
        spec = lab.commands.get(name)
        print(f"  {name:<10} {spec.help if spec else '(failed to load)'}")
    print(f"\n{'=' * 50}")
    print(f"Total: {len(AVAILABLE_COMMANDS)} commands")
    print()


def join_negative_values(argv: Sequence[str]) -> list[str]:
    """Rewrite ``--opt -6:2:200`` as ``--opt=-6:2:200``."""
    joined: list[str] = []
    for token in argv:
        if joined and _NEGATIVE_VALUE.match(token) and joined[-1].startswith("--") and "=" not in joined[-1]:
            joined[-1] = f"{joined[-1]}={token}"
        else:
            joined.append(token)
    return joined


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the global flags and one ``--<key>`` flag per RunConfig key."""
    parser = argparse.ArgumentParser(
        prog="ckn-entropy-lab",
        allow_abbrev=False,
        description="CKN entropy lab - weighted fast diffusion flows, spectral gaps and functional inequalities",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Classify a beta x gamma grid for d = 4, p = 1.2
  ckn-entropy-lab region --d 4 --p 1.2 --beta -6:2:200 --gamma -4:4:200 -o fig1.csv

  # Numeric spectral gap against the closed form
  ckn-entropy-lab gap --d 4 --beta 0 --gamma 0 --m 0.8 --N 2048 --rmax 80 --tol 5e-3

  # Decay rates of a weighted run described in a config file
  ckn-entropy-lab rates --config ckn_ref.cfg

  # GNS deficit of a stored field
  ckn-entropy-lab deficit --d 4 --p 2 --input g.csv

  # List all available commands
  ckn-entropy-lab --list-commands

Config files hold one "key = value" per line, "#" starts a comment and
ranges are written lo:hi:steps. Flags override the file.

Environment Variables:
  LOG_LEVEL                   Logging level (default: info)
  OTEL_ENABLED                Enable OpenTelemetry (default: false)
  LAB_OUT_DIR                 Output directory (default: .)
  LAB_THREADS                 Concurrent sweep members (default: 1)
  LAB_SEED                    Seed for random perturbations (default: 0)
  LAB_TOL                     Verdict tolerance (default: 5e-3)
        """,
    )
    parser.add_argument("command", nargs="?", help="Command to run (see --list-commands)")
    parser.add_argument("--list-commands", action="store_true", help="List all available commands, then exit")
    parser.add_argument("--config", type=Path, metavar="FILE", help="Run configuration file (key = value lines)")
    parser.add_argument(
        "--log-level",
        type=str,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Set the logging level (overrides LOG_LEVEL environment variable)",
    )
    parser.add_argument("--debug", action="store_true", help="Shorthand for --log-level DEBUG")

    globals_group = parser.add_argument_group("global options")
    run_group = parser.add_argument_group("run options (same keys as config files)")
    for name, info in RunConfig.model_fields.items():
        flags = [f"--{name}"]
        if "_" in name:
            flags.append(f"--{name.replace('_', '-')}")
        if name == "output":
            flags.insert(0, "-o")
        group = globals_group if name in GLOBAL_FIELDS else run_group
        group.add_argument(*flags, dest=name, metavar=name.upper(), help=info.description)
    return parser


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    """RunConfig from --config (if any) with the flags applied on top.

    Raises:
        ConfigError: unreadable file, unknown keys or invalid values
    """
    base = RunConfig.from_file(args.config) if args.config is not None else RunConfig()
    overrides = {name: getattr(args, name) for name in RunConfig.model_fields if getattr(args, name, None) is not None}
    return base.merged(**overrides)


def run_cli(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run one command, print its result and return the exit code."""
    parser = build_parser()
    args = parser.parse_args(join_negative_values(sys.argv[1:] if argv is None else argv))

    if args.list_commands:
        list_commands()
        return 0

    log_level = "debug" if args.debug else (args.log_level or lab.config.runtime.log_level).lower()
    setup_logging(log_level=log_level, otel_enabled=lab.config.runtime.otel_enabled)
    logger = get_logger(__name__)

    if not args.command:
        parser.print_usage(sys.stderr)
        print("error: a command is required (see --list-commands)", file=sys.stderr)
        return EXIT_USAGE

    load_commands()
    try:
        run = run_config_from_args(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    logger.debug("running_command", command=args.command, config_digest=run.digest())
    result = lab.run_sync(args.command, run)
    if result.get("error"):
        print(f"error: {result['error_message']}", file=sys.stderr)
    else:
        print("\n".join(format_summary(result)))
    return exit_code_for(result)


def main() -> None:
    """Run the lab CLI."""
    try:
        sys.exit(run_cli())
    except KeyboardInterrupt:
        get_logger(__name__).info("lab_stopped", reason="keyboard_interrupt")
        sys.exit(130)
    except Exception as e:
        get_logger(__name__).error("lab_error", error=str(e), exc_info=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
