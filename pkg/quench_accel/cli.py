# cli.py

"""
Command-line front end.

    quench-accel <command> [--config FILE] [--seed N] [--out DIR] [--format csv|json]
                           [--tau-us T ...] [--tilt-deg D ...] [--heating-mks H ...]
                           [--duration-s S] [--input FILE ...] [--workers N]
                           [--log-file FILE] [--verbose]

Flags override the configuration file, which overrides the built-in
reference defaults. Exit codes: 0 success, 1 usage or configuration error,
2 numerical failure.
"""

import argparse
import math
import sys
from typing import Any, Dict, List, Optional

from quench_accel.controllers.experiment_controller import COMMANDS, ExperimentController
from quench_accel.exceptions import ConfigError, InvalidParamsError, NumericalError
from quench_accel.utils.config import OUTPUT_FORMATS, load_run_config
from quench_accel.utils.logger import setup_logger

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

COMMAND_HELP = {
    'simulate': 'integrate the moment equations for every (tau, tilt) sweep point',
    'sensitivity': 'S(T_opt) versus tau with heating scenarios and the QFI bound ratio',
    'allan': 'overlapping Allan deviation of a synthetic or recorded long run',
    'qfi': 'quantum Fisher information with propagated uncertainty',
    'heating': 'heating-rate budget; with --input, infer the rate from sigma traces',
    'fit-profile': 'fit the intensity model to a t_s,intensity trace (--input)',
    'fit-histogram': 'folded-normal fit to single-shot readouts (--input, or synthetic shots)',
}


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems as exceptions instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument('--config', help='YAML or JSON configuration file')
    common.add_argument('--seed', type=int, help='random seed')
    common.add_argument('--out', help='output directory')
    common.add_argument('--format', choices=OUTPUT_FORMATS, help='table format')
    common.add_argument('--tau-us', type=float, nargs='+', metavar='TAU', help='quench time constant(s) in μs')
    common.add_argument('--tilt-deg', type=float, nargs='+', metavar='DEG', help='table tilt(s) in degrees')
    common.add_argument('--heating-mks', type=float, nargs='+', metavar='RATE',
                        help='heating rate(s) in mK/s; the first sets the physical rate')
    common.add_argument('--duration-s', type=float, help='duration of the synthetic long run (allan)')
    common.add_argument('--input', nargs='+', metavar='FILE', help='input file(s) for the command')
    common.add_argument('--workers', type=int, help='worker processes for sweeps')
    common.add_argument('--log-file', help='write the log to this file instead of stderr')
    common.add_argument('--verbose', action='store_true', help='log at DEBUG level')

    parser = _ArgumentParser(prog='quench-accel', description='Quench-sensitized levitated-nanoparticle '
                                                               'accelerometer simulator and analysis toolkit.')
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common], help=COMMAND_HELP[command])
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    """Translates flags into SI config overrides, section by section."""
    overrides: Dict[str, Dict[str, Any]] = {}

    def put(section: str, key: str, value: Any) -> None:
        overrides.setdefault(section, {})[key] = value

    if args.seed is not None:
        put('run', 'seed', args.seed)
    if args.out is not None:
        put('run', 'output_dir', args.out)
    if args.format is not None:
        put('run', 'format', args.format)
    if args.workers is not None:
        put('run', 'workers', args.workers)
    if args.tau_us:
        taus = [t * 1e-6 for t in args.tau_us]
        put('sweep', 'tau', taus)
        put('profile', 'tau', taus[0])
    if args.tilt_deg:
        put('sweep', 'tilt', [math.radians(d) for d in args.tilt_deg])
    if args.heating_mks:
        rates = [h * 1e-3 for h in args.heating_mks]
        put('sweep', 'heating', rates)
        put('physical', 'heating_rate', rates[0])
    if args.duration_s is not None:
        put('allan', 'duration', args.duration_s)
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point; returns the process exit code.

    Args:
        argv: Arguments without the program name; sys.argv[1:] when None.
    """
    logger = setup_logger('quench-accel')
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return EXIT_OK if not e.code else EXIT_USAGE

    try:
        config = load_run_config(args.config, overrides_from_args(args))
        controller = ExperimentController(config, log_file=args.log_file, verbose=args.verbose)
        controller.execute(args.command, args.input)
    except (ConfigError, InvalidParamsError, UsageError, ValueError, KeyError) as e:
        logger.error(str(e))
        return EXIT_USAGE
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_USAGE
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
