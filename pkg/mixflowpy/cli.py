"""
Command line front-end

    mixflowpy check-thermo      property suites of the thermodynamic core and the closures
    mixflowpy simulate CONFIG   runs a scenario and writes monitors.csv, fields_<step>.csv and run.json
    mixflowpy sweep-threshold CONFIG
                                degeneration and log-pressure monitors along a density sweep
    mixflowpy derive-fixtures   closed-form oracle values next to the computed ones

Exit codes: 0 completed, 2 threshold breach, 3 Picard divergence, 64 configuration error and 1 for
any other failure.
"""
import argparse
import logging
import sys
import typing

from . import __version__
from . import exception as errs

logger = logging.getLogger(__name__)

__all__ = ('main', 'build_parser', 'EXIT_CODES')

EXIT_CODES = {
    'completed': 0,
    'threshold_breach': 2,
    'picard_divergence': 3
}
EXIT_CONFIG = 64
EXIT_FAILURE = 1
DEFAULT_SEED = 20240601


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', dest='config_option', metavar='PATH', help="scenario document (JSON)")
    common.add_argument('--out', metavar='DIR', help="output directory, overrides output.directory")
    common.add_argument('--cadence', type=int, metavar='K', help="snapshot cadence, overrides output.cadence")
    common.add_argument('--seed', type=int, default=DEFAULT_SEED, help="seed of the randomized property suites")
    common.add_argument('--quiet', action='store_true', help="only log warnings and errors")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog='mixflowpy',
                                     description="Isothermal incompressible multicomponent mixtures in 1D")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest='command', required=True)

    check = commands.add_parser('check-thermo', parents=[common], help="run the thermodynamic property suites")
    check.add_argument('--samples', type=int, default=2000, help="random states per suite")

    simulate = commands.add_parser('simulate', parents=[common], help="run a scenario")
    simulate.add_argument('config', nargs='?', help="scenario document (JSON)")

    sweep = commands.add_parser('sweep-threshold', parents=[common], help="sweep the total mass density")
    sweep.add_argument('config', nargs='?', help="scenario document (JSON)")
    sweep.add_argument('--points', type=int, default=50, help="number of sweep points")

    commands.add_parser('derive-fixtures', parents=[common], help="print the derived oracle values")
    return parser


def _config_path(args) -> str:
    path = getattr(args, 'config', None) or args.config_option
    if not path:
        raise errs.ConfigParseError(f"'{args.command}' needs a scenario document, pass it as argument or with --config")
    return path


def _check_thermo(args) -> int:
    from .checks import check_thermo, format_table

    results = check_thermo(seed=args.seed, samples=args.samples)
    rows = [(r.name, r.value, r.tolerance, 'PASS' if r.passed else 'FAIL') for r in results]
    print(format_table(rows, ('property', 'measured', 'tolerance', 'result')))
    failed = sum(not r.passed for r in results)
    print(f"\n{len(results) - failed} passed, {failed} failed (seed {args.seed})")
    return 0 if failed == 0 else EXIT_FAILURE


def _simulate(args) -> int:
    from .scenario import load_config, emit_outputs
    from .solver import run_simulation

    config = load_config(_config_path(args))
    if args.out is not None or args.cadence is not None:
        config = config.with_output(directory=args.out, cadence=args.cadence)
    series = run_simulation(config)
    paths = emit_outputs(series, config)
    reason = series.termination_reason
    print(f"{reason}: {len(series.records) - 1} steps, {len(paths)} files written to {config.output_directory}")
    if series.breach is not None:
        breach = series.breach
        print(f"threshold breach at t={breach['time']} in cell {breach['cell']} (x={breach['x']}), "
              f"varrho={breach['varrho']} near the {breach['bound']} threshold")
    return EXIT_CODES[reason]


def _sweep_threshold(args) -> int:
    from .diagnostics import run_threshold_sweep
    from .scenario import load_config
    from .checks import format_table

    config = load_config(_config_path(args))
    result = run_threshold_sweep(config.spec, config.frame, config.closure, count=args.points)
    header = result.degeneration.COLUMNS
    print(format_table([tuple(float(v) for v in row) for row in result.degeneration.rows], header))
    print()
    print(format_table(list(result.summary().items()), ('quantity', 'value')))
    return 0


def _derive_fixtures(args) -> int:
    from .checks import derive_fixtures, format_table

    rows = [(name, reference, computed, abs(reference - computed)) for name, reference, computed in derive_fixtures()]
    print(format_table(rows, ('fixture', 'reference', 'computed', 'difference')))
    return 0


COMMANDS = {
    'check-thermo': _check_thermo,
    'simulate': _simulate,
    'sweep-threshold': _sweep_threshold,
    'derive-fixtures': _derive_fixtures
}


def main(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    """
    Entry point of the mixflowpy command

    :param argv: Arguments without the program name, sys.argv[1:] by default
    :return: The exit code
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format='%(levelname)s:%(name)s: %(message)s')

    try:
        return COMMANDS[args.command](args)

    except errs.ConfigError as e:
        logger.error(f"[CLI] Configuration error: {e}")
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    except errs.MixflowError as e:
        logger.error(f"[CLI] {e.__class__.__name__}: {e}")
        print(f"{e.__class__.__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
