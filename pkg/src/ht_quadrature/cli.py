"""
Command-line interface for ht-quadrature.
"""

import sys
import argparse
import logging
from pathlib import Path
from typing import List, Optional

import yaml

from . import __version__
from .config import Config, setup_logging
from .exceptions import ConfigurationError, HTQError, InvalidArgumentError
from .studies import StudyRunner
from .utils import parse_int_range, parse_mesh_spec, read_json


logger = logging.getLogger(__name__)

DEFAULT_CONFIG = "config/config.yaml"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INTERRUPTED = 130


def _add_discretization_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--mesh', type=str, help='Mesh: uniform:N | geometric:N[:sigma] | dyadic:N | explicit:t0,t1,...')
    parser.add_argument('--T', type=float, help='Final time (overrides config file)')
    parser.add_argument('--degrees', type=str, help='Degrees: uniform:p | linear | p1,p2,...')
    parser.add_argument('--K', type=int, help='Gauss-Legendre order for non-polynomial integrands')
    parser.add_argument('--K-log', dest='K_log', type=int, help='Log-weight rule order')


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--output', '-o', type=str, help='CSV output file (its directory must exist)')
    parser.add_argument('--output-dir', type=str, help='Output directory for default file names')


def _add_spectral_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--KF', type=int, help='Number of Fourier modes in the oracle partial sum')
    parser.add_argument('--tol', type=float, help='Oracle certificate tolerance')
    parser.add_argument('--no-accelerate', action='store_true', help='Disable the exact tail correction')
    parser.add_argument('--no-certify', action='store_true', help='Warn instead of failing on a large certificate')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="htq",
        description="Modified Hilbert transformation matrices for hp temporal finite elements",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Assemble M^HT on a uniform mesh with piecewise linears
  %(prog)s assemble --kind M --mesh uniform:4 --T 1 --degrees uniform:1 --K 12

  # Spectral reference for B^HT on the same mesh
  %(prog)s oracle --kind B --mesh uniform:4 --T 1 --degrees uniform:1

  # Quadrature study (T=10, dyadic mesh N=6, p=2, K=2..20)
  %(prog)s quad-study --mesh dyadic:6 --T 10 --degrees uniform:2

  # hp convergence study for u' = f with u = t^(3/4)
  %(prog)s solve --study hp --sigma 0.17 --Nmax 10

  # Dump a log-weight Gauss rule
  %(prog)s rules dump --kind log --K 16

  # Rerun a command from its JSON sidecar
  %(prog)s --replay results/quad_study.json

For more information, see: README.md
        """
    )

    parser.add_argument(
        '--config',
        '-c',
        type=str,
        help=f'Path to configuration YAML file (default: {DEFAULT_CONFIG} when present)'
    )
    parser.add_argument(
        '--log-level',
        type=str,
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'],
        help='Logging level (overrides config file)'
    )
    parser.add_argument('--threads', type=int, help='Worker threads for block assembly')
    parser.add_argument('--replay', type=str, metavar='SIDECAR', help='Rerun the command stored in a JSON sidecar')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')

    sub = parser.add_subparsers(dest='command')

    p = sub.add_parser('assemble', help='Assemble M^HT, A^HT or B^HT')
    p.add_argument('--kind', choices=['M', 'A', 'B'], required=True)
    _add_discretization_args(p)
    _add_output_args(p)

    p = sub.add_parser('oracle', help='Spectral reference matrix with certificate')
    p.add_argument('--kind', choices=['M', 'A', 'B'], required=True)
    _add_discretization_args(p)
    _add_spectral_args(p)
    _add_output_args(p)

    p = sub.add_parser('quad-study', help='Assembly error against the oracle for a range of K')
    _add_discretization_args(p)
    _add_spectral_args(p)
    p.add_argument('--Kmin', type=int, help='Smallest K (default 2)')
    p.add_argument('--Kmax', type=int, help='Largest K (default 20)')
    p.add_argument('--K-range', dest='K_range', type=str, help='K range a..b, overrides --Kmin/--Kmax')
    p.add_argument('--no-plot', action='store_true', help='Do not write the plot script')
    _add_output_args(p)

    p = sub.add_parser('solve', help='h or hp convergence study for the model ODEs')
    p.add_argument('--kind', choices=['parabolic', 'hyperbolic'])
    p.add_argument('--mu', type=float, help='Reaction coefficient mu >= 0')
    p.add_argument('--f', '--load', dest='load', type=str, help='Load preset: one | poly:c0,c1,... | power:alpha')
    p.add_argument('--study', choices=['h', 'hp'])
    p.add_argument('--p', type=int, help='Uniform degree for the h study')
    p.add_argument('--sigma', type=float, help='Geometric grading for the hp study')
    p.add_argument('--Nmin', type=int, help='First level')
    p.add_argument('--Nmax', type=int, help='Last level')
    p.add_argument('--T', type=float, help='Final time')
    p.add_argument('--K', type=int, help='Gauss-Legendre order for assembly')
    p.add_argument('--no-plot', action='store_true', help='Do not write the plot script')
    _add_output_args(p)

    p = sub.add_parser('rules', help='Quadrature rule utilities')
    p.add_argument('action', choices=['dump'])
    p.add_argument('--kind', choices=['legendre', 'log'], default='log')
    p.add_argument('--K', type=int, required=True)
    _add_output_args(p)

    return parser


def load_config(args: argparse.Namespace) -> Config:
    """Load the configuration file and apply command-line overrides."""
    if args.config:
        config = Config.load(args.config)
    elif Path(DEFAULT_CONFIG).exists():
        config = Config.load(DEFAULT_CONFIG)
    else:
        config = Config.load(None)

    if args.log_level:
        config.logging.level = args.log_level
    if args.threads is not None:
        config.parallel.threads = args.threads
    if getattr(args, 'output_dir', None):
        config.output.dir = args.output_dir

    if args.command in ('assemble', 'oracle', 'quad-study'):
        T = args.T if args.T is not None else config.mesh.T
        if args.mesh:
            spec = parse_mesh_spec(args.mesh, T, config.mesh.sigma)
            config.mesh.kind = spec["kind"]
            config.mesh.N = spec.get("N", config.mesh.N)
            config.mesh.T = spec["T"]
            config.mesh.sigma = spec.get("sigma", config.mesh.sigma)
            config.mesh.breakpoints = spec.get("breakpoints")
        else:
            config.mesh.T = T
        if args.degrees:
            config.degrees.spec = args.degrees
        if args.K is not None:
            config.quadrature.K = args.K
        if args.K_log is not None:
            config.quadrature.K_log = args.K_log

    if args.command in ('oracle', 'quad-study'):
        if args.KF is not None:
            config.spectral.K_F = args.KF
        if args.tol is not None:
            config.spectral.tol = args.tol
        if args.no_accelerate:
            config.spectral.accelerate = False
        if args.no_certify:
            config.spectral.certify = False

    if args.command == 'quad-study':
        if args.Kmin is not None:
            config.quadrature.K_min = args.Kmin
        if args.Kmax is not None:
            config.quadrature.K_max = args.Kmax
        if args.K_range:
            K_values = parse_int_range(args.K_range)
            if not K_values:
                raise ConfigurationError(f"empty K range '{args.K_range}'")
            config.quadrature.K_min, config.quadrature.K_max = K_values[0], K_values[-1]

    if args.command == 'solve':
        s = config.solver
        for name, value in (
            ('kind', args.kind), ('mu', args.mu), ('load', args.load), ('study', args.study),
            ('p', args.p), ('sigma', args.sigma), ('N_min', args.Nmin), ('N_max', args.Nmax),
            ('T', args.T), ('K', args.K),
        ):
            if value is not None:
                setattr(s, name, value)

    if args.command in ('quad-study', 'solve') and args.no_plot:
        config.output.plot_script = False

    return config.validate()


def run_command(args: argparse.Namespace, argv: List[str]) -> dict:
    config = load_config(args)
    setup_logging(config.logging)

    logger.info(f"htq {__version__}: {' '.join(argv)}")
    runner = StudyRunner(config, argv=argv)
    output = getattr(args, 'output', None)

    if args.command == 'assemble':
        return runner.assemble(args.kind, output)
    if args.command == 'oracle':
        return runner.oracle(args.kind, output)
    if args.command == 'quad-study':
        return runner.quad_study(output)
    if args.command == 'solve':
        return runner.solve(output)
    return runner.rules(args.kind, args.K, output)


def print_summary(results: dict) -> None:
    print("\n" + "=" * 80)
    print(f"{results['command'].upper()} SUMMARY")
    print("=" * 80)
    if 'certificate' in results:
        print(f"Certificate: {results['certificate']:.3e}")
    for name, fit in results.get('fits', {}).items():
        if fit:
            print(f"{name}: slope {fit['slope']:.4f}, correlation {fit['correlation']:.4f}")
    print(f"CSV: {results['csv']}")
    print(f"Metadata: {results['json']}")
    if results.get('plot'):
        print(f"Plot script: {results['plot']}")
    print("=" * 80)


def main(argv: Optional[List[str]] = None) -> None:
    """Main entry point for CLI."""
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)

    try:
        if args.replay:
            data = read_json(args.replay)
            if not isinstance(data.get("argv"), list):
                raise InvalidArgumentError(f"{args.replay} has no stored argument vector", tag="cli")
            argv = [str(v) for v in data["argv"]]
            args = parser.parse_args(argv)
            if args.replay:
                raise InvalidArgumentError("a replayed command cannot itself replay", tag="cli")
        if not args.command:
            parser.print_usage(sys.stderr)
            print("Error: a command is required", file=sys.stderr)
            sys.exit(EXIT_USAGE)

        results = run_command(args, argv)
        print_summary(results)
        sys.exit(EXIT_OK)

    except KeyboardInterrupt:
        logger.warning("\nInterrupted by user")
        sys.exit(EXIT_INTERRUPTED)

    except (InvalidArgumentError, OSError, yaml.YAMLError) as e:
        logger.error(f"Rejected: {e}")
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(EXIT_USAGE)

    except HTQError as e:
        logger.error(f"Failed: {e}")
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(EXIT_FAILURE)

    except Exception as e:
        logger.error(f"Failed: {e}", exc_info=True)
        print(f"\nError: {e}", file=sys.stderr)
        sys.exit(EXIT_FAILURE)


if __name__ == "__main__":
    main()
