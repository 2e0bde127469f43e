"""
Command-line argument parser
"""

import argparse

from .. import __description__, __version__

COMMANDS = ("simulate", "estimate", "rates", "lowerbound", "check-side-condition", "presets")


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument('config', nargs='?', default=None,
                     help='configuration JSON file or shipped preset name (default: built-in defaults)')
    sub.add_argument('--set', dest='overrides', action='append', default=[], metavar='SECTION.KEY=VALUE',
                     help='override a configuration value; VALUE is parsed as JSON when possible (repeatable)')
    sub.add_argument('--seed', type=int, default=None, help='master seed (experiment.master_seed)')
    sub.add_argument('--replications', '-R', type=int, default=None,
                     help='Monte Carlo replications (experiment.replications)')
    sub.add_argument('--n', type=int, default=None, help='single sample size, replaces experiment.n_grid')
    sub.add_argument('--workers', type=int, default=None, help='replication threads (experiment.workers)')
    sub.add_argument('--out', '-o', default=None,
                     help='output directory (output.directory; default $FLM_OUTPUT_DIR or ./results)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='flm-threshold', description=__description__)
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--log-level', default='INFO',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help='logging level (stderr)')

    subparsers = parser.add_subparsers(dest='command', required=True)

    sim = subparsers.add_parser('simulate', help='draw a sample and write it as CSV with a JSON sidecar')
    _add_common(sim)

    est = subparsers.add_parser('estimate', help='threshold or derivative estimate with a plotting curve')
    _add_common(est)
    est.add_argument('--sample', default=None, help='sample CSV written by simulate (default: fresh sample)')

    rates = subparsers.add_parser('rates', help='rate experiment over the n grid with a slope verdict')
    _add_common(rates)

    low = subparsers.add_parser('lowerbound', help='Assouad cube construction and worst-case risk')
    _add_common(low)

    side = subparsers.add_parser('check-side-condition', help='evaluate the upper-bound side condition')
    _add_common(side)
    side.add_argument('--k', type=int, default=None, help='moment index (experiment.side_condition_k)')

    subparsers.add_parser('presets', help='list shipped presets')
    return parser
