"""
Command-line entry point

Exit codes: 0 success, 1 domain error (bad config, enumeration guard,
unreadable file), 2 usage error.
"""

import argparse
import sys
from typing import List, Optional

from src.cli import commands
from src.data.noise import NOISE_KINDS
from src.utils.logger import setup_logger

logger = setup_logger('cli')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='ctrr',
        description='Contrastive-regularized training under label noise: data, training, audits and theory checks',
    )
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('gen-data', help='Generate a Gaussian-blob dataset file')
    p.add_argument('--classes', type=int, required=True, help='Number of classes K')
    p.add_argument('--dim', type=int, required=True, help='Feature dimension d')
    p.add_argument('--per-class', type=int, required=True, help='Samples per class')
    p.add_argument('--spread', type=float, required=True, help='Within-class standard deviation')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', required=True, help='Output dataset file')
    p.add_argument('--csv', help='Also export the rows as CSV')
    p.set_defaults(handler=commands.gen_data)

    p = sub.add_parser('inject-noise', help='Write a copy of a dataset with corrupted labels')
    p.add_argument('--in', dest='input', required=True, help='Input dataset file (never modified)')
    p.add_argument('--out', required=True, help='Output dataset file')
    p.add_argument('--kind', choices=NOISE_KINDS, default='symmetric')
    p.add_argument('--rate', type=float, required=True, help='Fraction of rows selected for corruption')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--class-map', help='JSON object source->target (asymmetric_pairs only)')
    p.set_defaults(handler=commands.inject_noise)

    for name, handler, text in (('train', commands.train, 'Train from a JSON run config'),
                                ('probe', commands.probe, 'Linear probe on a checkpoint named in the run config')):
        p = sub.add_parser(name, help=text)
        p.add_argument('--config', required=True, help='Run config JSON')
        p.add_argument('--out-dir', help='Override the config\'s out_dir')
        p.set_defaults(handler=handler)

    p = sub.add_parser('grad-check', help='Audit backward() against finite differences')
    p.add_argument('--samples', type=int, default=100, help='Random instances per loss')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', required=True, help='JSON report path')
    p.set_defaults(handler=commands.grad_check)

    p = sub.add_parser('verify-theory', help='Exhaustive checks of the representation bounds')
    p.add_argument('--classes', type=int, help='K of a single family shape')
    p.add_argument('--background', type=int, help='M of a single family shape')
    p.add_argument('--codomain', type=int, help='Size m of the representation codomain (default K)')
    p.add_argument('--eta', type=float, nargs='+', help='Class-copy noise levels')
    p.add_argument('--rho', type=float, nargs='+', help='Background-driven flip probabilities')
    p.add_argument('--joint', help='JSON table p(x, y, y_noisy) to verify instead of the family')
    p.add_argument('--out', required=True, help='JSON report path')
    p.set_defaults(handler=commands.verify_theory)

    p = sub.add_parser('report', help='Summarise metrics CSVs')
    p.add_argument('--metrics', nargs='+', required=True, help='metrics.csv files')
    p.add_argument('--out', help='Summary CSV path')
    p.add_argument('--plot', help='PNG figure of accuracy and memorization curves')
    p.set_defaults(handler=commands.report)

    return parser


def run_command(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run the subcommand and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)

    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        logger.error(f"✗ {args.command}: {exc}")
        return 1


def main():
    sys.exit(run_command())


if __name__ == '__main__':
    main()
