#!/usr/bin/env python3
"""
Desk-scale experiments on Gaussian blobs

Usage:
    python scripts/experiments/run_ablations.py --help
    python scripts/experiments/run_ablations.py noise --out-dir runs/experiments
    python scripts/experiments/run_ablations.py lambda tau --epochs 40
    python scripts/experiments/run_ablations.py all --seeds 1 2 3
"""

import sys
import argparse
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from src.config.settings import RuntimeConfig
from src.training import experiments
from src.training.config import TrainConfig
from src.utils.io import FLOAT_FORMAT, atomic_open
from src.utils.logger import setup_logger

logger = setup_logger('ablations')

EXPERIMENTS = {
    'noise': (experiments.noise_robustness, 'setting'),
    'lambda': (experiments.lambda_ablation, 'setting'),
    'tau': (experiments.tau_ablation, 'setting'),
    'regularizer': (experiments.regularizer_ablation, 'setting'),
    'clusters': (experiments.clean_clusters, None),
    'probe': (experiments.memorization_probe, 'setting'),
}


def print_header(title):
    print("\n" + "=" * 80)
    print(f"  {title}")
    print("=" * 80 + "\n")


def main():
    parser = argparse.ArgumentParser(
        description='Run desk-scale noise-robustness experiments and ablations',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Experiments:
  noise        CTRR vs cross-entropy at 40% symmetric noise
  lambda       regularizer weight sweep at 60% noise
  tau          confidence threshold sweep at 60% noise
  regularizer  log form vs linear form at 60% noise
  clusters     within/between-class cosine on clean labels
  probe        linear probe on noisy labels over clean-trained encoders
        """
    )
    parser.add_argument('experiments', nargs='+', choices=sorted(EXPERIMENTS) + ['all'])
    parser.add_argument('--seeds', type=int, nargs='+', help='Override the experiment seeds')
    parser.add_argument('--epochs', type=int, help='Override the number of epochs')
    parser.add_argument('--out-dir', default=str(RuntimeConfig.RUNS_DIR / 'experiments'),
                        help='Directory for the per-seed CSV tables')
    args = parser.parse_args()

    names = sorted(EXPERIMENTS) if 'all' in args.experiments else args.experiments
    base = TrainConfig() if args.epochs is None else TrainConfig(epochs=args.epochs)
    out_dir = Path(args.out_dir)

    for name in names:
        runner, group = EXPERIMENTS[name]
        kwargs = {'base': base}
        if args.seeds:
            kwargs['seeds'] = tuple(args.seeds)
        print_header(f"EXPERIMENT: {name}")
        table = runner(**kwargs)
        with atomic_open(out_dir / f"{name}.csv", 'w') as handle:
            table.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        summary = experiments.medians(table) if group else table.drop(columns=['seed']).median().to_frame('median')
        print(summary.to_string())
        logger.info(f"✓ {name}: wrote {out_dir / (name + '.csv')}")


if __name__ == '__main__':
    main()
