#!/usr/bin/env python3
"""
CTRR command-line tool

Usage:
    python scripts/ctrr.py --help
    python scripts/ctrr.py gen-data --classes 4 --dim 20 --per-class 500 --spread 0.5 --seed 1 --out d.ctrr
    python scripts/ctrr.py inject-noise --in d.ctrr --out d40.ctrr --kind symmetric --rate 0.4 --seed 1
    python scripts/ctrr.py train --config run.json
    python scripts/ctrr.py grad-check --out gradcheck.json
    python scripts/ctrr.py verify-theory --out theory.json
"""

import sys
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cli.main import main

if __name__ == '__main__':
    main()
