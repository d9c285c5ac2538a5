#!/usr/bin/env python3
"""Run every bundled experiment config and drop the CSV output under out/.

Usage: python scripts/run_all_experiments.py [--out DIR]
"""

import argparse
import sys
from pathlib import Path

from blochsteer.cli import load_config, run

CONFIG_DIR = Path(__file__).parent / "configs"


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="out", help="root output directory")
    args = parser.parse_args()
    root = Path(args.out)
    failures = 0
    for cfg_path in sorted(CONFIG_DIR.glob("*.cfg")):
        config = load_config(cfg_path)
        target = root / cfg_path.stem
        print(f"== {cfg_path.name} -> {target}")
        try:
            summary = run(config, out_dir=target)
        except Exception as exc:
            print(f"   failed: {type(exc).__name__}: {exc}")
            failures += 1
            continue
        for key, value in summary.items():
            print(f"   {key} = {value}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
