#!/usr/bin/env python3
"""Run the benchmark over several split seeds and print a compact summary.

    python scripts/run_experiment.py --config configs/cleveland.cfg --seeds 0 1 2

Each seed writes its own report under <output_dir>/seed<N>.
"""
import argparse
import logging
from dataclasses import replace
from pathlib import Path

from mcsvm.harness import load_config, run_experiment
from mcsvm.metrics import pct


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, default=Path("configs/cleveland.cfg"))
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--data", type=Path, help="override dataset_path")
    args = p.parse_args()
    logging.basicConfig(level=logging.WARNING)

    for seed in args.seeds:
        overrides = {"seed": seed}
        if args.data:
            overrides["dataset_path"] = str(args.data)
        cfg = load_config(args.config, overrides)
        cfg = replace(cfg, output_dir=cfg.output_dir / f"seed{seed}")
        report = run_experiment(cfg)
        print(f"seed {seed}")
        for name, res in report.strategies.items():
            f1 = [pct(m.f_measure) for m in res.metrics]
            print(f"  {name:6s} acc {pct(res.accuracy)}  F1 {' '.join(f1)}")
        for pr in report.ttests[:4]:
            print(f"  {pr.name:16s} p = {pr.result.p_value:.3g}")


if __name__ == "__main__":
    main()
