#!/usr/bin/env python3
"""Write a synthetic file in the processed.cleveland.data format.

Useful for smoke-testing the pipeline when the UCI file is not at hand.
The numbers it produces say nothing about real diagnostic performance.
"""
import argparse
from pathlib import Path

from mcsvm.synthetic import synthetic_cleveland_text


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out", type=Path)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(synthetic_cleveland_text(args.seed))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
