"""Command line: ``mcsvm run`` and ``mcsvm inspect-model``.

Exit codes: 0 success, 1 configuration error, 2 pipeline error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import ConfigError, PipelineError, build_config, load_config, run_experiment
from .metrics import pct
from .multiclass import STRATEGIES, MulticlassError, loads_multiclass
from .svm import SvmError, loads_model

EXIT_OK, EXIT_CONFIG, EXIT_PIPELINE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # bad flags count as configuration errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mcsvm", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the benchmark and write the report tables")
    run.add_argument("--config", type=Path, help="key = value config file")
    run.add_argument("--strategy", action="append", choices=STRATEGIES,
                     help="restrict to this strategy (repeatable)")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", type=Path, help="output directory")
    run.add_argument("--c", type=float, dest="C", help="box constraint C")
    run.add_argument("--kernel", choices=("linear", "poly", "rbf"))
    run.add_argument("--gamma", type=float)
    run.add_argument("--repeats", type=int)
    run.add_argument("--data", type=Path, help="processed.cleveland.data path")

    insp = sub.add_parser("inspect-model", help="pretty-print a serialized model")
    insp.add_argument("path", type=Path)
    return p


def _overrides(args) -> dict[str, object]:
    out: dict[str, object] = {}
    if args.strategy:
        out["strategies"] = tuple(args.strategy)
    for key, attr in (("seed", "seed"), ("C", "C"), ("kernel", "kernel"),
                      ("gamma", "gamma"), ("repeats", "repeats")):
        if getattr(args, attr) is not None:
            out[key] = getattr(args, attr)
    if args.out is not None:
        out["output_dir"] = str(args.out)
    if args.data is not None:
        out["dataset_path"] = str(args.data)
    return out


def _cmd_run(args) -> int:
    try:
        if args.config:
            cfg = load_config(args.config, _overrides(args))
        else:
            cfg = build_config(_overrides(args))
        if cfg.dataset_path is None:
            raise ConfigError("no dataset: set dataset_path in the config or pass --data")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(cfg)
    except PipelineError as exc:
        print(f"pipeline error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return EXIT_PIPELINE
    for name, res in report.strategies.items():
        f1 = " ".join(pct(m.f_measure) for m in res.metrics)
        print(f"{name:6s} accuracy {pct(res.accuracy)}  F1 {f1}")
    for strategy, cname, zeros, n in report.zero_recall():
        print(f"zero recall: {strategy} {cname} ({zeros}/{n} repeats)")
    print(f"report written to {cfg.output_dir}")
    return EXIT_OK


def _describe_binary(model, indent: str = "") -> list[str]:
    k = model.kernel
    return [f"{indent}kernel {k.kind} gamma={k.gamma} degree={k.degree} coef0={k.coef0}",
            f"{indent}C={model.C} bias={model.bias:.6g} support vectors={model.n_sv} "
            f"features={model.n_features} converged={model.converged} updates={model.n_iter}",
            f"{indent}alpha range=[{model.alphas.min() if model.n_sv else 0:.4g}, "
            f"{model.alphas.max() if model.n_sv else 0:.4g}]"]


def _cmd_inspect(args) -> int:
    try:
        text = args.path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read {args.path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if text.startswith("multiclass"):
            model = loads_multiclass(text)
            print(f"strategy {model.strategy}, classes {list(model.classes)}, "
                  f"{len(model.binary_models)} binary models")
            if model.code is not None:
                print("code matrix:")
                for c, row in zip(model.classes, model.code):
                    print(f"  {c}: " + " ".join(f"{int(v):+d}" for v in row))
            if model.tree is not None:
                for idx, node in enumerate(model.tree):
                    print(f"node {idx} (parent {node.parent}): "
                          f"{list(node.left_classes)} vs {list(node.right_classes)}")
            for idx, m in enumerate(model.binary_models):
                label = ""
                if model.pairs is not None:
                    a, b = model.pairs[idx]
                    label = f" pair {model.classes[a]} vs {model.classes[b]}"
                print(f"model {idx}{label}")
                print("\n".join(_describe_binary(m, "  ")))
        else:
            print("\n".join(_describe_binary(loads_model(text))))
    except (SvmError, MulticlassError, KeyError, ValueError) as exc:
        print(f"malformed model file: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_inspect(args)


if __name__ == "__main__":
    sys.exit(main())
