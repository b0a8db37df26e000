"""Experiment runner: dataset -> split -> scaling -> five strategies -> metrics -> t-tests."""
from __future__ import annotations

import csv
import io
import logging
import os
import shutil
import tempfile
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dataset as ds
from .metrics import (ClassMetrics, ConfusionMatrix, build_confusion, class_metrics,
                      confusion_csv, overall_accuracy, pct)
from .multiclass import STRATEGIES, MulticlassModel, dumps_multiclass, predict, train
from .stats import SIGNIFICANCE, PairResult, RecallSample, pairwise_class_recall_tests
from .svm import KernelSpec, SvmError, TrainerConfig

log = logging.getLogger(__name__)

CLASS_LABELS = (0, 1, 2, 3, 4)
SHORT_NAMES = {0: "Healthy", 1: "Low", 2: "Medium", 3: "High", 4: "Serious"}
EXTERNAL_BASELINES = ("nb", "esb", "mlp")


class ConfigError(ValueError):
    pass


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_path: Path | None = None
    split: ds.SplitSpec = field(default_factory=ds.SplitSpec)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    strategies: tuple[str, ...] = STRATEGIES
    repeats: int = 1
    output_dir: Path = Path("results")

    def __post_init__(self):
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        unknown = [s for s in self.strategies if s not in STRATEGIES]
        if unknown:
            raise ConfigError(f"unknown strategy {unknown[0]!r}; expected one of {STRATEGIES}")
        if len(set(self.strategies)) != len(self.strategies):
            raise ConfigError("duplicate strategy names")
        if int(self.repeats) != self.repeats or self.repeats < 1:
            raise ConfigError(f"repeats must be a positive integer, got {self.repeats}")

    @property
    def seeds(self) -> list[int]:
        return [self.split.rng_seed + r for r in range(self.repeats)]

    def ordered_strategies(self) -> list[str]:
        return [s for s in STRATEGIES if s in self.strategies]


# -- config file ----------------------------------------------------------------
#
# One "key = value" per line; '#' starts a comment; blank lines ignored.
# Keys: dataset_path, output_dir, strategies (comma list), repeats, seed,
# split (train:test per class in label order, comma separated), C, tol, eps,
# max_passes, kernel (linear|poly|polynomial|rbf), gamma (number or "auto"),
# degree, coef0.

_INT_KEYS = {"repeats", "seed", "max_passes", "degree"}
_FLOAT_KEYS = {"C", "tol", "eps", "coef0"}
_KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | {
    "dataset_path", "output_dir", "strategies", "split", "kernel", "gamma"}


def parse_config_text(text: str) -> dict[str, object]:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key == "gamma":
                values[key] = None if value.lower() in ("auto", "none") else float(value)
            elif key == "strategies":
                values[key] = tuple(s.strip().lower() for s in value.split(",") if s.strip())
            else:
                values[key] = value
        except ValueError:
            raise ConfigError(f"config line {lineno}: bad value {value!r} for {key}") from None
    return values


def build_config(values: dict[str, object]) -> ExperimentConfig:
    """Assemble a config from flat key/values (file entries merged with CLI overrides)."""
    try:
        split = ds.SplitSpec(
            counts=ds.parse_split_counts(values["split"]) if "split" in values
            else dict(ds.DEFAULT_SPLIT_COUNTS),
            rng_seed=int(values.get("seed", 0)))
        trainer = TrainerConfig(**{k: values[k] for k in ("C", "tol", "eps", "max_passes")
                                   if k in values})
        kernel = KernelSpec(kind=str(values.get("kernel", "rbf")),
                            gamma=values.get("gamma"),
                            degree=int(values.get("degree", 3)),
                            coef0=float(values.get("coef0", 0.0)))
        path = values.get("dataset_path")
        return ExperimentConfig(
            dataset_path=Path(path) if path else None,
            split=split, trainer=trainer, kernel=kernel,
            strategies=tuple(values.get("strategies", STRATEGIES)),
            repeats=int(values.get("repeats", 1)),
            output_dir=Path(values.get("output_dir", "results")))
    except (ds.DatasetError, SvmError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path, overrides: dict[str, object] | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values = parse_config_text(text)
    values.update(overrides or {})
    return build_config(values)


# -- results --------------------------------------------------------------------

@dataclass(eq=False)
class StrategyResult:
    name: str
    per_repeat_metrics: list[list[ClassMetrics]] = field(default_factory=list)
    per_repeat_accuracy: list[float] = field(default_factory=list)
    confusions: list[ConfusionMatrix] = field(default_factory=list)
    model: MulticlassModel | None = None   # from the first repeat

    @property
    def metrics(self) -> list[ClassMetrics]:
        """Per-class metrics averaged over repeats."""
        k = len(self.per_repeat_metrics[0])
        return [ClassMetrics(*(float(np.mean([getattr(rep[c], f.name)
                                              for rep in self.per_repeat_metrics]))
                               for f in fields(ClassMetrics)))
                for c in range(k)]

    @property
    def accuracy(self) -> float:
        return float(np.mean(self.per_repeat_accuracy))

    @property
    def confusion(self) -> ConfusionMatrix:
        total = self.confusions[0]
        for cm in self.confusions[1:]:
            total = total + cm
        return total

    def recalls(self, c: int) -> list[float]:
        return [rep[c].recall for rep in self.per_repeat_metrics]


@dataclass(eq=False)
class ExperimentReport:
    config: ExperimentConfig
    seeds: list[int]
    class_labels: tuple[int, ...]
    class_names: tuple[str, ...]
    strategies: dict[str, StrategyResult]
    ttests: list[PairResult]
    recall_samples: list[RecallSample]
    train_counts: dict[int, int]
    test_counts: dict[int, int]

    def zero_recall(self) -> list[tuple[str, str, int, int]]:
        """(strategy, class name, repeats with recall 0, repeats) for every hit."""
        out = []
        for name, res in self.strategies.items():
            for c, cname in enumerate(self.class_names):
                zeros = sum(1 for r in res.recalls(c) if r == 0.0)
                if zeros:
                    out.append((name, cname, zeros, len(res.per_repeat_metrics)))
        return out

    @property
    def ecoc_code(self) -> np.ndarray | None:
        res = self.strategies.get("ecoc")
        return None if res is None or res.model is None else res.model.code


# -- pipeline -------------------------------------------------------------------

def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:  # noqa: BLE001 - every failure is reported with its stage
        raise PipelineError(name, exc) from exc


def _run_repeat(records, cfg: ExperimentConfig, seed: int, results: dict[str, StrategyResult],
                counts: dict[str, dict[int, int]]):
    split = replace(cfg.split, rng_seed=seed)
    train_recs, test_recs = _stage("split", ds.stratified_split, records, split)
    params = _stage("normalize", ds.fit_normalization, train_recs)
    X_train = ds.normalize_matrix(ds.feature_matrix(train_recs), params)
    X_test = ds.normalize_matrix(ds.feature_matrix(test_recs), params)
    y_train, y_test = ds.labels(train_recs), ds.labels(test_recs)
    counts["train"] = ds.class_counts(train_recs)
    counts["test"] = ds.class_counts(test_recs)
    expected = sorted(label for label, (n, _) in cfg.split.counts.items() if n > 0)

    pairwise: MulticlassModel | None = None
    for name in cfg.ordered_strategies():
        log.info("seed %d: training %s", seed, name)
        if name in ("oao", "ddag") and pairwise is not None:
            model = pairwise.as_strategy(name)
        else:
            model = _stage(f"train[{name}]", train, name, X_train, y_train,
                           cfg.trainer, cfg.kernel, expected_classes=expected)
            if name in ("oao", "ddag"):
                pairwise = model
        pred = _stage(f"predict[{name}]", predict, model, X_test)
        cm = build_confusion(y_test, pred, classes=CLASS_LABELS, class_names=ds.CLASS_NAMES)
        res = results.setdefault(name, StrategyResult(name))
        res.per_repeat_metrics.append(class_metrics(cm))
        res.per_repeat_accuracy.append(overall_accuracy(cm))
        res.confusions.append(cm)
        if res.model is None:
            res.model = model


def run_experiment(cfg: ExperimentConfig, records: Sequence[ds.PatientRecord] | None = None,
                   write: bool = True) -> ExperimentReport:
    """Run the whole pipeline; writes the report files to ``cfg.output_dir`` unless ``write`` is off.

    ``records`` bypasses reading ``cfg.dataset_path``.
    """
    if records is None:
        if cfg.dataset_path is None:
            raise PipelineError("load", ValueError("no dataset_path configured"))
        records = _stage("load", ds.load_cleveland, cfg.dataset_path)
    results: dict[str, StrategyResult] = {}
    counts: dict[str, dict[int, int]] = {}
    for seed in cfg.seeds:
        _run_repeat(records, cfg, seed, results, counts)

    samples = [RecallSample(c, tuple(v for name in cfg.ordered_strategies()
                                     for v in results[name].recalls(i)))
               for i, c in enumerate(CLASS_LABELS)]
    if min(len(s.values) for s in samples) >= 2:
        ttests = _stage("ttest", pairwise_class_recall_tests, samples, SHORT_NAMES)
    else:
        log.warning("one strategy and one repeat give a single recall per class; "
                    "skipping the t-tests")
        ttests = []
    report = ExperimentReport(
        config=cfg, seeds=cfg.seeds, class_labels=CLASS_LABELS, class_names=ds.CLASS_NAMES,
        strategies={n: results[n] for n in cfg.ordered_strategies()},
        ttests=ttests, recall_samples=samples,
        train_counts=counts["train"], test_counts=counts["test"])
    if write:
        _stage("render", render_tables, report, cfg.output_dir)
    return report


# -- rendering ------------------------------------------------------------------

def _csv(rows: list[list[object]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _grid(report: ExperimentReport, attr: str) -> str:
    rows = [["strategy", *report.class_names]]
    for name, res in report.strategies.items():
        rows.append([name, *(pct(getattr(m, attr)) for m in res.metrics)])
    return _csv(rows)


def _fmt_stat(v: float) -> str:
    return f"{v:.6f}" if np.isfinite(v) else ("inf" if v > 0 else "-inf")


def _ttest_csv(report: ExperimentReport) -> str:
    rows = [["pair", "t", "df", "p", f"significant({SIGNIFICANCE})"]]
    for pr in report.ttests:
        r = pr.result
        rows.append([pr.name, _fmt_stat(r.t_statistic), _fmt_stat(r.degrees_of_freedom),
                     f"{r.p_value:.10g}", int(pr.significant)])
    return _csv(rows)


def _accuracy_csv(report: ExperimentReport) -> str:
    rows = [["strategy", "overall_accuracy", "note"]]
    for name, res in report.strategies.items():
        rows.append([name, pct(res.accuracy), ""])
    for name in EXTERNAL_BASELINES:
        rows.append([name, "", "external baseline; not computed"])
    return _csv(rows)


def _metrics_long_csv(report: ExperimentReport) -> str:
    rows = [["strategy", "class", "precision", "recall", "f_measure"]]
    for name, res in report.strategies.items():
        for cname, m in zip(report.class_names, res.metrics):
            rows.append([name, cname, pct(m.precision), pct(m.recall), pct(m.f_measure)])
    return _csv(rows)


def _config_lines(cfg: ExperimentConfig) -> list[str]:
    counts = ",".join(f"{a}:{b}" for _, (a, b) in sorted(cfg.split.counts.items()))
    t, k = cfg.trainer, cfg.kernel
    return [
        f"dataset_path = {cfg.dataset_path}",
        f"strategies = {','.join(cfg.ordered_strategies())}",
        f"repeats = {cfg.repeats}",
        f"seed = {cfg.split.rng_seed}",
        f"split = {counts}",
        f"C = {t.C!r}", f"tol = {t.tol!r}", f"eps = {t.eps!r}", f"max_passes = {t.max_passes}",
        f"kernel = {k.kind}",
        f"gamma = {'auto' if k.gamma is None else repr(k.gamma)}",
        f"degree = {k.degree}", f"coef0 = {k.coef0!r}",
    ]


def _md_table(header: list[str], rows: list[list[object]]) -> list[str]:
    out = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    out += ["| " + " | ".join(str(v) for v in row) + " |" for row in rows]
    return out


def _summary_md(report: ExperimentReport) -> str:
    lines = ["# Multiclass SVM experiment report", ""]
    lines += ["## F-measure (%)", ""]
    lines += _md_table(["strategy", *report.class_names],
                       [[n, *(pct(m.f_measure) for m in r.metrics)]
                        for n, r in report.strategies.items()])
    for title, attr in (("Precision (%)", "precision"), ("Recall (%)", "recall")):
        lines += ["", f"## {title}", ""]
        lines += _md_table(["strategy", *report.class_names],
                           [[n, *(pct(getattr(m, attr)) for m in r.metrics)]
                            for n, r in report.strategies.items()])
    lines += ["", "## Overall accuracy (%)", ""]
    lines += _md_table(["strategy", "overall accuracy"],
                       [[n, pct(r.accuracy)] for n, r in report.strategies.items()]
                       + [[n, "(external baseline; not computed)"] for n in EXTERNAL_BASELINES])
    lines += ["", "## Recall t-tests (Welch, two-sided)", ""]
    if report.ttests:
        lines += _md_table(["pair", "t", "df", "p", f"p < {SIGNIFICANCE}"],
                           [[p.name, _fmt_stat(p.result.t_statistic),
                             _fmt_stat(p.result.degrees_of_freedom),
                             f"{p.result.p_value:.10g}", "yes" if p.significant else "no"]
                            for p in report.ttests])
    else:
        lines.append("Not computed: each class has a single recall value.")
    lines += ["", "## Zero-recall classes", ""]
    zero = report.zero_recall()
    if zero:
        lines += _md_table(["strategy", "class", "repeats with recall 0"],
                           [[s, c, f"{z}/{n}"] for s, c, z, n in zero])
    else:
        lines.append("None.")
    lines += ["", "## Provenance", "", "```"]
    lines += _config_lines(report.config)
    lines += [f"seeds = {','.join(str(s) for s in report.seeds)}",
              "train_counts = " + ",".join(f"{k}:{v}" for k, v in report.train_counts.items()),
              "test_counts = " + ",".join(f"{k}:{v}" for k, v in report.test_counts.items()),
              "normalization = min-max fitted on the training partition, test clamped to [0,1]",
              "ttest_samples = per class, recall of every (strategy, repeat) cell",
              f"significance = p < {SIGNIFICANCE}",
              "```"]
    code = report.ecoc_code
    if code is not None:
        lines += ["", "## ECOC code matrix", "", "```"]
        lines += [f"{name:>12} " + " ".join(f"{int(v):+d}" for v in row)
                  for name, row in zip(report.class_names, code)]
        lines.append("```")
    return "\n".join(lines) + "\n"


def report_files(report: ExperimentReport) -> dict[str, str]:
    """Every report file name mapped to its text content."""
    files = {
        "f_measure.csv": _grid(report, "f_measure"),
        "precision.csv": _grid(report, "precision"),
        "recall.csv": _grid(report, "recall"),
        "metrics.csv": _metrics_long_csv(report),
        "overall_accuracy.csv": _accuracy_csv(report),
        "ttest.csv": _ttest_csv(report),
        "zero_recall.csv": _csv([["strategy", "class", "repeats_with_zero_recall", "repeats"],
                                 *map(list, report.zero_recall())]),
        "summary.md": _summary_md(report),
    }
    for name, res in report.strategies.items():
        files[f"confusion_{name}.csv"] = confusion_csv(res.confusion)
        if res.model is not None:
            files[f"models/{name}.model"] = dumps_multiclass(res.model)
    return files


def render_tables(report: ExperimentReport, out_dir: str | Path) -> list[Path]:
    """Write the report files; nothing is left behind if writing fails."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".mcsvm-", dir=out_dir.parent))
    try:
        for rel, text in report_files(report).items():
            path = staging / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        written = []
        for src in sorted(p for p in staging.rglob("*") if p.is_file()):
            dst = out_dir / src.relative_to(staging)
            dst.parent.mkdir(parents=True, exist_ok=True)
            os.replace(src, dst)
            written.append(dst)
        return written
    finally:
        shutil.rmtree(staging, ignore_errors=True)

