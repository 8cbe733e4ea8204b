"""End-to-end run: attribute learning, detection, relabeling, retraining, evaluation."""

from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .classifier import ClfConfig, train_classifier
from .data import Dataset, check_embeddings
from .metrics import EvalReport, detection_metrics, evaluate, mean_l1
from .relabel import A2SResult, RelabelConfig, a2s, smooth_labels
from .synth import SynthConfig, generate
from .val import ValConfig, train_val

logger = logging.getLogger(__name__)

VARIANTS = ("noisy", "sgval", "smooth")


@dataclass(frozen=True)
class PipelineConfig:
    val: ValConfig = ValConfig()
    relabel: RelabelConfig = RelabelConfig()
    clf: ClfConfig = ClfConfig()
    synth: SynthConfig = SynthConfig()
    epsilon: float = 0.1
    test_n: int = 1000
    n_jobs: int | None = None


@dataclass
class PipelineReport:
    n_samples: int
    n_noisy_detected: int
    detection_precision: float = float("nan")
    detection_recall: float = float("nan")
    detection_f1: float = float("nan")
    baseline_f1: float = float("nan")
    l1_before: float = float("nan")
    l1_after: float = float("nan")
    evals: dict = field(default_factory=dict)      # variant -> EvalReport
    a2s: A2SResult | None = None

    @property
    def improvement(self) -> float:
        return (self.l1_before - self.l1_after) / self.l1_before

    def rows(self):
        """(metric, value) pairs in a fixed order for the CSV report."""
        out = [
            ("n_samples", self.n_samples),
            ("n_noisy_detected", self.n_noisy_detected),
            ("detection_precision", self.detection_precision),
            ("detection_recall", self.detection_recall),
            ("detection_f1", self.detection_f1),
            ("baseline_f1", self.baseline_f1),
            ("l1_before", self.l1_before),
            ("l1_after", self.l1_after),
        ]
        for variant in VARIANTS:
            rep = self.evals.get(variant)
            if rep is None:
                continue
            out.append((f"mean_auc_{variant}", rep.mean_auc))
            for name, auc in zip(rep.class_names, rep.per_class_auc):
                out.append((f"auc_{variant}_{name}", "" if auc is None else auc))
        return out


class StageError(Exception):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


@contextmanager
def stage(name):
    logger.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except Exception as err:
        raise StageError(name, err) from err


def run_pipeline(
    train: Dataset,
    W,
    test: Dataset,
    config: PipelineConfig = PipelineConfig(),
    true_labels=None,
    corrupted=None,
) -> PipelineReport:
    """Run every stage on ``train`` and score three classifiers on ``test``.

    ``true_labels`` and ``corrupted`` (known only for synthetic data) enable
    the recovery and detection scores.
    """
    with stage("train-val"):
        W = check_embeddings(W, train.n_classes)
        projector, _ = train_val(train, W, config.val)
    with stage("relabel"):
        result = a2s(train, projector, W, config.relabel, n_jobs=config.n_jobs)
    report = PipelineReport(train.n_samples, result.split.n_noisy, a2s=result)
    if corrupted is not None:
        det = detection_metrics(result.split, corrupted)
        everything = type(result.split)(np.array([], dtype=np.int64), np.arange(train.n_samples))
        report.detection_precision, report.detection_recall, report.detection_f1 = (
            det.precision, det.recall, det.f1,
        )
        report.baseline_f1 = detection_metrics(everything, corrupted).f1
    if true_labels is not None:
        truth = true_labels.values if hasattr(true_labels, "values") else np.asarray(true_labels)
        report.l1_before = mean_l1(train.labels.values, truth)
        report.l1_after = mean_l1(result.dataset.labels.values, truth)

    variants = {
        "noisy": train,
        "sgval": result.dataset,
        "smooth": train.with_labels(smooth_labels(train.labels, config.epsilon)),
    }
    for name, ds in variants.items():
        with stage(f"train-clf[{name}]"):
            clf, _ = train_classifier(ds, config.clf)
        with stage(f"eval[{name}]"):
            report.evals[name] = evaluate(clf, test)
    return report


def run_synthetic(config: PipelineConfig = PipelineConfig()) -> PipelineReport:
    with stage("synth"):
        out = generate(config.synth, test_n=config.test_n)
    return run_pipeline(
        out.noisy, out.embeddings, out.test, config,
        true_labels=out.clean.labels, corrupted=out.corrupted_indices,
    )


def format_report(report: PipelineReport) -> str:
    lines = [
        f"samples: {report.n_samples}   detected noisy: {report.n_noisy_detected}",
        f"detection  precision={report.detection_precision:.4f}  recall={report.detection_recall:.4f}"
        f"  f1={report.detection_f1:.4f}  (flag-all baseline f1={report.baseline_f1:.4f})",
        f"label L1   before={report.l1_before:.4f}  after={report.l1_after:.4f}",
    ]
    for variant, rep in report.evals.items():
        lines.append(f"mean AUC [{variant:>6}] = {rep.mean_auc:.4f}")
    return "\n".join(lines)


def format_eval(rep: EvalReport) -> str:
    width = max(len(n) for n in rep.class_names)
    lines = [f"{'class':<{width}}  auc"]
    for name, auc in zip(rep.class_names, rep.per_class_auc):
        lines.append(f"{name:<{width}}  {'skipped' if auc is None else f'{auc:.4f}'}")
    lines.append(f"{'mean':<{width}}  {rep.mean_auc:.4f}")
    return "\n".join(lines)
