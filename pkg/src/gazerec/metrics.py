"""Evaluation: per-class average precision, confusion matrices, latency.

AP here is classification-style: decisions are (id, predicted, true,
score) tuples; for a class c the retrieval list is every decision that
predicted c, ranked by score, and precision is averaged at each rank
where the item truly is c. Positives never retrieved contribute zero.
mAP averages over object classes (the background id 0 is excluded).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np


class NoPositives(Exception):
    pass


class BudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class Decision:
    item_id: str  # video (or frame) identifier
    predicted: int
    true: int
    score: float


def average_precision(decisions: list[Decision], c: int) -> float:
    positives = sum(1 for d in decisions if d.true == c)
    if positives == 0:
        raise NoPositives(f"no ground-truth positives for class {c}")
    retrieved = sorted(
        (d for d in decisions if d.predicted == c), key=lambda d: -d.score
    )
    hits = 0
    precision_sum = 0.0
    for rank, d in enumerate(retrieved, start=1):
        if d.true == c:
            hits += 1
            precision_sum += hits / rank
    return precision_sum / positives


def mean_average_precision(
    decisions: list[Decision], class_ids=None
) -> tuple[float, dict[int, float]]:
    """mAP over the classes present in the ground truth (background
    excluded unless explicitly listed)."""
    if class_ids is None:
        class_ids = sorted({d.true for d in decisions} - {0})
    per_class = {c: average_precision(decisions, c) for c in class_ids}
    if not per_class:
        raise NoPositives("no object classes in the decision list")
    return float(np.mean(list(per_class.values()))), per_class


def confusion_matrix(decisions: list[Decision], n_classes: int) -> np.ndarray:
    """Rows are true classes, columns predicted; rows sum to support."""
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    for d in decisions:
        m[d.true, d.predicted] += 1
    return m


def frame_accuracy(decisions: list[Decision]) -> float:
    if not decisions:
        raise ValueError("no decisions")
    return sum(d.predicted == d.true for d in decisions) / len(decisions)


# --- latency ------------------------------------------------------------------


class StageTimer:
    """Collects per-stage wall-clock samples with a monotonic clock."""

    def __init__(self):
        self.samples: dict[str, list[float]] = {}

    def stage(self, name: str):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.add(name, (time.perf_counter() - self.t0) * 1000.0)
                return False

        return _Ctx()

    def add(self, name: str, ms: float) -> None:
        self.samples.setdefault(name, []).append(ms)


@dataclass(frozen=True)
class StageStats:
    name: str
    mean_ms: float
    p95_ms: float
    max_ms: float
    count: int


@dataclass
class LatencyReport:
    stages: list[StageStats]
    total_mean_ms: float
    frames: int
    budget_ms: float
    within_budget: bool
    reference_ms: float = 28.6  # published single-frame pipeline time

    def rows(self):
        yield from self.stages
        yield StageStats("total", self.total_mean_ms, float("nan"), float("nan"), self.frames)


def latency_profile(
    timer: StageTimer,
    budget_ms: float = 250.0,
    strict: bool = False,
    stage_order=("saliency", "patch", "inference", "fusion"),
) -> LatencyReport:
    """Aggregate stage timings and check the fixation-time budget.

    The per-frame total is the sum of stage means. In report mode a
    blown budget is only flagged; ``strict=True`` raises.
    """
    present = [s for s in stage_order if s in timer.samples]
    present += [s for s in timer.samples if s not in present]
    if not present or not any(timer.samples[s] for s in present):
        raise ValueError("no frames profiled")
    stats = []
    for name in present:
        arr = np.asarray(timer.samples[name])
        stats.append(
            StageStats(
                name=name,
                mean_ms=float(arr.mean()),
                p95_ms=float(np.percentile(arr, 95)),
                max_ms=float(arr.max()),
                count=len(arr),
            )
        )
    total = float(sum(s.mean_ms for s in stats))
    frames = max(s.count for s in stats)
    ok = total <= budget_ms
    report = LatencyReport(stats, total, frames, budget_ms, ok)
    if strict and not ok:
        raise BudgetExceeded(f"per-frame total {total:.1f} ms over budget {budget_ms} ms")
    return report


# --- report files -------------------------------------------------------------


@dataclass
class EvalReport:
    fused_map: float
    unfused_map: float
    per_class_fused: dict[int, float]
    per_class_unfused: dict[int, float]
    frame_acc: float
    confusion: np.ndarray
    latency: LatencyReport | None = None
    video_decisions: list[dict] = field(default_factory=list)


def write_report(report: EvalReport, report_path, ap_plot_path) -> None:
    """Summary CSV plus the per-class AP table behind the bar chart."""
    with open(report_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        writer.writerow(["fused_map", f"{report.fused_map:.6g}"])
        writer.writerow(["unfused_map", f"{report.unfused_map:.6g}"])
        writer.writerow(["frame_accuracy", f"{report.frame_acc:.6g}"])
        if report.latency:
            writer.writerow(["latency_total_mean_ms", f"{report.latency.total_mean_ms:.6g}"])
            writer.writerow(["latency_budget_ms", f"{report.latency.budget_ms:.6g}"])
            writer.writerow(["latency_within_budget", int(report.latency.within_budget)])
            writer.writerow(["latency_reference_ms", f"{report.latency.reference_ms:.6g}"])
            for s in report.latency.stages:
                writer.writerow([f"latency_{s.name}_mean_ms", f"{s.mean_ms:.6g}"])
    with open(ap_plot_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class_id", "ap_unfused", "ap_fused"])
        for c in sorted(report.per_class_fused):
            writer.writerow(
                [c, f"{report.per_class_unfused[c]:.6g}", f"{report.per_class_fused[c]:.6g}"]
            )


def write_fusion_report(rows: list[dict], path) -> None:
    """Per-video fusion decisions CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "n_frames", "decision", "decision_majority", "tie", "top_score"])
        for row in rows:
            writer.writerow(
                [row["video_id"], row["n_frames"], row["decision"],
                 row["decision_majority"], int(row["tie"]), f"{row['top_score']:.6g}"]
            )
