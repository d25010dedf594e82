"""Accuracy, confusion matrices, and per-subject report emission.

Reports mirror the published table layout: one row per subject with the
accuracy percentage rendered half-up to two decimals, and a final Average
row holding the arithmetic mean of per-subject accuracies. Confusion
matrices are raw counts (rows = true class, columns = predicted class) and
can be rendered as grayscale heat images. JSON carries everything needed to
reconstruct SubjectResult values exactly; the CSV keeps a full-precision
accuracy column beside the rendered percent so its fields round-trip too.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .dataset import class_names as scheme_class_names


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        k = len(self.class_names)
        if arr.shape != (k, k):
            raise ValueError(f"counts shape {arr.shape} does not match {k} classes")
        if (arr < 0).any():
            raise ValueError("confusion counts must be non-negative")
        arr.flags.writeable = False
        object.__setattr__(self, "counts", arr)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class SubjectResult:
    subject_id: int
    accuracy: float
    confusion: ConfusionMatrix
    scheme: str
    seed: int
    strategy: str


def confusion_matrix(preds, truths, k: int, class_names=None) -> ConfusionMatrix:
    """Count (true, predicted) pairs into a k x k matrix."""
    p = np.asarray(preds, dtype=np.int64)
    t = np.asarray(truths, dtype=np.int64)
    if p.shape != t.shape or p.ndim != 1:
        raise ValueError("preds and truths must be equal-length vectors")
    if p.size and (min(p.min(), t.min()) < 0 or max(p.max(), t.max()) >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    if class_names is None:
        class_names = tuple(f"class_{i}" for i in range(k))
    return ConfusionMatrix(counts=counts, class_names=tuple(class_names))


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("cannot compute accuracy of an empty confusion matrix")
    return float(np.trace(cm.counts)) / cm.total


def percent_2dp(fraction: float) -> str:
    """Render a [0,1] fraction as a percentage, half-up to two decimals."""
    return str(
        Decimal(repr(fraction * 100.0)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    )


@dataclass(frozen=True)
class SubjectTable:
    """Rendered report: (label, percent string, raw accuracy) rows + average."""

    rows: tuple[tuple[str, str, float], ...]
    average: float

    @property
    def average_percent(self) -> str:
        return percent_2dp(self.average)


def subject_table(results: list[SubjectResult]) -> SubjectTable:
    """Per-subject accuracy rows in subject order, plus the mean row."""
    if not results:
        raise ValueError("no subject results")
    seen = set()
    for r in results:
        if r.subject_id in seen:
            raise ValueError(f"duplicate subject id {r.subject_id}")
        seen.add(r.subject_id)
    ordered = sorted(results, key=lambda r: r.subject_id)
    rows = tuple(
        (f"S{r.subject_id}", percent_2dp(r.accuracy), r.accuracy) for r in ordered
    )
    average = sum(r.accuracy for r in ordered) / len(ordered)
    return SubjectTable(rows=rows, average=average)


def table_to_csv(table: SubjectTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("subject,accuracy_pct,accuracy\n")
        for label, pct, raw in table.rows:
            fh.write(f"{label},{pct},{raw!r}\n")
        fh.write(f"Average,{table.average_percent},{table.average!r}\n")


def results_to_json(
    results: list[SubjectResult], scheme: str, config: dict | None = None
) -> str:
    """Serialize results (and the resolved config, for the audit trail)."""
    table = subject_table(results)
    payload = {
        "scheme": scheme,
        "subjects": [
            {
                "id": r.subject_id,
                "accuracy": r.accuracy,
                "confusion": r.confusion.counts.tolist(),
                "seed": r.seed,
                "strategy": r.strategy,
            }
            for r in sorted(results, key=lambda r: r.subject_id)
        ],
        "average": table.average,
    }
    if config is not None:
        payload["config"] = config
    return json.dumps(payload, indent=2, sort_keys=True)


def results_from_json(text: str) -> tuple[list[SubjectResult], str]:
    payload = json.loads(text)
    scheme = payload["scheme"]
    names = scheme_class_names(scheme)
    results = [
        SubjectResult(
            subject_id=int(entry["id"]),
            accuracy=float(entry["accuracy"]),
            confusion=ConfusionMatrix(
                counts=np.asarray(entry["confusion"], dtype=np.int64),
                class_names=names,
            ),
            scheme=scheme,
            seed=int(entry["seed"]),
            strategy=str(entry["strategy"]),
        )
        for entry in payload["subjects"]
    ]
    return results, scheme


def confusion_to_pgm(cm: ConfusionMatrix, path, cell_size: int = 32) -> None:
    """Render counts as a grayscale heat image, brightest = largest count."""
    counts = cm.counts.astype(np.float64)
    peak = counts.max()
    scaled = counts / peak if peak > 0 else counts
    img = np.rint(255.0 * scaled).astype(np.uint8)
    img = np.kron(img, np.ones((cell_size, cell_size), dtype=np.uint8))
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(img.tobytes())
