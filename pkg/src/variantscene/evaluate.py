"""Grounding accuracy, part-segmentation mIoU and report I/O."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import DuplicatePrediction, LengthMismatch
from .geometry import AABB, iou
from .pool import DistinctionType

THRESHOLDS = (0.25, 0.5)


@dataclass(frozen=True)
class GroundingSample:
    scene_id: str
    text: str
    gt_box: AABB
    num_distractors: int
    distinction: DistinctionType

    def __post_init__(self):
        if self.num_distractors < 0:
            raise ValueError("num_distractors must be >= 0")
        object.__setattr__(self, "distinction", DistinctionType(self.distinction))

    @classmethod
    def from_annotation(cls, row: Mapping) -> "GroundingSample":
        return cls(row["scene_id"], row.get("text", ""), AABB.from_list(row["target_box"]),
                   int(row.get("num_distractors", 0)), row["distinction"])


@dataclass(frozen=True)
class Prediction:
    scene_id: str
    pred_box: AABB


@dataclass
class EvalResult:
    acc_25: float
    acc_50: float
    n: int
    groups: Optional[dict] = None


@dataclass
class SegScore:
    miou_i: float
    per_instance: list = field(default_factory=list)


def _index_predictions(predictions: Iterable[Prediction]):
    table = {}
    for p in predictions:
        if p.scene_id in table:
            raise DuplicatePrediction(p.scene_id)
        table[p.scene_id] = p.pred_box
    return table


def _ious(samples, table):
    return np.array([iou(table[s.scene_id], s.gt_box) if s.scene_id in table else 0.0 for s in samples])


def _result(ious) -> EvalResult:
    n = len(ious)
    if n == 0:
        return EvalResult(0.0, 0.0, 0)
    return EvalResult(float(np.mean(ious >= 0.25)), float(np.mean(ious >= 0.5)), n)


def grounding_accuracy(samples: Sequence[GroundingSample], predictions: Iterable[Prediction]) -> EvalResult:
    """Acc@0.25 and Acc@0.5; a missing prediction scores IoU 0."""
    return _result(_ious(samples, _index_predictions(predictions)))


AXES = {
    "distractors": lambda s: s.num_distractors,
    "distinction": lambda s: s.distinction.value,
}


def breakdown(samples: Sequence[GroundingSample], predictions: Iterable[Prediction], axis: str) -> EvalResult:
    """Overall result with ``groups`` mapping each axis value to its own result."""
    if axis not in AXES:
        raise ValueError(f"unknown axis {axis!r}; expected one of {sorted(AXES)}")
    key = AXES[axis]
    ious = _ious(samples, _index_predictions(predictions))
    overall = _result(ious)
    buckets = {}
    for s, v in zip(samples, ious):
        buckets.setdefault(key(s), []).append(v)
    overall.groups = {g: _result(np.array(v)) for g, v in sorted(buckets.items())}
    return overall


def _instance_iou(gt, pred):
    scores = []
    for label in np.unique(gt):
        g = gt == label
        p = pred == label
        scores.append(np.sum(g & p) / np.sum(g | p))
    return float(np.mean(scores))


def segmentation_miou(gt_parts: Sequence, pred_parts: Sequence) -> SegScore:
    """Per instance, IoU averaged over the ground-truth part labels; then mean over instances."""
    if len(gt_parts) != len(pred_parts):
        raise LengthMismatch(f"{len(gt_parts)} ground-truth instances vs {len(pred_parts)} predicted")
    per = []
    for k, (g, p) in enumerate(zip(gt_parts, pred_parts)):
        g, p = np.asarray(g), np.asarray(p)
        if g.shape != p.shape:
            raise LengthMismatch(f"instance {k}: {g.shape[0]} labels vs {p.shape[0]}")
        if g.size == 0:
            raise LengthMismatch(f"instance {k} has no points")
        per.append(_instance_iou(g, p))
    miou = 100.0 * float(np.mean(per)) if per else 0.0
    return SegScore(miou, per)


# --- I/O -----------------------------------------------------------------

class PredictionFormatError(ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


def read_predictions(path) -> list:
    """Line-delimited ``{scene_id, pred_box:[6 floats]}``."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                box = [float(x) for x in row["pred_box"]]
                if len(box) != 6:
                    raise ValueError("pred_box needs 6 numbers")
                out.append(Prediction(str(row["scene_id"]), AABB.from_list(box)))
            except (ValueError, KeyError, TypeError) as exc:
                raise PredictionFormatError(path, i, str(exc)) from exc
    return out


def write_predictions(predictions: Iterable[Prediction], path):
    with open(path, "w", encoding="utf-8") as fh:
        for p in predictions:
            fh.write(json.dumps({"scene_id": p.scene_id, "pred_box": p.pred_box.as_list()}) + "\n")


def read_samples(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [GroundingSample.from_annotation(json.loads(line)) for line in fh if line.strip()]


def read_labels(path) -> np.ndarray:
    """One integer label per line."""
    return np.loadtxt(path, dtype=np.int64, ndmin=1)


def write_report(result: EvalResult, path, group_name="group"):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([group_name, "n", "acc25", "acc50"])
        for g, r in (result.groups or {}).items():
            w.writerow([g, r.n, f"{r.acc_25:.6f}", f"{r.acc_50:.6f}"])
        w.writerow(["all", result.n, f"{result.acc_25:.6f}", f"{result.acc_50:.6f}"])


def write_seg_report(score: SegScore, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "miou_i"])
        w.writerow([len(score.per_instance), f"{score.miou_i:.6f}"])


def format_table(result: EvalResult, group_name="group") -> str:
    rows = [f"{group_name:>14} {'n':>6} {'Acc@0.25':>9} {'Acc@0.5':>9}"]
    for g, r in (result.groups or {}).items():
        rows.append(f"{str(g):>14} {r.n:>6} {r.acc_25:>9.4f} {r.acc_50:>9.4f}")
    rows.append(f"{'all':>14} {result.n:>6} {result.acc_25:>9.4f} {result.acc_50:>9.4f}")
    return "\n".join(rows)


# --- reference predictors ------------------------------------------------

def oracle_predictions(samples: Iterable[GroundingSample]) -> list:
    return [Prediction(s.scene_id, s.gt_box) for s in samples]


def nearest_class_centroid(scene, class_label: Optional[str] = None, reference: str = "bbox") -> AABB:
    """Box of the same-class object whose center is closest to the scene's center.

    The scene center is the center of the scene's bounding box (``"bbox"``) or
    the mean of all its points (``"mean"``). Object membership and class come
    from the manifest, standing in for a parser that reads the head noun.
    """
    class_label = class_label or scene.target.class_label
    xyz = scene.points().xyz
    if reference == "bbox":
        center = 0.5 * (xyz.min(axis=0) + xyz.max(axis=0))
    elif reference == "mean":
        center = xyz.mean(axis=0)
    else:
        raise ValueError(f"unknown reference {reference!r}")
    best, best_d = None, np.inf
    for o in scene.objects:
        if o.class_label != class_label:
            continue
        d = float(np.linalg.norm(o.box.center - center))
        if d < best_d:
            best, best_d = o.box, d
    if best is None:
        raise ValueError(f"no {class_label} in scene {scene.scene_id}")
    return best


def baseline_predictions(scenes, reference="bbox") -> list:
    return [Prediction(s.scene_id, nearest_class_centroid(s, reference=reference)) for s in scenes]
