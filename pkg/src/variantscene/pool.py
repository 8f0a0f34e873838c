"""Object candidate pool: collation features, indexing and constrained retrieval."""

from __future__ import annotations

import enum
import hashlib
import json
import os
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import InsufficientCandidates
from .geometry import (
    PointCloud,
    ShapeCategory,
    ShapeThresholds,
    classify_shape,
    color_distance,
    mean_color,
    read_ply,
    write_ply,
)

COLOR_CELL = 32


class Provenance(str, enum.Enum):
    RealScan = "RealScan"
    CAD = "CAD"


class DistinctionType(str, enum.Enum):
    Location = "Location"
    LocationShape = "LocationShape"
    LocationColor = "LocationColor"
    LocationClass = "LocationClass"


def cloud_id(pc: PointCloud) -> str:
    """Content hash of geometry and color."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(pc.xyz).tobytes())
    h.update(np.ascontiguousarray(pc.rgb).tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class ObjectRecord:
    id: str
    class_label: str
    provenance: Provenance
    mean_color: tuple
    shape: ShapeCategory
    cloud: PointCloud
    source: str

    @classmethod
    def from_cloud(cls, cloud, class_label, provenance=Provenance.RealScan, source="",
                   thresholds=ShapeThresholds()) -> "ObjectRecord":
        shape = classify_shape(cloud, thresholds)
        return cls(cloud_id(cloud), class_label, Provenance(provenance), mean_color(cloud),
                   shape, cloud, source)

    def manifest_row(self):
        return {"id": self.id, "class": self.class_label, "provenance": self.provenance.value,
                "source": self.source, "mean_color": list(self.mean_color), "shape": self.shape.value}


def ingest(path, class_label, provenance=Provenance.RealScan, source="") -> ObjectRecord:
    return ObjectRecord.from_cloud(read_ply(path), class_label, provenance, source)


@dataclass(frozen=True)
class RetrievalSpec:
    target: ObjectRecord
    distinction: DistinctionType
    count: int = 1
    color_same_max: float = 30.0
    color_diff_min: float = 80.0

    def __post_init__(self):
        if not self.color_same_max < self.color_diff_min:
            raise ValueError("color_same_max must be below color_diff_min")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        object.__setattr__(self, "distinction", DistinctionType(self.distinction))


def satisfies(target: ObjectRecord, rec: ObjectRecord, spec: RetrievalSpec) -> bool:
    """Row of the distinction constraint matrix for one candidate."""
    same_class = rec.class_label == target.class_label
    same_shape = rec.shape == target.shape
    dist = color_distance(rec.mean_color, target.mean_color)
    kind = spec.distinction
    if kind == DistinctionType.Location:
        return same_class and same_shape and dist <= spec.color_same_max
    if kind == DistinctionType.LocationShape:
        return same_class and not same_shape and dist <= spec.color_same_max
    if kind == DistinctionType.LocationColor:
        return same_class and same_shape and dist >= spec.color_diff_min
    return not same_class and same_shape


def color_cell(rgb):
    return tuple(int(c) // COLOR_CELL for c in rgb)


def _cell_distance_range(cell, rgb):
    """Min and max L2 distance from ``rgb`` to any color inside a cell."""
    lo = np.array(cell) * COLOR_CELL
    hi = lo + COLOR_CELL - 1
    c = np.asarray(rgb, dtype=float)
    near = np.clip(c, lo, hi)
    far = np.where(np.abs(c - lo) > np.abs(c - hi), lo, hi)
    return float(np.linalg.norm(c - near)), float(np.linalg.norm(c - far))


class Pool:
    """Records indexed by (class label, shape, quantized color cell)."""

    def __init__(self, records: Iterable[ObjectRecord] = ()):
        self._records = {}
        self._index = defaultdict(list)
        for rec in records:
            self.add(rec)

    def add(self, rec: ObjectRecord) -> bool:
        """Insert ``rec``; returns False when its id is already present."""
        if rec.id in self._records:
            return False
        self._records[rec.id] = rec
        self._index[(rec.class_label, rec.shape, color_cell(rec.mean_color))].append(rec)
        return True

    def __len__(self):
        return len(self._records)

    def __contains__(self, rid):
        return rid in self._records

    def __getitem__(self, rid) -> ObjectRecord:
        return self._records[rid]

    @property
    def records(self):
        return list(self._records.values())

    @property
    def classes(self):
        return sorted({k[0] for k in self._index})

    def cell(self, class_label, shape, rgb):
        return list(self._index.get((class_label, ShapeCategory(shape), color_cell(rgb)), ()))

    def candidates(self, spec: RetrievalSpec):
        """Records passing the constraint matrix, found through the index."""
        t = spec.target
        kind = spec.distinction
        out = []
        for (cls, shape, cell), recs in self._index.items():
            same_class = cls == t.class_label
            same_shape = shape == t.shape
            if kind == DistinctionType.LocationClass:
                if same_class or not same_shape:
                    continue
            else:
                if not same_class:
                    continue
                if (kind == DistinctionType.LocationShape) == same_shape:
                    continue
                near, far = _cell_distance_range(cell, t.mean_color)
                if kind == DistinctionType.LocationColor:
                    if far < spec.color_diff_min:
                        continue
                elif near > spec.color_same_max:
                    continue
            out.extend(r for r in recs if r.id != t.id and satisfies(t, r, spec))
        return out


def retrieve(pool: Pool, spec: RetrievalSpec, seed: int, exclude=()) -> list:
    """``spec.count`` distinct distractors for ``spec.target``.

    Real scans are used before CAD models; within a tier the order is a seeded
    shuffle of the id-sorted candidates.
    """
    if len(pool) == 0:
        raise InsufficientCandidates(0, spec.count)
    exclude = set(exclude)
    cands = [r for r in pool.candidates(spec) if r.id not in exclude]
    rng = np.random.default_rng(seed)
    ordered = []
    for tier in (Provenance.RealScan, Provenance.CAD):
        group = sorted((r for r in cands if r.provenance == tier), key=lambda r: r.id)
        perm = rng.permutation(len(group))
        ordered.extend(group[i] for i in perm)
    if len(ordered) < spec.count:
        raise InsufficientCandidates(len(ordered), spec.count)
    return ordered[:spec.count]


def pool_stats(pool: Pool) -> dict:
    """Per class: total plus counts by shape and provenance."""
    table = {}
    for rec in pool.records:
        row = table.setdefault(rec.class_label, {"total": 0})
        row["total"] += 1
        row[rec.shape.value] = row.get(rec.shape.value, 0) + 1
        row[rec.provenance.value] = row.get(rec.provenance.value, 0) + 1
    return dict(sorted(table.items()))


# --- persistence ---------------------------------------------------------

MANIFEST = "manifest.jsonl"


def save_record(rec: ObjectRecord, pool_dir) -> bool:
    """Append ``rec`` to a pool directory unless its id is already listed."""
    pool_dir = Path(pool_dir)
    (pool_dir / "objects").mkdir(parents=True, exist_ok=True)
    manifest = pool_dir / MANIFEST
    known = {row["id"] for row in _read_manifest(manifest)}
    if rec.id in known:
        return False
    write_ply(rec.cloud, pool_dir / "objects" / f"{rec.id}.ply")
    with open(manifest, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(rec.manifest_row(), sort_keys=True) + "\n")
    return True


def _read_manifest(path):
    if not os.path.exists(path):
        return []
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def load_pool(pool_dir, verify: bool = False) -> Pool:
    """Load a pool directory. Features come from the manifest unless ``verify``."""
    pool_dir = Path(pool_dir)
    pool = Pool()
    for row in _read_manifest(pool_dir / MANIFEST):
        cloud = read_ply(pool_dir / "objects" / f"{row['id']}.ply")
        if verify:
            rec = ObjectRecord.from_cloud(cloud, row["class"], row["provenance"], row["source"])
            if rec.id != row["id"]:
                raise ValueError(f"pool object {row['id']} hashes to {rec.id}")
        else:
            rec = ObjectRecord(row["id"], row["class"], Provenance(row["provenance"]),
                               tuple(row["mean_color"]), ShapeCategory(row["shape"]), cloud,
                               row["source"])
        pool.add(rec)
    return pool


def save_pool(pool: Pool, pool_dir) -> int:
    return sum(save_record(r, pool_dir) for r in sorted(pool.records, key=lambda r: r.id))


def pool_from_synthetic(objects, thresholds=ShapeThresholds()) -> Pool:
    pool = Pool()
    for o in objects:
        pool.add(ObjectRecord.from_cloud(o.cloud, o.class_label, o.provenance, o.source, thresholds))
    return pool


def make_target_record(cloud: PointCloud, class_label: str, source: str = "scene",
                       provenance: Optional[Provenance] = Provenance.RealScan) -> ObjectRecord:
    return ObjectRecord.from_cloud(cloud, class_label, provenance, source)
