"""Scene integration: predicates, placement, background cleanup, assembly."""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .errors import (
    ArityMismatch,
    CaseViolation,
    DegenerateCloud,
    PlacementInfeasible,
    UnknownInstance,
)
from .geometry import (
    AABB,
    PointCloud,
    ShapeCategory,
    aabb,
    classify_shape,
    mean_color,
    overlaps,
    read_ply,
    reorient,
    rescale_to,
    resample,
    serialize_ply,
)
from .pool import DistinctionType, ObjectRecord, Pool, RetrievalSpec, make_target_record, retrieve, satisfies

MAX_ATTEMPTS = 64
SCALE_BAND = (0.8, 1.2)
OFFSET_RANGE = 0.5
JITTER_FRACTION = 0.75


class SpatialPredicate(str, enum.Enum):
    Left = "Left"
    Right = "Right"
    Front = "Front"
    Back = "Back"
    Above = "Above"
    Below = "Below"
    UpperLeft = "UpperLeft"
    UpperRight = "UpperRight"
    LowerLeft = "LowerLeft"
    LowerRight = "LowerRight"
    Between = "Between"
    Surrounded = "Surrounded"
    Near = "Near"


P = SpatialPredicate

# (axis, sign) pairs; the predicate holds when the distractor sits on that side of the target
DIRECTIONS = {
    P.Left: ((0, -1),), P.Right: ((0, 1),),
    P.Front: ((1, -1),), P.Back: ((1, 1),),
    P.Above: ((2, 1),), P.Below: ((2, -1),),
    P.UpperLeft: ((0, -1), (2, 1)), P.UpperRight: ((0, 1), (2, 1)),
    P.LowerLeft: ((0, -1), (2, -1)), P.LowerRight: ((0, 1), (2, -1)),
}

# relation of the target as seen from a distractor placed by the key predicate
INVERSE = {
    P.Left: P.Right, P.Right: P.Left, P.Front: P.Back, P.Back: P.Front,
    P.Above: P.Below, P.Below: P.Above,
    P.UpperLeft: P.LowerRight, P.LowerRight: P.UpperLeft,
    P.UpperRight: P.LowerLeft, P.LowerLeft: P.UpperRight,
    P.Near: P.Near, P.Between: P.Between, P.Surrounded: P.Surrounded,
}

_SECTORS = (P.Left, P.Right, P.Front, P.Back)


def arity(pred) -> int:
    """Minimum number of distractors bound by ``pred``."""
    pred = P(pred)
    return {P.Between: 2, P.Surrounded: 4}.get(pred, 1)


def check_arity(pred, k):
    pred = P(pred)
    ok = k >= 4 if pred == P.Surrounded else k == arity(pred)
    if not ok:
        raise ArityMismatch(f"{pred.value} cannot bind {k} distractor(s)")


def evaluate_predicate(pred, target_box: AABB, distractor_boxes: Sequence[AABB], clearance=0.05) -> bool:
    """Geometric truth of ``pred`` between the target and its distractor(s).

    Directional predicates compare box-center deltas: each participating axis
    must exceed ``clearance`` and the magnitude of every non-participating
    axis. Every participating distractor box must also be disjoint from the
    target box.
    """
    pred = P(pred)
    boxes = list(distractor_boxes)
    check_arity(pred, len(boxes))
    if any(overlaps(target_box, b) for b in boxes):
        return False
    ct = target_box.center
    if pred in DIRECTIONS:
        d = boxes[0].center - ct
        parts = DIRECTIONS[pred]
        axes = {a for a, _ in parts}
        others = [o for o in range(3) if o not in axes]
        for a, s in parts:
            val = s * d[a]
            if not val > clearance:
                return False
            if any(not val > abs(d[o]) for o in others):
                return False
        return True
    if pred == P.Near:
        b = boxes[0]
        dist = float(np.linalg.norm(b.center - ct))
        return dist <= 0.5 * (target_box.diagonal + b.diagonal) + clearance
    if pred == P.Between:
        c1, c2 = boxes[0].center, boxes[1].center
        seg = c2 - c1
        length2 = float(seg @ seg)
        if length2 == 0.0:
            return False
        t = float((ct - c1) @ seg) / length2
        if not 0.0 < t < 1.0:
            return False
        return float(np.linalg.norm(c1 + t * seg - ct)) <= clearance
    # Surrounded: every horizontal sector holds at least one distractor center
    seen = set()
    for b in boxes:
        dx, dy = (b.center - ct)[:2]
        if dx > abs(dy):
            seen.add(P.Right)
        elif -dx > abs(dy):
            seen.add(P.Left)
        elif dy > abs(dx):
            seen.add(P.Back)
        elif -dy > abs(dx):
            seen.add(P.Front)
    return len(seen) == 4


# --- placement -----------------------------------------------------------

def _directional_offset(parts, ht, hd, clearance, rng):
    off = np.zeros(3)
    axes = {a for a, _ in parts}
    for a, s in parts:
        off[a] = s * (ht[a] + hd[a] + clearance + rng.uniform(0.0, OFFSET_RANGE))
    bound = JITTER_FRACTION * min(abs(off[a]) for a in axes)
    for o in range(3):
        if o in axes:
            continue
        if o == 2:
            # rest on the same support plane as the target where dominance allows
            off[2] = float(np.clip(hd[2] - ht[2], -bound, bound))
        else:
            off[o] = rng.uniform(-bound, bound)
    return off


def _near_offset(ht, hd, t_diag, d_diag, clearance, rng):
    a, s = DIRECTIONS[_SECTORS[rng.integers(4)]][0]
    reach = 0.5 * (t_diag + d_diag) + clearance
    base = ht[a] + hd[a] + clearance
    along = base + rng.uniform(0.0, min(OFFSET_RANGE, max(0.0, reach - base)))
    budget = math.sqrt(max(0.0, reach * reach - along * along))
    off = np.zeros(3)
    off[a] = s * along
    off[2] = float(np.clip(hd[2] - ht[2], -0.5 * budget, 0.5 * budget))
    other = 1 - a
    side = math.sqrt(max(0.0, budget * budget - off[2] * off[2]))
    off[other] = rng.uniform(-0.9, 0.9) * side
    return off


def _group_offsets(pred, target_box, dboxes, clearance, rng):
    ht = target_box.half_extent
    if pred in DIRECTIONS:
        return [_directional_offset(DIRECTIONS[pred], ht, dboxes[0].half_extent, clearance, rng)]
    if pred == P.Near:
        return [_near_offset(ht, dboxes[0].half_extent, target_box.diagonal, dboxes[0].diagonal,
                             clearance, rng)]
    if pred == P.Between:
        a = int(rng.integers(2))
        offs = []
        for sign, b in zip((-1, 1), dboxes):
            off = np.zeros(3)
            off[a] = sign * (ht[a] + b.half_extent[a] + clearance + rng.uniform(0.0, OFFSET_RANGE))
            offs.append(off)
        return offs
    # Surrounded: one distractor per sector first, extras in random sectors
    sectors = list(_SECTORS) + [_SECTORS[i] for i in rng.integers(0, 4, len(dboxes) - 4)]
    order = rng.permutation(4)
    sectors[:4] = [_SECTORS[i] for i in order]
    return [_directional_offset(DIRECTIONS[sec], ht, b.half_extent, clearance, rng)
            for sec, b in zip(sectors, dboxes)]


def place_group(target_box: AABB, pred, distractors: Sequence[PointCloud],
                already_placed: Sequence[AABB] = (), clearance=0.05, seed=0):
    """Pose every distractor bound by ``pred`` around the target.

    Each attempt draws fresh offsets; the first draw that satisfies the
    predicate and avoids ``already_placed`` wins.
    """
    pred = P(pred)
    check_arity(pred, len(distractors))
    rng = np.random.default_rng(seed)
    dboxes = [aabb(d) for d in distractors]
    blockers = list(already_placed) + [target_box]
    ct = target_box.center
    for _ in range(MAX_ATTEMPTS):
        offs = _group_offsets(pred, target_box, dboxes, clearance, rng)
        shifts = [ct + off - b.center for off, b in zip(offs, dboxes)]
        boxes = [b.translated(s) for b, s in zip(dboxes, shifts)]
        if not evaluate_predicate(pred, target_box, boxes, clearance):
            continue
        if any(overlaps(b, o) for b in boxes for o in blockers):
            continue
        if any(overlaps(boxes[i], boxes[j]) for i in range(len(boxes)) for j in range(i + 1, len(boxes))):
            continue
        return [d.translated(s) for d, s in zip(distractors, shifts)]
    raise PlacementInfeasible(f"no valid pose for {pred.value} after {MAX_ATTEMPTS} attempts")


def place(target, pred, distractor: PointCloud, already_placed: Sequence[AABB] = (),
          clearance=0.05, seed=0) -> PointCloud:
    """Single-distractor placement. ``target`` is a PlacedObject or its AABB."""
    box = target if isinstance(target, AABB) else target.box
    check_arity(pred, 1)
    return place_group(box, pred, [distractor], already_placed, clearance, seed)[0]


def normalize_distractor(distractor, target: PointCloud, seed: int) -> PointCloud:
    """Match point count, then a random yaw, then a scale within the band.

    Scaling runs last so the diagonal band holds for the final pose.
    """
    cloud = distractor.cloud if isinstance(distractor, ObjectRecord) else distractor
    if len(cloud) == 0 or len(target) == 0:
        raise DegenerateCloud("cannot normalize against an empty cloud")
    t_diag = aabb(target).diagonal
    if t_diag <= 0:
        raise DegenerateCloud("target has zero extent")
    ss = np.random.SeedSequence(seed)
    s_resample, s_draw = (int(x) for x in ss.generate_state(2))
    rng = np.random.default_rng(s_draw)
    out = resample(cloud, len(target), s_resample)
    out = reorient(out, rng.uniform(0.0, 2.0 * math.pi))
    return rescale_to(out, t_diag * rng.uniform(*SCALE_BAND))


# --- background ----------------------------------------------------------

UNSEGMENTED = -1


def extract_target(scene_pc: PointCloud, target_instance: int):
    """Split a segmented scan into target, background and background instances."""
    if scene_pc.instance is None:
        raise UnknownInstance("scene carries no instance ids")
    mask = scene_pc.instance == target_instance
    if not mask.any():
        raise UnknownInstance(f"instance {target_instance} not in scene")
    target = scene_pc.take(np.flatnonzero(mask))
    background = scene_pc.take(np.flatnonzero(~mask))
    objects = {}
    for iid in np.unique(background.instance):
        objects[int(iid)] = background.take(np.flatnonzero(background.instance == iid))
    return target, background, objects


def _footprint(box: AABB):
    e = box.extent
    return float(e[0] * e[1])


def crop_points(pc: PointCloud, boxes: Sequence[AABB]) -> PointCloud:
    keep = np.ones(len(pc), dtype=bool)
    for b in boxes:
        keep &= ~b.contains_points(pc.xyz)
    return pc.take(np.flatnonzero(keep))


def exclude_overlaps(background, placed_boxes: Sequence[AABB], exempt_footprint=0.5):
    """Drop background instances whose box overlaps a placed box.

    ``background`` is either a mapping instance id -> cloud or a single
    unsegmented cloud. Unsegmented points (a bare cloud, or the
    ``UNSEGMENTED`` instance) are cropped point by point instead. Instances
    whose horizontal footprint exceeds ``exempt_footprint`` of the scene's
    are treated as floor/walls and kept.
    """
    placed_boxes = list(placed_boxes)
    if isinstance(background, PointCloud):
        return crop_points(background, placed_boxes)
    boxes = {iid: aabb(pc) for iid, pc in background.items() if len(pc)}
    if not boxes:
        return dict(background)
    lo = np.min([b.min for b in boxes.values()], axis=0)
    hi = np.max([b.max for b in boxes.values()], axis=0)
    scene_area = float((hi[0] - lo[0]) * (hi[1] - lo[1]))
    kept = {}
    for iid, pc in background.items():
        if iid == UNSEGMENTED:
            kept[iid] = crop_points(pc, placed_boxes)
            continue
        if iid not in boxes:
            kept[iid] = pc
            continue
        box = boxes[iid]
        if scene_area > 0 and _footprint(box) > exempt_footprint * scene_area:
            kept[iid] = pc
            continue
        if any(overlaps(box, p) for p in placed_boxes):
            continue
        kept[iid] = pc
    return kept


# --- scenes --------------------------------------------------------------

class Role(str, enum.Enum):
    Target = "Target"
    Distractor = "Distractor"


def predicate_groups(predicates):
    """Group a per-distractor predicate list into (predicate, indices) relations.

    Between entries pair up in order of appearance; all Surrounded entries form
    one relation; every other entry binds its own distractor.
    """
    preds = [P(p) for p in predicates]
    groups = []
    pending_between = None
    surrounded = []
    for i, p in enumerate(preds):
        if p == P.Between:
            if pending_between is None:
                pending_between = i
            else:
                groups.append((P.Between, [pending_between, i]))
                pending_between = None
        elif p == P.Surrounded:
            surrounded.append(i)
        else:
            groups.append((p, [i]))
    if pending_between is not None:
        raise ArityMismatch("Between entries must come in pairs")
    if surrounded:
        check_arity(P.Surrounded, len(surrounded))
        groups.insert(0, (P.Surrounded, surrounded))
    return groups


@dataclass
class SceneSpec:
    background: Union[PointCloud, str, Path, None]
    target_instance: int
    target_class: str
    distinction: DistinctionType
    num_distractors: int
    predicates: tuple
    clearance: float = 0.05
    seed: int = 0
    scene_id: Optional[str] = None
    color_same_max: float = 30.0
    color_diff_min: float = 80.0

    def __post_init__(self):
        self.distinction = DistinctionType(self.distinction)
        self.predicates = tuple(P(p) for p in self.predicates)
        if self.num_distractors < 1:
            raise ValueError("num_distractors must be >= 1")
        if len(self.predicates) != self.num_distractors:
            raise ArityMismatch(f"{len(self.predicates)} predicates for {self.num_distractors} distractors")
        predicate_groups(self.predicates)

    def summary(self):
        return {"target_instance": int(self.target_instance), "target_class": self.target_class,
                "distinction": self.distinction.value, "num_distractors": self.num_distractors,
                "predicates": [p.value for p in self.predicates], "clearance": self.clearance,
                "seed": int(self.seed), "color_same_max": self.color_same_max,
                "color_diff_min": self.color_diff_min}


@dataclass(eq=False)
class PlacedObject:
    record_id: str
    role: Role
    cloud: PointCloud
    box: AABB
    class_label: str
    shape: ShapeCategory
    mean_color: tuple
    instance_id: int
    predicate: Optional[SpatialPredicate] = None
    group: Optional[int] = None

    def manifest_row(self):
        return {"id": self.record_id, "role": self.role.value, "class": self.class_label,
                "predicate": None if self.predicate is None else self.predicate.value,
                "group": self.group, "box": self.box.as_list(), "instance_id": int(self.instance_id),
                "shape": self.shape.value, "mean_color": list(self.mean_color)}


@dataclass(eq=False)
class Scene:
    scene_id: str
    background_points: PointCloud
    objects: list
    target_box: AABB
    spec: SceneSpec
    target_id: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def target(self) -> PlacedObject:
        return next(o for o in self.objects if o.role == Role.Target)

    @property
    def distractors(self):
        return [o for o in self.objects if o.role == Role.Distractor]

    def points(self) -> PointCloud:
        parts = [self.background_points] + [o.cloud.with_instance(o.instance_id) for o in self.objects]
        return PointCloud.concat(parts)

    def relations(self):
        """(predicate, distractor objects) per declared relation."""
        groups = {}
        for o in self.distractors:
            groups.setdefault(o.group, []).append(o)
        return [(objs[0].predicate, objs) for _, objs in sorted(groups.items())]

    def manifest(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "target_id": self.target_id or self.target.record_id,
            "target_box": self.target_box.as_list(),
            "objects": [o.manifest_row() for o in self.objects],
            "distinction": self.spec.distinction.value,
            "num_distractors": self.spec.num_distractors,
            "seed": int(self.spec.seed),
            "spec": self.spec.summary(),
            **self.extra,
        }


def _spec_scene_id(spec: SceneSpec, background: PointCloud):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(background.xyz).tobytes())
    h.update(json.dumps(spec.summary(), sort_keys=True).encode())
    return "scene-" + h.hexdigest()[:12]


def _load_background(bg):
    if isinstance(bg, PointCloud):
        return bg
    return read_ply(bg)


def assemble(spec: SceneSpec, pool: Pool) -> Scene:
    """Extract target, retrieve and normalize distractors, place them, clean up."""
    scan = _load_background(spec.background)
    target_pc, _, bg_objects = extract_target(scan, spec.target_instance)
    target_pc = PointCloud(target_pc.xyz, target_pc.rgb, part=target_pc.part)
    target_rec = make_target_record(target_pc, spec.target_class)
    state = np.random.SeedSequence(spec.seed).generate_state(3 + 2 * spec.num_distractors, dtype=np.uint64)
    seeds = [int(s) for s in state]

    rspec = RetrievalSpec(target_rec, spec.distinction, spec.num_distractors,
                          spec.color_same_max, spec.color_diff_min)
    records = retrieve(pool, rspec, seeds[0])
    normalized = [normalize_distractor(r, target_pc, seeds[3 + i]) for i, r in enumerate(records)]

    target_box = aabb(target_pc)
    placed_boxes = []
    posed = [None] * spec.num_distractors
    group_of = {}
    for g, (pred, idxs) in enumerate(predicate_groups(spec.predicates)):
        clouds = place_group(target_box, pred, [normalized[i] for i in idxs], placed_boxes,
                             spec.clearance, seeds[3 + spec.num_distractors + g])
        for i, c in zip(idxs, clouds):
            posed[i] = c
            group_of[i] = g
            placed_boxes.append(aabb(c))

    retained = exclude_overlaps(bg_objects, placed_boxes)
    background = PointCloud.concat([retained[k] for k in sorted(retained)]) if retained else PointCloud.empty(True)

    used = [int(k) for k in bg_objects] + [int(spec.target_instance)]
    next_id = max(used) + 1
    objects = [PlacedObject(target_rec.id, Role.Target, target_pc, target_box, spec.target_class,
                            target_rec.shape, target_rec.mean_color, int(spec.target_instance))]
    for i, (rec, cloud) in enumerate(zip(records, posed)):
        objects.append(PlacedObject(rec.id, Role.Distractor, cloud, aabb(cloud), rec.class_label,
                                    rec.shape, rec.mean_color, next_id + i, spec.predicates[i],
                                    group_of[i]))
    scene_id = spec.scene_id or _spec_scene_id(spec, scan)
    return Scene(scene_id, background, objects, target_box, spec, target_rec.id)


def build_segmentation_pair(a: ObjectRecord, b: ObjectRecord, case: str, seed: int) -> Scene:
    """Two objects side by side under Near on an empty background.

    ``case`` is "LocShape" (same class, different shape) or "LocClass"
    (different class, same shape).
    """
    if case == "LocShape":
        if a.class_label != b.class_label or a.shape == b.shape:
            raise CaseViolation("LocShape needs the same class and different shapes")
        distinction = DistinctionType.LocationShape
    elif case == "LocClass":
        if a.class_label == b.class_label or a.shape != b.shape:
            raise CaseViolation("LocClass needs different classes and the same shape")
        distinction = DistinctionType.LocationClass
    else:
        raise ValueError(f"unknown case {case!r}")
    s_norm, s_place = (int(x) for x in np.random.SeedSequence(seed).generate_state(2))
    box = aabb(a.cloud)
    lift = -box.center
    lift[2] = -box.min[2]
    a_cloud = a.cloud.translated(lift)
    b_cloud = normalize_distractor(b, a_cloud, s_norm)
    a_box = aabb(a_cloud)
    b_posed = place_group(a_box, P.Near, [b_cloud], (), 0.05, s_place)[0]
    spec = SceneSpec(None, 0, a.class_label, distinction, 1, (P.Near,), seed=seed,
                     scene_id=f"seg-{case}-{a.id[:6]}-{b.id[:6]}-{seed}")
    objects = [
        PlacedObject(a.id, Role.Target, a_cloud, a_box, a.class_label, a.shape, a.mean_color, 0),
        PlacedObject(b.id, Role.Distractor, b_posed, aabb(b_posed), b.class_label, b.shape,
                     b.mean_color, 1, P.Near, 0),
    ]
    return Scene(spec.scene_id, PointCloud.empty(True), objects, a_box, spec, a.id)


# --- checks --------------------------------------------------------------

def verify_scene(scene: Scene):
    """Problems with the structural invariants of ``scene``; empty when valid."""
    problems = []
    targets = [o for o in scene.objects if o.role == Role.Target]
    if len(targets) != 1:
        problems.append(f"{len(targets)} target objects")
    elif targets[0].box != scene.target_box:
        problems.append("target_box differs from target object box")
    for o in scene.objects:
        if len(o.cloud) and aabb(o.cloud) != o.box:
            problems.append(f"object {o.record_id} box stale")
        if o.role == Role.Target and o.predicate is not None:
            problems.append("target carries a predicate")
    objs = scene.objects
    for i in range(len(objs)):
        for j in range(i + 1, len(objs)):
            if overlaps(objs[i].box, objs[j].box):
                problems.append(f"objects {i} and {j} overlap")
    for pred, members in scene.relations():
        if not evaluate_predicate(pred, scene.target_box, [m.box for m in members], scene.spec.clearance):
            problems.append(f"{pred.value} does not hold")
    return problems


def audit_distinction(scene: Scene, recompute=True):
    """Distractors violating the distinction row; features recomputed from geometry."""
    target = scene.target
    spec = RetrievalSpec(_audit_record(target, recompute), scene.spec.distinction, 1,
                         scene.spec.color_same_max, scene.spec.color_diff_min)
    bad = []
    for o in scene.distractors:
        if not satisfies(spec.target, _audit_record(o, recompute), spec):
            bad.append(o.record_id)
    return bad


def _audit_record(o: PlacedObject, recompute):
    if recompute:
        color, shape = mean_color(o.cloud), classify_shape(o.cloud)
    else:
        color, shape = o.mean_color, o.shape
    return ObjectRecord(o.record_id, o.class_label, "RealScan", color, shape, o.cloud, "")


# --- serialization -------------------------------------------------------

def scene_to_bytes(scene: Scene):
    """(PLY bytes, JSON bytes) for a scene. Output is byte-stable."""
    ply = serialize_ply(scene.points(), comments=[f"scene {scene.scene_id}"])
    manifest = json.dumps(scene.manifest(), sort_keys=True, indent=1).encode("utf-8") + b"\n"
    return ply, manifest


def save_scene(scene: Scene, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ply, manifest = scene_to_bytes(scene)
    (out_dir / f"{scene.scene_id}.ply").write_bytes(ply)
    (out_dir / f"{scene.scene_id}.json").write_bytes(manifest)
    return out_dir / f"{scene.scene_id}.json"


def load_scene(scene_dir, scene_id) -> Scene:
    scene_dir = Path(scene_dir)
    manifest = json.loads((scene_dir / f"{scene_id}.json").read_text(encoding="utf-8"))
    points = read_ply(scene_dir / f"{scene_id}.ply")
    return scene_from_parts(points, manifest)


def scene_from_parts(points: PointCloud, manifest: Mapping) -> Scene:
    s = manifest["spec"]
    spec = SceneSpec(None, s["target_instance"], s["target_class"], s["distinction"],
                     s["num_distractors"], tuple(s["predicates"]), s["clearance"], s["seed"],
                     manifest["scene_id"], s["color_same_max"], s["color_diff_min"])
    objects = []
    taken = np.zeros(len(points), dtype=bool)
    for row in manifest["objects"]:
        mask = points.instance == row["instance_id"]
        taken |= mask
        cloud = points.take(np.flatnonzero(mask))
        cloud = PointCloud(cloud.xyz, cloud.rgb, part=cloud.part)
        objects.append(PlacedObject(row["id"], Role(row["role"]), cloud, AABB.from_list(row["box"]),
                                    row["class"], ShapeCategory(row["shape"]), tuple(row["mean_color"]),
                                    row["instance_id"], None if row["predicate"] is None else P(row["predicate"]),
                                    row["group"]))
    background = points.take(np.flatnonzero(~taken))
    known = {"scene_id", "target_id", "target_box", "objects", "distinction", "num_distractors", "seed", "spec"}
    extra = {k: v for k, v in manifest.items() if k not in known}
    return Scene(manifest["scene_id"], background, objects, AABB.from_list(manifest["target_box"]),
                 spec, manifest["target_id"], extra)
