import numpy as np
import pytest

from conftest import cloud_of
from variantscene import synth
from variantscene.errors import (
    ArityMismatch,
    CaseViolation,
    DegenerateCloud,
    PlacementInfeasible,
    UnknownInstance,
)
from variantscene.geometry import AABB, PointCloud, ShapeCategory, aabb, intersection_volume
from variantscene.pool import DistinctionType, ObjectRecord, Pool
from variantscene.scene import (
    UNSEGMENTED,
    SceneSpec,
    SpatialPredicate,
    arity,
    assemble,
    audit_distinction,
    build_segmentation_pair,
    evaluate_predicate,
    exclude_overlaps,
    extract_target,
    load_scene,
    normalize_distractor,
    place,
    place_group,
    predicate_groups,
    save_scene,
    scene_to_bytes,
    verify_scene,
)

P = SpatialPredicate
S = ShapeCategory


def unit_box(center, half=0.25):
    c = np.asarray(center, float)
    return AABB(tuple(c - half), tuple(c + half))


def test_thirteen_predicates():
    assert len(P) == 13
    assert [arity(p) for p in (P.Left, P.Between, P.Surrounded, P.Near)] == [1, 2, 4, 1]


class TestEvaluatePredicate:
    def test_left(self):
        t, d = unit_box((0, 0, 0)), unit_box((-1, 0, 0))
        assert evaluate_predicate(P.Left, t, [d])
        assert not evaluate_predicate(P.Right, t, [d])

    @pytest.mark.parametrize("pred,offset", [
        (P.Right, (1, 0, 0)), (P.Front, (0, -1, 0)), (P.Back, (0, 1, 0)), (P.Above, (0, 0, 1)),
        (P.Below, (0, 0, -1)), (P.UpperLeft, (-1, 0, 1)), (P.UpperRight, (1, 0, 1)),
        (P.LowerLeft, (-1, 0, -1)), (P.LowerRight, (1, 0, -1)), (P.Near, (0.6, 0, 0)),
    ])
    def test_frame(self, pred, offset):
        assert evaluate_predicate(pred, unit_box((0, 0, 0)), [unit_box(offset)])

    def test_between(self):
        t = unit_box((0, 0, 0))
        assert evaluate_predicate(P.Between, t, [unit_box((-2, 0, 0)), unit_box((2, 0, 0))])
        assert not evaluate_predicate(P.Between, t, [unit_box((2, 0, 0)), unit_box((4, 0, 0))])

    def test_surrounded(self):
        t = unit_box((0, 0, 0))
        ring = [unit_box(c) for c in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0))]
        assert evaluate_predicate(P.Surrounded, t, ring)
        assert not evaluate_predicate(P.Surrounded, t, ring[:3] + [unit_box((1, 0.5, 0))])

    def test_overlap_is_false(self):
        assert not evaluate_predicate(P.Left, unit_box((0, 0, 0)), [unit_box((-0.4, 0, 0))])

    def test_far_is_not_near(self):
        assert not evaluate_predicate(P.Near, unit_box((0, 0, 0)), [unit_box((5, 0, 0))])

    def test_arity(self):
        with pytest.raises(ArityMismatch):
            evaluate_predicate(P.Between, unit_box((0, 0, 0)), [unit_box((1, 0, 0))])
        with pytest.raises(ArityMismatch):
            evaluate_predicate(P.Surrounded, unit_box((0, 0, 0)), [unit_box((1, 0, 0))] * 3)


class TestPlacement:
    def cube(self, seed, n=300):
        return cloud_of(np.random.default_rng(seed).random((n, 3)))

    def test_left_round_trip(self):
        t = aabb(self.cube(0))
        posed = place(t, P.Left, self.cube(1), seed=3)
        assert evaluate_predicate(P.Left, t, [aabb(posed)])

    def test_between_round_trip(self):
        t = aabb(self.cube(0))
        posed = place_group(t, P.Between, [self.cube(1), self.cube(2)], seed=4)
        assert evaluate_predicate(P.Between, t, [aabb(c) for c in posed])

    @pytest.mark.parametrize("pred", list(P))
    def test_every_predicate(self, pred):
        t = aabb(self.cube(0))
        k = {P.Between: 2, P.Surrounded: 5}.get(pred, 1)
        posed = place_group(t, pred, [self.cube(10 + i) for i in range(k)], seed=5)
        assert evaluate_predicate(pred, t, [aabb(c) for c in posed])

    def test_boxed_in(self):
        t = aabb(self.cube(0))
        wall = AABB((-10, -10, -10), (11, 11, 11))
        with pytest.raises(PlacementInfeasible):
            place(t, P.Left, self.cube(1), already_placed=[wall], seed=0)

    def test_normalize(self):
        rng = np.random.default_rng(0)
        target = synth.make_object(S.Cuboid, (100, 100, 100), rng, n=1000)
        rec = ObjectRecord.from_cloud(synth.make_object(S.LShape, (100, 100, 100), rng, n=1536), "chair")
        a = normalize_distractor(rec, target, 42)
        b = normalize_distractor(rec, target, 42)
        assert len(a) == len(target)
        assert 0.8 <= aabb(a).diagonal / aabb(target).diagonal <= 1.2
        assert np.array_equal(a.xyz, b.xyz) and np.array_equal(a.rgb, b.rgb)

    def test_normalize_degenerate(self):
        with pytest.raises(DegenerateCloud):
            normalize_distractor(cloud_of(np.zeros((5, 3))), cloud_of([[1, 1, 1]] * 4), 0)


class TestBackground:
    def test_extract_partition(self, rng):
        ids = np.array([7] * 20 + [1] * 50 + [2] * 30)
        pc = PointCloud(rng.random((100, 3)), rng.integers(0, 256, (100, 3)), ids)
        t, bg, objs = extract_target(pc, 7)
        assert (len(t), len(bg)) == (20, 80)
        assert sorted(objs) == [1, 2]
        merged = sorted(map(tuple, np.vstack([t.xyz, bg.xyz])))
        assert merged == sorted(map(tuple, pc.xyz))

    def test_extract_missing(self, rng):
        pc = PointCloud(rng.random((10, 3)), np.zeros((10, 3)), np.zeros(10))
        with pytest.raises(UnknownInstance):
            extract_target(pc, 7)

    def floor_and_lamp(self):
        floor = cloud_of([[x, y, 0] for x in range(11) for y in range(11)])
        lamp = cloud_of([[5.0, 5.0, 0.5], [5.2, 5.2, 1.0]])
        return {0: floor, 3: lamp}

    def test_lamp_removed_floor_kept(self):
        kept = exclude_overlaps(self.floor_and_lamp(), [AABB((4.5, 4.5, 0.1), (5.5, 5.5, 1.5))])
        assert sorted(kept) == [0]

    def test_no_intersections(self):
        bg = self.floor_and_lamp()
        kept = exclude_overlaps(bg, [AABB((8, 8, 1), (9, 9, 2))])
        assert sorted(kept) == [0, 3] and kept[3] is bg[3]

    def test_fallback_crop(self):
        pc = cloud_of([[0, 0, 0], [1, 1, 1], [5, 5, 5]])
        kept = exclude_overlaps(pc, [AABB((0.5, 0.5, 0.5), (1.5, 1.5, 1.5))])
        assert kept.xyz.tolist() == [[0, 0, 0], [5, 5, 5]]

    def test_unsegmented_instance_cropped(self):
        bg = {UNSEGMENTED: cloud_of([[0, 0, 0], [1, 1, 1]])}
        kept = exclude_overlaps(bg, [AABB((0.5, 0.5, 0.5), (1.5, 1.5, 1.5))])
        assert kept[UNSEGMENTED].xyz.tolist() == [[0, 0, 0]]


def test_predicate_groups():
    groups = predicate_groups([P.Left, P.Between, P.Surrounded, P.Between] + [P.Surrounded] * 3)
    assert groups == [(P.Surrounded, [2, 4, 5, 6]), (P.Left, [0]), (P.Between, [1, 3])]
    with pytest.raises(ArityMismatch):
        predicate_groups([P.Between])
    with pytest.raises(ArityMismatch):
        predicate_groups([P.Surrounded] * 3)


def room_spec(kind, preds, seed=3, shape=S.LShape, color="brown", cls="chair"):
    room = synth.make_room(seed, cls, shape, synth.PALETTE[color])
    return room, SceneSpec(room.cloud, room.target_instance, cls, kind, len(preds), tuple(preds), seed=seed)


class TestAssemble:
    def test_location_left_right(self, small_pool):
        _, spec = room_spec(DistinctionType.Location, [P.Left, P.Right])
        scene = assemble(spec, small_pool)
        assert len(scene.objects) == 3
        assert {o.class_label for o in scene.objects} == {"chair"}
        assert verify_scene(scene) == []
        assert audit_distinction(scene) == []

    def test_location_shape(self, small_pool):
        _, spec = room_spec(DistinctionType.LocationShape, [P.Front])
        scene = assemble(spec, small_pool)
        t, d = scene.target, scene.distractors[0]
        assert d.class_label == t.class_label and d.shape != t.shape
        assert audit_distinction(scene) == []

    def test_ten_distractors(self, full_pool):
        preds = [P.Left, P.Right, P.Front, P.Back, P.Above, P.Below, P.UpperLeft, P.UpperRight,
                 P.LowerLeft, P.LowerRight]
        _, spec = room_spec(DistinctionType.LocationColor, preds, seed=5)
        try:
            scene = assemble(spec, full_pool)
        except PlacementInfeasible:
            return
        assert len(scene.objects) == 11 and verify_scene(scene) == []

    def test_point_conservation_and_disjoint(self, small_pool):
        _, spec = room_spec(DistinctionType.Location, [P.Between, P.Between, P.Near])
        scene = assemble(spec, small_pool)
        total = len(scene.background_points) + sum(len(o.cloud) for o in scene.objects)
        assert len(scene.points()) == total
        objs = scene.objects
        for i in range(len(objs)):
            for j in range(i + 1, len(objs)):
                assert intersection_volume(objs[i].box, objs[j].box) == 0.0

    def test_deterministic_bytes(self, small_pool):
        _, spec = room_spec(DistinctionType.LocationColor, [P.Above, P.Near])
        assert scene_to_bytes(assemble(spec, small_pool)) == scene_to_bytes(assemble(spec, small_pool))

    def test_unknown_target(self, small_pool):
        room, spec = room_spec(DistinctionType.Location, [P.Left])
        spec.target_instance = 999
        with pytest.raises(UnknownInstance):
            assemble(spec, small_pool)

    def test_save_load(self, tmp_path, small_pool):
        _, spec = room_spec(DistinctionType.LocationClass, [P.Surrounded] * 4)
        scene = assemble(spec, small_pool)
        save_scene(scene, tmp_path)
        back = load_scene(tmp_path, scene.scene_id)
        assert scene_to_bytes(back) == scene_to_bytes(scene)
        assert verify_scene(back) == []

    def test_spec_arity(self):
        with pytest.raises(ArityMismatch):
            SceneSpec(None, 0, "chair", DistinctionType.Location, 2, (P.Left,))


class TestSegmentationPair:
    def rec(self, cls, shape, seed):
        rng = np.random.default_rng(seed)
        return ObjectRecord.from_cloud(synth.make_object(shape, (120, 80, 40), rng, parts=True), cls)

    def test_loc_shape(self):
        scene = build_segmentation_pair(self.rec("table", S.Cuboid, 1), self.rec("table", S.LShape, 2),
                                        "LocShape", 0)
        assert scene.spec.distinction == DistinctionType.LocationShape
        assert verify_scene(scene) == []

    def test_loc_class(self):
        scene = build_segmentation_pair(self.rec("table", S.Cuboid, 1), self.rec("skateboard", S.Cuboid, 3),
                                        "LocClass", 0)
        assert scene.spec.distinction == DistinctionType.LocationClass
        assert verify_scene(scene) == []

    def test_violation(self):
        with pytest.raises(CaseViolation):
            build_segmentation_pair(self.rec("table", S.Cuboid, 1), self.rec("table", S.Cuboid, 2),
                                    "LocShape", 0)
