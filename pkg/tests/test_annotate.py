import itertools
import re

import numpy as np
import pytest

from conftest import cloud_of
from variantscene import synth
from variantscene.annotate import (
    SENTINEL,
    AnnotationConfig,
    DistinctionSummary,
    MockLanguageClient,
    MockVisionClient,
    Prompts,
    annotate_pair,
    annotate_scene,
    compose_annotation,
    describe_object,
    is_identifiable,
    iter_cap,
    location_phrase,
    mock_clients,
    plural,
)
from variantscene.errors import ArityMismatch, ClientFailure, NonUniqueDescription
from variantscene.geometry import DEFAULT_VIEWS, ShapeCategory, aabb, concat_images, render_view
from variantscene.pool import DistinctionType
from variantscene.scene import PlacedObject, Role, Scene, SceneSpec, SpatialPredicate, assemble

P = SpatialPredicate
S = ShapeCategory


def obj(shape, color, seed, cls="chair"):
    cloud = synth.make_object(shape, color, np.random.default_rng(seed), n=600)
    return cloud, describe_object(cloud, cls, shape)


def pair_image(a, b, view=DEFAULT_VIEWS[0]):
    ta = render_view([a[0]], view, 32, 32, [a[1]])
    tb = render_view([b[0]], view, 32, 32, [b[1]])
    return concat_images(ta, tb)


@pytest.fixture(scope="module")
def shape_pair():
    return obj(S.LShape, synth.PALETTE["brown"], 1), obj(S.Cuboid, synth.PALETTE["brown"], 2)


class TestIterCap:
    def test_three_rounds_stable(self, shape_pair):
        img = pair_image(*shape_pair)
        cfg = AnnotationConfig()
        a = iter_cap(img, 3, mock_clients(0), cfg)
        b = iter_cap(img, 3, mock_clients(0), cfg)
        assert len(a) == 3 and a == b

    def test_single_round_is_first_answer(self, shape_pair):
        img = pair_image(*shape_pair)
        cfg = AnnotationConfig()
        vision, language = mock_clients(4)
        caps = iter_cap(img, 1, (vision, language), cfg, round=2)
        question = language.complete(cfg.load_prompts().question_seed.format(
            round=2, rounds=cfg.qa_rounds, view="", iteration=1, history="(none)"))
        assert caps == [vision.describe(img, question)]

    def test_verbose_answer_reasked(self, shape_pair):
        class Chatty(MockVisionClient):
            calls = 0

            def describe(self, image, prompt):
                Chatty.calls += 1
                if Chatty.calls == 1:
                    return "word " * 200
                return super().describe(image, prompt)

        from variantscene.annotate import ViewSlot

        slot = ViewSlot(0, 1, "front")
        caps = iter_cap(pair_image(*shape_pair), 3, (Chatty(), MockLanguageClient()), AnnotationConfig(), slot=slot)
        assert len(caps) == 3
        assert sum(len(e.rejections) for e in slot.entries) == 1
        assert slot.entries[0].accepted and "verbose" in slot.entries[0].rejections[0]["reason"]

    def test_always_verbose_dropped(self, shape_pair):
        class Verbose:
            def describe(self, image, prompt):
                return "word " * 100

        from variantscene.annotate import ViewSlot

        slot = ViewSlot(0, 1, "front")
        caps = iter_cap(pair_image(*shape_pair), 2, (Verbose(), MockLanguageClient()), AnnotationConfig(), slot=slot)
        assert caps == []
        assert all(not e.accepted and e.reason for e in slot.entries)

    def test_client_failure_after_retry(self, shape_pair):
        class Flaky:
            def __init__(self):
                self.calls = 0

            def describe(self, image, prompt):
                self.calls += 1
                raise ConnectionError("down")

        flaky = Flaky()
        with pytest.raises(ClientFailure) as exc:
            iter_cap(pair_image(*shape_pair), 1, (flaky, MockLanguageClient()), AnnotationConfig(), round=3,
                     view="top")
        assert flaky.calls == 2
        assert (exc.value.round, exc.value.view) == (3, "top")

    def test_transient_failure_recovers(self, shape_pair):
        class OnceBroken(MockVisionClient):
            broken = True

            def describe(self, image, prompt):
                if OnceBroken.broken:
                    OnceBroken.broken = False
                    raise TimeoutError
                return super().describe(image, prompt)

        caps = iter_cap(pair_image(*shape_pair), 2, (OnceBroken(), MockLanguageClient()), AnnotationConfig())
        assert len(caps) == 2

    def test_bad_rounds(self, shape_pair):
        with pytest.raises(ValueError):
            iter_cap(pair_image(*shape_pair), 0, mock_clients(0), AnnotationConfig())


class TestAnnotatePair:
    def test_shape_pair(self, shape_pair):
        (ta, ia), (tb, ib) = shape_pair
        summary, transcript = annotate_pair(ta, tb, mock_clients(0), AnnotationConfig(),
                                            target_info=ia, distractor_info=ib)
        assert "shape" in summary.combined
        assert "shape" in summary.dimensions_covered
        assert len(transcript.slots) == 6 * 4
        assert transcript.accepted_captions <= 6 * 4 * 3
        keys = transcript.keys()
        assert len(keys) == len(set(keys))
        assert [(s.round, s.view) for s in transcript.slots] == [
            (r, v.name) for r in range(1, 7) for v in DEFAULT_VIEWS]

    def test_identical_clouds(self):
        cloud, info = obj(S.Cuboid, synth.PALETTE["red"], 3)
        summary, _ = annotate_pair(cloud, cloud, mock_clients(0), AnnotationConfig(),
                                   target_info=info, distractor_info=info)
        assert summary.combined == SENTINEL
        assert summary.dimensions_covered == frozenset({"other"})

    def test_color_pair(self):
        a = obj(S.Cuboid, synth.PALETTE["red"], 3)
        b = obj(S.Cuboid, synth.PALETTE["blue"], 4)
        summary, _ = annotate_pair(a[0], b[0], mock_clients(1), AnnotationConfig(qa_rounds=2),
                                   target_info=a[1], distractor_info=b[1])
        assert "color" in summary.dimensions_covered and "red" in summary.combined

    def test_summary_is_extractive(self, shape_pair):
        (ta, ia), (tb, ib) = shape_pair
        summary, transcript = annotate_pair(ta, tb, mock_clients(0), AnnotationConfig(qa_rounds=3),
                                            target_info=ia, distractor_info=ib)
        caption_words = set()
        for s in transcript.slots:
            for e in s.entries:
                caption_words |= set(re.findall(r"[\w-]+", e.answer))
        assert set(re.findall(r"[\w-]+", summary.combined)) <= caption_words

    def test_summary_invariants(self):
        with pytest.raises(ValueError):
            DistinctionSummary(0, "", "", "  ", frozenset({"shape"}))
        with pytest.raises(ValueError):
            DistinctionSummary(0, "", "", "x", frozenset())


class TestMocks:
    def test_round_one_asks_height(self):
        cfg = AnnotationConfig()
        prompt = cfg.load_prompts().question_seed.format(round=1, rounds=6, view="front", iteration=1,
                                                         history="(none)")
        assert "height" in MockLanguageClient(0).complete(prompt)

    def test_attribute_cycle(self):
        cfg = AnnotationConfig()
        lang = MockLanguageClient(0)
        asked = []
        for r in range(1, 8):
            q = lang.complete(cfg.load_prompts().question_seed.format(round=r, rounds=7, view="", iteration=1,
                                                                      history=""))
            asked.append(next(a for a in ("height", "color", "shape", "parts", "size", "material") if a in q))
        assert asked == ["height", "color", "shape", "parts", "size", "material", "height"]

    def test_summarizer_extractive(self):
        prompts = Prompts.load("v1")
        caps = ["The target chair is taller than the other chair; they differ in height.",
                "There is no salient difference in color.",
                "The target chair is cuboid while the other chair is L-shaped; they differ in shape."]
        out = MockLanguageClient(0).complete(prompts.sum_p_2.format(items="\n".join(f"- {c}" for c in caps)))
        tokens_in = set(" ".join(caps).split())
        assert set(out.split()) <= tokens_in
        assert "salient" not in out

    def test_same_seed_same_answers(self, shape_pair):
        img = pair_image(*shape_pair)
        v1, _ = mock_clients(5)
        v2, _ = mock_clients(5)
        prompts = [f"How do they differ in {a}?" for a in ("height", "shape", "color")]
        assert [v1.describe(img, p) for p in prompts] == [v2.describe(img, p) for p in prompts]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AnnotationConfig(qa_rounds=0)
        with pytest.raises(ValueError):
            AnnotationConfig(views=())


class TestLocationPhrase:
    def test_left(self):
        assert location_phrase(P.Left, ["chair"]) == "to the left of the chair"

    def test_between(self):
        assert location_phrase(P.Between, ["chair", "chair"]) == "between the two chairs"

    def test_between_arity(self):
        with pytest.raises(ArityMismatch):
            location_phrase(P.Between, ["chair"])

    def test_surrounded(self):
        assert location_phrase(P.Surrounded, ["chair"] * 4) == "surrounded by the chairs"

    def test_one_phrase_per_predicate(self):
        phrases = {p: location_phrase(p, ["box"] * {P.Between: 2, P.Surrounded: 4}.get(p, 1)) for p in P}
        assert len(set(phrases.values())) == 13

    def test_plural(self):
        assert [plural(w) for w in ("chair", "box", "bench", "lamp")] == ["chairs", "boxes", "benches", "lamps"]


def box_cloud(center, half=0.25, color=(120, 80, 40)):
    c = np.asarray(center, float)
    corners = np.array(list(itertools.product((-1, 1), repeat=3))) * half + c
    return cloud_of(corners, color)


def manual_scene(kind, items):
    """items: (role, class, center, predicate, group, shape)."""
    objects = []
    for k, (role, cls, center, pred, group, shape) in enumerate(items):
        cloud = box_cloud(center)
        objects.append(PlacedObject(f"o{k}", role, cloud, aabb(cloud), cls, shape, (120, 80, 40), k, pred, group))
    preds = tuple(o.predicate for o in objects if o.role == Role.Distractor)
    spec = SceneSpec(None, 0, items[0][1], kind, len(preds), preds, scene_id="manual")
    return Scene("manual", cloud_of(np.zeros((0, 3))), objects, objects[0].box, spec, "o0")


def summaries_for(scene, text="The target chair is L-shaped while the other chair is cuboid; they differ in shape."):
    dims = frozenset({"shape"}) if "shape" in text else frozenset({"other"})
    return [DistinctionSummary(i, "", "", text, dims) for i in range(len(scene.distractors))]


class TestCompose:
    def test_location_left_is_location_only(self):
        scene = manual_scene(DistinctionType.Location, [
            (Role.Target, "chair", (0, 0, 0), None, None, S.Cuboid),
            (Role.Distractor, "chair", (-1, 0, 0), P.Left, 0, S.Cuboid)])
        ann = compose_annotation(scene, summaries_for(scene))
        # the distractor sits to the left, so the target is to the right of it
        assert ann.text == "The chair to the right of the chair."
        assert ann.location_phrase == "to the right of the chair"

    def test_location_shape_clause(self):
        scene = manual_scene(DistinctionType.LocationShape, [
            (Role.Target, "chair", (0, 0, 0), None, None, S.LShape),
            (Role.Distractor, "chair", (1, 0, 0), P.Right, 0, S.Cuboid)])
        ann = compose_annotation(scene, summaries_for(scene))
        assert ann.text.startswith("The L-shaped chair to the left of the chair.")
        assert "differ in shape" in ann.text
        assert "chair" in ann.text and ann.location_phrase in ann.text

    def test_non_unique(self):
        scene = manual_scene(DistinctionType.Location, [
            (Role.Target, "chair", (0, 0, 0), None, None, S.Cuboid),
            (Role.Distractor, "chair", (0.7, 0, 0), P.Near, 0, S.Cuboid)])
        assert not is_identifiable(scene)
        with pytest.raises(NonUniqueDescription) as exc:
            compose_annotation(scene, summaries_for(scene))
        assert set(exc.value.matches) == {"o0", "o1"}

    def test_witnesses_must_be_distinct(self):
        # "to the right of two chairs": only the target has two chairs on its left
        scene = manual_scene(DistinctionType.Location, [
            (Role.Target, "chair", (0, 0, 0), None, None, S.Cuboid),
            (Role.Distractor, "chair", (-1, 0, 0), P.Left, 0, S.Cuboid),
            (Role.Distractor, "chair", (-2, 0, 0), P.Left, 1, S.Cuboid)])
        ann = compose_annotation(scene, summaries_for(scene))
        assert "to the right of two chairs" in ann.text

    def test_summary_count(self):
        scene = manual_scene(DistinctionType.Location, [
            (Role.Target, "chair", (0, 0, 0), None, None, S.Cuboid),
            (Role.Distractor, "chair", (-1, 0, 0), P.Left, 0, S.Cuboid)])
        with pytest.raises(ValueError):
            compose_annotation(scene, [])


def test_annotate_scene_deterministic(small_pool):
    room = synth.make_room(2, "chair", S.Cuboid, synth.PALETTE["red"])
    spec = SceneSpec(room.cloud, room.target_instance, "chair", DistinctionType.LocationColor, 2,
                     (P.Left, P.Back), seed=2)
    scene = assemble(spec, small_pool)
    cfg = AnnotationConfig(qa_rounds=2)
    a, sa, ta = annotate_scene(scene, mock_clients(0), cfg)
    b, sb, tb = annotate_scene(scene, mock_clients(0), cfg)
    assert a.to_json() == b.to_json()
    assert "red chair" in a.text and "differ in color" in a.text
    assert [len(t.slots) for t in ta] == [2 * 4, 2 * 4]
    row = a.to_json()
    assert set(row) >= {"scene_id", "target_id", "text", "location_phrase", "distinction", "target_box",
                        "transcript_ref"}
    assert len(row["target_box"]) == 6
