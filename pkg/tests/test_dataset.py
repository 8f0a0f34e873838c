import collections

import numpy as np
import pytest

from variantscene.config import DEFAULTS, ConfigError, RunConfig
from variantscene.dataset import GenerationSettings, generate, sample_predicates, scene_plan, summary_table
from variantscene.pool import DistinctionType
from variantscene.scene import SpatialPredicate, audit_distinction, predicate_groups, scene_to_bytes, verify_scene

P = SpatialPredicate


@pytest.mark.parametrize("n", range(1, 11))
def test_sample_predicates_fill(n):
    rng = np.random.default_rng(n)
    for _ in range(50):
        preds = sample_predicates(n, rng)
        assert len(preds) == n
        predicate_groups(preds)
        counts = collections.Counter(preds)
        assert all(c <= 2 for p, c in counts.items() if p not in (P.Between, P.Surrounded))
        assert counts.get(P.Surrounded, 0) in (0, 4)


def test_sample_predicates_restricted():
    rng = np.random.default_rng(0)
    assert sample_predicates(3, rng, {"Left": 1.0, "Right": 1.0, "Near": 1.0}, 1) in {
        tuple(p) for p in __import__("itertools").permutations([P.Left, P.Right, P.Near])}
    with pytest.raises(ValueError):
        sample_predicates(3, rng, {"Left": 1.0}, 2)


def test_equal_weights_balance():
    counts = collections.Counter(scene_plan(GenerationSettings(seed=7), i)[0] for i in range(100))
    assert set(counts) == set(DistinctionType)
    assert all(15 <= c <= 35 for c in counts.values())


def test_generate_small_batch(small_pool):
    settings = GenerationSettings(seed=3, distractors=((2, 1.0), (3, 1.0), (4, 1.0)))
    results = generate(small_pool, settings, 12)
    ok = [r for r in results if r.scene is not None]
    assert len(ok) >= 11
    for r in ok:
        assert verify_scene(r.scene) == []
        assert audit_distinction(r.scene) == []
        assert r.scene.spec.num_distractors == r.num_distractors
    table = summary_table(results)
    assert sum(sum(row.values()) for row in table.values()) == len(ok)


def test_jobs_do_not_change_output(small_pool):
    settings = GenerationSettings(seed=5, distractors=((2, 1.0), (3, 1.0), (4, 1.0)))
    a = generate(small_pool, settings, 6, jobs=1)
    b = generate(small_pool, settings, 6, jobs=2)
    for x, y in zip(a, b):
        assert (x.scene is None) == (y.scene is None)
        if x.scene is not None:
            assert scene_to_bytes(x.scene) == scene_to_bytes(y.scene)


class TestConfig:
    def test_defaults(self):
        cfg = RunConfig.from_dict()
        assert cfg.seed == 0
        assert cfg.annotation_config().qa_rounds == 6
        assert [v.name for v in cfg.annotation_config().views] == ["front", "left", "back", "top"]

    def test_override(self):
        cfg = RunConfig.from_dict({"generate": {"count": 5, "distinctions": {"Location": 1}}})
        assert cfg["generate"]["count"] == 5
        assert cfg["generate"]["distinctions"] == {"Location": 1}
        assert cfg["generate"]["clearance"] == DEFAULTS["generate"]["clearance"]

    @pytest.mark.parametrize("bad", [
        {"nope": 1},
        {"generate": {"distinctions": {"Location": 0}}},
        {"generate": {"predicates": {"Sideways": 1}}},
        {"generate": {"color_same_max": 90}},
        {"annotation": {"views": []}},
        {"annotation": {"qa_rounds": 0}},
        {"client": {"kind": "carrier-pigeon"}},
    ])
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(bad)

    def test_load_yaml(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("seed: 9\ngenerate:\n  count: 3\n")
        cfg = RunConfig.load(path)
        assert cfg.seed == 9 and cfg["generate"]["count"] == 3

    def test_example_config_loads(self):
        from pathlib import Path

        example = Path(__file__).resolve().parents[1] / "configs" / "example.yaml"
        cfg = RunConfig.load(example)
        assert cfg.snapshot()["generate"]["count"] >= 1
