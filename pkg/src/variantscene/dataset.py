"""Seeded batch generation of benchmark scenes."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .annotate import is_identifiable
from .errors import InsufficientCandidates, PlacementInfeasible
from .geometry import color_distance
from .pool import DistinctionType, Pool
from .scene import Scene, SceneSpec, SpatialPredicate, assemble, save_scene, verify_scene
from .synth import PALETTE, make_room

log = logging.getLogger(__name__)

P = SpatialPredicate
MANIFEST_VERSION = 1
UNARY = [p for p in P if p not in (P.Between, P.Surrounded)]


@dataclass(frozen=True)
class GenerationSettings:
    seed: int = 0
    distinctions: tuple = tuple((d.value, 1.0) for d in DistinctionType)
    distractors: tuple = tuple((n, 1.0) for n in range(2, 11))
    predicates: tuple = tuple((p.value, 1.0) for p in P)
    max_unary_repeat: int = 2
    clearance: float = 0.05
    color_same_max: float = 30.0
    color_diff_min: float = 80.0
    retries: int = 24
    room_size: float = 8.0
    n_clutter: int = 5

    @classmethod
    def from_config(cls, cfg) -> "GenerationSettings":
        g = cfg["generate"]
        # canonical order, so a config snapshot with re-sorted keys draws the same scenes
        return cls(seed=cfg.seed,
                   distinctions=tuple(sorted((k, float(w)) for k, w in g["distinctions"].items())),
                   distractors=tuple(sorted((int(n), float(w)) for n, w in g["distractors"])),
                   predicates=tuple(sorted((k, float(w)) for k, w in g["predicates"].items())),
                   max_unary_repeat=g["max_unary_repeat"], clearance=g["clearance"],
                   color_same_max=g["color_same_max"], color_diff_min=g["color_diff_min"],
                   retries=g["retries"], room_size=g["room"]["size"], n_clutter=g["room"]["n_clutter"])


def _draw(rng, pairs):
    values = [v for v, _ in pairs]
    w = np.array([float(x) for _, x in pairs])
    return values[int(rng.choice(len(values), p=w / w.sum()))]


def sample_predicates(n: int, rng, weights=None, max_unary_repeat=2) -> tuple:
    """Per-distractor predicate list for ``n`` distractors.

    Between consumes two distractors, Surrounded four (at most once); unary
    predicates repeat at most ``max_unary_repeat`` times.
    """
    weights = dict(weights or {p.value: 1.0 for p in P})
    counts = {}
    out = []
    surrounded = False
    while len(out) < n:
        left = n - len(out)
        options = []
        for p in P:
            w = float(weights.get(p.value, 0.0))
            if w <= 0:
                continue
            if p == P.Surrounded and (surrounded or left < 4):
                continue
            if p == P.Between and left < 2:
                continue
            if p in UNARY and counts.get(p, 0) >= max_unary_repeat:
                continue
            options.append((p, w))
        if not options:
            raise ValueError(f"predicate weights cannot fill {n} distractors")
        p = _draw(rng, options)
        if p == P.Surrounded:
            out.extend([p] * 4)
            surrounded = True
        elif p == P.Between:
            out.extend([p] * 2)
        else:
            out.append(p)
            counts[p] = counts.get(p, 0) + 1
    return tuple(out)


def _nearest_palette(rgb):
    return min(PALETTE, key=lambda name: color_distance(PALETTE[name], rgb))


@dataclass
class SceneResult:
    index: int
    scene: Optional[Scene]
    distinction: str
    num_distractors: int
    attempts: int
    failures: list = field(default_factory=list)


def scene_plan(settings: GenerationSettings, index: int):
    """(distinction type, distractor count) of scene ``index``; fixed across retries."""
    plan = np.random.default_rng(np.random.SeedSequence([settings.seed, index]))
    return DistinctionType(_draw(plan, settings.distinctions)), int(_draw(plan, settings.distractors))


def generate_one(pool: Pool, settings: GenerationSettings, index: int) -> SceneResult:
    """Scene ``index`` of a batch; depends only on (pool, settings, index)."""
    distinction, n = scene_plan(settings, index)
    records = sorted(pool.records, key=lambda r: r.id)
    failures = []
    for attempt in range(settings.retries):
        ss = np.random.SeedSequence([settings.seed, index, attempt])
        rng = np.random.default_rng(ss)
        s_room, s_scene = (int(x) for x in ss.generate_state(2))
        template = records[int(rng.integers(len(records)))]
        try:
            preds = sample_predicates(n, rng, dict(settings.predicates), settings.max_unary_repeat)
        except ValueError as exc:
            failures.append(str(exc))
            break
        room = make_room(s_room, template.class_label, template.shape,
                         PALETTE[_nearest_palette(template.mean_color)],
                         size=settings.room_size, n_clutter=settings.n_clutter)
        spec = SceneSpec(room.cloud, room.target_instance, template.class_label, distinction, n, preds,
                         settings.clearance, s_scene, f"scene-{index:05d}",
                         settings.color_same_max, settings.color_diff_min)
        try:
            scene = assemble(spec, pool)
        except (PlacementInfeasible, InsufficientCandidates) as exc:
            failures.append(f"{type(exc).__name__}: {exc}")
            continue
        problems = verify_scene(scene)
        if problems:
            failures.append("verify: " + "; ".join(problems))
            continue
        if not is_identifiable(scene, settings.color_same_max):
            failures.append("description would not single out the target")
            continue
        scene.extra["attempt"] = attempt
        return SceneResult(index, scene, distinction.value, n, attempt + 1, failures)
    log.warning("scene %d failed after %d attempts: %s", index, len(failures), failures[-1:])
    return SceneResult(index, None, distinction.value, n, len(failures), failures)


_WORKER = {}


def _init_worker(pool, settings):
    _WORKER["pool"] = pool
    _WORKER["settings"] = settings


def _work(index):
    return generate_one(_WORKER["pool"], _WORKER["settings"], index)


def generate(pool: Pool, settings: GenerationSettings, count: int, jobs: int = 1, start: int = 0):
    """Scenes ``start .. start+count-1`` in index order; output is independent of ``jobs``."""
    indices = range(start, start + count)
    if jobs <= 1 or count <= 1:
        return [generate_one(pool, settings, i) for i in indices]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(pool, settings)) as ex:
        return list(ex.map(_work, indices, chunksize=max(1, count // (4 * jobs))))


def summary_table(results) -> dict:
    """Successful scenes by distinction type and distractor count."""
    table = {}
    for r in results:
        if r.scene is None:
            continue
        row = table.setdefault(r.distinction, {})
        row[r.num_distractors] = row.get(r.num_distractors, 0) + 1
    return {k: dict(sorted(v.items())) for k, v in sorted(table.items())}


def format_summary(results) -> str:
    table = summary_table(results)
    counts = sorted({n for row in table.values() for n in row})
    lines = ["distinction    " + " ".join(f"{n:>4}" for n in counts) + "  total"]
    for d, row in table.items():
        lines.append(f"{d:<15}" + " ".join(f"{row.get(n, 0):>4}" for n in counts) + f"  {sum(row.values()):>5}")
    ok = sum(r.scene is not None for r in results)
    lines.append(f"succeeded {ok}/{len(results)}")
    return "\n".join(lines)


# --- persistence ---------------------------------------------------------

DATASET_FILE = "dataset.json"


def write_dataset(run_dir, scenes_dir, results, config_snapshot, seed, pool_digest=None) -> dict:
    """Save scene files and the dataset manifest. No timestamps: output is reproducible."""
    run_dir = Path(run_dir)
    entries = []
    for r in results:
        if r.scene is None:
            continue
        save_scene(r.scene, run_dir / scenes_dir)
        entries.append({"id": r.scene.scene_id, "path": f"{scenes_dir}/{r.scene.scene_id}",
                        "distinction": r.distinction, "num_distractors": r.num_distractors,
                        "annotated": False})
    manifest = {"version": MANIFEST_VERSION, "seed": int(seed), "scenes": entries,
                "failed": [r.index for r in results if r.scene is None], "config": config_snapshot,
                "pool_digest": pool_digest}
    save_manifest(run_dir, manifest)
    return manifest


def save_manifest(run_dir, manifest):
    path = Path(run_dir) / DATASET_FILE
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    tmp.replace(path)


def load_manifest(run_dir) -> dict:
    return json.loads((Path(run_dir) / DATASET_FILE).read_text(encoding="utf-8"))
