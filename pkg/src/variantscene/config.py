"""Run configuration: one defaults table, YAML overrides, validation."""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path

import yaml

from .geometry import DEFAULT_VIEWS
from .pool import DistinctionType
from .scene import SpatialPredicate

# Every default of the pipeline lives here.
DEFAULTS = {
    "seed": 0,
    "pool_dir": "pool",
    "scenes_dir": "scenes",
    "synthetic_pool": {"seed": 0, "per_cell": 11, "realscan_fraction": 0.4},
    "generate": {
        "count": 100,
        "distinctions": {d.value: 1.0 for d in DistinctionType},
        "distractors": [[n, 1.0] for n in range(2, 11)],
        "predicates": {p.value: 1.0 for p in SpatialPredicate},
        "max_unary_repeat": 2,
        "clearance": 0.05,
        "color_same_max": 30.0,
        "color_diff_min": 80.0,
        "retries": 24,
        "min_success": 0.9,
        "room": {"size": 8.0, "n_clutter": 5},
    },
    "annotation": {
        "qa_rounds": 6,
        "views": [v.name for v in DEFAULT_VIEWS],
        "iter_rounds": 3,
        "max_answer_words": 60,
        "prompts": "v1",
        "image_size": [96, 96],
    },
    "client": {
        "kind": "mock",
        "seed": 0,
        "endpoint": "https://api.openai.com/v1/chat/completions",
        "model": "gpt-4o",
        "key_env": "OPENAI_API_KEY",
    },
}


class ConfigError(ValueError):
    pass


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        where = f"{path}{k}"
        if k not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[k], dict) and not isinstance(v, dict):
            raise ConfigError(f"{where!r} must be a mapping")
        if isinstance(base[k], dict) and k not in ("distinctions", "predicates"):
            out[k] = _merge(base[k], v, where + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


def _check_weights(name, pairs):
    ws = [float(w) for _, w in pairs]
    if any(w < 0 for w in ws) or not any(w > 0 for w in ws):
        raise ConfigError(f"{name}: weights must be >= 0 and not all zero")


@dataclass
class RunConfig:
    data: dict

    @classmethod
    def from_dict(cls, override=None) -> "RunConfig":
        cfg = cls(_merge(DEFAULTS, override))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path=None, **overrides) -> "RunConfig":
        raw = {}
        if path is not None:
            text = Path(path).read_text(encoding="utf-8")
            try:
                raw = yaml.safe_load(text) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
            if not isinstance(raw, dict):
                raise ConfigError(f"{path}: top level must be a mapping")
        cfg = _merge(DEFAULTS, raw)
        for k, v in overrides.items():
            if v is not None:
                cfg[k] = v
        out = cls(cfg)
        out.validate()
        return out

    def validate(self):
        g = self.data["generate"]
        for name in g["distinctions"]:
            try:
                DistinctionType(name)
            except ValueError:
                raise ConfigError(f"unknown distinction type {name!r}") from None
        for name in g["predicates"]:
            try:
                SpatialPredicate(name)
            except ValueError:
                raise ConfigError(f"unknown predicate {name!r}") from None
        _check_weights("generate.distinctions", g["distinctions"].items())
        _check_weights("generate.predicates", g["predicates"].items())
        _check_weights("generate.distractors", g["distractors"])
        for n, _ in g["distractors"]:
            if int(n) < 1:
                raise ConfigError("distractor counts must be >= 1")
        if not g["color_same_max"] < g["color_diff_min"]:
            raise ConfigError("color_same_max must be below color_diff_min")
        if g["count"] < 0:
            raise ConfigError("generate.count must be >= 0")
        a = self.data["annotation"]
        if a["qa_rounds"] < 1 or a["iter_rounds"] < 1 or not a["views"]:
            raise ConfigError("annotation needs qa_rounds >= 1, iter_rounds >= 1 and at least one view")
        known = {v.name for v in DEFAULT_VIEWS}
        for v in a["views"]:
            if v not in known:
                raise ConfigError(f"unknown view {v!r}; expected one of {sorted(known)}")
        if self.data["client"]["kind"] not in ("mock", "http"):
            raise ConfigError("client.kind must be 'mock' or 'http'")

    def __getitem__(self, key):
        return self.data[key]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    def annotation_config(self):
        from .annotate import AnnotationConfig

        a = self.data["annotation"]
        g = self.data["generate"]
        views = {v.name: v for v in DEFAULT_VIEWS}
        return AnnotationConfig(qa_rounds=a["qa_rounds"], views=tuple(views[v] for v in a["views"]),
                                iter_rounds=a["iter_rounds"], max_answer_words=a["max_answer_words"],
                                prompts=a["prompts"], image_size=tuple(a["image_size"]),
                                color_same_max=g["color_same_max"], color_diff_min=g["color_diff_min"])

    def snapshot(self) -> dict:
        return copy.deepcopy(self.data)
