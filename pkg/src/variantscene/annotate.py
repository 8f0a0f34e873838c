"""Distinction recognition and annotation.

For every (target, distractor) pair the target and distractor are rendered
from several views; per round and view a vision client describes each object,
then a language client and the vision client run a short question/answer loop
on the side-by-side image. Captions are summarized after every round and
distilled into a final distinction statement, which is combined with the
placement relations into a grounding description.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import os
import re
import urllib.request
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Optional, Protocol, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import ArityMismatch, ClientFailure, NonUniqueDescription
from .geometry import (
    AABB,
    DEFAULT_VIEWS,
    Image,
    PointCloud,
    ShapeCategory,
    aabb,
    classify_shape,
    color_distance,
    color_name,
    concat_images,
    mean_color,
    render_view,
)
from .pool import DistinctionType
from .scene import INVERSE, Role, Scene, SpatialPredicate, check_arity, evaluate_predicate

log = logging.getLogger(__name__)

P = SpatialPredicate
SENTINEL = "no salient difference"
ATTRIBUTES = ("height", "color", "shape", "parts", "size", "material")
DIMENSION_OF = {"shape": "shape", "color": "color", "height": "size", "size": "size",
                "parts": "part", "material": "other"}
CLAUSE_DIMENSION = {DistinctionType.LocationShape: "shape", DistinctionType.LocationColor: "color",
                    DistinctionType.LocationClass: "part"}


class VisionClient(Protocol):
    def describe(self, image: Image, prompt: str) -> str: ...


class LanguageClient(Protocol):
    def complete(self, prompt: str) -> str: ...


@dataclass(frozen=True)
class Prompts:
    version: str
    describe: str
    question_seed: str
    sum_p_2: str
    sum_p_3: str

    @classmethod
    def load(cls, version="v1") -> "Prompts":
        root = resources.files("variantscene.prompts").joinpath(version)
        read = lambda name: root.joinpath(f"{name}.txt").read_text(encoding="utf-8")  # noqa: E731
        return cls(version, read("describe"), read("question_seed"), read("sum_p_2"), read("sum_p_3"))


@dataclass
class AnnotationConfig:
    qa_rounds: int = 6
    views: tuple = DEFAULT_VIEWS
    iter_rounds: int = 3
    max_answer_words: int = 60
    prompts: str = "v1"
    attributes: tuple = ATTRIBUTES
    image_size: tuple = (96, 96)
    color_same_max: float = 30.0
    color_diff_min: float = 80.0

    def __post_init__(self):
        if self.qa_rounds < 1:
            raise ValueError("qa_rounds must be >= 1")
        if self.iter_rounds < 1:
            raise ValueError("iter_rounds must be >= 1")
        if not self.views:
            raise ValueError("at least one view is required")

    def load_prompts(self) -> Prompts:
        return Prompts.load(self.prompts)


# --- transcript ----------------------------------------------------------

@dataclass
class QAEntry:
    iteration: int
    question: str
    answer: str
    accepted: bool
    reason: str = ""
    rejections: list = field(default_factory=list)


@dataclass
class ViewSlot:
    pair: int
    round: int
    view: str
    target_desc: str = ""
    distractor_desc: str = ""
    entries: list = field(default_factory=list)


@dataclass
class QATranscript:
    slots: list = field(default_factory=list)

    @property
    def accepted_captions(self):
        return sum(e.accepted for s in self.slots for e in s.entries)

    @property
    def rejections(self):
        return sum(len(e.rejections) for s in self.slots for e in s.entries)

    def keys(self):
        return [(s.pair, s.round, s.view, e.iteration) for s in self.slots for e in s.entries]

    def extend(self, other: "QATranscript"):
        self.slots.extend(other.slots)

    def to_dict(self):
        return {"slots": [asdict(s) for s in self.slots]}


@dataclass
class DistinctionSummary:
    pair_id: int
    target_summary: str
    distractor_summary: str
    combined: str
    dimensions_covered: frozenset

    def __post_init__(self):
        if not self.combined.strip():
            raise ValueError("combined summary is empty")
        if not self.dimensions_covered:
            raise ValueError("dimensions_covered is empty")


@dataclass
class Annotation:
    scene_id: str
    target_id: str
    text: str
    location_phrase: str
    distinction: DistinctionType
    target_box: AABB
    num_distractors: int = 0
    transcript_ref: Optional[str] = None

    def to_json(self):
        return {"scene_id": self.scene_id, "target_id": self.target_id, "text": self.text,
                "location_phrase": self.location_phrase, "distinction": self.distinction.value,
                "target_box": self.target_box.as_list(), "num_distractors": self.num_distractors,
                "transcript_ref": self.transcript_ref}

    @classmethod
    def from_json(cls, row) -> "Annotation":
        return cls(row["scene_id"], row["target_id"], row["text"], row["location_phrase"],
                   DistinctionType(row["distinction"]), AABB.from_list(row["target_box"]),
                   int(row.get("num_distractors", 0)), row.get("transcript_ref"))


# --- client plumbing -----------------------------------------------------

def _with_retry(fn, *args, round=None, view=None):
    try:
        return fn(*args)
    except Exception:
        try:
            return fn(*args)
        except Exception as exc:
            raise ClientFailure(f"client call failed twice: {exc}", round=round, view=view) from exc


def _bullets(items):
    return "\n".join(f"- {x}" for x in items) if items else "- (none)"


def iter_cap(image: Image, iter_rounds: int, clients, cfg: AnnotationConfig, *, round=1, view="",
             slot: Optional[ViewSlot] = None, prompts: Optional[Prompts] = None):
    """Follow-up question loop on one side-by-side image.

    Each iteration asks the language client for a question conditioned on the
    Q&A so far and lets the vision client answer. An answer longer than
    ``max_answer_words`` is re-asked once and then dropped.
    """
    if iter_rounds < 1:
        raise ValueError("iter_rounds must be >= 1")
    vision, language = clients
    prompts = prompts or cfg.load_prompts()
    history = []
    captions = []
    for it in range(1, iter_rounds + 1):
        qprompt = prompts.question_seed.format(
            round=round, rounds=cfg.qa_rounds, view=view, iteration=it,
            history="\n".join(history) if history else "(none)")
        question = _with_retry(language.complete, qprompt, round=round, view=view).strip()
        entry = QAEntry(it, question, "", False)
        for attempt in range(2):
            answer = _with_retry(vision.describe, image, question, round=round, view=view).strip()
            words = len(answer.split())
            if words <= cfg.max_answer_words:
                entry.answer, entry.accepted = answer, True
                break
            entry.rejections.append({"answer": answer, "reason": f"verbose: {words} words > {cfg.max_answer_words}"})
        if entry.accepted:
            captions.append(entry.answer)
            history.append(f"Q: {question}\nA: {entry.answer}")
        else:
            entry.reason = "dropped: verbose after re-ask"
            history.append(f"Q: {question}\nA: (no usable answer)")
        if slot is not None:
            slot.entries.append(entry)
    return captions


def describe_object(cloud: PointCloud, class_label: str = "object", shape=None, color=None) -> dict:
    """Render bookkeeping for one object: what the image sidecar carries."""
    box = aabb(cloud)
    color = tuple(color) if color is not None else mean_color(cloud)
    if shape is None:
        shape = classify_shape(cloud) if len(cloud) >= 32 else ShapeCategory.Other
    return {"class": class_label, "color": list(color), "color_name": color_name(color),
            "shape": ShapeCategory(shape).value, "size": round(box.diagonal, 6),
            "height": round(float(box.extent[2]), 6)}


def _extract_attributes(text):
    words = set(re.findall(r"[a-z]+", text.lower()))
    return {a for a in ATTRIBUTES if a in words}


def _dimensions(text):
    if SENTINEL in text.lower() and not _extract_attributes(text.lower().replace(SENTINEL, "")):
        return frozenset({"other"})
    dims = {DIMENSION_OF[a] for a in _extract_attributes(text)}
    return frozenset(dims or {"other"})


def _check_extractive(summary, sources, where):
    allowed = set()
    for s in sources:
        allowed |= _extract_attributes(s)
    extra = _extract_attributes(summary) - allowed
    if extra:
        log.warning("%s summary introduces attribute words absent from captions: %s", where, sorted(extra))
    return not extra


def annotate_pair(target_cloud: PointCloud, distractor_cloud: PointCloud, clients, cfg: AnnotationConfig,
                  *, target_info=None, distractor_info=None, pair: int = 0):
    """Run the multi-round, multi-view recognition loop for one pair."""
    vision, language = clients
    prompts = cfg.load_prompts()
    target_info = target_info or describe_object(target_cloud)
    distractor_info = distractor_info or describe_object(distractor_cloud)
    w, h = cfg.image_size
    images = {}
    for v in cfg.views:
        t_img = render_view([target_cloud], v, w, h, [target_info])
        d_img = render_view([distractor_cloud], v, w, h, [distractor_info])
        images[v.name] = (t_img, d_img, concat_images(t_img, d_img))

    transcript = QATranscript()
    tgt_desc, distr_desc, cap_all = [], [], []
    diff_sum = tgt_sum = distr_sum = ""
    for rnd in range(1, cfg.qa_rounds + 1):
        for v in cfg.views:
            t_img, d_img, both = images[v.name]
            slot = ViewSlot(pair, rnd, v.name)
            slot.target_desc = _with_retry(vision.describe, t_img, prompts.describe, round=rnd, view=v.name).strip()
            slot.distractor_desc = _with_retry(vision.describe, d_img, prompts.describe, round=rnd, view=v.name).strip()
            tgt_desc.append(f"[{v.name}] {slot.target_desc}")
            distr_desc.append(f"[{v.name}] {slot.distractor_desc}")
            caps = iter_cap(both, cfg.iter_rounds, clients, cfg, round=rnd, view=v.name, slot=slot,
                            prompts=prompts)
            cap_all.extend(f"[{v.name}] {c}" for c in caps)
            transcript.slots.append(slot)
        # summaries are refreshed every round; the last round's are consumed
        diff_sum = _with_retry(language.complete, prompts.sum_p_2.format(items=_bullets(cap_all)), round=rnd).strip()
        tgt_sum = _with_retry(language.complete, prompts.sum_p_2.format(items=_bullets(tgt_desc)), round=rnd).strip()
        distr_sum = _with_retry(language.complete, prompts.sum_p_2.format(items=_bullets(distr_desc)), round=rnd).strip()
    final = _with_retry(language.complete, prompts.sum_p_3.format(
        target_summary=tgt_sum, distractor_summary=distr_sum, difference_summary=diff_sum)).strip()
    if not final:
        final = SENTINEL
    _check_extractive(final, cap_all, f"pair {pair}")
    summary = DistinctionSummary(pair, tgt_sum, distr_sum, final, _dimensions(final))
    return summary, transcript


# --- mock clients --------------------------------------------------------

def _stable_int(*parts) -> int:
    h = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big")


def _sentences(text):
    return [s.strip() for s in re.split(r"(?<=[.!?])\s+", text.strip()) if s.strip()]


class MockVisionClient:
    """Answers from the image sidecar with templated sentences."""

    def __init__(self, seed=0, attributes=ATTRIBUTES, color_diff_min=80.0, ratio=1.1):
        self.seed = seed
        self.attributes = tuple(attributes)
        self.color_diff_min = color_diff_min
        self.ratio = ratio

    def describe(self, image: Image, prompt: str) -> str:
        objs = list(image.objects)
        verb = ("is", "appears")[_stable_int(self.seed, prompt) % 2]
        if len(objs) == 1:
            o = objs[0]
            return f"The object {verb} a {o['color_name']} {ShapeCategory(o['shape']).word} {o['class']}."
        left = next((o for o in objs if o.get("panel") == "left"), objs[0])
        right = next((o for o in objs if o.get("panel") == "right"), objs[-1])
        words = re.findall(r"[a-z]+", prompt.lower())
        attr = next((w for w in words if w in self.attributes), None)
        if attr is None:
            return f"There {verb} {SENTINEL}."
        return self._compare(attr, left, right, verb)

    def _compare(self, attr, t, d, verb):
        tc, dc = t["class"], d["class"]
        if attr in ("height", "size"):
            key = "height" if attr == "height" else "size"
            a, b = t[key], d[key]
            if a > b * self.ratio or b > a * self.ratio:
                more = ("taller", "shorter") if attr == "height" else ("larger", "smaller")
                word = more[0] if a > b else more[1]
                return f"The target {tc} {verb} {word} than the other {dc}; they differ in {attr}."
        elif attr == "color":
            if color_distance(t["color"], d["color"]) >= self.color_diff_min:
                return (f"The target {tc} {verb} {t['color_name']} while the other {dc} {verb} "
                        f"{d['color_name']}; they differ in color.")
        elif attr == "shape":
            if t["shape"] != d["shape"]:
                return (f"The target {tc} {verb} {ShapeCategory(t['shape']).word} while the other {dc} "
                        f"{verb} {ShapeCategory(d['shape']).word}; they differ in shape.")
        elif attr == "parts":
            if tc != dc:
                return f"The target object is a {tc} while the other object is a {dc}; they differ in parts."
        return f"There {verb} {SENTINEL} in {attr}."


class MockLanguageClient:
    """Cycles a fixed attribute list for questions; summarizes extractively."""

    def __init__(self, seed=0, attributes=ATTRIBUTES):
        self.seed = seed
        self.attributes = tuple(attributes)

    def complete(self, prompt: str) -> str:
        task = re.search(r"^### task: (\w+)", prompt, re.M)
        task = task.group(1) if task else ""
        if task == "question":
            return self._question(prompt)
        if task == "summarize":
            return self._summarize(re.findall(r"^- (.*)$", prompt, re.M))
        if task == "final":
            section = prompt.split("Difference summary:", 1)[-1]
            return self._summarize([section.strip()])
        return SENTINEL

    def _question(self, prompt):
        rnd = int(re.search(r"Round: (\d+)", prompt).group(1))
        it = int(re.search(r"Iteration: (\d+)", prompt).group(1))
        attr = self.attributes[(rnd - 1) % len(self.attributes)]
        if it == 1:
            forms = (f"How do the two objects differ in {attr}?",
                     f"Focusing only on {attr}, how does the target differ from the other object?")
        else:
            forms = (f"Looking again at {attr} only, is there any difference you have not mentioned?",
                     f"Check the {attr} once more: what differs between the two objects?")
        return forms[_stable_int(self.seed, prompt) % 2]

    @staticmethod
    def _summarize(items):
        kept, seen = [], set()
        for item in items:
            item = re.sub(r"^\[[^\]]*\]\s*", "", item.strip())
            for s in _sentences(item):
                if SENTINEL in s.lower() or s == "(none)":
                    continue
                # "appears X" and "is X" state the same difference
                key = re.sub(r"\bappears?\b", "is", s)
                if key not in seen:
                    seen.add(key)
                    kept.append(s)
        return " ".join(kept) if kept else SENTINEL


def mock_clients(seed=0, attributes=ATTRIBUTES):
    """Deterministic (vision, language) client pair for offline runs."""
    return MockVisionClient(seed, attributes), MockLanguageClient(seed, attributes)


class HttpChatClient:
    """Chat-completions client for live endpoints (OpenAI-style wire format)."""

    def __init__(self, endpoint, model, key_env="OPENAI_API_KEY", timeout=60):
        key = os.environ.get(key_env)
        if not key:
            raise ClientFailure(f"environment variable {key_env} is not set")
        self.endpoint = endpoint
        self.model = model
        self._key = key
        self.timeout = timeout

    def _post(self, content):
        body = json.dumps({"model": self.model, "messages": [{"role": "user", "content": content}],
                           "temperature": 0}).encode("utf-8")
        req = urllib.request.Request(self.endpoint, data=body, headers={
            "Content-Type": "application/json", "Authorization": f"Bearer {self._key}"})
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            payload = json.loads(resp.read().decode("utf-8"))
        return payload["choices"][0]["message"]["content"]

    def complete(self, prompt: str) -> str:
        return self._post(prompt)

    def describe(self, image: Image, prompt: str) -> str:
        import base64

        url = "data:image/png;base64," + base64.b64encode(image.to_png()).decode("ascii")
        return self._post([{"type": "text", "text": prompt},
                           {"type": "image_url", "image_url": {"url": url}}])


# --- composition ---------------------------------------------------------

VOCABULARY_VERSION = "v1"
VOCABULARY = {
    P.Left: "to the left of {ref}",
    P.Right: "to the right of {ref}",
    P.Front: "in front of {ref}",
    P.Back: "behind {ref}",
    P.Above: "above {ref}",
    P.Below: "below {ref}",
    P.UpperLeft: "to the upper left of {ref}",
    P.UpperRight: "to the upper right of {ref}",
    P.LowerLeft: "to the lower left of {ref}",
    P.LowerRight: "to the lower right of {ref}",
    P.Between: "between {ref}",
    P.Surrounded: "surrounded by {ref}",
    P.Near: "near {ref}",
}
_COUNT_WORDS = {2: "two", 3: "three", 4: "four", 5: "five", 6: "six", 7: "seven", 8: "eight",
                9: "nine", 10: "ten"}


def plural(noun: str) -> str:
    if noun.endswith(("s", "x", "z", "ch", "sh")):
        return noun + "es"
    if noun.endswith("y") and noun[-2:-1] not in "aeiou":
        return noun[:-1] + "ies"
    return noun + "s"


def _unique(seq):
    out = []
    for x in seq:
        if x not in out:
            out.append(x)
    return out


def _reference(pred, classes, count=1):
    classes = list(classes)
    if pred == P.Between:
        if classes[0] == classes[1]:
            return f"the two {plural(classes[0])}"
        return f"the {classes[0]} and the {classes[1]}"
    if pred == P.Surrounded:
        names = [plural(c) for c in _unique(classes)]
        return "the " + (names[0] if len(names) == 1 else ", ".join(names[:-1]) + " and " + names[-1])
    if count > 1:
        return f"{_COUNT_WORDS.get(count, str(count))} {plural(classes[0])}"
    return f"the {classes[0]}"


def location_phrase(pred, distractor_classes: Sequence[str]) -> str:
    """Vocabulary-table phrase for ``pred`` bound to the given classes."""
    pred = P(pred)
    check_arity(pred, len(distractor_classes))
    return VOCABULARY[pred].format(ref=_reference(pred, distractor_classes))


@dataclass(frozen=True)
class Relation:
    """Target-centric relation: the target stands ``pred`` relative to witnesses."""

    pred: SpatialPredicate
    classes: tuple
    count: int

    def phrase(self):
        if self.pred in (P.Between, P.Surrounded):
            return VOCABULARY[self.pred].format(ref=_reference(self.pred, self.classes))
        return VOCABULARY[self.pred].format(ref=_reference(self.pred, self.classes, self.count))


def scene_relations(scene: Scene):
    """Relations of the target implied by the placement predicates, merged."""
    merged = {}
    order = []
    for pred, members in scene.relations():
        classes = tuple(m.class_label for m in members)
        if pred in (P.Between, P.Surrounded):
            rel = Relation(pred, classes, len(members))
            order.append(rel)
            continue
        key = (INVERSE[pred], classes[0])
        if key not in merged:
            merged[key] = 0
            order.append(key)
        merged[key] += 1
    out = []
    for item in order:
        if isinstance(item, Relation):
            out.append(item)
        else:
            out.append(Relation(item[0], (item[1],), merged[item]))
    return out


@dataclass(frozen=True)
class DescriptionFields:
    class_label: str
    shape: Optional[ShapeCategory]
    color: Optional[tuple]
    relations: tuple
    color_same_max: float = 30.0
    clearance: float = 0.05


def _holds(rel: Relation, obj_box, witness_boxes, clearance):
    if rel.pred in (P.Between, P.Surrounded):
        return evaluate_predicate(rel.pred, obj_box, witness_boxes, clearance)
    # witness sits at the inverse side of the object
    return evaluate_predicate(INVERSE[rel.pred], obj_box, witness_boxes, clearance)


def _relations_hold(obj, others, fields: DescriptionFields):
    """Distinct witnesses can be found for every relation of ``fields``."""
    multi = [r for r in fields.relations if r.pred in (P.Between, P.Surrounded)]
    unary = [r for r in fields.relations if r.pred not in (P.Between, P.Surrounded)]
    clr = fields.clearance

    unary_cands = []
    for r in unary:
        c = [k for k, o in enumerate(others)
             if o.class_label == r.classes[0] and _holds(r, obj.box, [o.box], clr)]
        if len(c) < r.count:
            return False
        unary_cands.append(c)

    def unary_ok(used):
        slots = []
        for r, c in zip(unary, unary_cands):
            avail = [k for k in c if k not in used]
            slots.extend([avail] * r.count)
        if not slots:
            return True
        rows, cols = [], []
        for i, avail in enumerate(slots):
            rows.extend([i] * len(avail))
            cols.extend(avail)
        if not cols:
            return False
        graph = csr_matrix((np.ones(len(cols)), (rows, cols)), shape=(len(slots), len(others)))
        match = maximum_bipartite_matching(graph, perm_type="column")
        return bool(np.all(match >= 0))

    def search(i, used):
        if i == len(multi):
            return unary_ok(used)
        r = multi[i]
        allowed = set(r.classes)
        cands = [k for k, o in enumerate(others) if k not in used and o.class_label in allowed]
        for combo in itertools.combinations(cands, r.count):
            if r.pred == P.Between:
                orders = [combo]
            else:
                orders = [combo]
            for chosen in orders:
                if _holds(r, obj.box, [others[k].box for k in chosen], clr):
                    if search(i + 1, used | set(chosen)):
                        return True
        return False

    return search(0, frozenset())


def matching_objects(objects, fields: DescriptionFields):
    """Objects satisfying every structured field referenced by a description."""
    hits = []
    for obj in objects:
        if obj.class_label != fields.class_label:
            continue
        if fields.shape is not None and obj.shape != fields.shape:
            continue
        if fields.color is not None and color_distance(obj.mean_color, fields.color) > fields.color_same_max:
            continue
        others = [o for o in objects if o is not obj]
        if _relations_hold(obj, others, fields):
            hits.append(obj)
    return hits


def description_fields(scene: Scene, color_same_max=30.0) -> DescriptionFields:
    t = scene.target
    kind = scene.spec.distinction
    return DescriptionFields(
        t.class_label,
        t.shape if kind == DistinctionType.LocationShape else None,
        tuple(t.mean_color) if kind == DistinctionType.LocationColor else None,
        tuple(scene_relations(scene)),
        color_same_max,
        scene.spec.clearance,
    )


def is_identifiable(scene: Scene, color_same_max=30.0) -> bool:
    hits = matching_objects(scene.objects, description_fields(scene, color_same_max))
    return len(hits) == 1 and hits[0].role == Role.Target


def compose_annotation(scene: Scene, summaries: Sequence[DistinctionSummary],
                       cfg: Optional[AnnotationConfig] = None) -> Annotation:
    """Grounding description: class, distinction clause(s), location phrase."""
    cfg = cfg or AnnotationConfig()
    if len(summaries) != len(scene.distractors):
        raise ValueError(f"{len(summaries)} summaries for {len(scene.distractors)} distractors")
    t = scene.target
    kind = scene.spec.distinction
    fields = description_fields(scene, cfg.color_same_max)
    loc = " and ".join(r.phrase() for r in fields.relations)
    if kind == DistinctionType.LocationShape:
        head = f"{t.shape.word} {t.class_label}"
    elif kind == DistinctionType.LocationColor:
        head = f"{color_name(t.mean_color)} {t.class_label}"
    else:
        head = t.class_label
    text = f"The {head} {loc}."
    if kind != DistinctionType.Location:
        dim = CLAUSE_DIMENSION[kind]
        details, seen = [], set()
        for s in summaries:
            if dim not in s.dimensions_covered:
                continue
            for sent in _sentences(s.combined):
                key = sent.replace(" appears ", " is ")
                if DIMENSION_OF.get(_first_attribute(sent)) == dim and key not in seen:
                    seen.add(key)
                    details.append(sent)
        if details:
            text += " " + " ".join(details[:2])
    hits = matching_objects(scene.objects, fields)
    if len(hits) != 1 or hits[0].role != Role.Target:
        raise NonUniqueDescription(
            f"description matches {len(hits)} objects in scene {scene.scene_id}",
            [h.record_id for h in hits])
    return Annotation(scene.scene_id, scene.target_id or t.record_id, text, loc, kind, scene.target_box,
                      scene.spec.num_distractors)


def _first_attribute(sentence):
    m = re.search(r"differ in (\w+)", sentence)
    return m.group(1) if m else None


def annotate_scene(scene: Scene, clients, cfg: Optional[AnnotationConfig] = None):
    """Annotate every (target, distractor) pair and compose the description."""
    cfg = cfg or AnnotationConfig()
    t = scene.target
    t_info = describe_object(t.cloud, t.class_label, t.shape, t.mean_color)
    summaries, transcripts = [], []
    for k, d in enumerate(scene.distractors):
        d_info = describe_object(d.cloud, d.class_label, d.shape, d.mean_color)
        summary, tr = annotate_pair(t.cloud, d.cloud, clients, cfg, target_info=t_info,
                                    distractor_info=d_info, pair=k)
        summaries.append(summary)
        transcripts.append(tr)
    return compose_annotation(scene, summaries, cfg), summaries, transcripts


def transcript_record(scene_id, summaries, transcripts):
    """JSON-ready record of every pair's summary and transcript for one scene."""
    return {"scene_id": scene_id, "pairs": [
        {"pair": s.pair_id, "target_summary": s.target_summary,
         "distractor_summary": s.distractor_summary, "combined": s.combined,
         "dimensions_covered": sorted(s.dimensions_covered), **tr.to_dict()}
        for s, tr in zip(summaries, transcripts)]}
