"""Annotate a scene with the offline mock clients.

Swap ``mock_clients`` for ``HttpChatClient`` instances to use a hosted model.

    python demos/04_annotate.py [out_dir]
"""

import json

from _common import out_dir
from variantscene import synth
from variantscene.annotate import AnnotationConfig, annotate_scene, mock_clients, transcript_record
from variantscene.dataset import GenerationSettings, generate
from variantscene.pool import pool_from_synthetic

out = out_dir("annotate")
pool = pool_from_synthetic(synth.object_set(0, per_cell=4))
settings = GenerationSettings(seed=11, distractors=((2, 1.0), (3, 1.0)))
scenes = [r.scene for r in generate(pool, settings, 4) if r.scene is not None]

cfg = AnnotationConfig(qa_rounds=6, iter_rounds=3)
clients = mock_clients(seed=0)
for scene in scenes:
    ann, summaries, transcripts = annotate_scene(scene, clients, cfg)
    print(f"[{ann.distinction.value}] {ann.text}")
    for s in summaries:
        print(f"    pair {s.pair_id}: {sorted(s.dimensions_covered)} | {s.combined}")

# One transcript per pair: qa_rounds x views slots, each holding up to iter_rounds answers.
tr = transcripts[0]
print(f"\nslots={len(tr.slots)} accepted captions={tr.accepted_captions} rejected answers={tr.rejections}")
slot = tr.slots[0]
for e in slot.entries:
    print(f"  round {slot.round} {slot.view} it{e.iteration}: Q: {e.question}\n      A: {e.answer}")

(out / f"{scene.scene_id}.json").write_text(json.dumps(transcript_record(scene.scene_id, summaries, transcripts),
                                                       indent=1))
