"""Score grounding predictions and part segmentations.

    python demos/05_evaluate.py
"""

import numpy as np

from variantscene import synth
from variantscene.dataset import GenerationSettings, generate
from variantscene.evaluate import (
    GroundingSample, baseline_predictions, breakdown, format_table, oracle_predictions, segmentation_miou,
)
from variantscene.pool import pool_from_synthetic

pool = pool_from_synthetic(synth.object_set(0))
settings = GenerationSettings(seed=5, distinctions=(("Location", 1.0),))
scenes = [r.scene for r in generate(pool, settings, 150) if r.scene is not None]
samples = [GroundingSample(s.scene_id, "", s.target_box, len(s.distractors), s.spec.distinction) for s in scenes]

# The oracle is perfect by construction.
print(format_table(breakdown(samples, oracle_predictions(samples), "distinction"), "distinction"))

# A location-blind baseline: the same-class object nearest the scene center.
# Its accuracy drops as distractors are added.
print()
print(format_table(breakdown(samples, baseline_predictions(scenes), "distractors"), "distractors"))

# Part segmentation: per instance, IoU averaged over ground-truth parts; then averaged over instances.
gt = [np.array([0, 0, 1, 1]), np.array([0, 1, 2])]
pred = [np.array([0, 1, 1, 1]), np.array([0, 1, 2])]
print("\nmIoU_I:", segmentation_miou(gt, pred).miou_i)
