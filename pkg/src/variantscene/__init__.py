"""Controllable 3D grounding benchmark synthesis.

Build a pool of object point clouds, integrate distractors around a target in
a scanned scene under spatial predicates and a distinction type, annotate the
target with a multi-round describe/question loop, and score grounding and part
segmentation predictions.
"""

from .errors import *  # noqa: F401,F403
from .geometry import AABB, PointCloud, ShapeCategory, aabb, iou, read_ply, write_ply
from .pool import DistinctionType, ObjectRecord, Pool, Provenance, RetrievalSpec, retrieve
from .scene import Scene, SceneSpec, SpatialPredicate, assemble, evaluate_predicate

__version__ = "0.1.0"
