"""Procedural objects and rooms.

Stand-ins for object-level and scan-level corpora: cuboid, L-extrusion and
sphere generators with controllable color, plus floor-and-clutter rooms that
carry per-point instance ids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .geometry import PointCloud, ShapeCategory, yaw_matrix

PALETTE = {
    "brown": (120, 80, 40),
    "red": (200, 40, 40),
    "blue": (40, 60, 200),
    "gray": (128, 128, 128),
}

CLASS_SHAPES = {
    "chair": (ShapeCategory.Cuboid, ShapeCategory.LShape),
    "table": (ShapeCategory.Cuboid, ShapeCategory.LShape),
    "cabinet": (ShapeCategory.Cuboid, ShapeCategory.LShape),
    "lamp": (ShapeCategory.Sphere, ShapeCategory.Cuboid),
}


def sample_cuboid(dims, n, rng):
    """Uniform samples from the solid box of side lengths ``dims``, centered."""
    dims = np.asarray(dims, dtype=np.float64)
    return (rng.random((n, 3)) - 0.5) * dims


def sample_sphere_surface(radius, n, rng):
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * radius


def sample_lshape(arm_a, arm_b, thickness, depth, n, rng, return_part=False):
    """Uniform samples from an L-shaped extrusion (two fused slabs).

    The first slab spans ``arm_a`` along x, the second ``arm_b`` along y; both
    have ``thickness`` and are extruded ``depth`` along z. Points are centered
    on the bounding box.
    """
    area_a = arm_a * thickness
    area_b = (arm_b - thickness) * thickness
    in_a = rng.random(n) < area_a / (area_a + area_b)
    pts = np.empty((n, 3))
    na = int(in_a.sum())
    pts[in_a] = rng.random((na, 3)) * (arm_a, thickness, depth)
    pts[~in_a] = rng.random((n - na, 3)) * (thickness, arm_b - thickness, depth) + (0.0, thickness, 0.0)
    pts -= np.array([arm_a, arm_b, depth]) / 2.0
    if return_part:
        return pts, np.where(in_a, 0, 1)
    return pts


def colorize(n, base, rng, noise=8):
    base = np.asarray(base, dtype=np.int64)
    jitter = rng.integers(-noise, noise + 1, size=(n, 3))
    return np.clip(base + jitter, 0, 255).astype(np.uint8)


def shape_points(shape: ShapeCategory, n, rng, scale=1.0, return_part=False):
    """Upright sample of a standard shape with roughly ``scale`` meters extent."""
    if shape == ShapeCategory.Cuboid:
        dims = rng.uniform(0.4, 1.0, size=3) * scale
        pts = sample_cuboid(dims, n, rng)
        part = (pts[:, 2] > dims[2] * 0.25).astype(np.int64)
    elif shape == ShapeCategory.Sphere:
        pts = sample_sphere_surface(rng.uniform(0.25, 0.5) * scale, n, rng)
        part = (pts[:, 2] > 0).astype(np.int64)
    elif shape == ShapeCategory.LShape:
        arm_a = rng.uniform(0.6, 1.0) * scale
        arm_b = rng.uniform(0.6, 1.0) * scale
        thick = rng.uniform(0.15, 0.25) * min(arm_a, arm_b)
        depth = rng.uniform(0.4, 0.9) * scale
        pts, part = sample_lshape(arm_a, arm_b, thick, depth, n, rng, return_part=True)
        # stand the profile up in the x-z plane, extruded along y
        pts = pts[:, [0, 2, 1]]
    else:
        raise ValueError(f"no generator for {shape}")
    if return_part:
        return pts, part
    return pts


def random_rotation(rng):
    return Rotation.random(random_state=rng).as_matrix()


def make_object(shape: ShapeCategory, color, rng, n=1536, scale=1.0, yaw=None, parts=False,
                color_jitter=6) -> PointCloud:
    pts, part = shape_points(shape, n, rng, scale, return_part=True)
    color = np.clip(np.asarray(color) + rng.integers(-color_jitter, color_jitter + 1, 3), 0, 255)
    if yaw is None:
        yaw = rng.uniform(0, 2 * np.pi)
    pts = pts @ yaw_matrix(yaw).T
    pts[:, 2] -= pts[:, 2].min()
    return PointCloud(pts, colorize(n, color, rng), part=part if parts else None)


@dataclass
class SynthObject:
    cloud: PointCloud
    class_label: str
    shape: ShapeCategory
    color_family: str
    provenance: str
    source: str


def object_set(seed, per_cell=11, classes=None, colors=None, n_points=1536, realscan_fraction=0.4):
    """Every (class, shape, color) cell of the catalogue, ``per_cell`` times."""
    rng = np.random.default_rng(seed)
    classes = classes or CLASS_SHAPES
    colors = colors or PALETTE
    out = []
    for cls in sorted(classes):
        for shape in classes[cls]:
            for cname in sorted(colors):
                for _ in range(per_cell):
                    real = rng.random() < realscan_fraction
                    cloud = make_object(shape, colors[cname], rng, n=n_points, scale=rng.uniform(0.6, 1.6))
                    out.append(SynthObject(cloud, cls, shape, cname,
                                           "RealScan" if real else "CAD",
                                           "synthetic-scan" if real else "synthetic-cad"))
    return out


@dataclass
class Room:
    cloud: PointCloud          # carries instance ids
    labels: dict               # instance id -> class label
    target_instance: int


def make_room(seed, target_class, target_shape, target_color, size=8.0, n_clutter=5,
              n_target=1536, floor_points=3000, clutter_points=400) -> Room:
    """Floor plus box clutter plus one labelled target standing on the floor."""
    rng = np.random.default_rng(seed)
    parts = []
    labels = {}
    floor = np.column_stack([rng.uniform(0, size, floor_points), rng.uniform(0, size, floor_points),
                             np.zeros(floor_points)])
    parts.append(PointCloud(floor, colorize(floor_points, (150, 150, 140), rng, 6)).with_instance(0))
    labels[0] = "floor"
    target_xy = rng.uniform(0.2 * size, 0.8 * size, size=2)
    for k in range(n_clutter):
        dims = rng.uniform(0.3, 0.9, size=3)
        xy = rng.uniform(0.5, size - 0.5, size=2)
        pts = sample_cuboid(dims, clutter_points, rng) + np.array([xy[0], xy[1], dims[2] / 2])
        color = rng.integers(30, 225, size=3)
        parts.append(PointCloud(pts, colorize(clutter_points, color, rng, 6)).with_instance(k + 1))
        labels[k + 1] = "box"
    target_id = n_clutter + 1
    target = make_object(target_shape, target_color, rng, n=n_target, scale=rng.uniform(0.8, 1.3))
    target = target.translated((target_xy[0], target_xy[1], 0.0))
    # keep clutter from sitting inside the target
    kept = [parts[0]]
    tb_lo, tb_hi = target.xyz.min(axis=0), target.xyz.max(axis=0)
    for p in parts[1:]:
        lo, hi = p.xyz.min(axis=0), p.xyz.max(axis=0)
        if np.all(lo[:2] < tb_hi[:2]) and np.all(tb_lo[:2] < hi[:2]):
            del labels[int(p.instance[0])]
            continue
        kept.append(p)
    kept.append(target.with_instance(target_id))
    labels[target_id] = target_class
    return Room(PointCloud.concat(kept), labels, target_id)
