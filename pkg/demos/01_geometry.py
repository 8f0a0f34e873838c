"""Point clouds, PLY round trips, boxes, color and shape features, and rendering.

    python demos/01_geometry.py [out_dir]
"""

import numpy as np

from _common import out_dir
from variantscene import synth
from variantscene.geometry import (
    AABB, DEFAULT_VIEWS, aabb, classify_shape, color_distance, color_name, concat_images, iou,
    mean_color, read_ply, reorient, render_view, rescale_to, write_ply,
)

out = out_dir("geometry")
rng = np.random.default_rng(0)

# A synthetic red cuboid (1536 points) and a blue L-shaped object.
red = synth.make_object(synth.ShapeCategory.Cuboid, synth.PALETTE["red"], rng)
blue = synth.make_object(synth.ShapeCategory.LShape, synth.PALETTE["blue"], rng)

# PLY is the interchange format; ASCII and binary both parse.
write_ply(red, out / "red.ply", comments=["demo object"])
back = read_ply(out / "red.ply")
print("round trip exact:", np.array_equal(back.xyz, red.xyz) and np.array_equal(back.rgb, red.rgb))

# Axis-aligned boxes and IoU. Two 2-unit cubes offset by (1, 1, 1) share 1/15 of their union.
a = AABB((0, 0, 0), (2, 2, 2))
print("iou of offset cubes:", iou(a, a.translated((1, 1, 1))), "expected", 1 / 15)
print("red box:", aabb(red))

# Mean color (0-255 RGB), Euclidean distance, and the nearest palette name.
print("mean colors:", mean_color(red), mean_color(blue))
print("color distance:", round(color_distance(mean_color(red), mean_color(blue)), 1),
      "names:", color_name(mean_color(red)), color_name(mean_color(blue)))

# Shape category survives a yaw turn and a rescale.
turned = rescale_to(reorient(blue, 0.7), 2.5)
print("shapes:", classify_shape(red).value, classify_shape(blue).value, classify_shape(turned).value)

# Orthographic renders from the four default views, target on the left, distractor on the right.
for view in DEFAULT_VIEWS:
    pair = concat_images(render_view([red], view, 96, 96), render_view([blue], view, 96, 96))
    (out / f"pair_{view.name}.ppm").write_bytes(pair.to_ppm())
print("wrote", sorted(p.name for p in out.iterdir()))
