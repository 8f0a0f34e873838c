"""Build an object pool and retrieve distractors by distinction type.

    python demos/02_pool.py [out_dir]
"""

from _common import out_dir
from variantscene import synth
from variantscene.geometry import color_distance
from variantscene.pool import DistinctionType, RetrievalSpec, load_pool, pool_from_synthetic, pool_stats, retrieve, save_pool

out = out_dir("pool")

# Four objects per (class, shape, color) cell; shapes and colors are measured, not trusted.
pool = pool_from_synthetic(synth.object_set(0, per_cell=4))
stats = pool_stats(pool)
print(f"{len(pool)} records; stats keys: {sorted(stats)}")

save_pool(pool, out)
pool = load_pool(out)
print("reloaded", len(pool), "records from", out)

# One target, then three distractors for each distinction type.
target = sorted(pool.records, key=lambda r: r.id)[0]
print(f"\ntarget {target.id[:10]}: {target.class_label}, {target.shape.value}, color {target.mean_color}")
for kind in DistinctionType:
    found = retrieve(pool, RetrievalSpec(target, kind, count=3), seed=1)
    rows = [f"{r.class_label}/{r.shape.value}/d={color_distance(r.mean_color, target.mean_color):.0f}/{r.provenance.value}"
            for r in found]
    print(f"{kind.value:>14}: {rows}")
