"""Point clouds, boxes, PLY I/O, shape/color featurization and rendering.

Coordinate frame is right-handed and z-up. A canonical viewer stands at -y
looking toward +y, so left = -x, right = +x, front = -y, back = +y.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateCloud,
    EmptyCloud,
    MalformedBody,
    MalformedHeader,
    TooFewPoints,
    TruncatedBody,
    UnsupportedProperty,
)

BACKGROUND_COLOR = (235, 235, 235)


def _frozen(a):
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Colored points, optionally tagged with per-point instance and part ids.

    ``xyz`` is (N, 3) float64 in meters, ``rgb`` is (N, 3) uint8. Arrays are
    stored read-only so clouds can be shared between workers.
    """

    xyz: np.ndarray
    rgb: np.ndarray
    instance: Optional[np.ndarray] = None
    part: Optional[np.ndarray] = None

    def __post_init__(self):
        xyz = np.array(self.xyz, dtype=np.float64).reshape(-1, 3)
        rgb_raw = np.asarray(self.rgb)
        if rgb_raw.size == 0:
            rgb_raw = rgb_raw.reshape(0, 3)
        if rgb_raw.shape != xyz.shape:
            raise ValueError(f"rgb shape {rgb_raw.shape} does not match xyz {xyz.shape}")
        if not np.all(np.isfinite(xyz)):
            raise ValueError("coordinates must be finite")
        if rgb_raw.dtype != np.uint8:
            if rgb_raw.size and (np.any(rgb_raw < 0) or np.any(rgb_raw > 255)):
                raise ValueError("color channels must lie in [0, 255]")
            if rgb_raw.size and np.any(np.asarray(rgb_raw) != np.round(rgb_raw)):
                raise ValueError("color channels must be integers")
        rgb = np.array(rgb_raw, dtype=np.uint8)
        object.__setattr__(self, "xyz", _frozen(xyz))
        object.__setattr__(self, "rgb", _frozen(rgb))
        for name in ("instance", "part"):
            ids = getattr(self, name)
            if ids is not None:
                ids = np.array(ids, dtype=np.int64).reshape(-1)
                if len(ids) != len(xyz):
                    raise ValueError(f"{name} length {len(ids)} != point count {len(xyz)}")
                object.__setattr__(self, name, _frozen(ids))

    def __len__(self):
        return len(self.xyz)

    @classmethod
    def empty(cls, with_instance=False):
        return cls(np.zeros((0, 3)), np.zeros((0, 3), np.uint8),
                   np.zeros(0, np.int64) if with_instance else None)

    def centroid(self):
        if len(self) == 0:
            raise EmptyCloud("centroid of an empty cloud")
        return self.xyz.mean(axis=0)

    def take(self, idx) -> "PointCloud":
        idx = np.asarray(idx)
        return PointCloud(
            self.xyz[idx], self.rgb[idx],
            None if self.instance is None else self.instance[idx],
            None if self.part is None else self.part[idx],
        )

    def with_xyz(self, xyz) -> "PointCloud":
        return PointCloud(xyz, self.rgb, self.instance, self.part)

    def with_instance(self, instance_id: int) -> "PointCloud":
        return PointCloud(self.xyz, self.rgb, np.full(len(self), instance_id, np.int64), self.part)

    def translated(self, offset) -> "PointCloud":
        return self.with_xyz(self.xyz + np.asarray(offset, dtype=np.float64))

    @classmethod
    def concat(cls, clouds: Sequence["PointCloud"]) -> "PointCloud":
        clouds = list(clouds)
        if not clouds:
            return cls.empty()

        def _join(name):
            arrs = [getattr(c, name) for c in clouds]
            if any(a is None for a in arrs):
                return None
            return np.concatenate(arrs)

        return cls(
            np.concatenate([c.xyz for c in clouds]),
            np.concatenate([c.rgb for c in clouds]),
            _join("instance"),
            _join("part"),
        )


@dataclass(frozen=True)
class AABB:
    min: tuple
    max: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.min)
        hi = tuple(float(v) for v in self.max)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("AABB corners must be 3-vectors")
        if not all(math.isfinite(v) for v in lo + hi):
            raise ValueError("AABB corners must be finite")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"AABB min {lo} exceeds max {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @classmethod
    def from_list(cls, values) -> "AABB":
        values = [float(v) for v in values]
        if len(values) != 6:
            raise ValueError(f"expected 6 floats, got {len(values)}")
        return cls(values[:3], values[3:])

    def as_list(self):
        return list(self.min) + list(self.max)

    @property
    def center(self):
        return (np.asarray(self.min) + np.asarray(self.max)) / 2.0

    @property
    def extent(self):
        return np.asarray(self.max) - np.asarray(self.min)

    @property
    def half_extent(self):
        return self.extent / 2.0

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.extent))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def translated(self, offset) -> "AABB":
        offset = np.asarray(offset, dtype=np.float64)
        return AABB(np.asarray(self.min) + offset, np.asarray(self.max) + offset)

    def contains_points(self, xyz):
        """Boolean mask of points inside the closed box."""
        xyz = np.asarray(xyz)
        return np.all((xyz >= self.min) & (xyz <= self.max), axis=1)


def overlaps(a: AABB, b: AABB) -> bool:
    """True when the open interiors of the two boxes intersect.

    Boxes that merely touch do not overlap. Flat (zero-extent) boxes are
    handled by the strict interval test rather than by volume.
    """
    return all(a.min[i] < b.max[i] and b.min[i] < a.max[i] for i in range(3))


def intersection_volume(a: AABB, b: AABB) -> float:
    lo = np.maximum(a.min, b.min)
    hi = np.minimum(a.max, b.max)
    return float(np.prod(np.clip(hi - lo, 0.0, None)))


def aabb(pc: PointCloud) -> AABB:
    if len(pc) == 0:
        raise EmptyCloud("bounding box of an empty cloud")
    return AABB(pc.xyz.min(axis=0), pc.xyz.max(axis=0))


def iou(a: AABB, b: AABB) -> float:
    inter = intersection_volume(a, b)
    union = a.volume + b.volume - inter
    if union <= 0.0:
        # both boxes degenerate
        return 1.0 if a == b else 0.0
    return min(1.0, max(0.0, inter / union))


# --- color ---------------------------------------------------------------

def mean_color(pc: PointCloud) -> tuple:
    """Componentwise mean color, rounded half-up with exact integer arithmetic."""
    n = len(pc)
    if n == 0:
        raise EmptyCloud("mean color of an empty cloud")
    sums = pc.rgb.astype(np.int64).sum(axis=0)
    return tuple(int(v) for v in (2 * sums + n) // (2 * n))


def color_distance(a, b) -> float:
    return float(math.sqrt(sum((int(x) - int(y)) ** 2 for x, y in zip(a, b))))


NAMED_COLORS = {
    "black": (20, 20, 20),
    "white": (240, 240, 240),
    "gray": (128, 128, 128),
    "red": (200, 40, 40),
    "green": (50, 160, 60),
    "blue": (40, 60, 200),
    "yellow": (230, 210, 50),
    "orange": (240, 140, 30),
    "brown": (120, 80, 40),
    "purple": (120, 50, 150),
    "pink": (240, 150, 180),
}


def color_name(rgb) -> str:
    """Nearest entry of a small named palette."""
    return min(NAMED_COLORS, key=lambda k: (color_distance(rgb, NAMED_COLORS[k]), k))


# --- shape ---------------------------------------------------------------

class ShapeCategory(str, enum.Enum):
    Cuboid = "Cuboid"
    LShape = "LShape"
    Sphere = "Sphere"
    Other = "Other"

    @property
    def word(self):
        return {"Cuboid": "cuboid", "LShape": "L-shaped", "Sphere": "spherical",
                "Other": "irregular"}[self.value]


@dataclass(frozen=True)
class ShapeThresholds:
    sphere_cv: float = 0.1
    cuboid_fill: float = 0.6
    lshape_fill: float = 0.25
    lshape_cover: float = 0.8
    grid: int = 8
    min_points: int = 32
    angle_steps: int = 90


def _box_frame(xyz, angle_steps, passes=3):
    """Rotation whose rows are the axes of a tight box around centered points.

    Starts from the PCA frame, then repeatedly sweeps in-plane rotations about
    each current axis, keeping the frame with the smallest box volume. Pure
    PCA mis-aligns asymmetric solids such as L-extrusions, and near-equal
    eigenvalues leave the PCA axes arbitrary.
    """
    cov = np.cov(xyz.T)
    _, vecs = np.linalg.eigh(cov)
    frame = vecs.T[::-1].copy()  # rows = principal axes, largest variance first
    best_vol = np.prod(np.ptp(xyz @ frame.T, axis=0))
    angles = np.arange(1, angle_steps) * (0.5 * np.pi / angle_steps)
    cos, sin = np.cos(angles), np.sin(angles)
    for _ in range(passes):
        improved = False
        for k in range(3):
            i, j = [a for a in range(3) if a != k]
            local = xyz @ frame.T
            u = local[:, i][None, :] * cos[:, None] + local[:, j][None, :] * sin[:, None]
            v = -local[:, i][None, :] * sin[:, None] + local[:, j][None, :] * cos[:, None]
            vols = np.ptp(u, axis=1) * np.ptp(v, axis=1) * np.ptp(local[:, k])
            m = int(np.argmin(vols))
            if vols[m] < best_vol * (1 - 1e-9):
                best_vol = vols[m]
                fi, fj = frame[i].copy(), frame[j].copy()
                frame[i] = cos[m] * fi + sin[m] * fj
                frame[j] = -sin[m] * fi + cos[m] * fj
                improved = True
        if not improved:
            break
    return frame


def _occupancy(xyz, frame, grid):
    local = xyz @ frame.T
    lo = local.min(axis=0)
    span = np.ptp(local, axis=0)
    span[span == 0] = 1.0
    idx = np.floor((local - lo) / span * grid).astype(int)
    np.clip(idx, 0, grid - 1, out=idx)
    occ = np.zeros((grid, grid, grid), dtype=bool)
    occ[idx[:, 0], idx[:, 1], idx[:, 2]] = True
    return occ


def _is_l_pattern(occ, cover):
    grid = occ.shape[0]
    total = occ.sum()
    for a in range(3):
        for b in range(3):
            if a == b:
                continue
            for end_a in (0, 1):
                for end_b in (0, 1):
                    for ka in range(1, grid // 2 + 1):
                        sl_a = [slice(None)] * 3
                        sl_a[a] = slice(0, ka) if end_a == 0 else slice(grid - ka, grid)
                        for kb in range(1, grid // 2 + 1):
                            sl_b = [slice(None)] * 3
                            sl_b[b] = slice(0, kb) if end_b == 0 else slice(grid - kb, grid)
                            mask = np.zeros_like(occ)
                            mask[tuple(sl_a)] = True
                            mask[tuple(sl_b)] = True
                            if (occ & mask).sum() > cover * total:
                                return True
    return False


def classify_shape(pc: PointCloud, thresholds: ShapeThresholds = ShapeThresholds()) -> ShapeCategory:
    """Assign one of the standard shape categories.

    Sphere: radial distances from the centroid have coefficient of variation
    below ``sphere_cv``. Otherwise points are voxelized on a ``grid``^3 lattice
    spanning a tight oriented box: fill ratio above ``cuboid_fill`` is a
    Cuboid; a fill ratio in [``lshape_fill``, ``cuboid_fill``] whose occupied
    voxels are covered by two orthogonal end slabs is an LShape.
    """
    if len(pc) < thresholds.min_points:
        raise TooFewPoints(f"shape classification needs >= {thresholds.min_points} points, got {len(pc)}")
    xyz = pc.xyz - pc.xyz.mean(axis=0)
    r = np.linalg.norm(xyz, axis=1)
    mean_r = r.mean()
    if mean_r == 0:
        return ShapeCategory.Other
    if r.std() / mean_r < thresholds.sphere_cv:
        return ShapeCategory.Sphere
    frame = _box_frame(xyz, thresholds.angle_steps)
    occ = _occupancy(xyz, frame, thresholds.grid)
    fill = occ.sum() / occ.size
    if fill > thresholds.cuboid_fill:
        return ShapeCategory.Cuboid
    if thresholds.lshape_fill <= fill <= thresholds.cuboid_fill and _is_l_pattern(occ, thresholds.lshape_cover):
        return ShapeCategory.LShape
    return ShapeCategory.Other


# --- transforms ----------------------------------------------------------

def resample(pc: PointCloud, n: int, seed: int) -> PointCloud:
    """Exactly ``n`` points copied from ``pc``.

    Downsampling draws without replacement. Upsampling keeps every original
    and appends draws with replacement; no jitter is added.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    size = len(pc)
    if size == 0:
        raise EmptyCloud("cannot resample an empty cloud")
    rng = np.random.default_rng(seed)
    if n <= size:
        idx = rng.choice(size, size=n, replace=False)
    else:
        idx = np.concatenate([np.arange(size), rng.integers(0, size, n - size)])
    return pc.take(idx)


def rescale_to(pc: PointCloud, target_diag: float) -> PointCloud:
    if target_diag <= 0:
        raise ValueError("target_diag must be positive")
    if len(pc) == 0:
        raise DegenerateCloud("empty cloud has no extent")
    diag = aabb(pc).diagonal
    if diag <= 0:
        raise DegenerateCloud("cloud has zero bounding-box diagonal")
    c = pc.centroid()
    return pc.with_xyz(c + (pc.xyz - c) * (target_diag / diag))


def yaw_matrix(yaw: float):
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def reorient(pc: PointCloud, yaw: float) -> PointCloud:
    """Rotate about the vertical axis through the centroid."""
    if len(pc) == 0 or yaw == 0:
        return pc
    c = pc.centroid()
    return pc.with_xyz((pc.xyz - c) @ yaw_matrix(yaw).T + c)


# --- PLY -----------------------------------------------------------------

_FLOAT_TYPES = {"float", "float32", "double", "float64"}
_INT_TYPES = {"char", "int8", "uchar", "uint8", "short", "int16", "ushort", "uint16",
              "int", "int32", "uint", "uint32"}
_UCHAR_TYPES = {"uchar", "uint8"}
_REQUIRED = {"x": _FLOAT_TYPES, "y": _FLOAT_TYPES, "z": _FLOAT_TYPES,
             "red": _UCHAR_TYPES, "green": _UCHAR_TYPES, "blue": _UCHAR_TYPES}
_ID_PROPS = ("instance_id", "part_id")


def parse_ply(data) -> PointCloud:
    """Parse an ASCII PLY holding colored vertices.

    Extra vertex properties are ignored; ``instance_id`` and ``part_id`` are
    kept when present. Elements other than ``vertex`` are skipped.
    """
    if isinstance(data, (bytes, bytearray)):
        try:
            text = bytes(data).decode("ascii")
        except UnicodeDecodeError as exc:
            raise MalformedHeader(f"non-ASCII content ({exc.reason})") from None
    else:
        text = str(data)
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise MalformedHeader("missing 'ply' magic", 1)

    elements = []  # [name, count, [(type, name)], header line]
    fmt_seen = False
    end = None
    for i in range(1, len(lines)):
        lineno = i + 1
        tok = lines[i].split()
        if not tok:
            continue
        head = tok[0]
        if head == "format":
            if len(tok) != 3:
                raise MalformedHeader("bad format line", lineno)
            if tok[1] != "ascii":
                raise MalformedHeader(f"only ascii PLY is supported, got {tok[1]}", lineno)
            fmt_seen = True
        elif head in ("comment", "obj_info"):
            continue
        elif head == "element":
            if len(tok) != 3:
                raise MalformedHeader("bad element line", lineno)
            try:
                count = int(tok[2])
            except ValueError:
                raise MalformedHeader(f"bad element count {tok[2]!r}", lineno) from None
            if count < 0:
                raise MalformedHeader("negative element count", lineno)
            elements.append([tok[1], count, [], lineno])
        elif head == "property":
            if not elements:
                raise MalformedHeader("property before any element", lineno)
            el = elements[-1]
            if len(tok) >= 2 and tok[1] == "list":
                if el[0] == "vertex":
                    raise UnsupportedProperty("list property on vertex element", lineno)
                if len(tok) != 5:
                    raise MalformedHeader("bad list property line", lineno)
                el[2].append(("list", tok[4]))
                continue
            if len(tok) != 3:
                raise MalformedHeader("bad property line", lineno)
            ptype, pname = tok[1], tok[2]
            if ptype not in _FLOAT_TYPES | _INT_TYPES:
                raise UnsupportedProperty(f"unknown property type {ptype!r}", lineno)
            if el[0] == "vertex":
                if pname in _REQUIRED and ptype not in _REQUIRED[pname]:
                    raise UnsupportedProperty(f"property {pname} must be one of {sorted(_REQUIRED[pname])}", lineno)
                if pname in _ID_PROPS and ptype not in _INT_TYPES:
                    raise UnsupportedProperty(f"property {pname} must be an integer type", lineno)
            el[2].append((ptype, pname))
        elif head == "end_header":
            end = i
            break
        else:
            raise MalformedHeader(f"unexpected header keyword {head!r}", lineno)
    if end is None:
        raise MalformedHeader("missing end_header", len(lines) + 1)
    if not fmt_seen:
        raise MalformedHeader("missing format line", end + 1)

    vertex = None
    offset = end + 1
    for el in elements:
        if el[0] == "vertex":
            vertex = el
            break
        offset += el[1]
    if vertex is None:
        raise MalformedHeader("no vertex element (mesh-only or empty file)", end + 1)
    if vertex[1] == 0 and any(el[0] == "face" for el in elements):
        raise MalformedHeader("mesh-only file declares zero vertices", vertex[3])
    names = [p[1] for p in vertex[2]]
    for req in _REQUIRED:
        if req not in names:
            raise MalformedHeader(f"vertex element lacks property {req!r}", vertex[3])

    n = vertex[1]
    nprop = len(names)
    body = lines[offset:offset + n]
    if len(body) < n:
        raise TruncatedBody(f"expected {n} vertex rows, found {len(body)}", offset + len(body) + 1)
    rows = [ln.split() for ln in body]
    for k, row in enumerate(rows):
        if len(row) < nprop:
            raise TruncatedBody(f"vertex row has {len(row)} values, expected {nprop}", offset + k + 1)
        if len(row) > nprop:
            raise MalformedBody(f"vertex row has {len(row)} values, expected {nprop}", offset + k + 1)
    try:
        table = np.array(rows, dtype=np.float64).reshape(n, nprop)
    except ValueError:
        for k, row in enumerate(rows):
            try:
                [float(v) for v in row]
            except ValueError:
                raise MalformedBody("non-numeric value", offset + k + 1) from None
        raise

    col = {name: j for j, name in enumerate(names)}
    xyz = table[:, [col["x"], col["y"], col["z"]]]
    rgb = table[:, [col["red"], col["green"], col["blue"]]]
    bad = ~np.all(np.isfinite(xyz), axis=1)
    bad |= np.any((rgb < 0) | (rgb > 255) | (rgb != np.round(rgb)), axis=1)
    if bad.any():
        raise MalformedBody("non-finite coordinate or color outside 0..255", offset + int(np.argmax(bad)) + 1)
    ids = {}
    for prop in _ID_PROPS:
        if prop in col:
            v = table[:, col[prop]]
            if np.any(v != np.round(v)):
                k = int(np.argmax(v != np.round(v)))
                raise MalformedBody(f"non-integer {prop}", offset + k + 1)
            ids[prop] = v.astype(np.int64)
    return PointCloud(xyz, rgb.astype(np.uint8), ids.get("instance_id"), ids.get("part_id"))


def serialize_ply(pc: PointCloud, comments: Iterable[str] = ()) -> bytes:
    """ASCII PLY. Floats use the shortest repr that round-trips exactly."""
    header = ["ply", "format ascii 1.0"]
    header += [f"comment {c}" for c in comments]
    header += [f"element vertex {len(pc)}",
               "property double x", "property double y", "property double z",
               "property uchar red", "property uchar green", "property uchar blue"]
    cols = [pc.xyz.tolist(), pc.rgb.tolist()]
    if pc.instance is not None:
        header.append("property int instance_id")
        cols.append(pc.instance.tolist())
    if pc.part is not None:
        header.append("property int part_id")
        cols.append(pc.part.tolist())
    header.append("end_header")
    out = header
    xyz, rgb = cols[0], cols[1]
    extra = list(zip(*cols[2:])) if len(cols) > 2 else None
    for k in range(len(pc)):
        x, y, z = xyz[k]
        r, g, b = rgb[k]
        row = f"{x!r} {y!r} {z!r} {r} {g} {b}"
        if extra is not None:
            row += " " + " ".join(str(v) for v in extra[k])
        out.append(row)
    return ("\n".join(out) + "\n").encode("ascii")


def read_ply(path) -> PointCloud:
    with open(path, "rb") as fh:
        return parse_ply(fh.read())


def write_ply(pc: PointCloud, path, comments: Iterable[str] = ()):
    with open(path, "wb") as fh:
        fh.write(serialize_ply(pc, comments))


# --- rendering -----------------------------------------------------------

@dataclass(frozen=True)
class ViewPose:
    name: str
    direction: tuple
    up: tuple

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        u = np.asarray(self.up, dtype=np.float64)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9 or abs(np.linalg.norm(u) - 1.0) > 1e-9:
            raise ValueError("view direction and up must be unit vectors")
        if abs(float(d @ u)) > 1e-9:
            raise ValueError("view up must be orthogonal to direction")
        object.__setattr__(self, "direction", tuple(float(v) for v in d))
        object.__setattr__(self, "up", tuple(float(v) for v in u))

    @property
    def right(self):
        return np.cross(self.direction, self.up)


DEFAULT_VIEWS = (
    ViewPose("front", (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
    ViewPose("left", (1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
    ViewPose("back", (0.0, -1.0, 0.0), (0.0, 0.0, 1.0)),
    ViewPose("top", (0.0, 0.0, -1.0), (0.0, 1.0, 0.0)),
)


@dataclass(frozen=True, eq=False)
class Image:
    """Row-major RGB raster plus a sidecar describing what was rendered."""

    width: int
    height: int
    pixels: np.ndarray
    objects: tuple = field(default=())

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width, 3):
            raise ValueError(f"pixel array {px.shape} does not match {self.height}x{self.width}")
        object.__setattr__(self, "pixels", _frozen(px))
        object.__setattr__(self, "objects", tuple(self.objects))

    def to_ppm(self) -> bytes:
        return f"P6\n{self.width} {self.height}\n255\n".encode("ascii") + self.pixels.tobytes()

    def to_png(self) -> bytes:
        import io

        from PIL import Image as PILImage

        buf = io.BytesIO()
        PILImage.fromarray(np.ascontiguousarray(self.pixels)).save(buf, format="PNG")
        return buf.getvalue()


def write_ppm(image: Image, path):
    with open(path, "wb") as fh:
        fh.write(image.to_ppm())


def render_view(pcs: Sequence[PointCloud], view: ViewPose, width: int, height: int,
                objects: Sequence[dict] = ()) -> Image:
    """Orthographic 1-pixel splat render with a nearest-point depth test.

    The combined cloud is fit to the image with a 5% margin on every side.
    ``objects`` is copied verbatim into the image sidecar.
    """
    if width < 16 or height < 16:
        raise ValueError("width and height must be >= 16")
    cloud = PointCloud.concat(list(pcs))
    if len(cloud) == 0:
        raise EmptyCloud("nothing to render")
    right = view.right
    up = np.asarray(view.up)
    d = np.asarray(view.direction)
    u = cloud.xyz @ right
    v = cloud.xyz @ up
    depth = cloud.xyz @ d
    u0, u1 = u.min(), u.max()
    v0, v1 = v.min(), v.max()
    usable_w = (width - 1) * 0.9
    usable_h = (height - 1) * 0.9
    scales = []
    if u1 > u0:
        scales.append(usable_w / (u1 - u0))
    if v1 > v0:
        scales.append(usable_h / (v1 - v0))
    s = min(scales) if scales else 1.0
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    cols = np.floor(cx + (u - (u0 + u1) / 2.0) * s + 0.5).astype(np.int64)
    rows = np.floor(cy - (v - (v0 + v1) / 2.0) * s + 0.5).astype(np.int64)
    np.clip(cols, 0, width - 1, out=cols)
    np.clip(rows, 0, height - 1, out=rows)
    order = np.argsort(depth, kind="stable")
    pix = rows[order] * width + cols[order]
    _, first = np.unique(pix, return_index=True)
    winners = order[first]
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:] = BACKGROUND_COLOR
    img[rows[winners], cols[winners]] = cloud.rgb[winners]
    return Image(width, height, img, tuple(objects))


def concat_images(left: Image, right: Image) -> Image:
    """Side-by-side composite; sidecar entries are tagged with their panel."""
    h = max(left.height, right.height)
    canvas = np.empty((h, left.width + right.width, 3), dtype=np.uint8)
    canvas[:] = BACKGROUND_COLOR
    canvas[:left.height, :left.width] = left.pixels
    canvas[:right.height, left.width:] = right.pixels
    objects = [dict(o, panel="left") for o in left.objects]
    objects += [dict(o, panel="right") for o in right.objects]
    return Image(left.width + right.width, h, canvas, tuple(objects))
