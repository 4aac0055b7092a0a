"""Layered 2D costmap: static map, obstacles, clean-people, inflation, adaptive.

Costs are uint8 in {0..254} with 254 lethal and 253 inscribed; 255 marks
unknown space and is never overwritten by the inflation or adaptive layers.
Grid row ``i`` covers ``y in [oy + i*res, oy + (i+1)*res)``.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import yaml
from PIL import Image
from scipy import ndimage

from . import kernels
from .field import SceneState

FREE = 0
INSCRIBED = 253
LETHAL = 254
UNKNOWN = 255


@dataclass(frozen=True)
class GridSpec:
    origin: tuple[float, float] = (0.0, 0.0)
    resolution: float = 0.05
    width: int = 200
    height: int = 200

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("resolution must be > 0")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("width and height must be > 0")

    def world_to_cell(self, x: float, y: float) -> tuple[int, int] | None:
        """Return ``(row, col)`` of the cell containing (x, y), or None if outside."""
        j = math.floor((x - self.origin[0]) / self.resolution)
        i = math.floor((y - self.origin[1]) / self.resolution)
        if 0 <= i < self.height and 0 <= j < self.width:
            return i, j
        return None

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return (self.origin[0] + (j + 0.5) * self.resolution,
                self.origin[1] + (i + 0.5) * self.resolution)


@dataclass
class Costmap:
    spec: GridSpec
    cells: np.ndarray

    def __post_init__(self):
        self.cells = np.ascontiguousarray(self.cells, dtype=np.uint8)
        if self.cells.shape != (self.spec.height, self.spec.width):
            raise ValueError(f"cells shape {self.cells.shape} does not match spec "
                             f"{(self.spec.height, self.spec.width)}")

    @classmethod
    def empty(cls, spec: GridSpec) -> "Costmap":
        return cls(spec, np.zeros((spec.height, spec.width), dtype=np.uint8))

    def copy(self) -> "Costmap":
        return Costmap(self.spec, self.cells.copy())

    def cost_at(self, x: float, y: float) -> int | None:
        cell = self.spec.world_to_cell(x, y)
        if cell is None:
            return None
        return int(self.cells[cell])


def quantize(v):
    """Round half up."""
    return np.floor(np.asarray(v, dtype=np.float64) + 0.5)


# -- static layer ----------------------------------------------------------

def rasterize_static(map_file) -> Costmap:
    """Load a map from a YAML metadata file (map_server style) and its PGM image."""
    try:
        with open(map_file) as f:
            meta = yaml.safe_load(f)
        image_path = meta["image"]
        if not os.path.isabs(image_path):
            image_path = os.path.join(os.path.dirname(os.path.abspath(map_file)), image_path)
        resolution = float(meta["resolution"])
        origin = meta.get("origin", [0.0, 0.0, 0.0])
        occ = float(meta.get("occupied_thresh", 0.65))
        free = float(meta.get("free_thresh", 0.196))
        negate = bool(meta.get("negate", 0))
        pixels = np.array(Image.open(image_path))
    except (OSError, KeyError, TypeError, ValueError, yaml.YAMLError) as exc:
        raise ValueError(f"cannot load map {map_file}: {exc}") from exc
    if pixels.ndim != 2:
        raise ValueError(f"map image {image_path} is not a single-channel graymap")
    spec = GridSpec((float(origin[0]), float(origin[1])), resolution, pixels.shape[1], pixels.shape[0])
    return Costmap(spec, occupancy_to_costs(np.flipud(pixels), occ, free, negate))


def occupancy_to_costs(pixels: np.ndarray, occupied_thresh: float = 0.65, free_thresh: float = 0.196,
                       negate: bool = False) -> np.ndarray:
    p = pixels.astype(np.float64) / 255.0
    if not negate:
        p = 1.0 - p
    out = np.full(pixels.shape, UNKNOWN, dtype=np.uint8)
    out[p > occupied_thresh] = LETHAL
    out[p < free_thresh] = FREE
    return out


def save_map(costmap: Costmap, yaml_path, image_name: str | None = None):
    """Write a costmap's lethal/free/unknown structure as PGM + YAML."""
    stem = os.path.splitext(os.path.basename(yaml_path))[0]
    image_name = image_name or stem + ".pgm"
    pixels = np.full(costmap.cells.shape, 205, dtype=np.uint8)
    pixels[costmap.cells == FREE] = 254
    pixels[costmap.cells == LETHAL] = 0
    Image.fromarray(np.flipud(pixels)).save(os.path.join(os.path.dirname(os.path.abspath(yaml_path)), image_name))
    meta = {
        "image": image_name,
        "resolution": costmap.spec.resolution,
        "origin": [costmap.spec.origin[0], costmap.spec.origin[1], 0.0],
        "occupied_thresh": 0.65,
        "free_thresh": 0.196,
        "negate": 0,
    }
    with open(yaml_path, "w") as f:
        yaml.safe_dump(meta, f, sort_keys=False)


# -- obstacle / clean-people / inflation layers ----------------------------

def mark_obstacles(costmap: Costmap, points: Iterable[tuple[float, float]]) -> Costmap:
    out = costmap.copy()
    for x, y in points:
        cell = out.spec.world_to_cell(x, y)
        if cell is not None:
            out.cells[cell] = LETHAL
    return out


def _cell_centers(spec: GridSpec):
    xs = spec.origin[0] + (np.arange(spec.width) + 0.5) * spec.resolution
    ys = spec.origin[1] + (np.arange(spec.height) + 0.5) * spec.resolution
    return np.meshgrid(xs, ys)


def clean_people(costmap: Costmap, scene: SceneState, clearing_radius: float) -> Costmap:
    out = costmap.copy()
    if not scene.persons:
        return out
    cx, cy = _cell_centers(out.spec)
    near = np.zeros(out.cells.shape, dtype=bool)
    for p in scene.persons:
        near |= (cx - p.pose.x) ** 2 + (cy - p.pose.y) ** 2 <= clearing_radius ** 2
    out.cells[near & (out.cells == LETHAL)] = FREE
    return out


def inflate(costmap: Costmap, inscribed_radius: float, decay_rate: float) -> Costmap:
    out = costmap.copy()
    lethal = out.cells == LETHAL
    if not lethal.any():
        return out
    dist = ndimage.distance_transform_edt(~lethal) * out.spec.resolution
    inflated = quantize(252.0 * np.exp(-decay_rate * (dist - inscribed_radius)))
    inflated[dist <= inscribed_radius] = INSCRIBED
    known = out.cells != UNKNOWN
    out.cells[known] = np.maximum(out.cells[known], inflated[known]).astype(np.uint8)
    return out


# -- adaptive layer ---------------------------------------------------------

def scene_entities(scene: SceneState) -> np.ndarray:
    """Rows (x, y, theta, A, sigma_f, sigma_r, sigma_sl, sigma_sr) for persons then groups."""
    rows = []
    for p in scene.persons:
        q = p.params
        rows.append((p.pose.x, p.pose.y, p.pose.theta, q.amplitude, q.sigma_f, q.sigma_r, q.sigma_sl, q.sigma_sr))
    for g in scene.groups:
        q = g.params
        rows.append((g.center[0], g.center[1], g.pose.theta, q.amplitude, q.sigma_f, q.sigma_r,
                     q.sigma_sl, q.sigma_sr))
    return np.array(rows, dtype=np.float64).reshape(-1, 8)


def support_radius(amplitude: float, max_sigma: float, resolution: float) -> float:
    """Radius beyond which the Gaussian cost rounds to zero."""
    if amplitude < 0.5:
        return 0.0
    return 2.0 * max_sigma * math.sqrt(math.log(2.0 * amplitude)) + resolution


def apply_adaptive_layer(costmap: Costmap, scene: SceneState) -> Costmap:
    out = costmap.copy()
    ent = scene_entities(scene)
    if len(ent) == 0:
        return out
    support = np.array([support_radius(e[3], e[4:8].max(), out.spec.resolution) for e in ent])
    keep = support > 0
    ent = np.ascontiguousarray(ent[keep])
    support = np.ascontiguousarray(support[keep])
    if len(ent):
        kernels.rasterize_max(out.cells, out.spec.origin[0], out.spec.origin[1], out.spec.resolution,
                              ent, support)
    return out


# -- composition ------------------------------------------------------------

@dataclass
class LayerStack:
    """Layer configuration; composition order is fixed.

    static -> obstacles -> clean_people -> inflation -> adaptive
    """

    spec: GridSpec
    static: Costmap | None = None
    obstacle_points: Sequence[tuple[float, float]] = field(default_factory=list)
    clearing_radius: float = 0.45
    inscribed_radius: float = 0.4
    decay_rate: float = 3.0
    use_obstacles: bool = True
    use_clean_people: bool = True
    use_inflation: bool = True
    use_adaptive: bool = True

    def __post_init__(self):
        if self.static is not None and self.static.spec != self.spec:
            raise ValueError("static map grid does not match the stack grid")


def compose(stack: LayerStack, scene: SceneState) -> Costmap:
    master = stack.static.copy() if stack.static is not None else Costmap.empty(stack.spec)
    if stack.use_obstacles and len(stack.obstacle_points):
        obstacles = mark_obstacles(Costmap.empty(stack.spec), stack.obstacle_points)
        if stack.use_clean_people:
            obstacles = clean_people(obstacles, scene, stack.clearing_radius)
        master.cells[obstacles.cells == LETHAL] = LETHAL
    if stack.use_inflation:
        master = inflate(master, stack.inscribed_radius, stack.decay_rate)
    if stack.use_adaptive:
        master = apply_adaptive_layer(master, scene)
    return master


# -- dumps ------------------------------------------------------------------

_HEADER = struct.Struct("<IIfI")


def save_csv(costmap: Costmap, path):
    np.savetxt(path, costmap.cells, fmt="%d", delimiter=",")


def load_csv(path, spec: GridSpec) -> Costmap:
    return Costmap(spec, np.loadtxt(path, delimiter=",", dtype=np.int64).reshape(spec.height, spec.width))


def to_bytes(costmap: Costmap) -> bytes:
    s = costmap.spec
    return _HEADER.pack(s.width, s.height, s.resolution, 0) + costmap.cells.astype("<u1").tobytes(order="C")


def from_bytes(data: bytes, origin: tuple[float, float] = (0.0, 0.0)) -> Costmap:
    if len(data) < _HEADER.size:
        raise ValueError("truncated costmap header")
    width, height, resolution, _ = _HEADER.unpack_from(data)
    body = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
    if body.size != width * height:
        raise ValueError(f"expected {width * height} cells, found {body.size}")
    return Costmap(GridSpec(origin, float(resolution), width, height), body.reshape(height, width).copy())


def save_binary(costmap: Costmap, path):
    with open(path, "wb") as f:
        f.write(to_bytes(costmap))


def load_binary(path, origin: tuple[float, float] = (0.0, 0.0)) -> Costmap:
    with open(path, "rb") as f:
        return from_bytes(f.read(), origin)
