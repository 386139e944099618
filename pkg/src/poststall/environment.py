"""Voxelised hallway worlds and distance queries.

The world is a dense boolean grid: voxels whose centres fall inside one of the
corridor boxes are free, everything else inside the padded bounding box is
wall.  Free voxels store the Euclidean distance (voxel centre to nearest wall
voxel centre); queries interpolate trilinearly and anything outside the grid
counts as colliding.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml
from scipy import ndimage

from .errors import BoundaryError, ConfigError, EmptyWorld

DEFAULT_RESOLUTION = 0.05
D_MAX = 5.0
WALL_PADDING = 0.25
MAP_FORMAT = "poststall-map"


@dataclass(frozen=True)
class HallwaySpec:
    """Corridor boxes ``(xmin, ymin, zmin, xmax, ymax, zmax)`` plus start and goal.

    ``start`` is ``(x, y, z, heading, speed)`` -- a level launch pose.
    """

    segments: tuple
    width: float
    height: float
    goal: tuple
    start: tuple
    name: str = "hallway"

    def __post_init__(self):
        segs = tuple(tuple(float(v) for v in s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "goal", tuple(float(v) for v in self.goal))
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        if not self.width > 0 or not self.height > 0:
            raise ConfigError("hallway width and height must be positive")
        for s in segs:
            if len(s) != 6 or any(s[i] >= s[i + 3] for i in range(3)):
                raise ConfigError(f"bad corridor box {s}")
        for a, b in zip(segs, segs[1:]):
            if any(a[i] > b[i + 3] or b[i] > a[i + 3] for i in range(3)):
                raise ConfigError("consecutive corridor boxes must overlap")
        if len(self.goal) != 3 or len(self.start) != 5:
            raise ConfigError("goal is (x, y, z); start is (x, y, z, heading, speed)")

    @classmethod
    def from_dict(cls, doc) -> HallwaySpec:
        if not isinstance(doc, dict) or doc.get("format") != MAP_FORMAT:
            raise ConfigError(f"not a {MAP_FORMAT} document")
        try:
            return cls(
                segments=doc["segments"], width=doc["width"], height=doc["height"],
                goal=doc["goal"], start=doc["start"], name=doc.get("name", "hallway"),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad map document: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "format": MAP_FORMAT, "version": 1, "name": self.name,
            "width": self.width, "height": self.height,
            "segments": [list(s) for s in self.segments],
            "start": list(self.start), "goal": list(self.goal),
        }


def load_map(path=None) -> HallwaySpec:
    """Load a map file; ``None`` gives the packaged two-corner hallway."""
    if path is None:
        text = resources.files("poststall.data").joinpath("hallway.map").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read map file {path}: {exc}") from exc
    try:
        return HallwaySpec.from_dict(yaml.safe_load(text))
    except yaml.YAMLError as exc:
        raise ConfigError(f"map file is not valid YAML: {exc}") from exc


def corridor(length=6.0, width=1.75, height=3.0, z_floor=0.0) -> HallwaySpec:
    """Single straight corridor along +x centred on ``y = width / 2``."""
    return HallwaySpec(
        segments=[(0.0, 0.0, z_floor - height, length, width, z_floor)],
        width=width, height=height,
        goal=(length - 0.6, width / 2, z_floor - height / 2),
        start=(0.6, width / 2, z_floor - height / 2, 0.0, 4.0),
        name="corridor",
    )


def corner_map(leg=4.5, width=1.75, height=3.0) -> HallwaySpec:
    """L-shaped hallway: +x leg followed by a 90 degree turn onto +y."""
    z0, z1 = -height, 0.0
    return HallwaySpec(
        segments=[(0.0, 0.0, z0, leg, width, z1), (leg - width, 0.0, z0, leg, leg, z1)],
        width=width, height=height,
        goal=(leg - width / 2, leg - 0.8, -height / 2),
        start=(0.6, width / 2, -height / 2, 0.0, 4.0),
        name="corner",
    )


@dataclass(frozen=True, eq=False)
class DistanceField:
    origin: np.ndarray
    resolution: float
    occupancy: np.ndarray
    distance: np.ndarray
    signed: np.ndarray = field(repr=False)

    @property
    def dims(self) -> tuple:
        return self.occupancy.shape

    @property
    def upper(self) -> np.ndarray:
        return self.origin + self.resolution * np.array(self.dims)

    def centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.dims[axis]) + 0.5) * self.resolution

    def index_of(self, p) -> tuple:
        idx = np.floor((np.asarray(p, float) - self.origin) / self.resolution).astype(int)
        return tuple(np.clip(idx, 0, np.array(self.dims) - 1))

    def min_distance(self, p) -> float | np.ndarray:
        """Interpolated wall distance; 0 outside the grid."""
        p = np.asarray(p, dtype=float)
        out = _interpolate(self.distance, self.origin, self.resolution, p.reshape(-1, 3), outside=0.0)
        return float(out[0]) if p.ndim == 1 else out.reshape(p.shape[:-1])

    def signed_distance(self, p) -> np.ndarray:
        """Distance extended negatively into walls (used for constraint gradients)."""
        p = np.asarray(p, dtype=float)
        out = _interpolate(self.signed, self.origin, self.resolution, p.reshape(-1, 3), outside=-self.resolution)
        return float(out[0]) if p.ndim == 1 else out.reshape(p.shape[:-1])

    def gradient_step(self) -> float:
        return 0.5 * self.resolution

    def distance_gradient(self, p) -> np.ndarray:
        """Central difference of :meth:`min_distance`.

        Inside walls the interpolated distance is flat, so the gradient of the
        signed extension is returned instead; it points toward free space.

        Raises:
            BoundaryError: if ``p`` is within one voxel of the grid edge.
        """
        p = np.asarray(p, dtype=float)
        lo, hi = self.origin + self.resolution, self.upper - self.resolution
        if np.any(p < lo) or np.any(p > hi):
            raise BoundaryError(f"point {p} is within one voxel of the field edge")
        h = self.gradient_step()
        E = np.eye(3) * h
        pts = np.concatenate([p + E, p - E])
        d = self.min_distance(pts)
        g = (d[:3] - d[3:]) / (2 * h)
        if self.min_distance(p) <= 0.0 and not np.any(g):
            s = self.signed_distance(pts)
            g = (s[:3] - s[3:]) / (2 * h)
        return g

    def signed_with_gradient(self, P) -> tuple:
        """Vectorised signed distance and its central-difference gradient for ``(n, 3)`` points."""
        P = np.atleast_2d(P)
        h = self.gradient_step()
        E = np.eye(3) * h
        pts = np.concatenate([P, (P[:, None, :] + E).reshape(-1, 3), (P[:, None, :] - E).reshape(-1, 3)])
        s = _interpolate(self.signed, self.origin, self.resolution, pts, outside=-self.resolution)
        n = P.shape[0]
        sp, sm = s[n : 4 * n].reshape(n, 3), s[4 * n :].reshape(n, 3)
        return s[:n], (sp - sm) / (2 * h)

    def slice_csv(self, path, z: float) -> None:
        """Dump the horizontal distance slice nearest ``z`` as ``x,y,occupied,distance`` rows."""
        k = int(np.clip(np.floor((z - self.origin[2]) / self.resolution), 0, self.dims[2] - 1))
        xs, ys = self.centers(0), self.centers(1)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "occupied", "distance"])
            for i, x in enumerate(xs):
                for j, y in enumerate(ys):
                    w.writerow([f"{x:.4f}", f"{y:.4f}", int(self.occupancy[i, j, k]), f"{self.distance[i, j, k]:.6f}"])


def _interpolate(grid, origin, res, P, outside):
    """Trilinear interpolation on voxel centres; points outside the grid get ``outside``."""
    dims = np.array(grid.shape)
    rel = (P - origin) / res
    inside = np.all((rel >= 0) & (rel <= dims), axis=1)
    # continuous index relative to voxel centres, clamped so edge half-voxels use the edge value
    c = np.clip(rel - 0.5, 0.0, dims - 1.0)
    i0 = np.minimum(np.floor(c).astype(int), dims - 2)
    i0 = np.maximum(i0, 0)
    t = c - i0
    i1 = np.minimum(i0 + 1, dims - 1)
    out = np.zeros(P.shape[0])
    for dx in (0, 1):
        wx = t[:, 0] if dx else 1 - t[:, 0]
        ix = i1[:, 0] if dx else i0[:, 0]
        for dy in (0, 1):
            wy = t[:, 1] if dy else 1 - t[:, 1]
            iy = i1[:, 1] if dy else i0[:, 1]
            for dz in (0, 1):
                wz = t[:, 2] if dz else 1 - t[:, 2]
                iz = i1[:, 2] if dz else i0[:, 2]
                out += wx * wy * wz * grid[ix, iy, iz]
    return np.where(inside, out, outside)


def distance_transform(occupancy: np.ndarray, resolution: float, d_max=D_MAX) -> np.ndarray:
    """Exact Euclidean distance from each voxel centre to the nearest occupied centre."""
    if occupancy.all():
        raise EmptyWorld("no free voxel in the world")
    if not occupancy.any():
        # nothing to be near: every voxel sits at the cap
        return np.full(occupancy.shape, float(d_max))
    d = ndimage.distance_transform_edt(~occupancy, sampling=resolution)
    return np.minimum(d, d_max)


def build_field(spec: HallwaySpec, resolution=DEFAULT_RESOLUTION, padding=WALL_PADDING, d_max=D_MAX) -> DistanceField:
    """Rasterise the corridor boxes and compute the distance transform.

    Raises:
        EmptyWorld: if no voxel centre lies inside a corridor.
    """
    if not resolution > 0:
        raise ConfigError("resolution must be positive")
    if not spec.segments:
        raise EmptyWorld("map has no corridor segments")
    boxes = np.array(spec.segments)
    lo = boxes[:, :3].min(axis=0) - padding
    hi = boxes[:, 3:].max(axis=0) + padding
    dims = np.ceil((hi - lo) / resolution).astype(int)
    axes = [lo[i] + (np.arange(dims[i]) + 0.5) * resolution for i in range(3)]
    free = np.zeros(dims, dtype=bool)
    for b in boxes:
        mx = (axes[0] > b[0]) & (axes[0] < b[3])
        my = (axes[1] > b[1]) & (axes[1] < b[4])
        mz = (axes[2] > b[2]) & (axes[2] < b[5])
        free |= mx[:, None, None] & my[None, :, None] & mz[None, None, :]
    occupancy = ~free
    dist = distance_transform(occupancy, resolution, d_max)
    inner = ndimage.distance_transform_edt(occupancy, sampling=resolution)
    signed = dist - np.minimum(inner, d_max)
    for a in (occupancy, dist, signed):
        a.setflags(write=False)
    return DistanceField(origin=lo, resolution=float(resolution), occupancy=occupancy, distance=dist, signed=signed)


def segment_clear(field: DistanceField, a, b, radius, step=None) -> bool:
    """True if every sample on segment ``a -> b`` keeps ``radius`` clearance."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    step = field.resolution / 2 if step is None else step
    n = max(int(np.ceil(np.linalg.norm(b - a) / step)), 1)
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    return bool(np.all(field.min_distance(a + t * (b - a)) >= radius))
