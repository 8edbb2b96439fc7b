"""Boundary extraction for planar scenes.

Marching squares over {z = 0} with the inside convention z <= 0,
saddle cells resolved by an exact center sample, vertices polished
onto the true level set by Newton steps along grad z.  Curves come
back closed, canonically rolled and oriented, so repeated runs and
both kernel backends produce identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import CurveExtractionFailed, TravflowError

# Segment table indexed by the inside bitmask of corners c0..c3
# (c0 bottom left, counterclockwise).  Edges: e0 bottom, e1 right,
# e2 top, e3 left.  Saddle cases 5 and 10 are decided per cell.
_SEGMENTS = {
    0: [], 15: [],
    1: [(0, 3)], 14: [(0, 3)],
    2: [(0, 1)], 13: [(0, 1)],
    4: [(1, 2)], 11: [(1, 2)],
    8: [(2, 3)], 7: [(2, 3)],
    3: [(3, 1)], 12: [(3, 1)],
    6: [(0, 2)], 9: [(0, 2)],
}
_SADDLE = {
    # case 5: c0 and c2 inside; connected through an inside center.
    (5, True): [(0, 1), (2, 3)],
    (5, False): [(0, 3), (1, 2)],
    # case 10: c1 and c3 inside.
    (10, True): [(0, 3), (1, 2)],
    (10, False): [(0, 1), (2, 3)],
}


def project_to_boundary(scene, point, tolerance=1e-12, max_iterations=30):
    """Newton projection of a point onto {z = 0} along grad z."""
    current = np.array(point, dtype=np.float64)
    for _ in range(max_iterations):
        value = scene.z_at(current)
        if abs(value) <= tolerance:
            return current
        gradient = scene.grad_z_at(current)
        norm2 = float(gradient @ gradient)
        if norm2 == 0.0:
            break
        current = current - (value / norm2) * gradient
    raise TravflowError("projection onto the boundary did not converge")


@dataclass
class BoundaryCurve:
    """Closed polyline on {z = 0}.  Arc length parameterizes it; the
    closing segment from the last vertex back to the first is implied."""

    points: np.ndarray
    cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        ahead = np.roll(self.points, -1, axis=0)
        lengths = np.sqrt(((ahead - self.points) ** 2).sum(axis=1))
        self.cum = np.concatenate([[0.0], np.cumsum(lengths)])

    @property
    def length(self):
        return float(self.cum[-1])

    def point_at(self, parameter):
        """Point at arc length parameter (wrapped modulo the length)."""
        wrapped = float(parameter) % self.length
        segment = int(np.searchsorted(self.cum, wrapped, side="right")) - 1
        segment = min(max(segment, 0), len(self.points) - 1)
        start = self.points[segment]
        end = self.points[(segment + 1) % len(self.points)]
        span = self.cum[segment + 1] - self.cum[segment]
        fraction = 0.0 if span == 0.0 else (wrapped - self.cum[segment]) / span
        return start + fraction * (end - start)

    def locate(self, point):
        """Arc length parameter of the nearest polyline point and the
        distance to it."""
        target = np.asarray(point, dtype=np.float64)
        starts = self.points
        deltas = np.roll(self.points, -1, axis=0) - starts
        lengths2 = (deltas * deltas).sum(axis=1)
        fractions = ((target - starts) * deltas).sum(axis=1) / np.maximum(lengths2, 1e-300)
        fractions = np.clip(fractions, 0.0, 1.0)
        nearest = starts + fractions[:, None] * deltas
        distances2 = ((nearest - target) ** 2).sum(axis=1)
        best = int(np.argmin(distances2))
        parameter = float(self.cum[best] + fractions[best] * math.sqrt(lengths2[best]))
        return parameter, float(math.sqrt(distances2[best]))


def _canonicalize(points):
    order = sorted(range(len(points)), key=lambda k: (points[k][0], points[k][1]))
    pivot = order[0]
    rolled = np.roll(points, -pivot, axis=0)
    if len(rolled) > 2:
        successor = (rolled[1][0], rolled[1][1])
        predecessor = (rolled[-1][0], rolled[-1][1])
        if predecessor < successor:
            rolled = np.concatenate([rolled[:1], rolled[1:][::-1]])
    return rolled


def extract_boundary_curves(scene, resolution=None):
    """All closed components of {z = 0} inside the bbox as polished
    polylines, sorted by their starting vertex."""
    if scene.dimension != 2:
        raise TravflowError("curve extraction needs a two dimensional scene")
    if resolution is None:
        resolution = 2 * scene.grid_resolution()
    xs = np.linspace(scene.bbox_lo[0], scene.bbox_hi[0], resolution)
    ys = np.linspace(scene.bbox_lo[1], scene.bbox_hi[1], resolution)
    mesh_x, mesh_y = np.meshgrid(xs, ys, indexing="ij")
    flat = np.stack([mesh_x.ravel(), mesh_y.ravel()], axis=1)
    z_grid = _backend.kernel.eval_program_batch(scene.z_program, flat)
    z_grid = z_grid.reshape(resolution, resolution)

    border = np.concatenate([z_grid[0, :], z_grid[-1, :], z_grid[:, 0], z_grid[:, -1]])
    if bool((border <= 0.0).any()):
        raise CurveExtractionFailed("the domain touches the bounding box")

    segments = []
    inside = z_grid <= 0.0
    for i in range(resolution - 1):
        for j in range(resolution - 1):
            case = (int(inside[i, j])
                    | int(inside[i + 1, j]) << 1
                    | int(inside[i + 1, j + 1]) << 2
                    | int(inside[i, j + 1]) << 3)
            if case in (0, 15):
                continue
            if case in (5, 10):
                center = scene.z_at((0.5 * (xs[i] + xs[i + 1]),
                                     0.5 * (ys[j] + ys[j + 1])))
                pairs = _SADDLE[(case, center <= 0.0)]
            else:
                pairs = _SEGMENTS[case]
            edge_ids = {
                0: ("h", i, j),
                1: ("v", i + 1, j),
                2: ("h", i, j + 1),
                3: ("v", i, j),
            }
            for first, second in pairs:
                segments.append((edge_ids[first], edge_ids[second]))

    if not segments:
        raise CurveExtractionFailed("no boundary curve found inside the bounding box")

    def edge_vertex(edge):
        kind, i, j = edge
        if kind == "h":
            a = (xs[i], ys[j])
            b = (xs[i + 1], ys[j])
            za, zb = z_grid[i, j], z_grid[i + 1, j]
        else:
            a = (xs[i], ys[j])
            b = (xs[i], ys[j + 1])
            za, zb = z_grid[i, j], z_grid[i, j + 1]
        t = za / (za - zb)
        raw = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        return project_to_boundary(scene, raw)

    adjacency = {}
    for first, second in segments:
        adjacency.setdefault(first, []).append(second)
        adjacency.setdefault(second, []).append(first)
    for edge, neighbors in adjacency.items():
        if len(neighbors) != 2:
            raise CurveExtractionFailed("boundary curve is not closed on the grid")

    vertices = {edge: edge_vertex(edge) for edge in adjacency}
    seen = set()
    curves = []
    for start in adjacency:
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        previous, current = start, adjacency[start][0]
        while current != start:
            loop.append(current)
            seen.add(current)
            following = adjacency[current][0]
            if following == previous:
                following = adjacency[current][1]
            previous, current = current, following
        points = _canonicalize(np.array([vertices[edge] for edge in loop]))
        curves.append(BoundaryCurve(points))

    curves.sort(key=lambda curve: (curve.points[0][0], curve.points[0][1]))
    return curves
