"""Boundary stratification by contact order with the flow.

A boundary point gets the multiplicity m of the first nonvanishing
iterated Lie derivative L_v^m z and the raw sign of that derivative as
its side.  Points with m = 1 are where trajectories cross the boundary
transversally; m >= 2 points are tangencies.  For planar scenes the
tangency locus is isolated and found per boundary curve by sign
isolation plus a two function Newton polish; for solid scenes it is
sampled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DegenerateContact, TravflowError
from .levelset import extract_boundary_curves, project_to_boundary


@dataclass(frozen=True)
class BoundaryPoint:
    coords: tuple
    multiplicity: int
    side: int           # raw sign of the decisive Lie derivative, +1 or -1
    fval: float


def multiplicity_at(scene, point):
    """Contact multiplicity and side at a boundary point: the smallest
    order whose Lie derivative clears the zero tolerance, and its sign.
    Orders beyond the dimension break the generic multiplicity bound
    and are only tolerated at dimension + 1 in solid scenes."""
    for order in range(1, scene.dimension + 2):
        value = scene.lie_at(point, order)
        if abs(value) > scene.tol.deriv_zero:
            if order > scene.dimension and scene.dimension < 3:
                raise DegenerateContact(
                    f"multiplicity {order} exceeds the generic bound at {tuple(point)}")
            return order, (1 if value > 0.0 else -1)
    raise DegenerateContact(
        f"all Lie derivatives up to order {scene.dimension + 1} vanish at {tuple(point)}")


def in_plus_stratum(boundary_point, order=1):
    """Membership in the closed positive stratum of the given order:
    multiplicity above the order, or equal to it on the positive side."""
    if boundary_point.multiplicity > order:
        return True
    return boundary_point.multiplicity == order and boundary_point.side == 1


def classify(scene, point):
    multiplicity, side = multiplicity_at(scene, point)
    return BoundaryPoint(
        coords=tuple(float(x) for x in point),
        multiplicity=multiplicity,
        side=side,
        fval=scene.f_at(point),
    )


def refine_tangency(scene, point, iterations=25):
    """Newton polish of a near tangency point toward z = 0 and
    L_v z = 0 simultaneously.  Square solve in the plane, least
    squares (minimal norm) in higher dimension."""
    current = np.array(point, dtype=np.float64)
    for _ in range(iterations):
        residual = np.array([scene.z_at(current), scene.lie_at(current, 1)])
        if abs(residual[0]) <= 1e-12 and abs(residual[1]) <= 1e-10:
            break
        jacobian = np.stack([scene.grad_z_at(current),
                             scene.tower_gradient_at(current, 1)])
        try:
            if scene.dimension == 2:
                step = np.linalg.solve(jacobian, residual)
            else:
                step = np.linalg.lstsq(jacobian, residual, rcond=None)[0]
        except np.linalg.LinAlgError:
            break
        current = current - step
    return current


def _bisect_tangency(scene, start, end, iterations=60):
    """Bisection for L_v z = 0 between two boundary points joined by a
    chord; every probe is projected back onto the boundary first."""
    left, right = 0.0, 1.0
    value_left = scene.lie_at(project_to_boundary(scene, start), 1)
    for _ in range(iterations):
        middle = 0.5 * (left + right)
        probe = project_to_boundary(scene, start + middle * (end - start))
        value = scene.lie_at(probe, 1)
        if value == 0.0:
            return probe
        if (value > 0.0) == (value_left > 0.0):
            left = middle
            value_left = value
        else:
            right = middle
    middle = 0.5 * (left + right)
    return project_to_boundary(scene, start + middle * (end - start))


def tangency_roots_on_curve(scene, curve):
    """Tangency points on one closed boundary curve as a list of
    (arc length parameter, BoundaryPoint), sorted by parameter."""
    values = _backend.kernel.eval_program_batch(scene.tower_program(1), curve.points)
    count = len(curve.points)
    raw_roots = []
    for k in range(count):
        ahead = (k + 1) % count
        a, b = float(values[k]), float(values[ahead])
        if a == 0.0:
            raw_roots.append(np.array(curve.points[k]))
        elif a * b < 0.0:
            raw_roots.append(_bisect_tangency(scene, curve.points[k], curve.points[ahead]))

    polished = [refine_tangency(scene, root) for root in raw_roots]
    merge_radius = 1e-8 * scene.bbox_extent
    roots = []
    for candidate in polished:
        if all(float(np.linalg.norm(candidate - kept)) > merge_radius for kept in roots):
            roots.append(candidate)

    located = []
    for root in roots:
        parameter, _ = curve.locate(root)
        located.append((parameter, classify(scene, root)))
    located.sort(key=lambda item: item[0])
    return located


def boundary_tangency_data(scene, resolution=None):
    """Boundary curves of a planar scene together with the tangency
    points on each of them."""
    curves = extract_boundary_curves(scene, resolution)
    return curves, [tangency_roots_on_curve(scene, curve) for curve in curves]


def tangency_locus_2d(scene, resolution=None):
    """All planar tangency points, flattened and sorted by coordinates."""
    _, per_curve = boundary_tangency_data(scene, resolution)
    points = [boundary_point for roots in per_curve for _, boundary_point in roots]
    points.sort(key=lambda p: p.coords)
    return points


def stratum_sample_3d(scene, count, seed=0):
    """Random boundary samples for a solid scene: bbox draws kept in a
    thin slab around z = 0, projected onto the boundary, classified,
    and augmented with Newton refined representatives of near
    tangencies.  Sorted by coordinates."""
    if scene.dimension != 3:
        raise TravflowError("stratum sampling needs a three dimensional scene")
    rng = np.random.default_rng(seed)
    lo = np.array(scene.bbox_lo)
    hi = np.array(scene.bbox_hi)
    kernel = _backend.kernel

    samples = []
    positions = []
    attempts = 0
    while len(samples) < count and attempts < 200:
        attempts += 1
        batch = rng.uniform(lo, hi, size=(4 * count, 3))
        z_values = kernel.eval_program_batch(scene.z_program, batch)
        slab = 0.1 * float(np.max(np.abs(z_values)))
        for row in np.nonzero(np.abs(z_values) <= slab)[0]:
            if len(samples) >= count:
                break
            try:
                on_boundary = project_to_boundary(scene, batch[row])
            except TravflowError:
                continue
            try:
                boundary_point = classify(scene, on_boundary)
            except DegenerateContact:
                continue
            samples.append(boundary_point)
            positions.append(on_boundary)
    if len(samples) < count:
        raise TravflowError("boundary sampling kept too few points")

    # Newton refinement only needs a starting point in the basin of the
    # tangency locus; every boundary sample is a cheap candidate and
    # validation discards the ones that fail to land on the locus,
    # which keeps reps from all locus components, not just the one
    # with the flattest approach
    tangency_candidates = positions

    merge_radius = 1e-9 * scene.bbox_extent
    refined = []
    for candidate in tangency_candidates:
        polished = refine_tangency(scene, candidate)
        if abs(scene.z_at(polished)) > scene.tol.contact:
            continue
        if abs(scene.lie_at(polished, 1)) > scene.tol.deriv_zero:
            continue
        if all(float(np.linalg.norm(polished - kept)) > merge_radius for kept in refined):
            refined.append(polished)
    for point in refined:
        try:
            samples.append(classify(scene, point))
        except DegenerateContact:
            continue

    samples.sort(key=lambda p: p.coords)
    return samples
