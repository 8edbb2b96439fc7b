"""Trajectory tracing.

A trajectory of the flow inside X = {z <= 0} is traced with an
adaptive Dormand-Prince integrator swept forward and backward from the
seed.  Boundary events are isolated analytically on cubic Hermite
models of z and of the directional derivative of z along the sweep,
then polished by bisection on the true functions and projected onto
the boundary.  True sign crossings of z end a sweep (transversal or
odd contacts); even tangencies are recorded and the sweep continues.

The resulting divisor lists the boundary contacts in flow order; its
multiplicity word is the combinatorial type of the trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import EscapedBbox, NonTraversing, TravflowError
from .levelset import project_to_boundary
from .strata import BoundaryPoint, classify, refine_tangency
from ._parallel import parallel_map

MAX_STEPS = 200_000


@dataclass(frozen=True)
class Divisor:
    contacts: tuple          # BoundaryPoint in flow order
    is_singleton: bool

    def to_dict(self):
        return {
            "is_singleton": self.is_singleton,
            "contacts": [
                {"coords": list(contact.coords),
                 "multiplicity": contact.multiplicity,
                 "side": contact.side,
                 "f": contact.fval}
                for contact in self.contacts
            ],
        }


@dataclass(frozen=True)
class OmegaType:
    word: tuple

    @property
    def norm(self):
        return sum(self.word)

    @property
    def reduced_norm(self):
        return sum(m - 1 for m in self.word)

    def to_dict(self):
        return {"word": list(self.word), "norm": self.norm,
                "reduced_norm": self.reduced_norm}


@dataclass
class TrajectoryRecord:
    divisor: Divisor
    omega: OmegaType
    seed: tuple
    polyline: np.ndarray | None

    def to_dict(self, include_polyline=True):
        data = {
            "seed": list(self.seed),
            "omega": list(self.omega.word),
            "divisor": self.divisor.to_dict(),
        }
        if include_polyline and self.polyline is not None:
            data["polyline"] = [[float(x) for x in row] for row in self.polyline]
        return data


def omega_of(divisor):
    return OmegaType(tuple(contact.multiplicity for contact in divisor.contacts))


def norms(word):
    """Total and reduced norms of a multiplicity word."""
    return sum(word), sum(m - 1 for m in word)


def gamma_multiplicities(divisor):
    """Total and reduced norms of a divisor's multiplicity word."""
    return norms(omega_of(divisor).word)


def check_parity(divisor):
    """True when the divisor satisfies the contact parity law."""
    return not parity_violations(divisor)


def parity_violations(divisor):
    """Deviations from the contact parity law: a singleton is one even
    positive contact; otherwise odd negative entry, odd positive exit,
    even negative interior contacts."""
    word = [contact.multiplicity for contact in divisor.contacts]
    sides = [contact.side for contact in divisor.contacts]
    problems = []
    if divisor.is_singleton:
        if len(word) != 1:
            problems.append("singleton with more than one contact")
        elif word[0] % 2 != 0 or sides[0] != 1:
            problems.append("singleton contact must be even on the positive side")
        return problems
    if len(word) < 2:
        problems.append("trajectory without both an entry and an exit")
        return problems
    if word[0] % 2 == 0:
        problems.append("entry multiplicity is even")
    if sides[0] != -1:
        problems.append("entry is not on the negative side")
    if word[-1] % 2 == 0:
        problems.append("exit multiplicity is even")
    if sides[-1] != 1:
        problems.append("exit is not on the positive side")
    for multiplicity, side in zip(word[1:-1], sides[1:-1]):
        if multiplicity % 2 != 0:
            problems.append("interior contact with odd multiplicity")
        if side != -1:
            problems.append("interior contact on the positive side")
    return problems


# Cubic Hermite helpers.  Scalar cubics are written in the power basis
# over the normalized step coordinate s in [0, 1].

def _hermite_coefficients(value0, value1, slope0, slope1):
    a = 2.0 * value0 + slope0 - 2.0 * value1 + slope1
    b = -3.0 * value0 - 2.0 * slope0 + 3.0 * value1 - slope1
    return a, b, slope0, value0


def _hermite_point(s, y0, y1, slope0, slope1):
    h00 = (2.0 * s - 3.0) * s * s + 1.0
    h10 = ((s - 2.0) * s + 1.0) * s
    h01 = (3.0 - 2.0 * s) * s * s
    h11 = (s - 1.0) * s * s
    return h00 * y0 + h10 * slope0 + h01 * y1 + h11 * slope1


def _cubic_events(a, b, c, d, floor=1e-9):
    """Sign changes of the cubic on (floor, 1], one per monotone piece,
    as (root, piece_left, piece_right, sign_at_left)."""

    def value(s):
        return ((a * s + b) * s + c) * s + d

    knots = [0.0, 1.0]
    qa, qb, qc = 3.0 * a, 2.0 * b, c
    if qa != 0.0:
        disc = qb * qb - 4.0 * qa * qc
        if disc >= 0.0:
            sqrt_disc = math.sqrt(disc)
            for critical in ((-qb - sqrt_disc) / (2.0 * qa),
                             (-qb + sqrt_disc) / (2.0 * qa)):
                if 0.0 < critical < 1.0:
                    knots.append(critical)
    elif qb != 0.0:
        critical = -qc / qb
        if 0.0 < critical < 1.0:
            knots.append(critical)
    knots = sorted(set(knots))

    events = []
    for left, right in zip(knots[:-1], knots[1:]):
        value_left = value(left)
        value_right = value(right)
        if value_left == 0.0:
            if left > floor:
                events.append((left, left, left, 0.0))
            continue
        if value_left * value_right >= 0.0 and value_right != 0.0:
            continue
        low, high, low_value = left, right, value_left
        for _ in range(80):
            middle = 0.5 * (low + high)
            middle_value = value(middle)
            if middle_value == 0.0:
                low = high = middle
                break
            if (middle_value > 0.0) == (low_value > 0.0):
                low, low_value = middle, middle_value
            else:
                high = middle
        root = 0.5 * (low + high)
        if root > floor:
            events.append((root, left, right, math.copysign(1.0, value_left)))
    return events


def _bisect_function(function, s_low, s_high, value_low, iterations=60):
    for _ in range(iterations):
        middle = 0.5 * (s_low + s_high)
        value = function(middle)
        if value == 0.0:
            return middle
        if (value > 0.0) == (value_low > 0.0):
            s_low, value_low = middle, value
        else:
            s_high = middle
    return 0.5 * (s_low + s_high)


class _Sweep:
    """One integration sweep from a start point in a fixed direction.
    Collects contacts in sweep order and stops at the first true
    boundary crossing."""

    def __init__(self, scene, start, direction):
        self.scene = scene
        self.direction = float(direction)
        self.contacts = []
        self.polyline = [np.array(start, dtype=np.float64)]
        self.ended_on_boundary = False
        self._run(np.array(start, dtype=np.float64))

    def _record(self, boundary_point):
        radius = 0.1 * self.scene.tol.cluster * self.scene.bbox_extent
        for existing in self.contacts:
            gap = math.dist(existing.coords, boundary_point.coords)
            if gap < radius:
                return
        self.contacts.append(boundary_point)
        self.polyline.append(np.array(boundary_point.coords, dtype=np.float64))

    def _run(self, y):
        scene = self.scene
        kernel = _backend.kernel
        tol = scene.tol
        extent = scene.bbox_extent
        contact_tol = tol.contact
        h_min = 1e-12 * extent
        h_max = 0.05 * extent
        arc_budget = 100.0 * scene.bbox_diameter
        lo = np.array(scene.bbox_lo) - 1e-9 * extent
        hi = np.array(scene.bbox_hi) + 1e-9 * extent
        dim = scene.dimension

        k = np.empty((7, dim), dtype=np.float64)
        y_new = np.empty(dim, dtype=np.float64)
        err = np.empty(dim, dtype=np.float64)
        h = min(0.01 * extent, h_max)
        arc = 0.0
        steps = 0

        while True:
            steps += 1
            if steps > MAX_STEPS:
                raise NonTraversing("step budget exhausted before reaching the boundary")
            h = min(max(h, h_min), h_max)
            kernel.rk_step(scene.v_program, y, h, self.direction, k, y_new, err)
            scale = tol.ode_abs + tol.ode_rel * np.maximum(np.abs(y), np.abs(y_new))
            error_norm = math.sqrt(float(np.mean((err / scale) ** 2)))
            if error_norm > 1.0 and h > h_min * 1.0000001:
                h = h * max(0.2, 0.9 * error_norm ** -0.2)
                continue
            if error_norm > 0.0:
                h_next = h * min(5.0, max(0.2, 0.9 * error_norm ** -0.2))
            else:
                h_next = h * 5.0

            if self._scan_step(y, y_new, h, k, contact_tol):
                self.ended_on_boundary = True
                return

            if bool((y_new < lo).any() or (y_new > hi).any()):
                raise EscapedBbox("trajectory left the bounding box inside the domain")
            arc += float(np.linalg.norm(y_new - y))
            if arc > arc_budget:
                raise NonTraversing("arc length budget exhausted before reaching the boundary")
            y = y_new.copy()
            self.polyline.append(y.copy())
            h = h_next

    def _scan_step(self, y, y_new, h, k, contact_tol):
        """Isolate and handle the boundary events inside one accepted
        step.  Returns True when the sweep terminates at a crossing."""
        scene = self.scene
        direction = self.direction
        z0 = scene.z_at(y)
        z1 = scene.z_at(y_new)
        l0 = direction * scene.lie_at(y, 1)
        l1 = direction * scene.lie_at(y_new, 1)
        q0 = scene.lie_at(y, 2)
        q1 = scene.lie_at(y_new, 2)

        slope0 = h * k[0]
        slope1 = h * k[6]

        def path(s):
            return _hermite_point(s, y, y_new, slope0, slope1)

        def true_z(s):
            return scene.z_at(path(s))

        def true_l(s):
            return direction * scene.lie_at(path(s), 1)

        events = []
        for root, left, right, _ in _cubic_events(
                *_hermite_coefficients(z0, z1, h * l0, h * l1)):
            events.append((root, "z", left, right))
        for root, left, right, sign_left in _cubic_events(
                *_hermite_coefficients(l0, l1, h * q0, h * q1)):
            if sign_left > 0.0:
                events.append((root, "l", left, right))
        events.sort(key=lambda item: item[0])

        # the interpolation cubics only suggest where to look; all the
        # decisions below rest on true z values, bracketed against the
        # last path parameter known to lie inside X
        s_inside = 0.0
        z_inside = z0

        def crossing(s_limit):
            value_low = z_inside if z_inside < 0.0 else -0.0
            s_hit = _bisect_function(true_z, s_inside, s_limit, value_low)
            contact = project_to_boundary(scene, path(s_hit))
            self._record(classify(scene, contact))
            return True

        for root, kind, left, right in events:
            if kind == "z":
                value_root = true_z(root)
                if value_root > contact_tol:
                    return crossing(root)
                if abs(value_root) <= contact_tol:
                    # on the boundary at the root: either a graze or a
                    # well approximated transversal crossing; the true
                    # sign past the root tells them apart
                    self._graze(path(root), contact_tol)
                    value_right = true_z(right)
                    if right > root and value_right > contact_tol:
                        return crossing(right)
                    s_inside, z_inside = root, min(value_root, -0.0)
                else:
                    s_inside, z_inside = root, value_root
            else:
                value_left = true_l(left)
                value_right = true_l(right)
                if value_left > 0.0 > value_right:
                    s_touch = _bisect_function(true_l, left, right, value_left)
                else:
                    s_touch = root
                z_probe = true_z(s_touch)
                if z_probe > contact_tol and s_touch > s_inside:
                    # z peaks above zero inside the step even though
                    # the step ends back inside; the z cubic can miss
                    # a shallow bump entirely
                    return crossing(s_touch)
                if abs(z_probe) <= contact_tol:
                    self._graze(path(s_touch), contact_tol)
                    if s_touch > s_inside:
                        s_inside, z_inside = s_touch, min(z_probe, -0.0)
                elif s_touch > s_inside:
                    s_inside, z_inside = s_touch, z_probe

        if z1 > contact_tol:
            # the step ended outside X without a detected crossing
            return crossing(1.0)
        return False

    def _graze(self, probe, contact_tol):
        """Polish a near-boundary path point into a tangency contact,
        rejecting results the refinement dragged onto some other
        trajectory's tangency."""
        refined = refine_tangency(self.scene, probe)
        drift = math.dist(tuple(refined), tuple(probe))
        if drift > self.scene.tol.cluster * self.scene.bbox_extent:
            return
        self._handle_tangency(refined, contact_tol)

    def _handle_tangency(self, point, contact_tol):
        scene = self.scene
        if abs(scene.z_at(point)) > 10.0 * contact_tol:
            return
        boundary_point = classify(scene, point)
        if boundary_point.multiplicity == 1:
            return
        if boundary_point.multiplicity % 2 == 0 and boundary_point.side == 1:
            # an outside graze cannot lie on a trajectory through X
            return
        self._record(boundary_point)


def _nudged_start(scene, boundary_point, direction):
    """Step a boundary point slightly into the domain along the sweep
    direction, shrinking the nudge until the result is inside."""
    origin = np.array(boundary_point, dtype=np.float64)
    field = scene.v_at(origin)
    unit = field / float(np.linalg.norm(field))
    nudge = 1e-6 * scene.bbox_extent
    for _ in range(8):
        candidate = origin + direction * nudge * unit
        if scene.z_at(candidate) <= scene.tol.contact:
            return candidate
        nudge *= 0.1
    raise TravflowError("could not nudge a boundary seed into the domain")


def trace(scene, seed, want_polyline=True):
    """Trace the maximal trajectory through the seed and return its
    record.  The seed must satisfy z <= 0 up to the contact tolerance."""
    seed_array = np.array(seed, dtype=np.float64)
    if len(seed_array) != scene.dimension:
        raise TravflowError("seed dimension does not match the scene")
    z_seed = scene.z_at(seed_array)
    contact_tol = scene.tol.contact
    if z_seed > contact_tol:
        raise TravflowError("seed lies outside the domain")

    pre_contact = None
    if z_seed >= -contact_tol:
        on_boundary = project_to_boundary(scene, seed_array)
        boundary_point = classify(scene, on_boundary)
        if boundary_point.multiplicity % 2 == 0 and boundary_point.side == 1:
            divisor = Divisor(contacts=(boundary_point,), is_singleton=True)
            polyline = np.array([on_boundary]) if want_polyline else None
            return TrajectoryRecord(divisor, omega_of(divisor),
                                    tuple(float(x) for x in seed_array), polyline)
        if boundary_point.multiplicity % 2 == 1:
            if boundary_point.side == -1:
                start = _nudged_start(scene, on_boundary, 1.0)
                forward = _Sweep(scene, start, 1.0)
                contacts = [boundary_point] + forward.contacts
                polyline = [np.array(on_boundary)] + forward.polyline[1:]
            else:
                start = _nudged_start(scene, on_boundary, -1.0)
                backward = _Sweep(scene, start, -1.0)
                contacts = backward.contacts[::-1] + [boundary_point]
                polyline = backward.polyline[::-1][:-1] + [np.array(on_boundary)]
            return _assemble(scene, seed_array, contacts, polyline,
                             want_polyline, pre_contact=None)
        # even contact on the negative side: an interior tangency
        pre_contact = boundary_point
        start = _nudged_start(scene, on_boundary, 1.0)
    else:
        start = seed_array

    backward = _Sweep(scene, start, -1.0)
    forward = _Sweep(scene, start, 1.0)
    contacts = backward.contacts[::-1] + forward.contacts
    polyline = backward.polyline[::-1] + forward.polyline[1:]
    return _assemble(scene, seed_array, contacts, polyline, want_polyline, pre_contact)


def _assemble(scene, seed_array, contacts, polyline, want_polyline, pre_contact):
    radius = 0.1 * scene.tol.cluster * scene.bbox_extent
    if pre_contact is not None:
        held = any(math.dist(existing.coords, pre_contact.coords) < radius
                   for existing in contacts)
        if not held:
            contacts = sorted(contacts + [pre_contact], key=lambda c: c.fval)

    deduped = []
    for contact in contacts:
        if any(math.dist(contact.coords, kept.coords) < radius for kept in deduped):
            continue
        deduped.append(contact)

    f_scale = 1.0 + max((abs(c.fval) for c in deduped), default=0.0)
    for earlier, later in zip(deduped[:-1], deduped[1:]):
        if later.fval < earlier.fval - 1e-9 * f_scale:
            raise TravflowError("contacts out of order along the flow")

    divisor = Divisor(contacts=tuple(deduped), is_singleton=False)
    polyline_array = np.array(polyline) if want_polyline else None
    return TrajectoryRecord(divisor, omega_of(divisor),
                            tuple(float(x) for x in seed_array), polyline_array)


def trace_many(scene, seeds, threads=None, want_polyline=True):
    """Trace a batch of seeds; results keep the seed order regardless
    of the thread count."""
    return parallel_map(lambda seed: trace(scene, seed, want_polyline), seeds, threads)


def seed_grid(scene, per_axis):
    """Regular interior seed grid: cell centers of the bbox with
    z < 0, in lexicographic order."""
    axes = []
    for low, high in zip(scene.bbox_lo, scene.bbox_hi):
        step = (high - low) / per_axis
        axes.append(np.linspace(low + 0.5 * step, high - 0.5 * step, per_axis))
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    values = _backend.kernel.eval_program_batch(scene.z_program, points)
    return [tuple(float(x) for x in points[row])
            for row in np.nonzero(values < -scene.tol.contact)[0]]


def boundary_seeds(scene, count, seed=0):
    """Seeds on the boundary itself: arc-uniform points per curve in
    dimension 2, projected shell samples in dimension 3."""
    if scene.dimension == 2:
        from .levelset import extract_boundary_curves
        points = []
        for curve in extract_boundary_curves(scene):
            for index in range(count):
                fraction = (index + 0.5) / count
                # polyline points sit about a cell off the level set;
                # land them on it so tracing accepts every seed
                probe = project_to_boundary(
                    scene, curve.point_at(fraction * curve.length))
                points.append(tuple(float(x) for x in probe))
        return points
    rng = np.random.default_rng(seed)
    lo = np.array(scene.bbox_lo)
    hi = np.array(scene.bbox_hi)
    grid, _on_wall = scene.grid_points()
    shell = 0.1 * float(
        np.abs(_backend.kernel.eval_program_batch(scene.z_program, grid)).max())
    points = []
    attempts = 0
    while len(points) < count and attempts < 200:
        attempts += 1
        batch = rng.uniform(lo, hi, size=(4 * count, scene.dimension))
        values = _backend.kernel.eval_program_batch(scene.z_program, batch)
        for row in np.nonzero(np.abs(values) <= shell)[0]:
            try:
                projected = project_to_boundary(scene, batch[row])
            except TravflowError:
                continue
            points.append(tuple(float(x) for x in projected))
            if len(points) >= count:
                break
    if len(points) < count:
        raise TravflowError("could not place enough boundary seeds")
    return sorted(points)


def stability_margin(scene, records):
    """Smallest decisive Lie derivative magnitude over all recorded
    contacts; infinity when there are no contacts."""
    margin = math.inf
    for record in records:
        for contact in record.divisor.contacts:
            value = abs(scene.lie_at(np.array(contact.coords), contact.multiplicity))
            margin = min(margin, value)
    return margin
