"""Quotient trajectory space.

Collapsing every trajectory of a traversing flow to a point turns the
domain into a compact quotient.  In dimension 2 the quotient is a
graph: tangency trajectories become 0-cells, and the one-parameter
families of chords sweeping between them become 1-cells.  The builder
cuts the boundary curves at every contact of every tangency
trajectory, probes each resulting arc at two interior fractions, and
merges arcs whose probe trajectories land on them.

The quotient map sends a boundary point to the class of the
trajectory through it.  Fibers of this map are the contact sets of
the classes; their cardinalities obey dimension bounds that
fiber_statistics checks record by record.  In dimension 3 no cell
structure is attempted: sample_complex_3d clusters traced boundary
samples into a class atlas with the same statistics interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (InconsistentQuotient, TravflowError, UnmatchedClass,
                     UnsupportedMode)
from .levelset import extract_boundary_curves, project_to_boundary
from .strata import in_plus_stratum, stratum_sample_3d, tangency_roots_on_curve
from .tracer import boundary_seeds, trace, trace_many
from ._parallel import parallel_map


@dataclass
class TrajectoryClass:
    id: int
    omega: tuple
    record: object           # representative trajectory record
    contact_set: tuple       # contact coordinates, lexicographically sorted

    def f_interval(self):
        values = [contact.fval for contact in self.record.divisor.contacts]
        return min(values), max(values)

    def to_dict(self):
        low, high = self.f_interval()
        return {
            "id": self.id,
            "omega": list(self.omega),
            "f_interval": [low, high],
            "contacts": [
                {"coords": list(contact.coords),
                 "multiplicity": contact.multiplicity,
                 "side": contact.side,
                 "f": contact.fval}
                for contact in self.record.divisor.contacts
            ],
        }


def _contact_key(record):
    return tuple(sorted(contact.coords for contact in record.divisor.contacts))


def _sets_match(a, b, radius):
    """Bijective proximity matching of two coordinate tuples."""
    if len(a) != len(b):
        return False
    used = [False] * len(b)
    for point in a:
        hit = -1
        for index, other in enumerate(b):
            if not used[index] and math.dist(point, other) <= radius:
                hit = index
                break
        if hit < 0:
            return False
        used[hit] = True
    return True


class _ClassTable:
    """Registry of trajectory classes keyed by clustered contact sets."""

    def __init__(self, scene):
        self.scene = scene
        self.radius = scene.tol.cluster * scene.bbox_extent
        self.classes = []

    def match(self, record):
        key = _contact_key(record)
        for cls in self.classes:
            if _sets_match(cls.contact_set, key, self.radius):
                return cls
        return None

    def add(self, record):
        cls = TrajectoryClass(len(self.classes), record.omega.word, record,
                              _contact_key(record))
        self.classes.append(cls)
        return cls

    def match_or_add(self, record):
        found = self.match(record)
        return found if found is not None else self.add(record)


@dataclass
class OneCell:
    id: int
    ends: tuple              # bounding class ids, (None, None) for a free loop
    arcs: tuple              # (curve index, start, end) per member arc
    omega: tuple
    members: list = field(default_factory=list)

    @property
    def is_loop(self):
        return self.ends[0] is None or self.ends[0] == self.ends[1]

    def to_dict(self):
        return {"id": self.id, "ends": list(self.ends),
                "arc_count": len(self.arcs), "omega": list(self.omega),
                "is_loop": self.is_loop}


@dataclass
class QuotientComplex:
    mode: str                # "exact_2d" or "sampled_3d"
    scene: object
    table: _ClassTable
    zero_cells: list
    one_cells: list
    curves: list
    probe_records: list
    probe_fractions: tuple

    @property
    def classes(self):
        return self.table.classes

    def to_dict(self):
        data = {
            "mode": self.mode,
            "dimension": self.scene.dimension,
            "zero_cells": list(self.zero_cells),
            "one_cells": [cell.to_dict() for cell in self.one_cells],
            "classes": [cls.to_dict() for cls in self.classes],
        }
        if self.mode == "exact_2d":
            b0, b1 = betti(self)
            data["betti"] = [b0, b1]
        return data


@dataclass
class _Arc:
    curve: int
    start: float
    end: float
    start_class: int | None
    end_class: int | None
    free: bool = False
    records: list = field(default_factory=list)


def _locate_contact(curves, coords):
    """Curve index and arc length parameter of a boundary contact."""
    best = None
    point = np.asarray(coords, dtype=np.float64)
    for index, curve in enumerate(curves):
        param, distance = curve.locate(point)
        if best is None or distance < best[2]:
            best = (index, param, distance)
    return best[0], best[1]


def _add_cut(cut_map, curve, param, class_id):
    tol = 1e-9 * curve.length
    for existing, existing_id in cut_map.items():
        gap = abs(existing - param)
        gap = min(gap, curve.length - gap)
        if gap <= tol:
            if existing_id != class_id:
                raise InconsistentQuotient(
                    "two classes claim the same boundary cut point")
            return
    cut_map[param] = class_id


def _probe_arc(scene, curves, arc, probe_fractions):
    records = []
    for fraction in probe_fractions:
        param = arc.start + fraction * (arc.end - arc.start)
        point = project_to_boundary(scene, curves[arc.curve].point_at(param))
        records.append(trace(scene, point))
    return records


def _arc_containing(arcs, curves, curve_index, param):
    """Arc holding the parameter, or None when it sits at a cut."""
    length = curves[curve_index].length
    guard = 1e-7 * length
    for index, arc in enumerate(arcs):
        if arc.curve != curve_index:
            continue
        for candidate in (param, param + length):
            if arc.start + guard < candidate < arc.end - guard:
                return index
    return None


def build_complex_2d(scene, threads=None, probe_fractions=(0.5, 0.375)):
    """Exact quotient graph of a validated planar scene.

    Cuts sit at every contact of every tangency trajectory, so each
    arc between cuts carries a single family of chords.  Two probe
    trajectories per arc guard the family structure; a disagreement
    splits the arc once before giving up."""
    scene.require_valid()
    if scene.dimension != 2:
        raise TravflowError("exact quotient construction needs a planar scene")
    curves = extract_boundary_curves(scene)
    table = _ClassTable(scene)

    roots = [tangency_roots_on_curve(scene, curve) for curve in curves]
    for curve_roots in roots:
        for _param, point in curve_roots:
            table.match_or_add(trace(scene, point.coords))
    zero_cells = [cls.id for cls in table.classes]

    cuts = [dict() for _ in curves]
    for cls in list(table.classes):
        for contact in cls.record.divisor.contacts:
            curve_index, param = _locate_contact(curves, contact.coords)
            _add_cut(cuts[curve_index], curves[curve_index], param, cls.id)

    arcs = []
    for curve_index, curve in enumerate(curves):
        params = sorted(cuts[curve_index])
        if not params:
            arcs.append(_Arc(curve_index, 0.0, curve.length, None, None, free=True))
            continue
        for position, start in enumerate(params):
            wrap = position + 1 == len(params)
            end = params[0] + curve.length if wrap else params[position + 1]
            end_label = cuts[curve_index][params[0] if wrap else params[position + 1]]
            arcs.append(_Arc(curve_index, start, end,
                             cuts[curve_index][start], end_label))

    probed = parallel_map(
        lambda arc: _probe_arc(scene, curves, arc, probe_fractions), arcs, threads)
    final_arcs = []
    for arc, records in zip(arcs, probed):
        if len({record.omega.word for record in records}) == 1:
            arc.records = records
            final_arcs.append(arc)
            continue
        # probe disagreement: split the arc once and re-probe the halves
        middle = 0.5 * (arc.start + arc.end)
        for half in (_Arc(arc.curve, arc.start, middle, arc.start_class, None),
                     _Arc(arc.curve, middle, arc.end, None, arc.end_class)):
            half_records = _probe_arc(scene, curves, half, probe_fractions)
            if len({record.omega.word for record in half_records}) != 1:
                raise InconsistentQuotient(
                    "probe trajectories disagree on a boundary arc after one split")
            half.records = half_records
            final_arcs.append(half)
    final_arcs.sort(key=lambda arc: (arc.curve, arc.start))

    parent = list(range(len(final_arcs)))

    def find(index):
        while parent[index] != index:
            parent[index] = parent[parent[index]]
            index = parent[index]
        return index

    for arc_index, arc in enumerate(final_arcs):
        for record in arc.records:
            for contact in record.divisor.contacts:
                curve_index, param = _locate_contact(curves, contact.coords)
                target = _arc_containing(final_arcs, curves, curve_index, param)
                if target is not None:
                    parent[find(arc_index)] = find(target)

    groups = {}
    for index, arc in enumerate(final_arcs):
        groups.setdefault(find(index), []).append(arc)

    one_cells = []
    for root in sorted(groups, key=lambda r: (groups[r][0].curve, groups[r][0].start)):
        members = groups[root]
        labels = sorted({label for arc in members
                         for label in (arc.start_class, arc.end_class)
                         if label is not None})
        if len(labels) > 2:
            raise InconsistentQuotient("a one-cell attaches to more than two classes")
        if not labels:
            ends = (None, None)
        elif len(labels) == 1:
            ends = (labels[0], labels[0])
        else:
            ends = (labels[0], labels[1])
        one_cells.append(OneCell(len(one_cells), ends,
                                 tuple((arc.curve, arc.start, arc.end)
                                       for arc in members),
                                 members[0].records[0].omega.word))

    probe_records = [record for arc in final_arcs for record in arc.records]
    return QuotientComplex("exact_2d", scene, table, zero_cells, one_cells,
                           curves, probe_records, tuple(probe_fractions))


def sample_complex_3d(scene, count=2000, seed=0, threads=None):
    """Sampled class atlas of a solid scene: generic shell seeds plus
    refined tangency representatives, traced and clustered.  No cell
    structure is attempted, but fiber statistics stay meaningful."""
    scene.require_valid()
    if scene.dimension != 3:
        raise TravflowError("sampled quotient construction needs a solid scene")
    generic = boundary_seeds(scene, count, seed=seed)
    special = [point.coords
               for point in stratum_sample_3d(scene, max(4, count // 10),
                                              seed=seed + 1)]
    table = _ClassTable(scene)
    for record in trace_many(scene, list(special) + list(generic),
                             threads=threads, want_polyline=False):
        table.match_or_add(record)
    zero_cells = [cls.id for cls in table.classes if max(cls.omega, default=0) >= 2]
    return QuotientComplex("sampled_3d", scene, table, zero_cells, [], [], [], ())


def _family_home(cx, record):
    """One-cell whose arcs contain every contact of the record."""
    home = None
    for cell in cx.one_cells:
        contained = 0
        for contact in record.divisor.contacts:
            curve_index, param = _locate_contact(cx.curves, contact.coords)
            length = cx.curves[curve_index].length
            tol = 1e-9 * length
            for curve, start, end in cell.arcs:
                if curve != curve_index:
                    continue
                if (start - tol <= param <= end + tol
                        or start - tol <= param + length <= end + tol):
                    contained += 1
                    break
        if contained == len(record.divisor.contacts):
            if home is not None:
                raise UnmatchedClass(
                    "trajectory contacts fit more than one family")
            home = cell
    return home


def _match_or_register(cx, record):
    found = cx.table.match(record)
    if found is not None:
        return found
    if cx.mode != "exact_2d":
        return cx.table.add(record)
    home = _family_home(cx, record)
    if home is None:
        raise UnmatchedClass("trajectory matches no class and fits no family")
    cls = cx.table.add(record)
    home.members.append(cls.id)
    return cls


def gamma_map(cx, point):
    """Class id of the trajectory through a boundary point.

    A trajectory seen for the first time is registered into the family
    whose arcs contain all its contacts, so repeated queries along one
    trajectory agree; a trajectory that fits no family raises
    UnmatchedClass."""
    coords = np.asarray(point, dtype=np.float64)
    if abs(cx.scene.z_at(coords)) > cx.scene.tol.contact:
        coords = project_to_boundary(cx.scene, coords)
    record = trace(cx.scene, coords)
    return _match_or_register(cx, record).id


def fiber_statistics(cx):
    """Histograms of quotient fiber cardinalities against the
    dimension bounds.

    With n the boundary dimension, total fibers are bounded by n + 2
    and fibers restricted to the closed positive first stratum by
    n + 1; contacts in deeper positive strata of order j are bounded
    by ceil(n / (j - 1))."""
    n = cx.scene.dimension - 1
    records = [cls.record for cls in cx.classes] + list(cx.probe_records)

    def survey(counter):
        histogram = {}
        worst = 0
        violations = []
        for record in records:
            size = counter(record)
            histogram[size] = histogram.get(size, 0) + 1
            worst = max(worst, size)
            if size > counter.bound:
                violations.append(list(record.seed))
        return {"histogram": histogram, "max": worst,
                "bound": counter.bound, "violations": violations}

    def total(record):
        return len(record.divisor.contacts)
    total.bound = n + 2

    def plus(record):
        return sum(1 for contact in record.divisor.contacts
                   if in_plus_stratum(contact, 1))
    plus.bound = n + 1

    strata = []
    for order in range(2, n + 1):
        def deep(record, order=order):
            return sum(1 for contact in record.divisor.contacts
                       if in_plus_stratum(contact, order))
        deep.bound = math.ceil(n / (order - 1))
        strata.append({"order": order, **survey(deep)})

    return {"mode": cx.mode, "records": len(records),
            "fiber": survey(total), "plus_fiber": survey(plus),
            "strata": strata}


def filtration(cx, order):
    """Ids of classes meeting the closed positive stratum of the
    given order."""
    if not 1 <= order <= cx.scene.dimension:
        raise TravflowError("filtration order out of range")
    ids = []
    for cls in cx.classes:
        if any(in_plus_stratum(contact, order)
               for contact in cls.record.divisor.contacts):
            ids.append(cls.id)
    return ids


def _gf2_rank(rows):
    basis = {}
    for row in rows:
        current = row
        while current:
            lead = current.bit_length() - 1
            if lead in basis:
                current ^= basis[lead]
            else:
                basis[lead] = current
                break
    return len(basis)


def betti(cx):
    """Connected components and independent cycles of the quotient
    graph, computed over GF(2).  Loop edges and free loops contribute
    cycles; free loops also stand alone as components."""
    if cx.mode != "exact_2d":
        raise UnsupportedMode("betti numbers need the exact planar quotient")
    index = {class_id: position
             for position, class_id in enumerate(sorted(cx.zero_cells))}
    rows = []
    free = 0
    for cell in cx.one_cells:
        a, b = cell.ends
        if a is None:
            free += 1
        elif a != b:
            rows.append((1 << index[a]) | (1 << index[b]))
    rank = _gf2_rank(rows)
    b0 = len(cx.zero_cells) - rank + free
    b1 = len(cx.one_cells) - rank
    return b0, b1
