"""Boundary holography.

A traversing flow is visible from the boundary: the trace relation
(a before b on one trajectory) together with the boundary values of
the Lyapunov function determines the trajectory classes, their
f-intervals, and in the planar case the quotient graph.  This module
extracts that boundary data from a scene, serializes it, rebuilds the
structure from the serialized data alone, and verifies the rebuild
against the scene it came from.

The strict variant keeps only samples on the closed positive first
stratum; the class partition survives the restriction because every
trajectory keeps at least one positive contact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from . import _backend
from .errors import OrderViolation, TravflowError, UnsupportedMode
from .jsonfmt import dump_canonical, load_json
from .levelset import extract_boundary_curves, project_to_boundary
from .strata import in_plus_stratum, stratum_sample_3d, tangency_roots_on_curve
from .tracer import boundary_seeds, trace, trace_many
from .tspace import _ClassTable, _match_or_register, _sets_match, build_complex_2d
from ._parallel import parallel_map


@dataclass(frozen=True)
class BoundarySample:
    id: int
    coords: tuple
    fval: float


@dataclass
class BoundaryData:
    """Boundary-only observables: sample points with their f values
    and the ordered trace relation between samples."""
    dimension: int
    samples: list
    relations: list          # (earlier id, later id) pairs in flow order
    mode: str = "full"

    def to_dict(self):
        return {
            "dimension": self.dimension,
            "mode": self.mode,
            "samples": [{"id": sample.id, "coords": list(sample.coords),
                         "f": sample.fval} for sample in self.samples],
            "relations": [[a, b] for a, b in self.relations],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            samples = [BoundarySample(int(entry["id"]),
                                      tuple(float(x) for x in entry["coords"]),
                                      float(entry["f"]))
                       for entry in data["samples"]]
            relations = [(int(pair[0]), int(pair[1]))
                         for pair in data["relations"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise TravflowError(f"malformed boundary data: {exc}") from None
        return cls(int(data["dimension"]), samples, relations,
                   str(data.get("mode", "full")))

    def save(self, path):
        dump_canonical(self.to_dict(), path)

    @classmethod
    def load(cls, path):
        return cls.from_dict(load_json(path))


def _boundary_seed_points(scene, density, seed):
    if scene.dimension == 2:
        points = []
        for curve in extract_boundary_curves(scene):
            for index in range(density):
                fraction = (index + 0.5) / density
                points.append(project_to_boundary(
                    scene, curve.point_at(fraction * curve.length)))
            for _param, root in tangency_roots_on_curve(scene, curve):
                points.append(np.array(root.coords))
        return points
    special = stratum_sample_3d(scene, max(4, density // 10), seed=seed + 1)
    return ([np.array(p) for p in boundary_seeds(scene, density, seed=seed)]
            + [np.array(point.coords) for point in special])


def extract_boundary_data(scene, density=200, plus_only=False, seed=0,
                          threads=None):
    """Sample the boundary densely, trace every sample, and emit the
    merged samples with their trace relation.  Contacts discovered
    while tracing join the sample set, so every listed trajectory is
    complete.  With plus_only the output is restricted to the closed
    positive first stratum."""
    scene.require_valid()
    seeds = _boundary_seed_points(scene, density, seed)
    records = trace_many(scene, seeds, threads=threads, want_polyline=False)
    table = _ClassTable(scene)
    for record in records:
        table.match_or_add(record)

    # sample identity is per trajectory; merging samples across nearby
    # trajectories can leave a relation component that is not a chain,
    # because contact coordinates respond unevenly to a chord shift
    # near a tangency
    coords = []
    fvals = []
    plus_flags = []
    relations = []
    for cls in table.classes:
        ids = []
        for contact in cls.record.divisor.contacts:
            coords.append(contact.coords)
            fvals.append(contact.fval)
            plus_flags.append(in_plus_stratum(contact, 1))
            ids.append(len(coords) - 1)
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                relations.append((ids[i], ids[j]))

    keep = [index for index in range(len(coords))
            if not plus_only or plus_flags[index]]
    renumber = {old: new for new, old in enumerate(keep)}
    samples = [BoundarySample(renumber[old], coords[old], fvals[old])
               for old in keep]
    relations = [(renumber[a], renumber[b]) for a, b in relations
                 if a in renumber and b in renumber]
    return BoundaryData(scene.dimension, samples, relations,
                        "plus_only" if plus_only else "full")


@dataclass
class ReconstructedClass:
    id: int
    sample_ids: tuple        # members ordered by f value
    interval: tuple          # (lowest f, highest f)

    def to_dict(self):
        return {"id": self.id, "samples": list(self.sample_ids),
                "interval": [self.interval[0], self.interval[1]]}


@dataclass
class ReconstructedGraph:
    vertices: list           # class ids of the non-chord classes
    vertex_sizes: dict       # class id -> sample count
    edges: list              # (end, end, family size); ends may be None

    def to_dict(self):
        return {"vertices": list(self.vertices),
                "vertex_sizes": {str(k): v for k, v in self.vertex_sizes.items()},
                "edges": [[a, b, size] for a, b, size in self.edges]}


@dataclass
class Reconstruction:
    dimension: int
    mode: str
    classes: list
    sample_class: dict       # sample id -> class id
    graph: ReconstructedGraph | None

    def to_dict(self):
        data = {"dimension": self.dimension, "mode": self.mode,
                "classes": [cls.to_dict() for cls in self.classes]}
        if self.graph is not None:
            data["graph"] = self.graph.to_dict()
        return data


def _check_axioms(data):
    """Order axioms of the trace relation: irreflexive, compatible
    with f, and a full chain on every comparability class."""
    fval = {sample.id: sample.fval for sample in data.samples}
    scale = 1.0 + max((abs(value) for value in fval.values()), default=0.0)
    pairs = set()
    for a, b in data.relations:
        if a not in fval or b not in fval:
            raise OrderViolation(f"relation mentions unknown sample ({a}, {b})")
        if a == b:
            raise OrderViolation(f"relation is reflexive at sample {a}")
        if fval[b] < fval[a] - 1e-9 * scale:
            raise OrderViolation(
                f"relation ({a}, {b}) runs against the f order")
        if (b, a) in pairs:
            raise OrderViolation(f"relation contains both ({a}, {b}) and ({b}, {a})")
        pairs.add((a, b))

    neighbors = {sample.id: {sample.id} for sample in data.samples}
    for a, b in pairs:
        neighbors[a].add(b)
        neighbors[b].add(a)
    seen = set()
    for start in neighbors:
        if start in seen:
            continue
        stack = [start]
        component = []
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            component.append(node)
            stack.extend(neighbors[node] - seen)
        component.sort(key=lambda node: (fval[node], node))
        for i in range(len(component)):
            for j in range(i + 1, len(component)):
                if (component[i], component[j]) not in pairs:
                    raise OrderViolation(
                        "comparability class is not a chain between samples "
                        f"{component[i]} and {component[j]}")


def _partition(data):
    parent = {sample.id: sample.id for sample in data.samples}

    def find(node):
        while parent[node] != node:
            parent[node] = parent[parent[node]]
            node = parent[node]
        return node

    for a, b in data.relations:
        parent[find(a)] = find(b)
    groups = {}
    for sample in data.samples:
        groups.setdefault(find(sample.id), []).append(sample.id)
    return list(groups.values())


def _adjacency_scale(samples):
    """Proximity scale for sampled boundary points: twice the median
    fourth-neighbor gap.  The fourth neighbor bridges the close pairs
    left by sampling a chord from both ends, which would crush a plain
    nearest-neighbor estimate."""
    points = np.array([sample.coords for sample in samples])
    if len(points) < 6:
        return 1.0
    gaps = []
    for index in range(len(points)):
        distance = np.sort(np.linalg.norm(points - points[index], axis=1))
        gaps.append(float(distance[4]))
    return 2.0 * float(np.median(gaps))


def _build_graph(classes, samples, eps):
    by_id = {sample.id: sample for sample in samples}
    vertices = [cls.id for cls in classes if len(cls.sample_ids) != 2]
    vertex_sizes = {cls.id: len(cls.sample_ids) for cls in classes
                    if len(cls.sample_ids) != 2}
    chords = [cls for cls in classes if len(cls.sample_ids) == 2]
    low = {cls.id: np.array(by_id[cls.sample_ids[0]].coords) for cls in chords}
    high = {cls.id: np.array(by_id[cls.sample_ids[1]].coords) for cls in chords}

    adjacency = {cls.id: set() for cls in chords}
    for i, a in enumerate(chords):
        for b in chords[i + 1:]:
            if (np.linalg.norm(low[a.id] - low[b.id]) <= eps
                    and np.linalg.norm(high[a.id] - high[b.id]) <= eps):
                adjacency[a.id].add(b.id)
                adjacency[b.id].add(a.id)

    vertex_points = {
        cls.id: [np.array(by_id[sid].coords) for sid in cls.sample_ids]
        for cls in classes if len(cls.sample_ids) != 2}

    def attach(chord_id):
        # vertex whose samples cover both chord endpoints, if any
        best = None
        for vertex in vertices:
            points = vertex_points[vertex]
            reach = max(
                min(np.linalg.norm(low[chord_id] - p) for p in points),
                min(np.linalg.norm(high[chord_id] - p) for p in points))
            if reach <= eps and (best is None or reach < best[1]):
                best = (vertex, reach)
        return None if best is None else best[0]

    seen = set()
    edges = []
    for cls in chords:
        if cls.id in seen:
            continue
        stack = [cls.id]
        family = []
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            family.append(node)
            stack.extend(adjacency[node] - seen)
        # the chords a family limits onto determine its ends; a family
        # with no limiting vertex closes up into a free loop
        attachments = sorted({vertex for vertex in map(attach, family)
                              if vertex is not None})
        if not attachments:
            ends = (None, None)
        elif len(attachments) == 1:
            ends = (attachments[0], attachments[0])
        elif len(attachments) == 2:
            ends = (attachments[0], attachments[1])
        else:
            # over-merged family; leave the ends unresolved rather than
            # inventing a pair
            ends = (None, None)
        edges.append((ends[0], ends[1], len(family)))
    edges.sort(key=lambda e: ((e[0] is None, e[0]), (e[1] is None, e[1]), e[2]))
    return ReconstructedGraph(sorted(vertices), vertex_sizes, edges)


def reconstruct(data):
    """Rebuild trajectory classes, their f-intervals, and in the
    planar full mode the quotient graph, from boundary data alone."""
    _check_axioms(data)
    fval = {sample.id: sample.fval for sample in data.samples}
    groups = _partition(data)
    groups.sort(key=lambda ids: (min(fval[i] for i in ids), min(ids)))
    classes = []
    sample_class = {}
    for class_id, ids in enumerate(groups):
        ordered = tuple(sorted(ids, key=lambda i: (fval[i], i)))
        values = [fval[i] for i in ordered]
        classes.append(ReconstructedClass(class_id, ordered,
                                          (min(values), max(values))))
        for i in ordered:
            sample_class[i] = class_id
    graph = None
    if data.dimension == 2 and data.mode == "full":
        graph = _build_graph(classes, data.samples, _adjacency_scale(data.samples))
    return Reconstruction(data.dimension, data.mode, classes, sample_class, graph)


def _complex_graph(cx):
    """The quotient graph of an exact planar complex in the shape the
    isomorphism check expects."""
    vertices = sorted(cx.zero_cells)
    sizes = {}
    for cls in cx.classes:
        if cls.id in cx.zero_cells:
            sizes[cls.id] = len(cls.contact_set)
    edges = []
    for cell in cx.one_cells:
        a, b = cell.ends
        ends = sorted((a, b), key=lambda v: (v is None, v))
        edges.append((ends[0], ends[1], len(cell.arcs)))
    edges.sort(key=lambda e: ((e[0] is None, e[0]), (e[1] is None, e[1]), e[2]))
    return ReconstructedGraph(vertices, sizes, edges)


def _graphs_isomorphic(graph_a, graph_b):
    """Multigraph isomorphism respecting vertex sample counts, by
    brute force over the small vertex sets."""
    if len(graph_a.vertices) != len(graph_b.vertices):
        return False
    if len(graph_a.edges) != len(graph_b.edges):
        return False
    sizes_a = sorted(graph_a.vertex_sizes[v] for v in graph_a.vertices)
    sizes_b = sorted(graph_b.vertex_sizes[v] for v in graph_b.vertices)
    if sizes_a != sizes_b:
        return False

    def edge_key(edges, mapping):
        keys = []
        for a, b, _size in edges:
            pair = sorted((-1 if a is None else mapping[a],
                           -1 if b is None else mapping[b]))
            keys.append(tuple(pair))
        return sorted(keys)

    target = edge_key(graph_b.edges, {v: i for i, v in enumerate(graph_b.vertices)})
    for ordering in permutations(range(len(graph_a.vertices))):
        mapping = {v: ordering[i] for i, v in enumerate(graph_a.vertices)}
        inverse = {v: i for i, v in enumerate(graph_b.vertices)}
        if any(graph_a.vertex_sizes[v]
               != graph_b.vertex_sizes[graph_b.vertices[mapping[v]]]
               for v in graph_a.vertices):
            continue
        if edge_key(graph_a.edges, mapping) == target:
            return True
    return False


def _candidate_classes(reconstruction, points, point, eps):
    distance = np.linalg.norm(points - np.asarray(point), axis=1)
    nearby = np.nonzero(distance <= eps)[0]
    if len(nearby) == 0:
        nearby = [int(np.argmin(distance))]
    return {reconstruction.sample_class[int(index)] for index in nearby}


def _interior_points(scene, count, seed):
    rng = np.random.default_rng(seed)
    lo = np.array(scene.bbox_lo)
    hi = np.array(scene.bbox_hi)
    points = []
    while len(points) < count:
        batch = rng.uniform(lo, hi, size=(4 * count, scene.dimension))
        values = _backend.kernel.eval_program_batch(scene.z_program, batch)
        for row in np.nonzero(values < -scene.tol.contact)[0]:
            points.append(batch[row])
            if len(points) >= count:
                break
    return points


def verify_reconstruction(scene, data, reconstruction, probes=10000, seed=0,
                          threads=None):
    """Check a reconstruction against the scene it was extracted from.

    Interior acceptance: random interior points whose trajectory
    matches a reconstructed class holding their f value.  Leaf
    consistency: the fraction whose contacts agree on at least one
    common class.  The class partition is compared exactly against a
    fresh geometric partition of the samples, and in the planar full
    mode the graph is compared up to isomorphism with the quotient
    complex."""
    try:
        _check_axioms(data)
        axioms_ok = True
    except OrderViolation:
        axioms_ok = False

    sample_points = np.array([sample.coords for sample in data.samples])
    eps = _adjacency_scale(data.samples)
    id_order = [sample.id for sample in data.samples]
    if id_order != list(range(len(id_order))):
        raise TravflowError("sample ids must be contiguous for verification")

    interval = {cls.id: cls.interval for cls in reconstruction.classes}
    f_scale = 1.0 + max((abs(sample.fval) for sample in data.samples), default=0.0)
    slack = 1e-8 * f_scale

    plus_mode = data.mode == "plus_only"
    points = _interior_points(scene, probes, seed)
    records = trace_many(scene, points, threads=threads, want_polyline=False)
    accepted = 0
    consistent = 0
    for point, record in zip(points, records):
        contacts = record.divisor.contacts
        if plus_mode:
            # only the closed positive stratum is observable, and the
            # recorded intervals lose their lower ends with it
            contacts = [c for c in contacts if in_plus_stratum(c, 1)]
        candidate_sets = [
            _candidate_classes(reconstruction, sample_points, contact.coords, eps)
            for contact in contacts]
        common = set.intersection(*candidate_sets) if candidate_sets else set()
        if common:
            consistent += 1
            value = scene.f_at(point)
            if plus_mode:
                if any(value <= interval[c][1] + slack for c in common):
                    accepted += 1
            elif any(interval[c][0] - slack <= value <= interval[c][1] + slack
                     for c in common):
                accepted += 1

    geometric = _geometric_partition(scene, data, threads)
    reconstructed = {frozenset(cls.sample_ids) for cls in reconstruction.classes}
    partition_ok = geometric == reconstructed

    graph_ok = None
    if scene.dimension == 2 and data.mode == "full":
        cx = build_complex_2d(scene, threads=threads)
        graph_ok = (reconstruction.graph is not None
                    and _graphs_isomorphic(reconstruction.graph,
                                           _complex_graph(cx)))

    return {
        "probes": probes,
        "order_axioms": axioms_ok,
        "interior_acceptance": accepted / probes if probes else 1.0,
        "leaf_consistency": consistent / probes if probes else 1.0,
        "class_count_match": partition_ok,
        "reconstructed_classes": len(reconstruction.classes),
        "graph_isomorphic": graph_ok,
    }


def _geometric_partition(scene, data, threads=None):
    """Partition of the sample ids by actual trajectory membership,
    traced fresh from the scene."""
    records = trace_many(scene, [np.array(sample.coords) for sample in data.samples],
                         threads=threads, want_polyline=False)
    radius = scene.tol.cluster * scene.bbox_extent
    keys = []
    groups = []
    for sample, record in zip(data.samples, records):
        key = tuple(sorted(contact.coords for contact in record.divisor.contacts))
        for index, existing in enumerate(keys):
            if _sets_match(existing, key, radius):
                groups[index].append(sample.id)
                break
        else:
            keys.append(key)
            groups.append([sample.id])
    return {frozenset(group) for group in groups}


def alpha_embed(scene, cx, point):
    """Interior embedding: the class of the trajectory through an
    interior point together with the f value there, using the same
    match-or-register rule as the boundary quotient map."""
    coords = np.asarray(point, dtype=np.float64)
    record = trace(scene, coords, want_polyline=False)
    cls = _match_or_register(cx, record)
    return cls.id, scene.f_at(coords)
