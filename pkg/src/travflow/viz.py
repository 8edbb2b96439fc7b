"""Graph and scene drawings.

The quotient graph goes out as Graphviz DOT or as a self-contained
SVG with a circular layout; planar scenes and traced trajectories go
out as an SVG overlay of the boundary curves, trajectory polylines,
and classified contacts.
"""

from __future__ import annotations

import math

from .errors import UnsupportedMode


def _word_label(word):
    return "(" + ",".join(str(m) for m in word) + ")"


def complex_dot(cx):
    """Graphviz DOT text of the quotient graph."""
    lines = ["graph quotient {", "  node [shape=circle fontsize=10];"]
    for class_id in cx.zero_cells:
        cls = cx.table.classes[class_id]
        lines.append(f'  c{class_id} [label="{class_id}: {_word_label(cls.omega)}"];')
    free_index = 0
    for cell in cx.one_cells:
        a, b = cell.ends
        label = f"{_word_label(cell.omega)} x{len(cell.arcs)}"
        if a is None:
            lines.append(f'  f{free_index} [shape=point label=""];')
            lines.append(f'  f{free_index} -- f{free_index} [label="{label}"];')
            free_index += 1
        else:
            lines.append(f'  c{a} -- c{b} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _svg_header(width, height):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">\n'
            f'<rect width="{width}" height="{height}" fill="white"/>\n')


def complex_svg(cx):
    """Self-contained SVG of the quotient graph on a circular layout.
    Parallel edges bow apart, loop edges and free loops draw as small
    circles."""
    size = 420.0
    center = size / 2.0
    radius = size / 2.0 - 70.0
    vertices = list(cx.zero_cells)
    position = {}
    for index, class_id in enumerate(vertices):
        angle = 2.0 * math.pi * index / max(1, len(vertices)) - math.pi / 2.0
        position[class_id] = (center + radius * math.cos(angle),
                              center + radius * math.sin(angle))

    parts = [_svg_header(size, size)]
    seen_pairs = {}
    free_count = sum(1 for cell in cx.one_cells if cell.ends[0] is None)
    free_index = 0
    for cell in cx.one_cells:
        a, b = cell.ends
        if a is None:
            free_index += 1
            fx = center + (radius + 40.0) * (free_index - (free_count + 1) / 2.0) / max(1, free_count)
            parts.append(f'<circle cx="{fx:.1f}" cy="{size - 30.0:.1f}" r="16" '
                         'fill="none" stroke="steelblue" stroke-width="2"/>\n')
            continue
        if a == b:
            x, y = position[a]
            parts.append(f'<circle cx="{x + 26.0:.1f}" cy="{y:.1f}" r="18" '
                         'fill="none" stroke="steelblue" stroke-width="2"/>\n')
            continue
        ax, ay = position[a]
        bx, by = position[b]
        pair = (min(a, b), max(a, b))
        bow = seen_pairs.get(pair, 0)
        seen_pairs[pair] = bow + 1
        # bow parallel edges to alternating sides of the chord
        offset = (bow + 1) // 2 * 36.0 * (1 if bow % 2 == 0 else -1)
        nx, ny = by - ay, ax - bx
        norm = math.hypot(nx, ny) or 1.0
        mx = (ax + bx) / 2.0 + offset * nx / norm
        my = (ay + by) / 2.0 + offset * ny / norm
        parts.append(f'<path d="M {ax:.1f} {ay:.1f} Q {mx:.1f} {my:.1f} '
                     f'{bx:.1f} {by:.1f}" fill="none" stroke="steelblue" '
                     'stroke-width="2"/>\n')
    for class_id in vertices:
        x, y = position[class_id]
        cls = cx.table.classes[class_id]
        parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="14" fill="white" '
                     'stroke="black" stroke-width="1.5"/>\n')
        parts.append(f'<text x="{x:.1f}" y="{y + 4.0:.1f}" text-anchor="middle" '
                     f'font-size="11">{class_id}</text>\n')
        parts.append(f'<text x="{x:.1f}" y="{y + 30.0:.1f}" text-anchor="middle" '
                     f'font-size="10">{_word_label(cls.omega)}</text>\n')
    parts.append("</svg>\n")
    return "".join(parts)


def scene_svg(scene, records=(), curves=None, width=640):
    """SVG overlay of a planar scene: boundary curves, trajectory
    polylines, and contact markers colored by multiplicity."""
    if scene.dimension != 2:
        raise UnsupportedMode("scene drawings are planar only")
    if curves is None:
        from .levelset import extract_boundary_curves
        curves = extract_boundary_curves(scene)
    lo0, lo1 = scene.bbox_lo
    hi0, hi1 = scene.bbox_hi
    pad = 20.0
    scale = (width - 2.0 * pad) / max(hi0 - lo0, hi1 - lo1)
    height = (hi1 - lo1) * scale + 2.0 * pad

    def place(point):
        return ((point[0] - lo0) * scale + pad, (hi1 - point[1]) * scale + pad)

    def polyline(points, color, stroke):
        steps = " ".join(f"{x:.2f},{y:.2f}" for x, y in (place(p) for p in points))
        return (f'<polyline points="{steps}" fill="none" stroke="{color}" '
                f'stroke-width="{stroke}"/>\n')

    parts = [_svg_header(width, math.ceil(height))]
    for curve in curves:
        closed = list(curve.points) + [curve.points[0]]
        parts.append(polyline(closed, "black", 1.5))
    for record in records:
        if record.polyline is not None and len(record.polyline) > 1:
            parts.append(polyline(record.polyline, "steelblue", 1.0))
        for contact in record.divisor.contacts:
            x, y = place(contact.coords)
            color = "crimson" if contact.multiplicity == 1 else "darkorange"
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3.5" '
                         f'fill="{color}"/>\n')
    parts.append("</svg>\n")
    return "".join(parts)
