"""Boundary stratification: contact multiplicities, tangency loci,
and solid scene sampling."""

import math

import numpy as np
import pytest

from travflow import (BoundaryPoint, DegenerateContact, Scene, classify,
                      extract_boundary_curves, in_plus_stratum,
                      multiplicity_at, stratum_sample_3d, tangency_locus_2d)
from travflow.strata import refine_tangency, tangency_roots_on_curve


def test_disk_multiplicities(disk):
    # transversal crossings on the vertical axis, tangencies at x1 = 0
    assert multiplicity_at(disk, [0.0, -1.0]) == (1, -1)
    assert multiplicity_at(disk, [0.0, 1.0]) == (1, 1)
    # L^2 z = 2 at both tangencies: convex side
    assert multiplicity_at(disk, [1.0, 0.0]) == (2, 1)
    assert multiplicity_at(disk, [-1.0, 0.0]) == (2, 1)


def test_annulus_sides(annulus):
    # L^2 z = 2 (2 r^2 - 5): negative on the inner circle, positive on
    # the outer one
    assert multiplicity_at(annulus, [1.0, 0.0]) == (2, -1)
    assert multiplicity_at(annulus, [2.0, 0.0]) == (2, 1)


def test_deep_contact_rejected_in_the_plane():
    flat = Scene.from_dict({
        "dimension": 2, "z": "x1 - x0^4", "v": ["1", "0"], "f": "x0",
        "bbox": {"min": [-1.0, -1.0], "max": [1.0, 1.0]}})
    with pytest.raises(DegenerateContact):
        multiplicity_at(flat, [0.0, 0.0])


def test_order_four_tolerated_in_solids():
    flat = Scene.from_dict({
        "dimension": 3, "z": "x2 - x0^4", "v": ["1", "0", "0"], "f": "x0",
        "bbox": {"min": [-1.0, -1.0, -1.0], "max": [1.0, 1.0, 1.0]}})
    assert multiplicity_at(flat, [0.0, 0.0, 0.0]) == (4, -1)


def test_classify_carries_f(disk):
    point = classify(disk, [0.0, 1.0])
    assert isinstance(point, BoundaryPoint)
    assert point.multiplicity == 1
    assert point.side == 1
    assert point.fval == pytest.approx(1.0)


def test_plus_stratum_rule():
    def bp(multiplicity, side):
        return BoundaryPoint((0.0, 0.0), multiplicity, side, 0.0)

    # boundary of the first stratum or its positive part
    assert in_plus_stratum(bp(1, 1), 1)
    assert not in_plus_stratum(bp(1, -1), 1)
    assert in_plus_stratum(bp(2, -1), 1)     # deeper orders close the stratum
    assert in_plus_stratum(bp(2, 1), 2)
    assert not in_plus_stratum(bp(2, -1), 2)
    assert in_plus_stratum(bp(3, -1), 2)


def test_disk_tangency_locus(disk):
    points = tangency_locus_2d(disk)
    coords = sorted(tuple(p.coords) for p in points)
    assert len(points) == 2
    assert coords[0] == pytest.approx((-1.0, 0.0), abs=1e-9)
    assert coords[1] == pytest.approx((1.0, 0.0), abs=1e-9)
    assert all(p.multiplicity == 2 and p.side == 1 for p in points)


def test_annulus_tangency_locus(annulus):
    points = sorted(tangency_locus_2d(annulus), key=lambda p: p.coords)
    coords = [tuple(p.coords) for p in points]
    sides = [p.side for p in points]
    assert np.allclose(
        coords, [(-2.0, 0.0), (-1.0, 0.0), (1.0, 0.0), (2.0, 0.0)], atol=1e-9)
    assert sides == [1, -1, -1, 1]


def test_roots_split_by_curve(annulus):
    curves = extract_boundary_curves(annulus)
    assert len(curves) == 2
    per_curve = [len(tangency_roots_on_curve(annulus, curve))
                 for curve in curves]
    assert sorted(per_curve) == [2, 2]


def test_refine_tangency_converges(disk):
    polished = refine_tangency(disk, np.array([0.99, 0.02]))
    assert polished == pytest.approx([1.0, 0.0], abs=1e-8)


def test_ball_strata(ball3d):
    samples = stratum_sample_3d(ball3d, 200, seed=0)
    kinds = {(p.multiplicity, p.side) for p in samples}
    assert len(samples) >= 200
    # the tangency locus of a round ball under a vertical field is a
    # single convex equator
    assert (2, 1) in kinds
    assert kinds <= {(1, 1), (1, -1), (2, 1)}
    for p in samples:
        assert abs(ball3d.z_at(p.coords)) <= ball3d.tol.contact * 10


def test_torus_strata(torus3d):
    samples = stratum_sample_3d(torus3d, 300, seed=0)
    kinds = {(p.multiplicity, p.side) for p in samples}
    # inner and outer equator circles carry opposite sides
    assert (2, 1) in kinds
    assert (2, -1) in kinds


def test_stratum_sampling_needs_a_solid(disk):
    from travflow import TravflowError
    with pytest.raises(TravflowError):
        stratum_sample_3d(disk, 10)
