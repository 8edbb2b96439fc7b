"""Scene loading, validation, and the Lie derivative towers."""

import math

import pytest

from travflow import Scene, SceneInvalid, ToleranceSet, TravflowError

from conftest import PLANAR, SOLID, load_scene


def planar_dict(**overrides):
    data = {
        "dimension": 2,
        "z": "x0^2 + x1^2 - 1",
        "v": ["0", "1"],
        "f": "x1",
        "bbox": {"min": [-1.5, -1.5], "max": [1.5, 1.5]},
    }
    data.update(overrides)
    return data


@pytest.mark.parametrize("name", PLANAR + SOLID)
def test_bundled_scenes_validate(name):
    scene = load_scene(name)
    report = scene.validate()
    assert report.ok, report.failures
    scene.require_valid()


def test_dict_roundtrip():
    scene = Scene.from_dict(planar_dict())
    back = Scene.from_dict(scene.to_dict())
    for point in ([0.2, -0.4], [1.1, 0.3]):
        assert back.z_at(point) == pytest.approx(scene.z_at(point))
        assert back.f_at(point) == pytest.approx(scene.f_at(point))
        assert list(back.v_at(point)) == pytest.approx(list(scene.v_at(point)))


def test_construction_errors():
    with pytest.raises(TravflowError):
        Scene.from_dict(planar_dict(v=["0"]))                  # wrong arity
    with pytest.raises(TravflowError):
        Scene.from_dict(planar_dict(z="x0 + x2"))              # bad variable
    with pytest.raises(TravflowError):
        Scene.from_dict(planar_dict(bbox={"min": [0, 0], "max": [0, 1]}))
    with pytest.raises(TravflowError):
        Scene.from_dict(planar_dict(tol={"bogus": 1.0}))


def test_validation_failure_modes():
    # grad z vanishes on the boundary when the zero set degenerates to
    # a point; an odd grid places a node right on it
    degenerate = Scene.from_dict(planar_dict(
        z="x0^2 + x1^2", bbox={"min": [-1.0, -1.0], "max": [1.0, 1.0]},
        tol={"grid": 65}))
    assert [f["check"] for f in degenerate.validate().failures] == ["regularity"]

    shrinking = Scene.from_dict(planar_dict(f="0 - x1"))
    assert [f["check"] for f in shrinking.validate().failures] == ["lyapunov"]

    stalled = Scene.from_dict(planar_dict(
        v=["x0", "x1"], f="x1", tol={"grid": 65}))
    assert "field" in [f["check"] for f in stalled.validate().failures]

    leaky = Scene.from_dict(planar_dict(z="x0^2 + x1^2 - 4"))
    checks = [f["check"] for f in leaky.validate().failures]
    assert checks == ["containment"]
    with pytest.raises(SceneInvalid):
        leaky.require_valid()


def test_grid_points():
    scene = Scene.from_dict(planar_dict())
    points, on_wall = scene.grid_points()
    resolution = scene.grid_resolution()
    assert resolution == 64
    assert points.shape == (resolution * resolution, 2)
    assert int(on_wall.sum()) == 4 * resolution - 4


def test_bbox_measurements():
    scene = Scene.from_dict(planar_dict())
    assert scene.bbox_extent == pytest.approx(3.0)
    assert scene.bbox_diameter == pytest.approx(math.sqrt(18.0))


def test_tolerance_roundtrip():
    tol = ToleranceSet.from_dict({"contact": 1e-9, "grid": 65})
    assert tol.contact == 1e-9
    assert tol.grid == 65
    assert tol.deriv_zero == ToleranceSet().deriv_zero
    assert ToleranceSet.from_dict(tol.to_dict()) == tol


def test_lie_tower_on_the_disk(disk):
    # z = x0^2 + x1^2 - 1 with v = (0, 1): the tower is 2 x1, then 2,
    # then identically zero
    assert disk.lie_at([0.3, 0.4], 1) == pytest.approx(0.8)
    assert disk.lie_at([0.3, 0.4], 2) == pytest.approx(2.0)
    assert disk.lie_at([0.3, 0.4], 3) == 0.0
    assert list(disk.grad_z_at([0.6, 0.8])) == pytest.approx([1.2, 1.6])
    assert list(disk.tower_gradient_at([0.6, 0.8], 1)) == pytest.approx([0.0, 2.0])


def test_lyapunov_values(annulus):
    assert annulus.f_at([1.3, -0.7]) == pytest.approx(-0.7)
    assert annulus.z_at([2.0, 0.0]) == pytest.approx(0.0)
    assert annulus.z_at([1.5, 0.0]) < 0.0
