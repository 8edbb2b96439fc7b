"""Shared fixtures: bundled scenes and the planar complexes reused
across the suite.

The session complexes are for read only assertions.  Quotient queries
(gamma_map, alpha_embed) register previously unseen trajectories into
the class table, so tests that exercise them build a fresh complex.
"""

import pathlib

import pytest

from travflow import Scene, build_complex_2d

SCENE_DIR = pathlib.Path(__file__).resolve().parents[1] / "scenes"
PLANAR = ["disk", "disk_horizontal", "annulus", "annulus_tilted", "two_disks"]
SOLID = ["ball3d", "solid_torus3d"]


def load_scene(name):
    return Scene.load(SCENE_DIR / f"{name}.json")


@pytest.fixture(scope="session")
def disk():
    return load_scene("disk")


@pytest.fixture(scope="session")
def annulus():
    return load_scene("annulus")


@pytest.fixture(scope="session")
def two_disks():
    return load_scene("two_disks")


@pytest.fixture(scope="session")
def ball3d():
    return load_scene("ball3d")


@pytest.fixture(scope="session")
def torus3d():
    return load_scene("solid_torus3d")


@pytest.fixture(scope="session")
def disk_cx(disk):
    return build_complex_2d(disk)


@pytest.fixture(scope="session")
def annulus_cx(annulus):
    return build_complex_2d(annulus)
