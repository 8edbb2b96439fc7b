"""End to end acceptance checks, one printed line per criterion.

Each criterion pins its own tolerances next to the assertions; the
printed lines write through the capture so the pass or fail verdicts
always show in the run log.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from travflow import (BoundaryData, OrderViolation, betti, boundary_seeds,
                      build_complex_2d, check_parity, extract_boundary_data,
                      fiber_statistics, filtration, gamma_multiplicities,
                      norms, omega_of, reconstruct, roundtrip,
                      sample_complex_3d, trace_many, verify_reconstruction)

from conftest import PLANAR, SOLID, SCENE_DIR, load_scene

DISK_TIME_LIMIT = 10.0        # seconds
ANNULUS_TIME_LIMIT = 30.0
MIN_TRAJECTORIES = 1000
HOLO_PROBES = 10000
MIN_ACCEPTANCE = 0.999
MIN_SOLID_SAMPLES = 10000
TOWER_REL_ERR = 1e-4          # orders up to three
GRADIENT_REL_ERR = 1e-6
TOWER_STEPS = (1e-3, 3e-3, 1e-2)


def announce(capsys, number, label, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {number}] {label}: "
              f"{'PASS' if ok else 'FAIL'}  ({detail})")
    assert ok, f"criterion {number} ({label}): {detail}"


def test_criterion_1_disk_complex(capsys):
    started = time.perf_counter()
    scene = load_scene("disk")
    cx = build_complex_2d(scene)
    stats = fiber_statistics(cx)
    elapsed = time.perf_counter() - started
    histogram = stats["fiber"]["histogram"]
    path_graph = (len(cx.zero_cells) == 2 and len(cx.one_cells) == 1
                  and set(cx.one_cells[0].ends) == set(cx.zero_cells))
    ok = (path_graph
          and betti(cx) == (1, 0)
          and tuple(scene.reference_betti) == betti(cx)
          and stats["fiber"]["max"] <= 3
          and set(histogram) <= {1, 2}      # generic fibers see two points
          and histogram.get(2, 0) > 0
          and elapsed < DISK_TIME_LIMIT)
    announce(capsys, 1, "disk quotient", ok,
             f"betti {betti(cx)}, fibers {histogram}, {elapsed:.2f}s")


def test_criterion_2_annulus_complex(capsys):
    started = time.perf_counter()
    scene = load_scene("annulus")
    cx = build_complex_2d(scene)
    stats = fiber_statistics(cx)
    elapsed = time.perf_counter() - started
    four_cycle = (len(cx.zero_cells) == 4 and len(cx.one_cells) == 4
                  and all(not cell.is_loop for cell in cx.one_cells))
    ok = (four_cycle
          and betti(cx) == (1, 1)
          and tuple(scene.reference_betti) == betti(cx)
          and stats["fiber"]["max"] == 3
          and stats["plus_fiber"]["max"] <= 2
          and elapsed < ANNULUS_TIME_LIMIT)
    announce(capsys, 2, "annulus quotient", ok,
             f"betti {betti(cx)}, max fiber {stats['fiber']['max']}, "
             f"plus max {stats['plus_fiber']['max']}, {elapsed:.2f}s")


def test_criterion_3_divisor_law(capsys):
    total = 0
    failures = []
    for name in PLANAR + ["ball3d"]:
        scene = load_scene(name)
        seeds = boundary_seeds(scene, 120, seed=11)
        for record in trace_many(scene, seeds, want_polyline=False):
            total += 1
            word = record.omega.word
            values = [c.fval for c in record.divisor.contacts]
            strictly_rising = all(b > a for a, b in zip(values, values[1:]))
            if not (check_parity(record.divisor)
                    and record.omega.norm % 2 == 0
                    and strictly_rising
                    and gamma_multiplicities(record.divisor)
                        == norms(omega_of(record.divisor).word)):
                failures.append((name, word))
    ok = total >= MIN_TRAJECTORIES and not failures
    announce(capsys, 3, "divisor parity law", ok,
             f"{total} trajectories, {len(failures)} violations")


def test_criterion_4_local_models(capsys):
    words = [(1, 1), (2,), (1, 2, 1), (3, 1), (1, 4, 1)]
    failures = []
    for word in words:
        out = roundtrip(word)
        if not (out["ok"] and tuple(out["baseline"]["omega"]) == word):
            failures.append((word, "baseline"))
            continue
        for entry in out["perturbations"]:
            if entry.get("empty"):
                continue
            if not (entry["parity_ok"] and entry["norm_drop"]):
                failures.append((word, entry))
    ok = not failures
    announce(capsys, 4, "local model roundtrips", ok,
             f"{len(words)} words, {len(failures)} failures")


def test_criterion_5_holography(capsys, tmp_path):
    details = []
    ok = True
    for name in ("disk", "annulus"):
        scene = load_scene(name)
        path = tmp_path / f"{name}.json"
        extract_boundary_data(scene, density=150, seed=0).save(path)
        # reconstruction sees nothing but the serialized file
        data = BoundaryData.load(path)
        reconstruction = reconstruct(data)
        report = verify_reconstruction(scene, data, reconstruction,
                                       probes=HOLO_PROBES, seed=5)
        ok = ok and (report["order_axioms"]
                     and report["class_count_match"]
                     and report["graph_isomorphic"]
                     and report["interior_acceptance"] >= MIN_ACCEPTANCE
                     and report["leaf_consistency"] == 1.0)
        details.append(f"{name} acceptance {report['interior_acceptance']:.4f}")

    raw = BoundaryData.load(tmp_path / "disk.json").to_dict()
    raw["relations"][0] = list(reversed(raw["relations"][0]))
    corrupted = tmp_path / "corrupted.json"
    corrupted.write_text(json.dumps(raw))
    try:
        reconstruct(BoundaryData.load(corrupted))
        ok = False
        details.append("corruption accepted")
    except OrderViolation:
        details.append("corruption rejected")
    announce(capsys, 5, "holographic reconstruction", ok, ", ".join(details))


def test_criterion_6_filtration_and_solid_fibers(capsys):
    nesting_ok = True
    for name in PLANAR + SOLID:
        scene = load_scene(name)
        if scene.dimension == 2:
            cx = build_complex_2d(scene)
        else:
            cx = sample_complex_3d(scene, count=600, seed=0)
        levels = [set(filtration(cx, order))
                  for order in range(1, scene.dimension + 1)]
        for tighter, looser in zip(levels[1:], levels):
            nesting_ok = nesting_ok and tighter <= looser

    solid_records = 0
    solid_ok = True
    for name in SOLID:
        scene = load_scene(name)
        count = 8000 if name == "solid_torus3d" else 4000
        stats = fiber_statistics(sample_complex_3d(scene, count=count, seed=0))
        solid_records += stats["records"]
        solid_ok = (solid_ok and stats["fiber"]["max"] <= 4
                    and not stats["fiber"]["violations"]
                    and not stats["plus_fiber"]["violations"])
    ok = nesting_ok and solid_ok and solid_records >= MIN_SOLID_SAMPLES
    announce(capsys, 6, "filtration and solid fibers", ok,
             f"nesting {nesting_ok}, {solid_records} solid samples, "
             f"fibers within 4: {solid_ok}")


def directional(scene, function, point, step):
    # fourth order central difference along the frozen field direction
    direction = np.asarray(scene.v_at(point), dtype=np.float64)

    def shifted(t):
        return function(point + t * direction)

    return (8.0 * (shifted(step) - shifted(-step))
            - (shifted(2.0 * step) - shifted(-2.0 * step))) / (12.0 * step)


def numeric_lie(scene, point, order):
    function = scene.z_at
    for level in range(order):
        step = TOWER_STEPS[level]
        function = (lambda inner, h:
                    lambda q: directional(scene, inner, q, h))(function, step)
    return function(np.asarray(point, dtype=np.float64))


def test_criterion_7_numerics(capsys):
    rng = np.random.default_rng(17)
    worst_tower = 0.0
    worst_gradient = 0.0
    for name in PLANAR + SOLID:
        scene = load_scene(name)
        lo = np.array(scene.bbox_lo)
        hi = np.array(scene.bbox_hi)
        points = rng.uniform(lo, hi, size=(200, scene.dimension))
        step = 1e-4 * scene.bbox_extent
        for point in points:
            for order in (1, 2, 3):
                symbolic = scene.lie_at(point, order)
                numeric = numeric_lie(scene, point, order)
                error = abs(symbolic - numeric) / max(1.0, abs(symbolic))
                worst_tower = max(worst_tower, error)
            gradient = scene.grad_z_at(point)
            for axis in range(scene.dimension):
                unit = np.zeros(scene.dimension)
                unit[axis] = 1.0

                def along(t, point=point, unit=unit):
                    return scene.z_at(point + t * unit)

                numeric = (8.0 * (along(step) - along(-step))
                           - (along(2 * step) - along(-2 * step))) / (12 * step)
                error = abs(gradient[axis] - numeric) / max(1.0, abs(gradient[axis]))
                worst_gradient = max(worst_gradient, error)
    ok = worst_tower < TOWER_REL_ERR and worst_gradient < GRADIENT_REL_ERR
    announce(capsys, 7, "derivative towers", ok,
             f"tower err {worst_tower:.2e} < {TOWER_REL_ERR:.0e}, "
             f"gradient err {worst_gradient:.2e} < {GRADIENT_REL_ERR:.0e}")


def test_criterion_8_report_determinism(capsys, tmp_path):
    outputs = []
    for threads in (1, 8):
        out = tmp_path / f"report_t{threads}.json"
        result = subprocess.run(
            [sys.executable, "-m", "travflow.cli", "report",
             str(SCENE_DIR / "disk.json"), "--threads", str(threads),
             "--out", str(out)],
            capture_output=True, text=True)
        assert result.returncode == 0, result.stderr
        outputs.append(out.read_bytes())
    ok = outputs[0] == outputs[1]
    announce(capsys, 8, "threaded report determinism", ok,
             f"{len(outputs[0])} byte reports "
             f"{'identical' if ok else 'differ'}")
