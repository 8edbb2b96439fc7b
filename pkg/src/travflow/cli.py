"""Command line interface.

Subcommands cover the pipeline end to end: validate a scene, locate
its boundary strata, trace trajectories, build the quotient complex,
run the boundary holography extract/reconstruct/verify cycle, check a
local model roundtrip, and produce a combined report.

Exit codes: 0 success, 1 a check failed, 2 usage error, 3 domain
error, 64 internal fault.  Set TH_LOG to a level name for progress
logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import _backend
from .errors import TravflowError
from .holo import (BoundaryData, extract_boundary_data, reconstruct,
                   verify_reconstruction)
from .jsonfmt import canonical_text, dump_canonical, load_json
from .localmodel import roundtrip
from .scene import Scene
from .strata import stratum_sample_3d, tangency_locus_2d
from .tracer import (boundary_seeds, check_parity, stability_margin,
                     trace_many)
from .tspace import (betti, build_complex_2d, fiber_statistics,
                     sample_complex_3d)
from .viz import complex_dot, complex_svg, scene_svg

log = logging.getLogger("travflow")


def _setup_logging():
    name = os.environ.get("TH_LOG", "").upper()
    level = getattr(logging, name, None) if name else None
    logging.basicConfig(
        level=level if isinstance(level, int) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")


def _load_scene(args):
    scene = Scene.load(args.scene)
    if getattr(args, "tol_contact", None) is not None:
        scene.tol.contact = args.tol_contact
    log.info("loaded %s (dimension %d, backend %s)",
             args.scene, scene.dimension, _backend.name)
    return scene


def _write_out(args, data):
    if getattr(args, "out", None):
        dump_canonical(data, args.out)
        print(f"wrote {args.out}")


def _point_dict(point):
    return {"coords": list(point.coords), "multiplicity": point.multiplicity,
            "side": point.side, "f": point.fval}


def cmd_validate(args):
    scene = _load_scene(args)
    report = scene.validate()
    print(f"scene: {args.scene} (dimension {scene.dimension})")
    if report.ok:
        print("validation: ok")
    else:
        print("validation: failed")
        for failure in report.failures:
            print(f"  - {failure}")
    _write_out(args, {"scene": args.scene, "dimension": scene.dimension,
                      **report.to_dict()})
    return 0 if report.ok else 1


def cmd_stratify(args):
    scene = _load_scene(args)
    scene.require_valid()
    if scene.dimension == 2:
        points = tangency_locus_2d(scene)
    else:
        points = stratum_sample_3d(scene, args.samples, seed=args.rng_seed)
    counts = {}
    for point in points:
        key = f"{point.multiplicity}{'+' if point.side > 0 else '-'}"
        counts[key] = counts.get(key, 0) + 1
    print(f"tangency points: {len(points)}")
    for key in sorted(counts):
        print(f"  stratum {key}: {counts[key]}")
    _write_out(args, {"scene": args.scene,
                      "points": [_point_dict(p) for p in points],
                      "counts": counts})
    return 0


def _parse_seeds(args, scene):
    seeds = []
    for text in args.seed or []:
        try:
            seeds.append(tuple(float(part) for part in text.split(",")))
        except ValueError:
            raise TravflowError(f"bad seed {text!r}, expected x,y[,z]")
    if args.seeds_file:
        loaded = load_json(args.seeds_file)
        seeds.extend(tuple(float(x) for x in row) for row in loaded)
    if args.seed_grid:
        seeds.extend(boundary_seeds(scene, args.seed_grid, seed=args.rng_seed))
    return seeds


def cmd_trace(args):
    scene = _load_scene(args)
    scene.require_valid()
    seeds = _parse_seeds(args, scene)
    if not seeds:
        print("no seeds: pass --seed, a seeds file, or --seed-grid",
              file=sys.stderr)
        return 2
    records = trace_many(scene, seeds, threads=args.threads,
                         want_polyline=not args.no_polyline)
    margin = stability_margin(scene, records)
    parity_ok = all(check_parity(record.divisor) for record in records)
    for record in records:
        values = [c.fval for c in record.divisor.contacts]
        word = ",".join(str(m) for m in record.omega.word)
        kind = "singleton" if record.divisor.is_singleton else "trajectory"
        print(f"{kind} omega=({word}) f=[{min(values):.6g}, {max(values):.6g}]"
              f" seed=({', '.join('%.6g' % x for x in record.seed)})")
    print(f"stability margin: {margin:.6g}")
    print(f"parity law: {'ok' if parity_ok else 'violated'}")
    _write_out(args, {
        "scene": args.scene,
        "records": [record.to_dict(include_polyline=not args.no_polyline)
                    for record in records],
        "stability_margin": margin,
        "parity_ok": parity_ok,
    })
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as handle:
            handle.write(scene_svg(scene, records))
        print(f"wrote {args.svg}")
    return 0 if parity_ok else 1


def _complex_for(scene, args):
    if scene.dimension == 2:
        return build_complex_2d(scene, threads=args.threads)
    return sample_complex_3d(scene, count=args.samples, seed=args.rng_seed,
                             threads=args.threads)


def _bounds_ok(stats):
    if stats["fiber"]["violations"] or stats["plus_fiber"]["violations"]:
        return False
    return all(not layer["violations"] for layer in stats["strata"])


def cmd_complex(args):
    scene = _load_scene(args)
    cx = _complex_for(scene, args)
    stats = fiber_statistics(cx)
    print(f"mode: {cx.mode}")
    print(f"classes: {len(cx.classes)}  zero-cells: {len(cx.zero_cells)}"
          f"  one-cells: {len(cx.one_cells)}")
    if cx.mode == "exact_2d":
        b0, b1 = betti(cx)
        print(f"betti: b0={b0} b1={b1}")
        if scene.reference_betti is not None:
            match = list(scene.reference_betti) == [b0, b1]
            print(f"reference betti match: {match}")
    print(f"fiber bound {stats['fiber']['bound']}: max {stats['fiber']['max']}")
    print(f"positive fiber bound {stats['plus_fiber']['bound']}: "
          f"max {stats['plus_fiber']['max']}")
    for layer in stats["strata"]:
        print(f"stratum {layer['order']} bound {layer['bound']}: "
              f"max {layer['max']}")
    bounds_ok = _bounds_ok(stats)
    print(f"bounds: {'ok' if bounds_ok else 'violated'}")
    data = cx.to_dict()
    data["fiber_statistics"] = stats
    _write_out(args, data)
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as handle:
            handle.write(complex_dot(cx))
        print(f"wrote {args.dot}")
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as handle:
            handle.write(complex_svg(cx))
        print(f"wrote {args.svg}")
    return 0 if bounds_ok else 1


def cmd_holo_extract(args):
    scene = _load_scene(args)
    data = extract_boundary_data(scene, density=args.density,
                                 plus_only=args.plus_only,
                                 seed=args.rng_seed, threads=args.threads)
    print(f"samples: {len(data.samples)}  relations: {len(data.relations)}"
          f"  mode: {data.mode}")
    if args.out:
        data.save(args.out)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(canonical_text(data.to_dict()))
    return 0


def cmd_holo_reconstruct(args):
    data = BoundaryData.load(args.data)
    result = reconstruct(data)
    sizes = {}
    for cls in result.classes:
        sizes[len(cls.sample_ids)] = sizes.get(len(cls.sample_ids), 0) + 1
    print(f"classes: {len(result.classes)}  mode: {result.mode}")
    print("class sizes: " + ", ".join(f"{k}: {sizes[k]}" for k in sorted(sizes)))
    if result.graph is not None:
        print(f"graph: {len(result.graph.vertices)} vertices, "
              f"{len(result.graph.edges)} edges")
    _write_out(args, result.to_dict())
    return 0


def cmd_holo_verify(args):
    scene = _load_scene(args)
    data = BoundaryData.load(args.data)
    result = reconstruct(data)
    report = verify_reconstruction(scene, data, result, probes=args.probes,
                                   seed=args.rng_seed, threads=args.threads)
    for key in ("order_axioms", "interior_acceptance", "leaf_consistency",
                "class_count_match", "graph_isomorphic"):
        print(f"{key}: {report[key]}")
    _write_out(args, report)
    ok = (report["order_axioms"] and report["class_count_match"]
          and report["interior_acceptance"] >= 0.999
          and report["graph_isomorphic"] is not False)
    return 0 if ok else 1


def cmd_roundtrip(args):
    try:
        word = tuple(int(part) for part in args.word.split(","))
    except ValueError:
        raise TravflowError(f"bad multiplicity word {args.word!r}")
    report = roundtrip(word, epsilon=args.epsilon)
    print(f"word ({args.word}) dimension {report['dimension']}")
    print(f"baseline omega: ({','.join(str(m) for m in report['baseline']['omega'])})"
          f" match={report['baseline']['match']}")
    for entry in report["perturbations"]:
        tag = f"axis {entry['axis']} sign {entry['sign']:+d}"
        if entry.get("empty"):
            print(f"  {tag}: empty")
        else:
            word_text = ",".join(str(m) for m in entry["omega"])
            print(f"  {tag}: omega=({word_text}) parity={entry['parity_ok']}"
                  f" norm_drop={entry['norm_drop']}")
    print(f"stability margin: {report['stability_margin']:.6g}")
    print(f"roundtrip: {'ok' if report['ok'] else 'failed'}")
    _write_out(args, report)
    return 0 if report["ok"] else 1


def cmd_report(args):
    scene = _load_scene(args)
    started = time.perf_counter()
    report = {"scene": args.scene, "dimension": scene.dimension,
              "backend": _backend.name}
    checks = []

    validation = scene.validate()
    report["validation"] = validation.to_dict()
    checks.append(validation.ok)
    print(f"validation: {'ok' if validation.ok else 'failed'}")
    if not validation.ok:
        _write_out(args, report)
        return 1

    if scene.dimension == 2:
        points = tangency_locus_2d(scene)
    else:
        points = stratum_sample_3d(scene, args.samples, seed=args.rng_seed)
    report["tangency_points"] = [_point_dict(p) for p in points]
    print(f"tangency points: {len(points)}")

    cx = _complex_for(scene, args)
    stats = fiber_statistics(cx)
    report["complex"] = cx.to_dict()
    report["fiber_statistics"] = stats
    checks.append(_bounds_ok(stats))
    print(f"classes: {len(cx.classes)}  bounds: "
          f"{'ok' if _bounds_ok(stats) else 'violated'}")
    if cx.mode == "exact_2d" and scene.reference_betti is not None:
        b0, b1 = betti(cx)
        match = list(scene.reference_betti) == [b0, b1]
        report["betti"] = [b0, b1]
        report["betti_match"] = match
        checks.append(match)
        print(f"betti: b0={b0} b1={b1} (reference match: {match})")

    seeds = boundary_seeds(scene, 24 if scene.dimension == 2 else 200,
                           seed=args.rng_seed)
    records = trace_many(scene, seeds, threads=args.threads,
                         want_polyline=False)
    parity_ok = all(check_parity(record.divisor) for record in records)
    report["traced"] = len(records)
    report["parity_ok"] = parity_ok
    report["stability_margin"] = stability_margin(scene, records)
    checks.append(parity_ok)
    print(f"traced {len(records)} boundary trajectories, parity "
          f"{'ok' if parity_ok else 'violated'}")

    data = extract_boundary_data(scene, density=args.density,
                                 seed=args.rng_seed, threads=args.threads)
    result = reconstruct(data)
    verify = verify_reconstruction(scene, data, result, probes=args.probes,
                                   seed=args.rng_seed, threads=args.threads)
    report["holography"] = verify
    holo_ok = (verify["order_axioms"] and verify["class_count_match"]
               and verify["interior_acceptance"] >= 0.999
               and verify["graph_isomorphic"] is not False)
    checks.append(holo_ok)
    print(f"holography: acceptance {verify['interior_acceptance']:.4f}, "
          f"classes {verify['reconstructed_classes']}, "
          f"{'ok' if holo_ok else 'failed'}")

    # timing stays out of the report body so repeated runs are
    # byte-identical
    elapsed = time.perf_counter() - started
    report["ok"] = all(checks)
    print(f"report: {'ok' if report['ok'] else 'failed'} ({elapsed:.1f}s)")
    _write_out(args, report)
    return 0 if report["ok"] else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="travflow",
        description="Traversing flows on compact domains: boundary strata, "
                    "trajectory divisors, quotient complexes, and boundary "
                    "holography.")
    parser.add_argument("--version", action="version", version="%(prog)s 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, scene=True):
        if scene:
            p.add_argument("scene", help="scene JSON file")
            p.add_argument("--tol-contact", type=float, default=None,
                           help="override the contact tolerance")
        p.add_argument("--out", help="write a canonical JSON report")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for batch tracing")
        p.add_argument("--rng-seed", type=int, default=0,
                       help="seed for sampled constructions")

    p = sub.add_parser("validate", help="check scene regularity and traversality")
    add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stratify", help="locate the boundary tangency strata")
    add_common(p)
    p.add_argument("--samples", type=int, default=64,
                   help="stratum samples in dimension 3")
    p.set_defaults(func=cmd_stratify)

    p = sub.add_parser("trace", help="trace trajectories from seeds")
    add_common(p)
    p.add_argument("seeds_file", nargs="?", default=None,
                   help="JSON file with a list of seed points")
    p.add_argument("--seed", action="append",
                   help="seed point as comma separated coordinates")
    p.add_argument("--seed-grid", type=int, default=0,
                   help="seed this many boundary points per curve")
    p.add_argument("--no-polyline", action="store_true",
                   help="skip polylines in the output")
    p.add_argument("--svg", help="draw the scene and trajectories here")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("complex", help="build the quotient trajectory complex")
    add_common(p)
    p.add_argument("--samples", type=int, default=2000,
                   help="boundary samples in dimension 3")
    p.add_argument("--dot", help="write the quotient graph as DOT")
    p.add_argument("--svg", help="write the quotient graph as SVG")
    p.set_defaults(func=cmd_complex)

    holo = sub.add_parser("holography",
                          help="boundary data extraction and reconstruction")
    holo_sub = holo.add_subparsers(dest="holo_command", required=True)

    p = holo_sub.add_parser("extract", help="extract boundary data from a scene")
    add_common(p)
    p.add_argument("--density", type=int, default=200,
                   help="samples per boundary curve, or total in dimension 3")
    p.add_argument("--plus-only", action="store_true",
                   help="restrict to the closed positive first stratum")
    p.set_defaults(func=cmd_holo_extract)

    p = holo_sub.add_parser("reconstruct",
                            help="rebuild classes from boundary data alone")
    p.add_argument("data", help="boundary data JSON file")
    p.add_argument("--out", help="write a canonical JSON report")
    p.set_defaults(func=cmd_holo_reconstruct)

    p = holo_sub.add_parser("verify",
                            help="verify a reconstruction against its scene")
    add_common(p)
    p.add_argument("data", help="boundary data JSON file")
    p.add_argument("--probes", type=int, default=10000,
                   help="random interior probe count")
    p.set_defaults(func=cmd_holo_verify)

    p = sub.add_parser("roundtrip",
                       help="perturbation roundtrip of a local polynomial model")
    p.add_argument("word", help="multiplicity word, for example 1,2,1")
    p.add_argument("--epsilon", type=float, default=1e-2,
                   help="coefficient perturbation size")
    p.add_argument("--out", help="write a canonical JSON report")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("report", help="full pipeline report for a scene")
    add_common(p)
    p.add_argument("--samples", type=int, default=1000,
                   help="boundary samples in dimension 3")
    p.add_argument("--density", type=int, default=120,
                   help="holography extraction density")
    p.add_argument("--probes", type=int, default=2000,
                   help="holography verification probes")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args) or 0
    except TravflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # internal fault guard
        log.exception("internal failure")
        print(f"internal error: {exc}", file=sys.stderr)
        return 64


if __name__ == "__main__":
    sys.exit(main())
