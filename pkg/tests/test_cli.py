"""Command line interface: exit codes, file outputs, and report
determinism."""

import json

import pytest

from travflow import cli
from travflow.jsonfmt import canonical_text, load_json

from conftest import SCENE_DIR

DISK = str(SCENE_DIR / "disk.json")
ANNULUS = str(SCENE_DIR / "annulus.json")
BALL = str(SCENE_DIR / "ball3d.json")


def write_scene(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def leaky_scene(tmp_path):
    return write_scene(tmp_path, "leaky.json", {
        "dimension": 2, "z": "x0^2 + x1^2 - 4", "v": ["0", "1"], "f": "x1",
        "bbox": {"min": [-1.5, -1.5], "max": [1.5, 1.5]}})


def test_validate_ok(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert cli.main(["validate", DISK, "--out", str(out)]) == 0
    assert "validation: ok" in capsys.readouterr().out
    data = load_json(out)
    assert data["ok"] is True
    # the written file is canonical
    assert out.read_text() == canonical_text(data)


def test_validate_failure_exits_one(tmp_path, capsys):
    assert cli.main(["validate", leaky_scene(tmp_path)]) == 1
    assert "validation: failed" in capsys.readouterr().out


def test_usage_errors_exit_two(tmp_path, capsys):
    assert cli.main([]) == 2
    assert cli.main(["trace", DISK]) == 2
    capsys.readouterr()


def test_domain_errors_exit_three(capsys):
    assert cli.main(["roundtrip", "2,2"]) == 3
    assert cli.main(["roundtrip", "banana"]) == 3
    assert cli.main(["trace", DISK, "--seed", "nope"]) == 3
    assert "error:" in capsys.readouterr().err


def test_version_exits_zero(capsys):
    assert cli.main(["--version"]) == 0
    capsys.readouterr()


def test_stratify(tmp_path, capsys):
    out = tmp_path / "strata.json"
    assert cli.main(["stratify", ANNULUS, "--out", str(out)]) == 0
    output = capsys.readouterr().out
    assert "tangency points: 4" in output
    data = load_json(out)
    assert data["counts"] == {"2+": 2, "2-": 2}


def test_trace_with_svg(tmp_path, capsys):
    out = tmp_path / "trace.json"
    svg = tmp_path / "trace.svg"
    code = cli.main(["trace", DISK, "--seed", "0.5,0", "--seed", "0,-0.2",
                     "--out", str(out), "--svg", str(svg)])
    assert code == 0
    output = capsys.readouterr().out
    assert "parity law: ok" in output
    data = load_json(out)
    assert len(data["records"]) == 2
    assert data["parity_ok"] is True
    assert all(record["omega"] == [1, 1] for record in data["records"])
    assert svg.read_text().startswith("<svg")


def test_complex_with_graph_outputs(tmp_path, capsys):
    out = tmp_path / "complex.json"
    dot = tmp_path / "complex.dot"
    svg = tmp_path / "complex.svg"
    code = cli.main(["complex", ANNULUS, "--out", str(out),
                     "--dot", str(dot), "--svg", str(svg)])
    assert code == 0
    output = capsys.readouterr().out
    assert "betti: b0=1 b1=1" in output
    assert "reference betti match: True" in output
    assert "bounds: ok" in output
    data = load_json(out)
    assert data["betti"] == [1, 1]
    assert len(data["zero_cells"]) == 4
    assert dot.read_text().startswith("graph quotient {")
    assert svg.read_text().startswith("<svg")


def test_complex_3d(tmp_path, capsys):
    out = tmp_path / "ball.json"
    code = cli.main(["complex", BALL, "--samples", "150", "--out", str(out)])
    assert code == 0
    assert "mode: sampled_3d" in capsys.readouterr().out
    assert load_json(out)["mode"] == "sampled_3d"


def test_holography_pipeline(tmp_path, capsys):
    data_file = tmp_path / "boundary.json"
    assert cli.main(["holography", "extract", DISK, "--density", "80",
                     "--out", str(data_file)]) == 0
    assert cli.main(["holography", "reconstruct", str(data_file)]) == 0
    code = cli.main(["holography", "verify", DISK, str(data_file),
                     "--probes", "300"])
    assert code == 0
    output = capsys.readouterr().out
    assert "class_count_match: True" in output
    assert "graph_isomorphic: True" in output


def test_roundtrip_command(tmp_path, capsys):
    out = tmp_path / "roundtrip.json"
    assert cli.main(["roundtrip", "1,2,1", "--out", str(out)]) == 0
    assert "roundtrip: ok" in capsys.readouterr().out
    data = load_json(out)
    assert data["ok"] is True
    assert data["baseline"]["match"] is True


def test_report_is_thread_independent(tmp_path, capsys):
    first = tmp_path / "t1.json"
    second = tmp_path / "t8.json"
    args = ["report", DISK, "--density", "60", "--probes", "400"]
    assert cli.main(args + ["--threads", "1", "--out", str(first)]) == 0
    assert cli.main(args + ["--threads", "8", "--out", str(second)]) == 0
    capsys.readouterr()
    assert first.read_bytes() == second.read_bytes()
    report = load_json(first)
    assert report["ok"] is True
    assert report["betti_match"] is True
    assert report["parity_ok"] is True
