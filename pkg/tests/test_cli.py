import json
import os

import pytest

from ssflab.cli import main

SCAN_ZERO = """
[domain]
dimension = 1
side = 6.0
spacing = 0.0625

[perturbation]
kind = "zero"
center = [0.0]

[experiment]
e_min = 0.0
e_max = 6.0
n_energies = 40
"""

SCAN_BUMP = SCAN_ZERO.replace(
    'kind = "zero"',
    'kind = "square_bump"\namplitude = 10.0\nsupport_radius = 0.5',
)

BS_CHECK = """
[domain]
dimension = 1
side = 8.0
spacing = 0.0625

[perturbation]
kind = "square_bump"
amplitude = 10.0
support_radius = 0.5
center = [0.0]

[experiment]
window_lo = 0.5
window_hi = 2.5
n_nodes = 64
"""

MC_SMALL = """
[domain]
dimension = 1
side = 8.0
spacing = 0.0625

[perturbation]
kind = "square_bump"
amplitude = 10.0
support_radius = 0.5
center = [0.0]

[mc]
t = 1.0
n_paths = 1500
n_steps = 32
master_seed = 11
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _only_run_dir(out_root):
    entries = sorted(os.listdir(out_root))
    assert len(entries) == 1
    return os.path.join(out_root, entries[0])


def _read_csv(run_dir, name):
    with open(os.path.join(run_dir, name), encoding="utf-8") as fh:
        return fh.read()


def test_selftest_exits_zero(tmp_path, capsys):
    code = main(["selftest", "--out", str(tmp_path / "runs"), "--seed", "3"])
    assert code == 0
    text = capsys.readouterr().out
    assert "FAIL" not in text
    run_dir = _only_run_dir(tmp_path / "runs")
    assert os.path.exists(os.path.join(run_dir, "selftest.csv"))


def test_scan_of_zero_potential_is_all_zeros(tmp_path):
    cfg = _write(tmp_path, "scan.toml", SCAN_ZERO)
    out = str(tmp_path / "runs")
    assert main(["ssf-scan", "--config", cfg, "--out", out]) == 0
    body = _read_csv(_only_run_dir(out), "ssf_scan.csv")
    lines = body.strip().split("\n")
    assert lines[0] == "E,xi_L,L,h"
    assert len(lines) == 41
    assert all(line.split(",")[1] == "0" for line in lines[1:])


def test_bs_check_identity_within_tolerance(tmp_path):
    cfg = _write(tmp_path, "bs.toml", BS_CHECK)
    out = str(tmp_path / "runs")
    assert main(["bs-check", "--config", cfg, "--out", out]) == 0
    body = _read_csv(_only_run_dir(out), "bs_check.csv")
    lines = body.strip().split("\n")
    assert lines[0] == "lambda,trace_in_window"
    summary_at = lines.index("lhs,rhs,abs_diff")
    assert summary_at > 1  # node rows precede the summary
    lhs, rhs, diff = (float(v) for v in lines[summary_at + 1].split(","))
    assert diff == abs(lhs - rhs)
    assert diff < 1e-6


def test_config_snapshot_reproduces_the_run(tmp_path):
    cfg = _write(tmp_path, "scan.toml", SCAN_BUMP)
    out1 = str(tmp_path / "first")
    assert main(["ssf-scan", "--config", cfg, "--out", out1]) == 0
    run1 = _only_run_dir(out1)
    with open(os.path.join(run1, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    assert manifest["subcommand"] == "ssf-scan"
    assert manifest["outputs"] == ["ssf_scan.csv"]
    assert manifest["grid_spacings"] == [0.0625]

    # the verbatim snapshot is a complete, rerunnable config
    snap = _write(tmp_path, "snapshot.toml", manifest["config_text"])
    out2 = str(tmp_path / "second")
    assert main(["ssf-scan", "--config", snap, "--out", out2]) == 0
    assert _read_csv(run1, "ssf_scan.csv") == _read_csv(_only_run_dir(out2), "ssf_scan.csv")


def test_validation_failure_writes_nothing(tmp_path):
    bad = _write(tmp_path, "bad.toml", SCAN_ZERO.replace("side = 6.0", "side = -6.0"))
    out = str(tmp_path / "runs")
    assert main(["ssf-scan", "--config", bad, "--out", out]) == 2
    assert not os.path.exists(out)


def test_unknown_experiment_key_for_subcommand_exits_two(tmp_path):
    cfg = _write(tmp_path, "scan.toml", SCAN_ZERO + "\nexponent = 3.0\n")
    out = str(tmp_path / "runs")
    assert main(["ssf-scan", "--config", cfg, "--out", out]) == 2
    assert not os.path.exists(out)


def test_missing_config_flag_exits_two(tmp_path):
    assert main(["vague", "--out", str(tmp_path / "runs")]) == 2


def test_mc_runs_are_thread_count_invariant(tmp_path):
    cfg = _write(tmp_path, "mc.toml", MC_SMALL)
    bodies = []
    for k, threads in enumerate(("1", "4")):
        out = str(tmp_path / f"runs{k}")
        code = main(
            ["laplace-mc", "--config", cfg, "--out", out, "--seed", "9", "--threads", threads]
        )
        assert code == 0
        bodies.append(_read_csv(_only_run_dir(out), "laplace_mc.csv"))
    assert bodies[0] == bodies[1]


def test_seed_flag_overrides_the_config_seed(tmp_path):
    cfg = _write(tmp_path, "mc.toml", MC_SMALL)
    out1 = str(tmp_path / "a")
    out2 = str(tmp_path / "b")
    assert main(["laplace-mc", "--config", cfg, "--out", out1]) == 0
    assert main(["laplace-mc", "--config", cfg, "--out", out2, "--seed", "999"]) == 0
    row1 = _read_csv(_only_run_dir(out1), "laplace_mc.csv").strip().split("\n")[1]
    row2 = _read_csv(_only_run_dir(out2), "laplace_mc.csv").strip().split("\n")[1]
    assert row1.split(",")[5] == "11"  # from [mc].master_seed
    assert row2.split(",")[5] == "999"
    assert row1.split(",")[1] != row2.split(",")[1]


def test_csv_floats_round_trip_exactly(tmp_path):
    cfg = _write(tmp_path, "scan.toml", SCAN_BUMP)
    out = str(tmp_path / "runs")
    assert main(["ssf-scan", "--config", cfg, "--out", out]) == 0
    lines = _read_csv(_only_run_dir(out), "ssf_scan.csv").strip().split("\n")
    for line in lines[1:]:
        e, xi, side, h = line.split(",")
        assert repr(float(e)) == e
        assert repr(float(h)) == h
        assert xi == str(int(xi))


def test_emit_svg_writes_a_plot(tmp_path):
    cfg = _write(tmp_path, "scan.toml", SCAN_BUMP)
    out = str(tmp_path / "runs")
    assert main(["ssf-scan", "--config", cfg, "--out", out, "--emit-svg"]) == 0
    run_dir = _only_run_dir(out)
    svg = open(os.path.join(run_dir, "ssf_scan.svg"), encoding="utf-8").read()
    assert svg.startswith("<svg ")
    assert "<polyline" in svg
    with open(os.path.join(run_dir, "manifest.json"), encoding="utf-8") as fh:
        assert "ssf_scan.svg" in json.load(fh)["outputs"]


def test_vague_subcommand_runs_a_short_ladder(tmp_path):
    text = """
[domain]
dimension = 1
side = 16.0
spacing = 0.125

[perturbation]
kind = "square_bump"
amplitude = 10.0
support_radius = 0.5
center = [0.0]

[experiment]
sides = [6.0, 8.0, 12.0, 16.0]
weight_lo = 0.0
weight_hi = 2.0
reference_side = 32.0

[tolerances]
final_gap_tol = 0.05
"""
    cfg = _write(tmp_path, "vague.toml", text)
    out = str(tmp_path / "runs")
    assert main(["vague", "--config", cfg, "--out", out]) == 0
    lines = _read_csv(_only_run_dir(out), "vague.csv").strip().split("\n")
    assert lines[0] == "L,functional,reference,gap"
    assert len(lines) == 5
    ref = float(lines[1].split(",")[2])
    for line in lines[1:]:
        _, v, r, g = (float(x) for x in line.split(","))
        assert r == ref
        assert g == pytest.approx(abs(v - ref), abs=1e-15)
