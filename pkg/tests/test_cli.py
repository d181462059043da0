import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from henon_fixpoints.cli import main
from henon_fixpoints.henon import composition_to_dict, random_composition

SINGLE = {"factors": [{"degree": 2, "coefficients": ["0", "0"], "delta": "1/2"}]}


@pytest.fixture
def comp_file(tmp_path):
    comp = random_composition(np.random.default_rng(11), 3, (2,), delta_bound=0.9)
    path = tmp_path / "comp.json"
    path.write_text(json.dumps(composition_to_dict(comp)))
    return path


@pytest.fixture
def single_file(tmp_path):
    path = tmp_path / "single.json"
    path.write_text(json.dumps(SINGLE))
    return path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_system_single_factor(single_file, capsys):
    code, out, _ = run(["system", "-i", single_file], capsys)
    report = json.loads(out)
    assert code == 0
    assert report["polynomials"] == ["y1^2 - 3/2*y1"]
    assert report["operation"] == "fixed_point_system" and "seed" in report


@pytest.mark.parametrize(
    "command, extra, key, expected",
    [
        ("groebner", [], "is_groebner", True),
        ("phi-check", [], "is_member", False),
        ("shifted-phi-check", ["--alpha", "1/3,-1"], "is_member", False),
        ("lemma52", ["--J", "1,3", "--j", "3", "--random-h"], "identity_holds", True),
    ],
)
def test_algebra_commands(command, extra, key, expected, comp_file, capsys):
    code, out, _ = run([command, "-i", comp_file, *extra], capsys)
    assert code == 0
    assert json.loads(out)[key] is expected


def test_fixpoints_command(comp_file, capsys):
    code, out, _ = run(["fixpoints", "-i", comp_file, "--rotate", "1"], capsys)
    report = json.loads(out)
    assert code == 0 and report["total_multiplicity"] == 8
    assert report["options"]["rotate"] == 1
    assert report["shared_multipliers"]["holds"] is True


def test_multiplier_scan_scan_small(capsys):
    code, out, _ = run(["prop51-scan", "--samples", "5", "--seed", "3"], capsys)
    report = json.loads(out)
    assert code == 0 and report["violations"] == 0 and len(report["samples"]) == 5


def test_multiplier_scan_scan_zero_samples(capsys):
    code, out, _ = run(["prop51-scan", "--samples", "0"], capsys)
    report = json.loads(out)
    assert code == 0 and report["samples"] == [] and report["max_group_size"] == 0


def test_multiplier_scan_scan_cubes_single_factor(single_file, capsys):
    code, out, _ = run(["prop51-scan", "-i", single_file], capsys)
    (sample,) = json.loads(out)["samples"]
    assert code == 0 and sample["cubed_single_factor"] and sample["degree"] == 8


def test_multiplier_scan_parallel_matches_serial(capsys):
    _, serial, _ = run(["prop51-scan", "--samples", "4", "--jobs", "1"], capsys)
    _, parallel, _ = run(["prop51-scan", "--samples", "4", "--jobs", "2"], capsys)
    strip = lambda s: {k: v for k, v in json.loads(s).items() if k != "options"}  # noqa: E731
    assert strip(serial) == strip(parallel)


def test_green_command(comp_file, capsys):
    code, out, _ = run(["green", "-i", comp_file, "--x", "0", "--y", "1e8"], capsys)
    report = json.loads(out)
    assert code == 0
    assert 0.99 <= report["green_plus"] / np.log(1e8) <= 1.01


def test_render_command(comp_file, tmp_path, capsys):
    prefix = tmp_path / "img"
    code, out, _ = run(["render", "-i", comp_file, "--width", "8", "--height", "6", "--out", prefix], capsys)
    assert code == 0
    assert (tmp_path / "img.pgm").read_bytes().startswith(b"P5\n8 6\n255\n")
    assert len((tmp_path / "img.csv").read_text().splitlines()) == 6


def test_render_with_slice_file(comp_file, tmp_path, capsys):
    spec = tmp_path / "slice.json"
    spec.write_text(json.dumps({"origin": [[0, 0], [0, 0]], "axis_u": [[1, 0], [0, 0]],
                                "axis_v": [[0, 0], [1, 0]], "extent": [-3, 3, -3, 3], "resolution": [5, 5]}))
    code, out, _ = run(["render", "-i", comp_file, "--slice", spec, "--out", tmp_path / "s"], capsys)
    assert code == 0 and json.loads(out)["options"]["slice"]["resolution"] == [5, 5]


# --------------------------------------------------------------------------- exit codes


def test_malformed_json_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"factors": [\n  {"degree": 2,,}\n]}')
    code, _, err = run(["system", "-i", bad], capsys)
    assert code == 2
    assert "line 2, column" in err and str(bad) in err


def test_zero_delta(tmp_path, capsys):
    path = tmp_path / "z.json"
    path.write_text(json.dumps({"factors": [{"degree": 2, "coefficients": [0, 0], "delta": 0}]}))
    code, _, err = run(["groebner", "-i", path], capsys)
    assert code == 2 and "delta must be nonzero" in err


def test_missing_file(tmp_path, capsys):
    code, _, err = run(["phi-check", "-i", tmp_path / "nope.json"], capsys)
    assert code == 2 and "nope.json" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["lemma52", "--J", "1,2", "--j", "3"],
        ["lemma52", "--h", "[1]"],
        ["shifted-phi-check", "--alpha", "1/0"],
        ["fixpoints", "--rotate", "7"],
        ["green", "--x", "abc", "--y", "0"],
        ["green", "--x", "0", "--y", "0", "--escape-radius", "0.5"],
        ["render"],
    ],
)
def test_invalid_options_exit_two(argv, comp_file, capsys):
    code, _, err = run([argv[0], "-i", comp_file, *argv[1:]], capsys)
    assert code == 2 and err.startswith("error:")


def test_argparse_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_decimal_input_is_read_exactly(tmp_path, capsys):
    # decimals are read as exact rationals, so algebraic commands still work
    path = tmp_path / "dec.json"
    path.write_text(json.dumps({"factors": [{"degree": 2, "coefficients": [0.1, 0], "delta": 0.25}]}))
    code, out, _ = run(["system", "-i", path], capsys)
    assert code == 0 and json.loads(out)["polynomials"] == ["y1^2 - 5/4*y1 + 1/10"]


valid_text = json.dumps(SINGLE)


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.integers(0, len(valid_text) - 1), st.sampled_from(["", "{", "]", ",", "\x00", '"']))
def test_fault_injection_never_crashes(tmp_path, capsys, cut, junk):
    path = tmp_path / "fuzz.json"
    path.write_text(valid_text[:cut] + junk + valid_text[cut + 1:])
    code, _, _ = run(["system", "-i", path], capsys)
    assert code in (0, 2)


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.sampled_from([0, "0", "0/5", [0, 0], ["0", "0/3"]]))
def test_fault_injection_zero_delta(tmp_path, capsys, zero):
    path = tmp_path / "zero.json"
    path.write_text(json.dumps({"factors": [{"degree": 2, "coefficients": [0, 0], "delta": zero}]}))
    code, _, err = run(["system", "-i", path], capsys)
    assert code == 2 and "delta must be nonzero" in err


# --------------------------------------------------------------------------- determinism and entry points


@pytest.mark.parametrize(
    "argv",
    [
        ["system"],
        ["groebner"],
        ["phi-check"],
        ["shifted-phi-check", "--alpha", "1/2"],
        ["lemma52", "--random-h"],
        ["fixpoints"],
        ["green", "--x", "0.5", "--y", "3+1i"],
    ],
)
def test_output_file_is_reproducible(argv, comp_file, tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run([argv[0], "-i", comp_file, *argv[1:], "-o", a, "--seed", "5"], capsys)[0] == 0
    assert run([argv[0], "-i", comp_file, *argv[1:], "-o", b, "--seed", "5"], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["seed"] == 5


def test_timing_goes_to_stderr(single_file, capsys):
    code, out, err = run(["system", "-i", single_file, "--timing"], capsys)
    assert code == 0 and "elapsed" in err and "elapsed" not in out


def test_module_entry_point(single_file):
    proc = subprocess.run(
        [sys.executable, "-m", "henon_fixpoints", "system", "-i", str(single_file)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["polynomials"] == ["y1^2 - 3/2*y1"]


@pytest.mark.parametrize("alpha", ["-1/2", "-1/2,3/4", "-0.25"])
def test_negative_fraction_arguments(alpha, comp_file, capsys):
    code, out, _ = run(["shifted-phi-check", "-i", comp_file, "--alpha", alpha], capsys)
    assert code == 0 and json.loads(out)["options"]["alpha"].startswith("-")


def test_timeout_arms_cancel_token():
    import argparse
    import time

    from henon_fixpoints.cli import _cancel_token

    assert _cancel_token(argparse.Namespace(timeout=None)) is None
    token = _cancel_token(argparse.Namespace(timeout=0.01))
    time.sleep(0.2)
    assert token.cancelled
