import json
import subprocess
import sys
from fractions import Fraction

import pytest

from privcache import tradeoff
from privcache.cli import main, parse_sweep


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out.strip(), out.err


def test_run_example_transcript(capsys):
    code, out, _ = run(capsys, "run", "--scheme", "example1", "--demands", "0,1")
    data = json.loads(out)
    assert code == 0
    assert data["M"] == "1/3" and data["R"] == "4/3"
    assert data["decoded"] == [True, True]


def test_run_is_seed_deterministic(capsys):
    args = ("run", "--scheme", "c", "--n", "3", "--k", "2", "--t", "3", "--r", "2", "--seed", "11")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    _, c, _ = run(capsys, *args[:-1], "12")
    assert a == b
    assert a != c
    assert json.loads(a)["M"] == "195/116"


@pytest.mark.parametrize("scheme,extra,rate", [
    ("a", ["--n", "2", "--k", "2", "--r", "1"], "1"),
    ("b", ["--n", "3", "--k", "2", "--m", "0"], "2"),
    ("b", ["--n", "2", "--k", "4", "--m", "2/3"], "4/3"),
    ("d", ["--n", "3"], "1"),
    ("e", ["--n", "3"], "2/5"),
    ("c", ["--n", "3", "--k", "2", "--t", "4", "--r", "3/2"],
     str(tradeoff.scheme_c_point(3, 2, 4, Fraction(3, 2)).R)),
])
def test_run_each_scheme(capsys, scheme, extra, rate):
    code, out, _ = run(capsys, "run", "--scheme", scheme, *extra)
    assert code == 0
    assert json.loads(out)["R"] == rate


@pytest.mark.parametrize("argv", [
    ["run", "--scheme", "example1", "--demands", "0,2"],
    ["run", "--scheme", "example1", "--demands", "0"],
    ["run", "--scheme", "a", "--n", "2"],
    ["run", "--scheme", "d", "--n", "3", "--k", "3"],
    ["run", "--scheme", "c", "--n", "3", "--k", "2", "--t", "9"],
    ["run", "--scheme", "nope"],
    ["run", "--scheme", "b", "--n", "3", "--k", "2", "--m", "x"],
    ["curve", "--scheme", "schemeA", "--n", "2"],
    ["curve", "--scheme", "schemeC", "--n", "3", "--k", "2", "--t", "a:b"],
])
def test_bad_input_exit_code(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_budget_refusal_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "--scheme", "c", "--n", "3", "--k", "2", "--t", "3",
                       "--r", "2", "--mode", "privacy", "--budget", "1000")
    assert code == 3
    assert json.loads(out)["result"] == "refused"


@pytest.mark.parametrize("mode,code", [("decode", 0), ("privacy", 0), ("weak", 0),
                                       ("lemma3", 0), ("rates", 0), ("strong", 0)])
def test_verify_modes_on_lifted_scheme(capsys, mode, code):
    got, out, _ = run(capsys, "verify", "--scheme", "a", "--n", "2", "--k", "2", "--r", "1",
                      "--mode", mode)
    assert got == code
    data = json.loads(out)
    assert data["result"] == "pass" and data["scheme"] == "a"


def test_verify_strong_witness_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "--scheme", "b", "--n", "3", "--k", "2", "--m", "1",
                       "--mode", "strong")
    assert code == 1
    assert json.loads(out)["value"]["witness"]


def test_verify_estimate(capsys):
    code, out, _ = run(capsys, "verify", "--scheme", "d", "--n", "3", "--mode", "privacy",
                       "--samples", "2000")
    assert code == 0
    assert json.loads(out)["value"]["estimated"]


def test_curve_csv_roundtrip(capsys, tmp_path):
    target = tmp_path / "a.csv"
    code, out, _ = run(capsys, "curve", "--scheme", "schemeA", "--n", "2", "--k", "2",
                       "--out", str(target))
    assert code == 0
    parsed = tradeoff.parse_csv(out)
    expected = tradeoff.scheme_a_points(2, 2)
    assert len(parsed) == len(expected)
    for (m, r), p in zip(parsed, expected):
        assert abs(m - float(p.M)) <= 1e-9 and abs(r - float(p.R)) <= 1e-9
    assert target.read_text().strip() == out


@pytest.mark.parametrize("argv", [
    ["--scheme", "schemeB", "--n", "3", "--k", "2"],
    ["--scheme", "schemeC", "--n", "3", "--k", "2", "--t", "1:5"],
    ["--scheme", "schemeC", "--n", "3", "--k", "2", "--t", "3", "--r", "2"],
    ["--scheme", "exactRegion", "--n", "3"],
    ["--scheme", "man", "--n", "3", "--k", "4"],
    ["--scheme", "cutset", "--n", "2"],
])
def test_curve_sources(capsys, argv):
    code, out, _ = run(capsys, "curve", *argv)
    assert code == 0
    assert len(tradeoff.parse_csv(out)) >= 1


def test_curve_single_c_point(capsys):
    _, out, _ = run(capsys, "curve", "--scheme", "schemeC", "--n", "3", "--k", "2",
                    "--t", "3", "--r", "2")
    [(m, r)] = tradeoff.parse_csv(out)
    assert abs(m - 195 / 116) <= 1e-9 and abs(r - 69 / 116) <= 1e-9


def test_curve_exact_region_points_on_boundary(capsys):
    _, out, _ = run(capsys, "curve", "--scheme", "exactRegion", "--n", "2")
    region = tradeoff.exact_region(2)
    for m, r in tradeoff.parse_csv(out):
        mf = Fraction(m).limit_denominator(1000)
        assert abs(float(region.boundary(mf)) - r) <= 1e-9


def test_curve_exact_region_n2_has_the_four_corners(capsys):
    _, out, _ = run(capsys, "curve", "--scheme", "exactRegion", "--n", "2")
    parsed = tradeoff.parse_csv(out)
    for m, r in [(0, 2), (1 / 3, 4 / 3), (4 / 3, 1 / 3), (2, 0)]:
        assert any(abs(pm - m) <= 1e-9 and abs(pr - r) <= 1e-9 for pm, pr in parsed)
    assert len(tradeoff.exact_region(2).corners()) == 4


def test_empty_sweep_gives_header_only(capsys):
    code, out, _ = run(capsys, "curve", "--scheme", "schemeC", "--n", "3", "--k", "2",
                       "--t", "5:4")
    assert code == 0
    assert out == "M,R"


def test_parse_sweep():
    assert parse_sweep("1:3") == [1, 2, 3]
    assert parse_sweep("4,2") == [4, 2]
    assert parse_sweep(None) is None
    assert parse_sweep(" ") == []


def test_entry_point_subprocess():
    proc = subprocess.run([sys.executable, "-m", "privcache.cli", "curve", "--scheme", "cutset",
                           "--n", "1"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "M,R"


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert main([]) == 2
