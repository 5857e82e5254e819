import json
import subprocess
import sys

import pydot
import pytest

from weq import cli, kernels, suites
from weq.terms import parse_term


def run(capsys, *argv):
    try:
        code = cli.main(list(argv))
    except SystemExit as exc:    # argparse usage errors
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("argv, code", [
    (["check", "--pointed", "a & b <= a"], 0),
    (["check", "--general", "a <= a * a"], 0),
    (["check", "--pointed", "a <= a & b"], 1),
    (["check", "1 <= a"], 0),
    (["check", "--general", "1 <= a"], 1),
    (["check", "a <="], 64),
    (["check", "A <= a"], 64),
    (["check", "--pointed", "--general", "a <= a"], 64),
    (["frobnicate"], 64),
    (["check", "--max-slices", "0", "a <= a"], 64),
])
def test_check_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_check_text_and_verbose(capsys):
    assert run(capsys, "check", "a & b <= a")[1] == "valid\n"
    code, out, _ = run(capsys, "check", "-v", "a & b <= a")
    assert out.startswith("valid\n") and json.loads(out.split("\n", 1)[1])["mode"] == "pointed"


def test_check_json(capsys):
    code, out, _ = run(capsys, "check", "--json", "--general", "a * (b & c) <= a * (b & (a * c))")
    doc = json.loads(out)
    assert code == 0 and doc["schema_version"] == cli.SCHEMA_VERSION
    assert doc["valid"] and doc["mode"] == "general" and doc["witness"]["slices"]


def test_budget_exit(capsys):
    big = " * ".join(f"(x{i} | y{i})" for i in range(8))
    code, _, err = run(capsys, "check", "--max-slices", "16", f"{big} <= {big}")
    assert code == 2 and "budget" in err


def test_budget_from_env(capsys, monkeypatch):
    big = " * ".join(f"(x{i} | y{i})" for i in range(8))
    monkeypatch.setenv("WEQ_BUDGET", "slices=16")
    assert run(capsys, "check", f"{big} <= {big}")[0] == 2


def test_strong_alias(capsys):
    assert run(capsys, "check", "--strong", "a <= a * a")[0] == 0
    code, _, err = run(capsys, "check", "--strong", "a <= a | b")
    assert code == 64 and "--strong" in err
    assert run(capsys, "check", "--strong", "1 <= a")[0] == 64


def test_witness_always_json(capsys):
    code, out, _ = run(capsys, "witness", "a & b <= a")
    assert code == 0 and "witness" in json.loads(out)
    code, out, _ = run(capsys, "witness", "a <= b")
    assert code == 1 and json.loads(out)["valid"] is False


def test_read_stdin_and_file(capsys, monkeypatch, tmp_path):
    import io
    monkeypatch.setattr(sys, "stdin", io.StringIO("a & b <= b\n"))
    assert run(capsys, "check", "-")[0] == 0
    f = tmp_path / "q.txt"
    f.write_text("a <= a & b")
    assert run(capsys, "check", f"@{f}")[0] == 1
    assert run(capsys, "check", f"@{tmp_path / 'missing'}")[0] == 64


@pytest.mark.parametrize("argv", [
    ["check", "--json", "--general", "(a & b) * (a & b) <= a * b & b * a"],
    ["witness", "a | b <= (a | b) * 1 | a"],
    ["graph", "a * (b & c^)"],
    ["slices", "(a | b) * (c | d)"],
    ["qbf", "encode", "a 1 0 / e 2 0 / a 3 0 / 1 2 -3 0"],
])
def test_deterministic(capsys, argv):
    assert run(capsys, *argv) == run(capsys, *argv)


@pytest.mark.parametrize("term", ["a", "a * (b & c)", "(a & b)^ & c", "1 * a^", "((a & b) * c) & (d * d)"])
def test_graph_dot_parses(capsys, term):
    code, out, _ = run(capsys, "graph", term)
    assert code == 0
    [g] = pydot.graph_from_dot_data(out)
    assert len([n for n in g.get_nodes() if n.get_name() not in ("node", "edge", "graph")]) >= 1


def test_graph_json_and_join(capsys):
    code, out, _ = run(capsys, "graph", "--format", "json", "a * b")
    assert code == 0 and len(json.loads(out)["edges"]) == 1
    assert run(capsys, "graph", "a | b")[0] == 64


def test_normalize_and_slices(capsys):
    assert run(capsys, "normalize", "(a | b)^")[1] == "a^ * b^\n"
    assert run(capsys, "normalize", "1 | a")[1] == "a\n"
    assert run(capsys, "normalize", "--general", "1 | a")[1] == "1 | a\n"
    code, out, _ = run(capsys, "slices", "--json", "(a | b) & c")
    doc = json.loads(out)
    assert doc["count"] == 2 and {parse_term(s) for s in doc["slices"]} == {
        parse_term("a & c"), parse_term("b & c")}


class TestQbf:
    def test_encode_hand_example(self, capsys):
        code, out, _ = run(capsys, "qbf", "encode", "e 1 0 / a 2 0 / 1 2 0")
        assert code == 0
        lhs, rhs = out.strip().split(" <=. ")
        # K = 3: every literal colour appears as a cube on the right
        assert "v1 * v1 * v1" in rhs and "n_v2 * n_v2 * n_v2" in rhs

    def test_pi3_dispatch(self, capsys):
        code, out, _ = run(capsys, "qbf", "encode", "--json", "a 1 0 / e 2 0 / a 3 0 / 1 2 -3 0")
        assert code == 0 and json.loads(out)["prefix"] == "aea"

    def test_solve(self, capsys):
        assert run(capsys, "qbf", "solve", "a 1 0 / 1 0")[:2] == (0, "false\n")
        assert run(capsys, "qbf", "solve", "e 1 0 / 1 0")[:2] == (0, "true\n")

    @pytest.mark.parametrize("text", ["a 1 0 / 1 0", "e 1 0 / 1 2 0"])
    def test_encode_errors(self, capsys, text):
        assert run(capsys, "qbf", "encode", text)[0] == 64


class TestDerive:
    def test_text(self, capsys):
        code, out, _ = run(capsys, "derive", "(a * b) & c <= a * (b & c)")
        assert code == 0 and out.splitlines()[-1].split(": ", 1)[1].startswith("a * b & c <= a * (b & c)")

    def test_json_checked(self, capsys):
        code, out, _ = run(capsys, "derive", "--json", "a * (b & c) <= a * (b & (a * c))")
        doc = json.loads(out)
        assert code == 0 and doc["checked"] and doc["derivation"]["steps"]

    def test_invalid(self, capsys):
        assert run(capsys, "derive", "a <= a & b")[:2] == (1, "invalid\n")

    @pytest.mark.parametrize("expr", ["a & b <= (a & b) * (a & b)", "a <= a | b", "a^ <= a"])
    def test_out_of_scope(self, capsys, expr):
        assert run(capsys, "derive", expr)[0] == 64


class TestSelftest:
    def test_filter(self, capsys):
        code, out, _ = run(capsys, "selftest", "--suite", "instances", "--suite", "bridge", "--quick")
        assert code == 0
        assert [line.split()[:2] for line in out.splitlines()] == [["PASS", "instances:"], ["PASS", "bridge:"]]

    def test_json(self, capsys):
        code, out, _ = run(capsys, "selftest", "--suite", "instances", "--json")
        [s] = json.loads(out)["suites"]
        assert code == 0 and s["name"] == "instances" and s["ok"]

    def test_unknown_suite(self, capsys):
        assert run(capsys, "selftest", "--suite", "nope")[0] == 64

    def test_injected_clique_bug(self, capsys, monkeypatch):
        monkeypatch.setattr(suites, "contains_max_clique", lambda t, chosen: True)
        code, out, _ = run(capsys, "selftest", "--suite", "structure", "--quick")
        assert code != 0 and out.startswith("FAIL structure:")

    def test_injected_kernel_bug(self, capsys, monkeypatch):
        # every image "covers" a target: the decider then accepts too much
        monkeypatch.setattr(kernels, "first_uncovered", lambda images, targets: -1)
        monkeypatch.setattr(kernels, "first_uncovered_py", lambda images, targets: -1)
        code, out, _ = run(capsys, "selftest", "--suite", "instances", "--suite", "bridge", "--quick")
        assert code != 0 and "FAIL instances:" in out


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "weq.cli", "check", "a <= a & b"],
                          capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stdout == "invalid\n"
