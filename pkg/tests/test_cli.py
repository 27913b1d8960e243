from __future__ import annotations

import json

import pytest

from cpack.cli import main
from cpack.graph import format_graph, generate_family

PATH3 = "d 2 n 3 m 2\nv 0 0 0\nv 1 1 0\nv 2 2 0\ne 0 1\ne 1 2\n"
EDGE = "d 2 n 2 m 1\nv 0 0 0\nv 1 1 0\ne 0 1\n"
STAR4 = "d 2 n 5 m 4\nv 0 0 0\nv 1 1 0\nv 2 -1 0\nv 3 0 1\nv 4 0 -1\ne 0 1\ne 0 2\ne 0 3\ne 0 4\n"


@pytest.fixture
def gfile(tmp_path):
    def make(text, name="g.txt"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return make


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_query_edo_path3(gfile, tmp_path, capsys):
    oracle = tmp_path / "o.json"
    code, _, _ = run(capsys, "build-edo", gfile(PATH3), "-o", oracle)
    assert code == 0
    code, out, _ = run(capsys, "query-edo", oracle, 0, 2)
    assert code == 0 and out.strip() == "2"


def test_query_edo_bad_vertex(gfile, tmp_path, capsys):
    oracle = tmp_path / "o.json"
    run(capsys, "build-edo", gfile(PATH3), "-o", oracle)
    code, _, err = run(capsys, "query-edo", oracle, 0, 7)
    assert code == 2 and "out of range" in err


def test_selftest_passes(capsys):
    code, out, _ = run(capsys, "selftest", "--max-n", 200)
    assert code == 0
    assert "selftest PASS" in out


@pytest.mark.parametrize("kind", ["drop-pair", "duplicate-pair", "dub-low", "ab-edge"])
def test_selftest_mutations_fail(kind, capsys):
    code, out, _ = run(capsys, "selftest", "--max-n", 40, "--mutate", kind)
    assert code == 1 and "selftest FAIL" in out


def test_malformed_file(gfile, capsys):
    bad = gfile("d 2 n 2 m 1\nv 0 0 0\nv 1 x 0\ne 0 1\n")
    code, _, err = run(capsys, "separator", bad)
    assert code == 2
    assert "line 3" in err


def test_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "build-edo", tmp_path / "nope.txt", "-o", tmp_path / "o.json")
    assert code == 2 and "cannot read" in err


def test_disconnected_rejected(gfile, capsys):
    g = gfile("d 2 n 4 m 2\nv 0 0 0\nv 1 1 0\nv 2 5 5\nv 3 6 5\ne 0 1\ne 2 3\n")
    code, _, err = run(capsys, "build-edo", g, "-o", "unused.json")
    assert code == 2
    assert "2 components" in err and "0 1; 2 3" in err


@pytest.mark.parametrize(
    "text, c, expect",
    [(EDGE, 2.0, 0), (EDGE, 1.9, 1), ("d 2 n 2 m 0\nv 0 0 0\nv 1 1 0\n", 1.0, 0), (STAR4, 3.0, 1)],
)
def test_verify_packed(gfile, capsys, text, c, expect):
    code, out, _ = run(capsys, "verify-packed", gfile(text), "--c", c)
    assert code == expect
    assert out.splitlines()[0].startswith("c_hat ")
    assert ("PASS" if expect == 0 else "FAIL") in out


def test_verify_packed_edge_value(gfile, capsys):
    _, out, _ = run(capsys, "verify-packed", gfile(EDGE), "--c", 2)
    assert out.splitlines()[0] == "c_hat 2"


def test_separator_output(gfile, capsys):
    g, c = generate_family("path", 20)
    code, out, _ = run(capsys, "separator", gfile(format_graph(g)), "--c", c)
    lines = out.splitlines()
    assert code == 0
    assert lines[0].startswith("C: ") and len(lines[0].split()) == 2
    a, b = map(int, lines[1].split())
    assert a + b == 19
    assert lines[2] == "flow 1"
    assert lines[3].startswith("beta_achieved ")


def test_build_wspd_verify_and_emit(gfile, tmp_path, capsys):
    g, c = generate_family("grid", 25)
    pairs = tmp_path / "pairs.txt"
    code, out, _ = run(capsys, "build-wspd", gfile(format_graph(g)), "--c", c, "--sigma", 2, "--emit-pairs", pairs, "--verify")
    assert code == 0 and "verify PASS" in out
    lines = pairs.read_text().splitlines()
    assert int(out.split()[1]) == len(lines)
    assert all(ln.startswith("P ") and len(ln.split()) == 6 for ln in lines)


def test_build_wspd_rejects_sigma(gfile, capsys):
    code, _, _ = run(capsys, "build-wspd", gfile(PATH3), "--sigma", 1)
    assert code == 2


def test_ado_roundtrip_and_determinism(gfile, tmp_path, capsys):
    g, c = generate_family("path", 12)
    src = gfile(format_graph(g))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "build-ado", src, "--epsilon", 0.9, "--c", c, "-o", a)[0] == 0
    assert run(capsys, "build-ado", src, "--epsilon", 0.9, "--c", c, "-o", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["version"] == "ado-v1"
    code, out, _ = run(capsys, "query-ado", a, 0, 11)
    assert code == 0 and 11.0 <= float(out) <= 11.0 * 1.9


def test_edo_dumps_byte_identical(gfile, tmp_path, capsys):
    g, c = generate_family("spiral", 60, 3)
    src = gfile(format_graph(g))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "build-edo", src, "--c", c, "-o", a)
    run(capsys, "build-edo", src, "--c", c, "-o", b)
    assert a.read_bytes() == b.read_bytes()


def test_build_ado_rejects_epsilon(gfile, tmp_path, capsys):
    code, _, _ = run(capsys, "build-ado", gfile(PATH3), "--epsilon", 1.0, "-o", tmp_path / "x.json")
    assert code == 2


def test_bad_oracle_file(gfile, capsys):
    code, _, err = run(capsys, "query-edo", gfile("{}", "o.json"), 0, 1)
    assert code == 2 and "not a valid oracle" in err


def test_bench_csv(capsys):
    code, out, _ = run(capsys, "bench", "--structure", "edo", "--sizes", 16, 32, "--queries", 10)
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "n,c,sigma_or_eps,build_ms,size,query_ns"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["16", "32"]


def test_bench_wspd_has_empty_query_column(capsys):
    code, out, _ = run(capsys, "bench", "--structure", "wspd", "--sizes", 16)
    assert code == 0 and out.splitlines()[1].endswith(",")


def test_usage_error(capsys):
    assert main(["no-such-command"]) == 2
    assert main(["verify-packed", "g.txt"]) == 2
