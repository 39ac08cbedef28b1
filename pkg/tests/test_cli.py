"""Command line front end: subcommands, exit codes, output formats."""

import json
import shutil
import subprocess

import numpy as np
import pytest

from causaldeco.causal import (UnitaryChannel, load_unitary, unitary_to_json)
from causaldeco.circuits import load_circuit, random_circuit_unitary
from causaldeco.cli import main
from causaldeco.gallery import u3
from causaldeco.relations import (Relation, c3_relation, chain2_relation,
                                  full_relation, overlapping_fans_relation,
                                  relation_to_json, swap_relation)
from causaldeco.tensorspace import TensorSpace


def write_relation(path, G):
    path.write_text(json.dumps(relation_to_json(G)))
    return str(path)


def write_unitary(path, U):
    path.write_text(unitary_to_json(U))
    return str(path)


@pytest.fixture
def c3_file(tmp_path):
    return write_relation(tmp_path / "c3.json", c3_relation())


@pytest.fixture
def u3_file(tmp_path):
    return write_unitary(tmp_path / "u3.json", u3())


# -- lattice -------------------------------------------------------------


def test_lattice_dot_c3(tmp_path, capsys, c3_file):
    assert main(["lattice", c3_file, "--format", "dot"]) == 0
    out = capsys.readouterr().out
    # 4-node diamond: two incomparable middle nodes over a bottom,
    # under a top
    assert out.startswith("digraph shape {")
    assert sum(1 for ln in out.splitlines()
               if ln.strip().startswith("n") and "label=" in ln) == 4
    for edge in ("n0 -> n1", "n0 -> n2", "n1 -> n3", "n2 -> n3"):
        assert edge in out


def test_lattice_json_fans(tmp_path, capsys):
    rel = write_relation(tmp_path / "g41.json", overlapping_fans_relation())
    assert main(["lattice", rel, "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["nodes"]) == 7


def test_lattice_empty_relation_two_node_chain(tmp_path, capsys):
    rel = write_relation(tmp_path / "empty.json",
                         Relation(("a1", "a2"), ("b1",), frozenset()))
    assert main(["lattice", rel, "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["nodes"]) == 2
    assert len(data["covers"]) == 1


# -- check ---------------------------------------------------------------


def test_check_c3_violated(capsys, c3_file):
    assert main(["check", c3_file]) == 1
    out = capsys.readouterr().out
    assert "Violated" in out
    assert "witness:" in out


def test_check_fans_satisfied(tmp_path, capsys):
    rel = write_relation(tmp_path / "g41.json", overlapping_fans_relation())
    assert main(["check", rel]) == 0
    assert "Satisfied" in capsys.readouterr().out


def test_check_full_satisfied_json(tmp_path, capsys):
    rel = write_relation(tmp_path / "full.json",
                         full_relation(["a1", "a2"], ["b1", "b2"]))
    assert main(["check", rel, "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["satisfied"] is True
    assert data["witness"] is None


def test_check_json_witness(capsys, c3_file):
    assert main(["check", c3_file, "--json"]) == 1
    data = json.loads(capsys.readouterr().out)
    assert data["satisfied"] is False
    assert data["witness"] == {"a1": "a1", "a2": "a2", "a3": "a3",
                               "b1": "b1", "b2": "b2", "b3": "b3"}


# -- analyze -------------------------------------------------------------


def test_analyze_u3_gives_c3_pairs(capsys, u3_file):
    assert main(["analyze", u3_file, "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert {tuple(p) for p in data["pairs"]} == set(c3_relation().pairs)
    assert data["borderline"] == []


def test_analyze_swap(tmp_path, capsys):
    sp = TensorSpace((("a1", 2), ("a2", 2)))
    op = TensorSpace((("b1", 2), ("b2", 2)))
    m = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            m[2 * j + i, 2 * i + j] = 1.0
    rel = write_unitary(tmp_path / "swap.json", UnitaryChannel(m, sp, op))
    assert main(["analyze", rel, "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert {tuple(p) for p in data["pairs"]} == {("a1", "b2"), ("a2", "b1")}


def test_analyze_cnot_full(tmp_path, capsys):
    # Oracle: Heisenberg conjugation by hand.  Control-Z pulls back to
    # itself but control-X pulls back to X tensor X, so the target leg
    # influences the control output and all four pairs are present.
    sp = TensorSpace((("c", 2), ("t", 2)))
    op = TensorSpace((("c'", 2), ("t'", 2)))
    m = np.zeros((4, 4))
    for c in range(2):
        for t in range(2):
            m[2 * c + (t ^ c), 2 * c + t] = 1.0
    rel = write_unitary(tmp_path / "cnot.json", UnitaryChannel(m, sp, op))
    assert main(["analyze", rel, "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert {tuple(p) for p in data["pairs"]} == {
        ("c", "c'"), ("c", "t'"), ("t", "c'"), ("t", "t'")}


# -- decompose / verify --------------------------------------------------


def test_decompose_u3_over_c3_refused(capsys, u3_file, c3_file):
    assert main(["decompose", u3_file, c3_file]) == 1
    out = capsys.readouterr().out
    assert "RefusedC3EP" in out
    assert "witness:" in out


def test_decompose_identity_over_full_trivial(tmp_path, capsys):
    rel = write_relation(tmp_path / "full.json",
                         full_relation(["a1"], ["b1"]))
    uf = write_unitary(tmp_path / "id.json",
                       UnitaryChannel(np.eye(3),
                                      TensorSpace((("a1", 3),)),
                                      TensorSpace((("b1", 3),))))
    assert main(["decompose", uf, rel, "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["status"] == "Success"
    assert data["residual"] < 1e-12


def test_decompose_writes_circuit_and_verify_accepts(tmp_path, capsys):
    G = chain2_relation()
    rel = write_relation(tmp_path / "chain2.json", G)
    _, U = random_circuit_unitary(G, seed=3)
    uf = write_unitary(tmp_path / "u.json", U)
    cf = str(tmp_path / "circ.json")
    assert main(["decompose", uf, rel, "--out", cf]) == 0
    out = capsys.readouterr().out
    assert "status: Success" in out
    assert f"circuit written to {cf}" in out
    circ = load_circuit(cf)
    assert circ.wire_dims == {(0, 1): 2}
    assert main(["verify", uf, cf, rel]) == 0
    assert "status: Success" in capsys.readouterr().out


def test_verify_rejects_wrong_unitary(tmp_path, capsys):
    G = chain2_relation()
    rel = write_relation(tmp_path / "chain2.json", G)
    _, U = random_circuit_unitary(G, seed=3)
    uf = write_unitary(tmp_path / "u.json", U)
    cf = str(tmp_path / "circ.json")
    assert main(["decompose", uf, rel, "--out", cf]) == 0
    _, other = random_circuit_unitary(G, seed=4)
    of = write_unitary(tmp_path / "other.json", other)
    capsys.readouterr()
    assert main(["verify", of, cf, rel]) == 1
    out = capsys.readouterr().out
    assert "status: Failed" in out
    assert "gates unitary: yes" in out


def test_decompose_pad_connectivity(tmp_path, capsys, u3_file, c3_file):
    cf = str(tmp_path / "circ.json")
    code = main(["decompose", u3_file, c3_file, "--pad-connectivity",
                 "--json", "--out", cf])
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert data["status"] == "Success"
    # the first forbidden restriction is the relation itself in scan
    # order, and padding adds its missing upper corner
    assert data["padded_pairs"] == [["a1", "b3"]]
    # the padded relation is strictly larger than the causal structure,
    # so the decomposition cannot be faithful
    assert data["faithful"] is False
    assert load_circuit(cf).gates_unitary()


def test_decompose_refused_causal(tmp_path, capsys):
    # swap has the crossed structure, which the straight identity
    # relation {a1->b1, a2->b2} does not contain
    sp = TensorSpace((("a1", 2), ("a2", 2)))
    op = TensorSpace((("b1", 2), ("b2", 2)))
    m = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            m[2 * j + i, 2 * i + j] = 1.0
    uf = write_unitary(tmp_path / "swap.json", UnitaryChannel(m, sp, op))
    rel = write_relation(
        tmp_path / "straight.json",
        Relation(("a1", "a2"), ("b1", "b2"),
                 frozenset({("a1", "b1"), ("a2", "b2")})))
    assert main(["decompose", uf, rel, "--json"]) == 1
    data = json.loads(capsys.readouterr().out)
    assert data["status"] == "RefusedCausal"
    assert data["extra_pair"] == ["a1", "b2"]


# -- roundtrip -----------------------------------------------------------


def test_roundtrip_chain2_passes(tmp_path, capsys):
    rel = write_relation(tmp_path / "chain2.json", chain2_relation())
    assert main(["roundtrip", rel, "--trials", "3", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["passes"] == 3
    assert all(r["residual"] < 1e-8 for r in data["rows"])


def test_roundtrip_seeds_advance(tmp_path, capsys):
    rel = write_relation(tmp_path / "swap.json", swap_relation())
    assert main(["roundtrip", rel, "--trials", "2", "--seed", "7",
                 "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert [r["seed"] for r in data["rows"]] == [7, 8]


def test_roundtrip_other_base_dim(tmp_path, capsys):
    rel = write_relation(tmp_path / "chain2.json", chain2_relation())
    assert main(["roundtrip", rel, "--trials", "1", "--dims", "3"]) == 0
    assert "1/1 pass" in capsys.readouterr().out


def test_roundtrip_c3_refused(capsys, c3_file):
    assert main(["roundtrip", c3_file, "--trials", "2"]) == 1
    assert "refused" in capsys.readouterr().out


# -- gallery -------------------------------------------------------------


def test_gallery_u3_file(tmp_path, capsys):
    out = str(tmp_path / "u3.json")
    assert main(["gallery", "u3", "--out", out]) == 0
    U = load_unitary(out)
    assert U.dim == 8
    assert np.allclose(U.matrix, u3().matrix)


def test_gallery_loose_wires_permutation(tmp_path):
    out = str(tmp_path / "lw.json")
    assert main(["gallery", "loose-wires", "--out", out]) == 0
    U = load_unitary(out)
    assert U.dim == 128
    m = U.matrix
    assert np.array_equal(np.abs(m), np.abs(m).astype(int))
    assert (np.abs(m).sum(axis=0) == 1).all()
    assert (np.abs(m).sum(axis=1) == 1).all()


def test_gallery_counterexample(tmp_path, capsys, c3_file):
    out = str(tmp_path / "cex.json")
    assert main(["gallery", f"counterexample:{c3_file}", "--out", out]) == 0
    U = load_unitary(out)
    assert set(U.in_space.labels) == {"a1", "a2", "a3"}


def test_gallery_unknown_name(capsys):
    assert main(["gallery", "nope"]) == 2
    assert "unknown gallery name" in capsys.readouterr().err


# -- exit codes and determinism ------------------------------------------


def test_missing_file_exits_2(capsys):
    assert main(["check", "no-such-file.json"]) == 2
    assert "error:" in capsys.readouterr().err


def test_bad_json_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{oops")
    assert main(["check", str(p)]) == 2
    assert "error:" in capsys.readouterr().err


def test_output_deterministic(tmp_path, capsys, u3_file):
    assert main(["analyze", u3_file, "--json"]) == 0
    first = capsys.readouterr().out
    assert main(["analyze", u3_file, "--json"]) == 0
    assert capsys.readouterr().out == first


def test_console_script_installed(c3_file):
    exe = shutil.which("causaldeco")
    assert exe is not None
    proc = subprocess.run([exe, "check", c3_file],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert "Violated" in proc.stdout
