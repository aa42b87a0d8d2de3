"""Command-line behavior: exit codes, golden bytes, JSON round trips.

Everything runs in-process through main(argv) so the return value is
the exit code and capsys carries stdout.  One subprocess test checks
the installed console script end to end.  Frozen outputs below were
computed once from the library and pinned; the CLI must keep emitting
the same bytes for the same inputs and seeds.
"""

import json
import shutil
import subprocess

import pytest

from dendro.category import compose, map_from_json
from dendro.cli import main
from dendro.presheaf import (
    Truncation,
    comm_operad,
    dspace_from_json,
    dspace_to_json,
    nerve_operad,
    sset_from_json,
    terminal_dspace,
)
from dendro.trees import (
    REDUCED_OPEN,
    SIZE,
    corolla,
    eta,
    graft,
    tree_from_json,
    tree_to_json,
)

WEIGHT5_CODES = [
    "or:(((**)*)*)",
    "or:((**)(**))",
    "or:((**)*)",
    "or:(**)",
    "or:(***)",
    "or:*",
]


@pytest.fixture()
def files(tmp_path):
    paths = {}
    for name, t in (
        ("eta", eta()),
        ("c2", corolla(2)),
        ("c3", corolla(3)),
        ("onecut", graft(corolla(3), 1, corolla(2))),
    ):
        p = tmp_path / f"{name}.json"
        p.write_text(tree_to_json(t))
        paths[name] = str(p)
    win = Truncation.window(REDUCED_OPEN, SIZE, 6, 2)
    p = tmp_path / "comm.json"
    p.write_text(dspace_to_json(nerve_operad(comm_operad(), win, strunc=1)))
    paths["comm"] = str(p)
    p = tmp_path / "term.json"
    p.write_text(dspace_to_json(terminal_dspace(Truncation.window(REDUCED_OPEN, SIZE, 3))))
    paths["term"] = str(p)
    return paths


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


# ------------------------------------------------------------ emitters


def test_trees_frozen_weight_window(capsys):
    code, out = run(capsys, "trees", "--variant", "or", "--degree", "weight", "--bound", "5")
    assert code == 0
    assert json.loads(out) == WEIGHT5_CODES


def test_trees_bytes_stable(capsys):
    argv = ("trees", "--variant", "or", "--degree", "weight", "--bound", "5")
    _, first = run(capsys, *argv)
    _, second = run(capsys, *argv)
    assert first == second


def test_hom_three_maps_roundtrip(capsys, files):
    code, out = run(capsys, "hom", "--src", files["eta"], "--dst", files["c2"])
    assert code == 0
    docs = json.loads(out)
    assert len(docs) == 3
    images = []
    for doc in docs:
        f = map_from_json(json.dumps(doc))
        assert f.source.edges == {0}
        assert len(f.target.edges) == 3
        images.append(f.edge_map[0])
    assert images == [0, 1, 2]


def test_dot_is_graphviz_text(capsys, files):
    code, out = run(capsys, "dot", "--tree", files["c2"])
    assert code == 0
    assert out.startswith("digraph tree {")
    assert "v0" in out and out.rstrip().endswith("}")


def test_out_flag_matches_stdout(capsys, tmp_path, files):
    _, streamed = run(capsys, "dot", "--tree", files["c2"])
    target = tmp_path / "c2.dot"
    code, out = run(capsys, "dot", "--tree", files["c2"], "--out", str(target))
    assert code == 0
    assert out == ""
    assert target.read_text() == streamed


# ------------------------------------------------------------- checkers


def test_reedy_verify_passes(capsys):
    code, out = run(capsys, "reedy-verify", "--variant", "or", "--degree", "weight", "--bound", "5")
    assert code == 0
    report = json.loads(out)
    assert report["passed"] is True
    assert report["objects"] == 6
    assert report["counterexample"] is None


def test_reedy_verify_degree_mismatch(capsys):
    code, _ = run(capsys, "reedy-verify", "--system", "outer", "--degree", "size", "--bound", "4")
    assert code == 2


def test_lean_check_green_and_red(capsys, files):
    code, out = run(capsys, "lean-check", "--in", files["comm"], "--n", "1")
    assert code == 0
    assert json.loads(out)["lean"] is True
    code, out = run(capsys, "lean-check", "--seed", "5", "--bound", "3", "--n", "2")
    assert code == 1
    assert json.loads(out)["lean"] is False


def test_normal_check_random_vs_terminal(capsys, files):
    code, out = run(capsys, "normal-check", "--seed", "5", "--bound", "3", "--joint", "2")
    assert code == 0
    assert json.loads(out)["normal"] is True
    code, out = run(capsys, "normal-check", "--in", files["term"])
    assert code == 1
    assert json.loads(out)["normal"] is False


def test_segal_check_nerve(capsys, files):
    code, out = run(capsys, "segal-check", "--in", files["comm"], "--bound", "6")
    assert code == 0
    report = json.loads(out)
    assert report["passed"] is True
    assert report["counterexample"] is None


# ------------------------------------------------- presheaf computations


def test_eval_seeded_deterministic(capsys, files):
    argv = ("eval", "--seed", "5", "--bound", "4", "--tree", files["c2"])
    code, first = run(capsys, *argv)
    assert code == 0
    doc = json.loads(first)
    assert doc["sizes"] == [1, 1, 1]
    sset_from_json(json.dumps(doc["space"]))
    _, second = run(capsys, *argv)
    assert first == second


def test_matching_anchor_sizes(capsys, files):
    # the corolla matching object is the eta-value cubed; seed 5 has a
    # two-point eta value, so 8 families per level
    code, out = run(capsys, "matching", "--seed", "5", "--bound", "4", "--tree", files["c2"])
    assert code == 0
    assert json.loads(out)["sizes"] == [8, 8, 8]
    code, out = run(capsys, "latching", "--seed", "5", "--bound", "4", "--tree", files["c2"])
    assert code == 0
    assert json.loads(out)["sizes"] == [0, 0, 0]


def test_sk_cosk_chain_through_files(capsys, tmp_path, files):
    code, out = run(capsys, "sk", "--seed", "5", "--bound", "4", "--n", "2")
    assert code == 0
    dspace_from_json(out)

    code, out = run(capsys, "cosk", "--in", files["comm"], "--n", "1")
    assert code == 0
    dspace_from_json(out)
    refill = tmp_path / "refill.json"
    refill.write_text(out)
    code, out = run(capsys, "lean-check", "--in", str(refill), "--n", "1")
    assert code == 0


def test_max_subtrees_corolla_shatters(capsys, files):
    code, out = run(capsys, "max-subtrees", "--tree", files["c3"], "--n", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["n"] == 2
    assert [p["edges"] for p in doc["pieces"]] == [[0], [1], [2], [3]]
    for piece in doc["pieces"]:
        t = tree_from_json(json.dumps(piece["tree"]))
        assert not t.vertices


def test_max_subtrees_partition(capsys, files):
    code, out = run(capsys, "max-subtrees", "--tree", files["onecut"], "--n", "2")
    assert code == 0
    doc = json.loads(out)
    seen = sorted(e for p in doc["pieces"] for e in p["edges"])
    total = json.loads(open(files["onecut"]).read())["edges"]
    assert seen == total


def test_kan_extend_both_emits_witness(capsys, files):
    code, out = run(
        capsys, "kan-extend", "--functor", "w", "--n", "2", "--tree", files["c2"],
        "--seed", "7", "--bound", "6", "--mode", "both",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["bijective"] is True
    assert doc["closed_form"]["sizes"] == [10, 10, 10]
    assert doc["brute"]["sizes"] == [10, 10, 10]
    for row in doc["witness"]:
        assert sorted(row) == list(range(10))


def test_kan_extend_single_modes_agree(capsys, files):
    sizes = {}
    for mode in ("closed_form", "brute"):
        code, out = run(
            capsys, "kan-extend", "--functor", "v", "--n", "3", "--tree", files["c3"],
            "--seed", "2", "--bound", "9", "--mode", mode,
        )
        assert code == 0
        sizes[mode] = json.loads(out)["sizes"]
    assert sizes["closed_form"] == sizes["brute"]


def test_extend_corolla_roundtrip(capsys):
    code, out = run(capsys, "extend-corolla", "--seed", "3", "--bound", "6",
                    "--max-arity", "2", "--n", "3")
    assert code == 0
    ext = dspace_from_json(out)
    assert "or:(***)" in ext.trunc.objects


def test_factor_outer_recomposes(capsys, files):
    code, out = run(capsys, "factor", "--src", files["eta"], "--dst", files["c2"],
                    "--map", "0>1", "--system", "outer")
    assert code == 0
    doc = json.loads(out)
    inner = map_from_json(json.dumps(doc["inner"]))
    outer = map_from_json(json.dumps(doc["outer"]))
    assert compose(outer, inner).edge_map == {0: 1}


def test_factor_standard_rejects_reduced(capsys, files):
    # no degeneracies exist without unary vertices, so the standard
    # split is undefined over this variant
    code, _ = run(capsys, "factor", "--src", files["eta"], "--dst", files["c2"],
                  "--map", "0>1", "--system", "standard")
    assert code == 2


def test_normalize_e_schedule_frozen(capsys):
    code, out = run(capsys, "normalize-E", "--bound", "2", "--stages", "2")
    assert code == 0
    doc = json.loads(out)
    stages = [
        (row["stage"], piece["tree"], piece["m"], piece["attachments"])
        for row in doc["schedule"]
        for piece in row["pieces"]
    ]
    assert stages == [(0, "or:*", 0, 1), (1, "or:*", 1, 1), (2, "or:*", 2, 8)]
    assert doc["sizes"] == [
        {"or:*": [1, 1, 1, 1]},
        {"or:*": [1, 2, 3, 4]},
        {"or:*": [1, 2, 11, 28]},
    ]


def test_tower_stabilizes_and_reparses(capsys, files):
    code, out = run(capsys, "tower", "--in", files["comm"], "--depth", "3")
    assert code == 0
    doc = json.loads(out)
    assert doc["depth"] == 3
    assert doc["stabilization"] == 0
    for stage in doc["stages"]:
        dspace_from_json(json.dumps(stage))


# ------------------------------------------------------------ exit codes


def test_usage_errors_exit_2(capsys, files):
    assert run(capsys, "trees", "--bund", "2")[0] == 2
    assert run(capsys, "trees")[0] == 2
    assert run(capsys, "hom", "--src", "missing.json", "--dst", files["c2"])[0] == 2
    assert run(capsys, "eval", "--tree", files["c2"])[0] == 2


def test_budget_exhaustion_exits_3(capsys, files):
    code, _ = run(capsys, "cosk", "--in", files["comm"], "--n", "1", "--budget", "2")
    assert code == 3


def test_console_script_installed():
    exe = shutil.which("dendro")
    assert exe, "console script missing from PATH"
    proc = subprocess.run(
        [exe, "trees", "--variant", "or", "--degree", "weight", "--bound", "5"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout) == WEIGHT5_CODES
