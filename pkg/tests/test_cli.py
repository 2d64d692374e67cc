import json
import subprocess
import sys

import pytest

from chorex.cli import main
from chorex.fixtures import ex2
from chorex.model import allocation_to_doc, dumps, parse_allocation, parse_instance


def chorex(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, json.loads(out.out) if out.out.strip().startswith("{") else out.out, out.err


@pytest.fixture
def ex2_file(tmp_path):
    p = tmp_path / "ex2.json"
    p.write_text(dumps(ex2().document()))
    return p


def test_gen_protocol_pipeline():
    gen = subprocess.run([sys.executable, "-m", "chorex", "gen", "example", "ex2"], capture_output=True, text=True, check=True)
    run = subprocess.run(
        [sys.executable, "-m", "chorex", "protocol", "two-agent", "-"], input=gen.stdout, capture_output=True, text=True
    )
    assert run.returncode == 0
    doc = json.loads(run.stdout)
    assert doc["allocation"]["pieces"] == [[], [{"lo": "0", "hi": "1"}]]
    assert doc["report"]["verdicts"]["proportional"]["holds"] and doc["queries"]["total"] > 0


@pytest.mark.parametrize("name", ["uniform", "sandwich"])
def test_uniform_and_sandwich_protocols(capsys, ex2_file, name):
    code, doc, _ = chorex(capsys, "protocol", name, ex2_file)
    assert code == 0 and doc["report"]["verdicts"]["swap_stable"]["holds"]


def test_check_claimed_allocation_fails(capsys, ex2_file, tmp_path):
    alloc = tmp_path / "a.json"
    alloc.write_text(dumps(allocation_to_doc(ex2().allocation)))
    code, doc, _ = chorex(capsys, "check", ex2_file, alloc)
    assert code == 1 and doc["report"]["values"] == ["5/8", "5/8"] and not doc["holds"]
    # either argument order
    code2, doc2, _ = chorex(capsys, "check", alloc, ex2_file)
    assert (code2, doc2) == (code, doc)


def test_check_swapped_allocation_passes(capsys, ex2_file, tmp_path):
    alloc = tmp_path / "a.json"
    alloc.write_text(json.dumps({"pieces": [[{"lo": "1/2", "hi": "1"}], [{"lo": "0", "hi": "1/2"}]]}))
    code, doc, _ = chorex(capsys, "check", ex2_file, alloc, "--notions", "prop", "swapef")
    assert code == 0 and doc["requested"] == ["proportional", "swap_ef"]


def test_check_overlap_is_invalid(capsys, ex2_file, tmp_path):
    alloc = tmp_path / "a.json"
    alloc.write_text(json.dumps({"pieces": [[{"lo": "0", "hi": "3/4"}], [{"lo": "1/2", "hi": "1"}]]}))
    code, doc, _ = chorex(capsys, "check", ex2_file, alloc)
    assert code == 1 and not doc["allocation"]["valid"]


def test_solve(capsys, ex2_file):
    code, doc, _ = chorex(capsys, "solve", ex2_file)
    assert code == 0 and doc["objective"] == "3/4"
    assert doc["fractions"] == [["0", "1"], ["1", "0"]]
    code, doc, _ = chorex(capsys, "solve", ex2_file, "--mode", "unconstrained")
    assert code == 0 and doc["objective"] == "3/4"


def test_solve_emit_lp(capsys, ex2_file, tmp_path):
    code, text, _ = chorex(capsys, "solve", ex2_file, "--emit-lp")
    assert code == 0 and "min 5/8 3/8 3/8 5/8" in text
    lp = tmp_path / "ex2.lp"
    code, doc, _ = chorex(capsys, "solve", ex2_file, "--emit-lp", lp)
    assert code == 0 and doc["objective"] == "3/4" and lp.read_text() == text


def test_solve_unnormalized_needs_flag(capsys, tmp_path):
    p = tmp_path / "u.json"
    p.write_text(json.dumps({"n": 1, "densities": [[[{"lo": "0", "hi": "1", "a": "2"}]]]}))
    code, doc, err = chorex(capsys, "solve", p)
    assert code == 1 and doc["error"]["error"] == "NormalizationError" and err.startswith("chorex:")
    code, doc, _ = chorex(capsys, "--quiet", "solve", p, "--normalize")
    assert code == 0 and doc["objective"] == "1"


def test_gen_thm3(capsys):
    code, doc, _ = chorex(capsys, "gen", "thm3", "--n", 4, "--eps", "1/10")
    assert code == 0 and doc["n"] == 4 and len(doc["allocation"]) == 4
    inst = parse_instance(doc)
    assert inst.n == 4
    code, doc, _ = chorex(capsys, "gen", "thm3", "--n", 4)
    assert code == 1


def test_gen_unknown_example(capsys):
    code, doc, _ = chorex(capsys, "gen", "example", "ex9")
    assert code == 1 and "error" in doc


def test_rw_replay(capsys, ex2_file, tmp_path):
    trace = tmp_path / "q.txt"
    trace.write_text("# warm-up\neval 1 1 0 1/2\ncut 1 1 0 3/8\n\neval 2 1 0 1\n")
    code, doc, _ = chorex(capsys, "rw", ex2_file, "--trace", trace)
    assert code == 0
    assert [a["answer"] for a in doc["answers"]] == ["3/8", "1/2", "1/2"]
    assert doc["ledger"]["eval"] == 2 and doc["ledger"]["cut"] == 1
    trace.write_text("look 1 1 0 1\n")
    code, doc, _ = chorex(capsys, "rw", ex2_file, "--trace", trace)
    assert code == 1 and doc["error"]["error"] == "SchemaError"


def test_search(capsys):
    code, doc, _ = chorex(capsys, "search", "--require", "swapef", "--forbid", "prop", "--n", 3, "--m", 2, "--g", 2)
    assert code == 0
    assert doc["report"]["verdicts"]["swap_ef"]["holds"] and not doc["report"]["verdicts"]["proportional"]["holds"]
    inst = parse_instance(doc["instance"])
    assert len(parse_allocation(doc["allocation"]).pieces) == inst.n == 3


def test_search_not_found(capsys):
    code, doc, _ = chorex(capsys, "search", "--require", "swapef", "--forbid", "prop", "--n", 2, "--budget", 500)
    assert code == 1 and doc["error"]["error"] == "NotFound"


def test_approx(capsys, tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"densities": [[{"family": "constant", "value": "1/2"}] * 2] * 2}))
    code, doc, _ = chorex(capsys, "approx", spec, "--eps", "1/8")
    assert code == 0 and doc["discrete_report"]["verdicts"]["proportional"]["holds"]
    assert doc["true_audit"]["proportional"]


@pytest.mark.parametrize(
    "argv",
    [[], ["bogus"], ["solve"], ["solve", "x.json", "--mode", "envy"], ["gen", "thm3", "--eps", "zero"], ["search", "--require", "fair"]],
)
def test_usage_errors_exit_2(capsys, argv):
    assert main(argv) == 2
    capsys.readouterr()


def test_output_is_deterministic(ex2_file):
    cmd = [sys.executable, "-m", "chorex", "solve", str(ex2_file)]
    a = subprocess.run(cmd, capture_output=True, text=True).stdout
    b = subprocess.run(cmd, capture_output=True, text=True).stdout
    assert a == b and a


def test_generated_documents_round_trip(capsys):
    code, doc, _ = chorex(capsys, "gen", "example", "ex2")
    assert code == 0 and parse_instance(doc) == ex2().instance
    assert parse_allocation({"pieces": doc["fixture"]["allocation"]}) == ex2().allocation
