import io as stdio
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from carcheck import io
from carcheck.cli import run
from carcheck.core import parse_rational
from carcheck.errors import ParseError, ValidationError
from carcheck.hypergraph import canonical_form
from carcheck.procedural import MgdModel, induce_mgd

EXAMPLES = "examples"


def cli(*argv):
    buf = stdio.StringIO()
    code = run(list(argv), buf)
    return code, buf.getvalue()


def cli_json(*argv):
    code, text = cli(*argv, "--format", "json")
    return code, json.loads(text)


# -- io ------------------------------------------------------------------------


def test_bundled_names_cover_every_kind():
    names = io.bundled_names()
    assert {"monty_2_16", "figure3", "pt_triangle", "table1_2_16"} <= set(names)
    kinds = {io.load_document(n)["kind"] for n in names}
    assert kinds == set(io.KINDS)


@pytest.mark.parametrize("name", io.bundled_names())
def test_every_bundled_file_loads(name):
    assert io.load_model(name) is not None


def test_resolve_falls_back_to_bundled(tmp_path):
    assert io.resolve("somewhere/else/monty_2_16.json").name == "monty_2_16.json"
    with pytest.raises(ParseError):
        io.resolve(tmp_path / "nope.json")


def test_parse_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        io.load_model(bad)
    bad.write_text('{"kind": "banana"}')
    with pytest.raises(ParseError):
        io.load_model(bad)
    bad.write_text('{"kind": "distribution", "states": ["a"], "px": {"a": "1/2"}, "cond": []}')
    with pytest.raises(ValidationError):
        io.load_model(bad)
    bad.write_text('{"kind": "distribution", "states": ["a"], "px": {"a": "0.5"}, "cond": []}')
    with pytest.raises(ValidationError):
        io.load_model(bad)


def test_dump_round_trips(monty16):
    assert io.parse_model(io.dump_distribution(monty16)) == monty16
    h = io.load_model("figure3")
    assert canonical_form(io.parse_model(io.dump_hypergraph(h))) == canonical_form(h)
    m = io.load_model("mgd_two_partition")
    assert induce_mgd(io.parse_model(io.dump_mgd(m))) == induce_mgd(m)


# -- cli -----------------------------------------------------------------------


def test_check_car_monty(monty16):
    code, text = cli("check", "car", "monty_2_16")
    assert code == 1
    assert text.startswith("verdict: FAILS: not d-car")
    code, doc = cli_json("check", "car", f"{EXAMPLES}/monty_2_16.json")
    assert code == doc["exit_code"] == 1
    assert doc["details"]["ignorability"]["max total variation gap"] == "1/6"


def test_check_car_witness_round_trip(monty17):
    code, doc = cli_json("check", "car", "monty_2_17")
    assert code == 0
    for u, nu in doc["witness"].items():
        members = u.strip("{}").split(",")
        sub = monty17.space.subset(members)
        for x in members:
            assert monty17.p_cond(x, sub) == parse_rational(nu)


def test_check_ccar_witness_round_trip(tests22):
    code, doc = cli_json("check", "ccar", "tests_2_2")
    assert code == 0
    s = tests22.space
    parts = [[s.subset(b) for b in w["blocks"]] for w in doc["witness"]]
    lams = [parse_rational(w["lambda"]) for w in doc["witness"]]
    assert induce_mgd(MgdModel(s, parts, lams, tests22.px)) == tests22


def test_check_ccar_fails_on_triangle():
    code, doc = cli_json("check", "ccar", "monty_2_17")
    assert code == 1 and doc["details"]["explanation"]["cover count"] == 0


@pytest.mark.parametrize("prop, name, code", [("gcar", "g1_2_10", 0), ("gcar", "g2_2_10", 1),
                                              ("mar", "m_2_1", 0), ("mcar", "m_2_1", 1),
                                              ("gcar", "monty_2_16", 3)])
def test_check_g_properties(prop, name, code):
    assert cli("check", prop, name)[0] == code


def test_hypergraph_commands():
    code, doc = cli_json("hypergraph", "check", "figure3")
    assert code == 1 and doc["certificate"] == [1, 1, -1, -1, -1]
    assert cli("hypergraph", "check", "figure2b")[0] == 0
    assert cli("hypergraph", "screen", "figure2a")[0] == 1
    assert cli("hypergraph", "realize", "figure2b")[0] == 0
    assert cli("hypergraph", "enumerate", "--nodes", "3", "--compatible-only")[0] == 0
    assert cli("hypergraph", "enumerate", "--nodes", "5")[0] == 2
    assert cli("hypergraph", "check")[0] == 3


def test_update_monty():
    code, doc = cli_json("update", "monty_2_16", "--observe", "A,C")
    assert code == 1
    text = json.dumps(doc)
    assert '"1/3"' in text and '"2/3"' in text


def test_simulate_and_seed_provenance():
    code, doc = cli_json("simulate", "pt_triangle", "--n", "5000", "--seed", "3", "--tolerance", "0.05")
    assert code == 0 and doc["seed"] == 3 and doc["provenance"]["seed"] == 3


def test_model_commands():
    assert cli("induce", "rmc_two_split")[0] == 0
    assert cli("transform", "bernoulli", "rmc_two_split")[0] == 0
    assert cli("honesty", "mgd_two_partition")[0] == 0
    # the fair-coin model reveals different sets to A and C on the same outcome
    code, doc = cli_json("honesty", "table1_2_17")
    assert code == 1 and doc["verdict"] == "NOT HONEST"
    assert cli("probe", "noise_2state", "--trials", "0")[0] == 1
    assert cli("probe", "mgd_two_partition", "--mode", "ccar", "--trials", "20")[0] == 0


@pytest.mark.parametrize("name", ["monty", "tests", "figure3", "figure4"])
def test_demos(name):
    code, text = cli("demo", name)
    assert code == 0 and text.startswith("verdict: DEMO")


def test_demo_monty_rows():
    _, doc = cli_json("demo", "monty")
    assert "conditioning invalid" in json.dumps(doc) and "conditioning valid" in json.dumps(doc)


def test_reports_are_byte_identical():
    for argv in (("check", "ccar", "tests_2_2"), ("simulate", "table1_2_16", "--n", "3000"),
                 ("probe", "mgd_two_partition", "--mode", "ccar", "--trials", "10", "--format", "json")):
        assert cli(*argv) == cli(*argv)


def test_input_errors_exit_3(tmp_path):
    assert cli("check", "car", str(tmp_path / "missing.json"))[0] == 3
    assert cli("check", "bogus", "monty_2_16")[0] == 3
    assert cli("update", "monty_2_16", "--observe", "B")[0] == 3


def test_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "carcheck.cli", "check", "car", "monty_2_17"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "HOLDS" in proc.stdout


def test_rationals_are_exact_strings():
    _, doc = cli_json("induce", "pt_triangle")
    values = [v for v in json.dumps(doc).split('"') if "/" in v and v.replace("/", "").isdigit()]
    assert values and all(Fraction(v) for v in values)
