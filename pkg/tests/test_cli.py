import io
import json
import subprocess
import sys

import pytest

from conftest import SCENARIOS
from gatecast.cli import parse_scenario, run_command
from gatecast.errors import MissingSinkDim, ParseError, ValidationError


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_command(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def scenario(name):
    return str(SCENARIOS / name)


def test_parse_star_recomputes_dims():
    sc = parse_scenario(scenario("star.json"))
    assert sc.graph.dims == (3, 2, 2)
    assert sc.phases == {0: 0.9}
    assert sc.mode == "enumerate" and sc.seed == 7


def test_parse_errors():
    with pytest.raises(ValidationError, match="not acyclic"):
        parse_scenario(scenario("cycle.json"))
    with pytest.raises(MissingSinkDim):
        parse_scenario(scenario("missing_sink.json"))
    with pytest.raises(ParseError, match=r"line 3, column \d+"):
        parse_scenario(scenario("broken.json"))


@pytest.mark.parametrize(
    "doc,field",
    [
        ({"edges": []}, "vertices"),
        ({"vertices": 2, "edges": [[0, 1]], "sink_dims": {"1": 2}, "mode": "fast"}, "mode"),
        ({"vertices": 2, "edges": [[0, 1]], "sink_dims": {"1": 2}, "seed": -1}, "seed"),
        ({"vertices": 2, "edges": [[0, 1]], "sink_dims": {"1": 2}, "psi": {"amps": [[1, 0]]}}, "psi.amps"),
        ({"vertices": 2, "edges": [[0, 1]], "sink_dims": {"1": 2}, "psi": {"preset": "ghz"}}, "psi.preset"),
        ({"vertices": 2, "edges": [[0, 1]], "sink_dims": {"1": 2}, "phases": {"0": "x"}}, "phases"),
    ],
)
def test_parse_field_errors(scenario_path, doc, field):
    with pytest.raises(ParseError, match=field):
        parse_scenario(scenario_path(doc))


def test_parse_rejects_sink_detach(scenario_path):
    doc = {"vertices": 2, "edges": [[0, 1]], "sink_dims": {"1": 2}, "detach": [1]}
    with pytest.raises(ValidationError):
        parse_scenario(scenario_path(doc))


@pytest.mark.parametrize("name", ["star.json", "diamond.json"])
def test_simulate_passes(name):
    code, out, err = run("simulate", "--scenario", scenario(name))
    assert code == 0, err
    rep = json.loads(out)
    assert rep["passed"] and rep["failed"] == []
    assert rep["command"] == "simulate"
    assert len(rep["config_hash"]) == 64
    assert "timing" in rep
    assert "checks passed" in err
    for br in rep["result"]["branches"]:
        assert br["fidelity"] >= 1 - 1e-9


def test_simulate_diamond_effective_phase():
    _, out, _ = run("simulate", "--scenario", scenario("diamond.json"), "--no-timing")
    rep = json.loads(out)
    assert rep["result"]["theta_effective"]["3"] == pytest.approx(2 * 0.3 + 0.5 + 0.9)
    assert rep["result"]["mode"] == "enumerate"
    assert len(rep["result"]["branches"]) == 12


def test_reports_are_byte_identical_without_timing():
    a = run("simulate", "--scenario", scenario("diamond.json"), "--no-timing")
    b = run("simulate", "--scenario", scenario("diamond.json"), "--no-timing")
    assert a == b
    assert "timing" not in json.loads(a[1])


def test_sample_mode_and_seed_override(scenario_path):
    doc = json.loads((SCENARIOS / "tree.json").read_text())
    doc.update(mode="sample")
    doc.pop("detach")
    p = scenario_path(doc)
    r1 = json.loads(run("simulate", "--scenario", p, "--no-timing")[1])
    r2 = json.loads(run("simulate", "--scenario", p, "--no-timing", "--seed", "3")[1])
    r3 = json.loads(run("simulate", "--scenario", p, "--no-timing", "--seed", "99")[1])
    assert r1["result"] == r2["result"] and r1["config_hash"] == r2["config_hash"]
    assert r3["config_hash"] != r1["config_hash"]
    assert len(r1["result"]["branches"]) == 1 and r1["passed"] and r3["passed"]


def test_sample_mode_without_seed_is_usage_error(scenario_path):
    doc = {"vertices": 2, "edges": [[0, 1]], "sink_dims": {"1": 2}, "phases": {"0": 1}, "mode": "sample"}
    code, out, err = run("simulate", "--scenario", scenario_path(doc))
    assert code == 2
    assert "seed" in json.loads(out)["error"]


def test_missing_phase_is_usage_error(scenario_path):
    doc = {"vertices": 2, "edges": [[0, 1]], "sink_dims": {"1": 2}}
    assert run("simulate", "--scenario", scenario_path(doc))[0] == 2


def test_prepare_detached_tree():
    code, out, err = run("prepare", "--scenario", scenario("tree.json"), "--no-timing")
    assert code == 0, err
    rep = json.loads(out)["result"]
    assert rep["detached"][0]["vertex"] == 0 and rep["detached"][0]["cancelled"]
    assert rep["edges_after"] == [[1, 3], [1, 4], [2, 5]]
    assert len(rep["branches"]) == 6
    for br in rep["branches"]:
        assert br["global_phase"] is not None


def test_prepare_star_and_detach_flag():
    assert run("prepare", "--scenario", scenario("star.json"))[0] == 0
    code, out, _ = run("prepare", "--scenario", scenario("diamond.json"), "--detach", "0", "--no-timing")
    rep = json.loads(out)
    assert rep["result"]["detached"][0]["vertex"] == 0
    assert code == (0 if rep["passed"] else 1)


def test_prepare_bad_detach_flag():
    assert run("prepare", "--scenario", scenario("star.json"), "--detach", "x")[0] == 2
    assert run("prepare", "--scenario", scenario("star.json"), "--detach", "1")[0] == 2


def test_prepare_diamond_reports_failing_branches():
    code, out, err = run("prepare", "--scenario", scenario("diamond.json"), "--no-timing")
    rep = json.loads(out)
    assert code == 1
    assert rep["failed"] == ["prepared_fidelity_vs_resource", "stabilizer_deviation"]
    assert "FAILED" in err
    fids = [br["fidelity"] for br in rep["result"]["branches"]]
    assert max(fids) >= 1 - 1e-9 > min(fids)


def test_ghz_command():
    code, out, _ = run("ghz", "--n", "3", "--no-timing")
    rep = json.loads(out)
    assert code == 0
    assert len(rep["result"]["branches"]) == 4
    assert run("ghz", "--n", "1")[0] == 2


def test_verify_command_reports_full_space_commutation():
    code, out, _ = run("verify", "--props", "--dmax", "3", "--no-timing")
    rep = json.loads(out)
    assert code == 1
    assert rep["failed"] == ["commutation_theta_full"]
    assert rep["result"]["sweeps"]["commutation_theta_reachable"]["passed"]


@pytest.mark.parametrize("name", ["cycle.json", "broken.json", "missing_sink.json"])
def test_bad_inputs_exit_2(name):
    code, out, err = run("simulate", "--scenario", scenario(name))
    assert code == 2
    assert "error" in json.loads(out) and "error" in err


def test_usage_errors_exit_2():
    assert run()[0] == 2
    assert run("verify")[0] == 2
    assert run("simulate", "--scenario", "/no/such/file.json")[0] == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "gatecast", "ghz", "--n", "2", "--no-timing"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["passed"] is True
