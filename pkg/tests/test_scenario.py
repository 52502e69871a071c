"""Scenario file parsing and validation."""

import pytest

from ccswitch.cc import AlgorithmId
from ccswitch.scenario import Mode, ScenarioError, parse_scenario, parse_scenario_text

MINIMAL = """
# a comment
name = tiny
seed = 9
duration = 5
link.a.bandwidth_bps = 1e6
link.a.prop_delay_s = 0.01
flow.f.link = a
"""


def test_minimal_parse_with_defaults():
    sc = parse_scenario_text(MINIMAL)
    assert sc.name == "tiny"
    assert sc.seed == 9
    assert sc.mode is Mode.SINGLE_THREAD
    assert sc.tick_period == 0.002
    assert sc.links["a"].bandwidth == 1e6
    assert sc.links["a"].loss_ratio == 0.0
    (flow,) = sc.flows
    assert flow.transfer_size is None
    assert flow.initial_algorithm is AlgorithmId.CUBIC
    assert sc.rule.enabled


def test_seed_is_mandatory():
    with pytest.raises(ScenarioError, match="seed"):
        parse_scenario_text("name = x\nduration = 5\n")


def test_unknown_algorithm_reports_line():
    text = MINIMAL + "flow.f.algorithm = tahoe\n"
    with pytest.raises(ScenarioError) as e:
        parse_scenario_text(text, path="bad.scn")
    assert "tahoe" in str(e.value)
    assert "bad.scn:9" in str(e.value)


def test_unknown_key_rejected_with_line():
    with pytest.raises(ScenarioError, match="unknown key"):
        parse_scenario_text(MINIMAL + "flow.f.sizo_bytes = 12\n")


def test_duplicate_key_rejected():
    with pytest.raises(ScenarioError, match="duplicate"):
        parse_scenario_text(MINIMAL + "seed = 10\n")


def test_malformed_line_rejected():
    with pytest.raises(ScenarioError, match="key = value"):
        parse_scenario_text("seed 9\n")


def test_unknown_link_reference():
    with pytest.raises(ScenarioError, match="unknown link"):
        parse_scenario_text(MINIMAL.replace("flow.f.link = a", "flow.f.link = b"))


def test_switch_outside_duration_rejected():
    text = MINIMAL + """
switch.1.time_s = 99
switch.1.flow = f
switch.1.algorithm = vegas
"""
    with pytest.raises(ScenarioError, match="outside"):
        parse_scenario_text(text)


def test_switch_schedule_sorted_by_time():
    text = MINIMAL + """
switch.b.time_s = 4
switch.b.flow = f
switch.b.algorithm = vegas
switch.a.time_s = 2
switch.a.flow = f
switch.a.algorithm = westwood
"""
    sc = parse_scenario_text(text)
    assert [s.time for s in sc.switch_schedule] == [2.0, 4.0]


def test_flow_replication_expands_ids_and_staggers():
    text = MINIMAL + """
flow.w.link = a
flow.w.count = 3
flow.w.start_s = 1.0
flow.w.start_spacing_s = 0.5
"""
    sc = parse_scenario_text(text)
    ids = [f.flow_id for f in sc.flows]
    assert ids == ["f", "w_00", "w_01", "w_02"]
    assert [f.start_time for f in sc.flows[1:]] == [1.0, 1.5, 2.0]


def test_cores_assign_flows_round_robin():
    text = MINIMAL + "cores = 2\n" + """
flow.g.link = a
flow.h.link = a
"""
    sc = parse_scenario_text(text)
    assert [f.core for f in sc.flows] == [0, 1, 0]


def test_bad_link_parameter_mentions_link():
    text = MINIMAL.replace("link.a.bandwidth_bps = 1e6",
                           "link.a.bandwidth_bps = -1")
    with pytest.raises(ScenarioError, match="link 'a'"):
        parse_scenario_text(text)


def test_expectations_parse():
    text = MINIMAL + """
expect.flow.f.algorithm_history = cubic|westwood
expect.all_flows_complete = false
expect.flow.f.fct_max_s = 40
"""
    sc = parse_scenario_text(text)
    kinds = sorted(e[0] for e in sc.expectations)
    assert kinds == ["algorithm_history", "all_flows_complete", "fct_max_s"]


def test_parse_from_file(tmp_path):
    p = tmp_path / "s.scn"
    p.write_text(MINIMAL)
    sc = parse_scenario(p)
    assert sc.name == "tiny"


def test_missing_file_is_scenario_error(tmp_path):
    with pytest.raises(ScenarioError, match="cannot read"):
        parse_scenario(tmp_path / "absent.scn")
