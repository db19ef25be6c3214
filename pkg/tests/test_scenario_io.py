"""Scenario file parsing: happy paths against the shipped files, drift
guards between shipped files and library builtins, and diagnostics."""

import os

import pytest

from immunet.boolnet import CYTOKINE_NETWORK_TEXT
from immunet.netsim import run
from immunet.rewriting import IMMUNE_RULES_TEXT, immune_ruleset
from immunet.scenario_io import (
    BoolnetScenario,
    NcpsScenario,
    RewriteScenario,
    ScenarioError,
    load_scenario,
)
from immunet.scenarios import ROBOT_THEORY_TEXT, robot_scenario

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def shipped(*parts):
    return os.path.join(ROOT, *parts)


def test_shipped_robot_scenario_parses_and_matches_builtin():
    scenario = load_scenario(shipped("scenarios", "robot.ncps"))
    assert isinstance(scenario, NcpsScenario)
    assert scenario.horizon == 30 and scenario.seed == 1
    built_world, _ = robot_scenario()
    assert run(scenario.world, 30).serialize() == run(built_world, 30).serialize()


def test_shipped_immune_scenario_parses_and_matches_builtin():
    scenario = load_scenario(shipped("scenarios", "immune.rw"))
    assert isinstance(scenario, RewriteScenario)
    rules, initial = immune_ruleset()
    assert [r.label for r in scenario.rules] == [r.label for r in rules]
    assert scenario.state.render() == initial.render()
    assert scenario.find == "sig:INTERNAL-PATH-DEAD" and scenario.depth == 20


def test_shipped_files_match_embedded_texts():
    with open(shipped("scenarios", "robot.th"), encoding="utf-8") as fh:
        assert fh.read() == ROBOT_THEORY_TEXT
    with open(shipped("scenarios", "immune.rules"), encoding="utf-8") as fh:
        assert fh.read() == IMMUNE_RULES_TEXT
    with open(shipped("networks", "cytokine.bn"), encoding="utf-8") as fh:
        assert fh.read() == CYTOKINE_NETWORK_TEXT


def test_boolnet_scenario_sections(tmp_path):
    bn = tmp_path / "small.bn"
    bn.write_text("var A = A;\n")
    sc = tmp_path / "net.scn"
    sc.write_text("engine boolnet\n[network]\nfile small.bn\n[inputs]\nset A=1\n")
    scenario = load_scenario(str(sc))
    assert isinstance(scenario, BoolnetScenario)
    assert scenario.network_path == str(bn)
    assert scenario.inputs == {"A": 1}


def _broken(tmp_path, text):
    path = tmp_path / "broken.ncps"
    path.write_text(text)
    with pytest.raises(ScenarioError) as err:
        load_scenario(str(path))
    return err.value


def test_error_missing_engine(tmp_path):
    err = _broken(tmp_path, "[topology]\nrooms a\n")
    assert err.line == 1 and "engine" in str(err)


def test_error_unknown_engine(tmp_path):
    err = _broken(tmp_path, "engine quantum\n")
    assert "quantum" in str(err)


def test_error_carries_line_number(tmp_path):
    err = _broken(
        tmp_path,
        "engine ncps\n[topology]\nrooms a b\nadjacent a\n",
    )
    assert err.line == 4


def test_error_bad_schedule_verb(tmp_path):
    (tmp_path / "x.th").write_text("P(X) :- Q(X).\n")
    err = _broken(
        tmp_path,
        "engine ncps\n[topology]\nrooms a\n[theory]\nfile x.th\n[nodes]\nnode n room a\n"
        "[schedule]\nat 3 teleport n b\n",
    )
    assert err.line == 9 and "teleport" in str(err)


def test_error_missing_file_named(tmp_path):
    err = _broken(
        tmp_path,
        "engine ncps\n[topology]\nrooms a\n[nodes]\nnode n room a\n[theory]\nfile nowhere.th\n",
    )
    assert "nowhere.th" in str(err)


def test_error_missing_scenario_file():
    with pytest.raises(ScenarioError) as err:
        load_scenario("/does/not/exist.ncps")
    assert "/does/not/exist.ncps" in str(err.value)


def test_error_unknown_room_in_node(tmp_path):
    (tmp_path / "x.th").write_text("P(X) :- Q(X).\n")
    err = _broken(
        tmp_path,
        "engine ncps\n[topology]\nrooms a\n[theory]\nfile x.th\n[nodes]\nnode n room z\n",
    )
    assert err.line == 7 and "unknown room" in str(err)


def test_push_delta_policy_parses(tmp_path):
    (tmp_path / "x.th").write_text("P(X) :- Q(X).\n")
    sc = tmp_path / "delta.ncps"
    sc.write_text(
        "engine ncps\n[topology]\nrooms a\n[policy]\nvariant push_delta\nperiod 2\n"
        "[theory]\nfile x.th\n[nodes]\nnode n room a\n"
    )
    scenario = load_scenario(str(sc))
    assert scenario.world.policy.period == 2
    assert scenario.world.policy.variant.value == "push_delta"


def test_join_with_unknown_room_rejected(tmp_path):
    (tmp_path / "x.th").write_text("P(X) :- Q(X).\n")
    err = _broken(
        tmp_path,
        "engine ncps\n[topology]\nrooms a\n[theory]\nfile x.th\n[nodes]\nnode n room a\n"
        "[schedule]\nat 4 join m room nowhere\n",
    )
    assert err.line == 9 and "nowhere" in str(err)
