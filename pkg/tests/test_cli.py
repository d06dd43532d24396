import json
import subprocess
import sys

import pytest

from valence.cli import main
from valence.scenario_io import (builtin_firefight, parse_scenario,
                                 serialize_scenario)
from valence.solver import solution_from_document
from valence.assessment import trajectory_from_jsonl

from test_solver import two_state_chain


@pytest.fixture()
def scenario_file(tmp_path):
    path = tmp_path / "firefight.scenario.json"
    path.write_text(serialize_scenario(builtin_firefight()))
    return path


@pytest.fixture()
def front_file(tmp_path, scenario_file):
    path = tmp_path / "out.front.json"
    assert main(["solve", str(scenario_file), "--gamma", "1",
                 "--horizon", "50", "-o", str(path)]) == 0
    return path


@pytest.fixture()
def script_file(tmp_path):
    path = tmp_path / "script.txt"
    path.write_text("PrepareEquipment\nUpdateKnowledge\n")
    return path


def play(tmp_path, scenario_file, script_file, *extra):
    out = tmp_path / "t.traj.jsonl"
    code = main(["play", str(scenario_file), "--script", str(script_file),
                 "--seed", "7", "-o", str(out), *extra])
    return code, out


class TestValidate:
    def test_ok_summary_line(self, scenario_file, capsys):
        assert main(["validate", str(scenario_file)]) == 0
        assert capsys.readouterr().out.strip() == \
            "OK: 5 variables, 400 states, 5 actions, 2 values"

    def test_json_format(self, scenario_file, capsys):
        assert main(["validate", str(scenario_file), "--format",
                     "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc == {"ok": True, "name": "firefight", "variables": 5,
                       "states": 400, "actions": 5, "values": 2,
                       "warnings": 0}

    def test_malformed_file_exits_1_with_diagnostics(self, tmp_path, capsys):
        bad = tmp_path / "bad.scenario.json"
        bad.write_text('{"format_version": 1')
        assert main(["validate", str(bad)]) == 1
        assert "error" in capsys.readouterr().err

    def test_domain_error_exits_1(self, tmp_path, capsys):
        doc = json.loads(serialize_scenario(builtin_firefight()))
        del doc["initial_state"]["fire"]
        bad = tmp_path / "bad.scenario.json"
        bad.write_text(json.dumps(doc))
        assert main(["validate", str(bad)]) == 1
        assert "missing-variable" in capsys.readouterr().err

    def test_missing_file_exits_2(self, capsys):
        assert main(["validate", "nope.scenario.json"]) == 2
        assert "not found" in capsys.readouterr().err

    def test_json_errors_are_one_object_per_line(self, tmp_path, capsys):
        doc = json.loads(serialize_scenario(builtin_firefight()))
        doc["values"][0]["rules"]["ghost"] = {"default": 0}
        del doc["initial_state"]["fire"]
        bad = tmp_path / "bad.scenario.json"
        bad.write_text(json.dumps(doc))
        assert main(["validate", str(bad), "--format", "json"]) == 1
        lines = capsys.readouterr().err.strip().splitlines()
        assert len(lines) >= 2
        for line in lines:
            record = json.loads(line)
            assert record["severity"] in ("error", "warning")
            assert record["code"]


class TestSolve:
    def test_summary_and_front_file(self, scenario_file, tmp_path, capsys):
        out = tmp_path / "out.front.json"
        assert main(["solve", str(scenario_file), "--gamma", "1",
                     "--horizon", "50", "-o", str(out)]) == 0
        text = capsys.readouterr().out
        assert "2 non-dominated" in text and "converged" in text
        model = builtin_firefight()
        solution = solution_from_document(json.loads(out.read_text()), model)
        front = solution.front_at(model.initial_state)
        assert front == [pytest.approx((7.1, 3.8)),
                         pytest.approx((6.9, 4.1))]

    def test_two_state_chain_front(self, tmp_path, capsys):
        path = tmp_path / "chain.scenario.json"
        path.write_text(serialize_scenario(two_state_chain()))
        assert main(["solve", str(path), "--horizon", "2", "-o",
                     str(tmp_path / "c.front.json"), "--format",
                     "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["front"] == [[1.0, 0.0], [0.0, 1.0]]
        assert doc["converged"]

    def test_zero_horizon_is_usage_error(self, scenario_file, capsys):
        assert main(["solve", str(scenario_file), "--horizon", "0"]) == 2

    def test_output_is_deterministic(self, scenario_file, tmp_path):
        a, b = tmp_path / "a.front.json", tmp_path / "b.front.json"
        main(["solve", str(scenario_file), "--horizon", "50",
              "-o", str(a)])
        main(["solve", str(scenario_file), "--horizon", "50",
              "-o", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_builtin_name_is_accepted(self, tmp_path, capsys):
        assert main(["solve", "firefight", "--horizon", "50", "-o",
                     str(tmp_path / "f.front.json")]) == 0


class TestPlay:
    def test_scripted_cumulative(self, tmp_path, scenario_file, script_file,
                                 capsys):
        code, out = play(tmp_path, scenario_file, script_file)
        assert code == 0
        text = capsys.readouterr().out
        assert "Professionalism=1.5" in text and "Proximity=-0.6" in text
        traj = trajectory_from_jsonl(builtin_firefight(), out.read_text())
        assert len(traj.steps) == 2
        assert traj.outcome == "truncated"

    def test_same_seed_is_byte_identical(self, tmp_path, scenario_file,
                                         script_file, capsys):
        _, first = play(tmp_path, scenario_file, script_file)
        data = first.read_bytes()
        _, second = play(tmp_path, scenario_file, script_file)
        assert second.read_bytes() == data

    def test_illegal_script_action_names_step(self, tmp_path, scenario_file,
                                              capsys):
        script = tmp_path / "bad.txt"
        script.write_text("PrepareEquipment\nRetreat\n")
        code, _ = play(tmp_path, scenario_file, script)
        assert code == 1
        assert "step 1" in capsys.readouterr().err

    def test_interactive_reaches_failure(self, tmp_path, scenario_file,
                                         capsys, monkeypatch):
        # repeatedly evacuating with poor knowledge and unready equipment
        # drains health to Incapacitated
        answers = iter(["1", "1"])
        monkeypatch.setattr("builtins.input", lambda prompt="": next(answers))
        out = tmp_path / "t.traj.jsonl"
        assert main(["play", str(scenario_file), "--seed", "0",
                     "-o", str(out)]) == 0
        assert "failure" in capsys.readouterr().out
        traj = trajectory_from_jsonl(builtin_firefight(), out.read_text())
        assert traj.outcome == "failure"

    def test_interactive_reveal_shows_alignment(self, tmp_path, scenario_file,
                                                capsys, monkeypatch):
        answers = iter(["PrepareEquipment"])

        def fake_input(prompt=""):
            try:
                return next(answers)
            except StopIteration:
                raise EOFError from None

        monkeypatch.setattr("builtins.input", fake_input)
        main(["play", str(scenario_file), "--reveal", "-o",
              str(tmp_path / "t.traj.jsonl")])
        assert "Professionalism=+0.5" in capsys.readouterr().out

    def test_blind_play_prints_no_scores_before_the_end(
            self, tmp_path, scenario_file, script_file, capsys):
        play(tmp_path, scenario_file, script_file)
        lines = capsys.readouterr().out.splitlines()
        assert all("Professionalism" not in l for l in lines[:-2])


class TestAssess:
    def test_summary_and_report(self, tmp_path, scenario_file, script_file,
                                front_file, capsys):
        _, traj = play(tmp_path, scenario_file, script_file)
        capsys.readouterr()
        report_path = tmp_path / "t.report.json"
        assert main(["assess", str(scenario_file), str(traj),
                     str(front_file), "-o", str(report_path)]) == 0
        text = capsys.readouterr().out
        assert "Professionalism=1.5" in text
        assert "dominated" in text
        doc = json.loads(report_path.read_text())
        assert doc["cumulative"] == {"Professionalism": 1.5,
                                     "Proximity": -0.6}
        assert doc["dominance"] == "dominated"

    def test_weights_give_single_recommendation(self, tmp_path, scenario_file,
                                                script_file, front_file,
                                                capsys):
        _, traj = play(tmp_path, scenario_file, script_file)
        assert main(["assess", str(scenario_file), str(traj),
                     str(front_file), "--weights", "1,0", "--format",
                     "json"]) == 0
        doc = json.loads(capsys.readouterr().out.splitlines()[-1])
        assert [r["label"] for r in doc["recommendations"]] == \
            ["preference-optimal"]
        assert doc["recommendations"][0]["target"][0] == pytest.approx(7.1)

    def test_bad_weights_are_usage_errors(self, tmp_path, scenario_file,
                                          script_file, front_file):
        _, traj = play(tmp_path, scenario_file, script_file)
        assert main(["assess", str(scenario_file), str(traj),
                     str(front_file), "--weights", "1"]) == 2
        assert main(["assess", str(scenario_file), str(traj),
                     str(front_file), "--weights", "a,b"]) == 2

    def test_tampered_trajectory_exits_1(self, tmp_path, scenario_file,
                                         script_file, front_file, capsys):
        _, traj = play(tmp_path, scenario_file, script_file)
        lines = traj.read_text().splitlines()
        record = json.loads(lines[1])
        record["alignment"]["Professionalism"] = 0.99
        lines[1] = json.dumps(record)
        traj.write_text("\n".join(lines))
        assert main(["assess", str(scenario_file), str(traj),
                     str(front_file)]) == 1
        assert "integrity" in capsys.readouterr().err

    def test_front_for_wrong_scenario_exits_1(self, tmp_path, scenario_file,
                                              script_file, capsys):
        _, traj = play(tmp_path, scenario_file, script_file)
        chain = tmp_path / "chain.scenario.json"
        chain.write_text(serialize_scenario(two_state_chain()))
        wrong = tmp_path / "chain.front.json"
        main(["solve", str(chain), "--horizon", "2", "-o", str(wrong)])
        assert main(["assess", str(scenario_file), str(traj),
                     str(wrong)]) == 1


class TestProtocol:
    def write_protocol(self, tmp_path, rules, stance="permissive"):
        path = tmp_path / "p.protocol.json"
        path.write_text(json.dumps({
            "format_version": 1, "name": "p", "stance": stance,
            "rules": rules}))
        return path

    def test_eval_summary(self, tmp_path, scenario_file, capsys):
        path = self.write_protocol(tmp_path, [
            {"when": "equipment == NotReady",
             "action": "AggressiveFireSuppression", "modality": "forbid"}])
        assert main(["protocol", "eval", str(scenario_file), str(path),
                     "--horizon", "50", "--format", "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["sound"] is True
        assert doc["removed_transitions"] > 0
        assert doc["hypervolume"] <= doc["unrestricted_hypervolume"] + 1e-9

    def test_conflicting_protocol_exits_1_with_witness(self, tmp_path,
                                                       scenario_file, capsys):
        path = self.write_protocol(tmp_path, [
            {"when": "true", "action": a, "modality": "forbid"}
            for a in ["EvacuateOccupants", "ContainFire",
                      "AggressiveFireSuppression", "PrepareEquipment",
                      "UpdateKnowledge"]])
        assert main(["protocol", "eval", str(scenario_file), str(path),
                     "--horizon", "50"]) == 1
        err = capsys.readouterr().err
        assert "empty-action-set" in err and "fire" in err

    def test_compare_self_has_no_dominations(self, tmp_path, scenario_file,
                                             capsys):
        path = self.write_protocol(tmp_path, [])
        assert main(["protocol", "compare", str(scenario_file), str(path),
                     str(path), "--horizon", "50", "--format", "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["a_members_dominated_by_b"] == []
        assert doc["b_members_dominated_by_a"] == []


class TestServe:
    def test_negative_port_is_usage_error(self, capsys):
        assert main(["serve", "--port", "-1"]) == 2
        assert "port" in capsys.readouterr().err


class TestConsoleScript:
    def test_installed_entry_point(self, scenario_file):
        proc = subprocess.run(
            [sys.executable, "-m", "valence.cli", "validate",
             str(scenario_file)],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.strip() == \
            "OK: 5 variables, 400 states, 5 actions, 2 values"
