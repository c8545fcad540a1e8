"""Command dispatch, report shape, determinism, bundled scenarios."""

import copy
import json
import subprocess
import sys

import pytest

from toricmirror.cli import main, run
from toricmirror.scenario import (
    BUNDLED,
    Scenario,
    bundled_scenario,
    dumps_toml,
    load_scenario,
    loads_toml,
    save_scenario,
)

EMPTY_CHECK = """\
name = "empty-check"
rank = 1

[fan]
rays = [[1], [-1]]
cones = [[1], [2]]

[alpha]
coeffs = ["1", "1"]
q_exps = [["0"], ["1"]]

[truncation]
q_bound = "2"
"""


class TestScenarioIO:
    def test_round_trip_all_bundled(self):
        for name in BUNDLED:
            sc = bundled_scenario(name)
            data = sc.to_dict()
            again = Scenario.from_dict(loads_toml(dumps_toml(data)))
            assert again.to_dict() == data

    def test_save_and_load(self, tmp_path):
        sc = bundled_scenario("p2")
        path = tmp_path / "p2.toml"
        save_scenario(sc, path)
        loaded = load_scenario(path)
        assert loaded.to_dict() == sc.to_dict()

    def test_unknown_bundled_name(self):
        with pytest.raises(Exception):
            bundled_scenario("does-not-exist")


class TestCommands:
    def test_opt_identity_cubic(self):
        report = run("opt-identity", bundled_scenario("cubic-p2"), q_bound=4)
        assert report["n_fail"] == 0
        rec = report["checks"][0]
        coeffs = [c for _q, c in rec["measured"]]
        assert coeffs == ["1", "6", "90", "1680", "34650"]

    def test_box_wp112(self):
        report = run("box", bundled_scenario("wp112-style"))
        ages = {tuple(c["measured"]["v"]): c["measured"]["age"]
                for c in report["checks"] if c["id"].startswith("box:")}
        assert ages == {(0, 0): "0", (0, -1): "1"}

    def test_empty_check_scenario(self):
        sc = Scenario.from_dict(loads_toml(EMPTY_CHECK))
        report = run("central-charge", sc)
        assert report["checks"] == [] and report["n_fail"] == 0

    def test_determinism(self):
        r1 = run("mirror-map", bundled_scenario("cubic-p2"), q_bound=4)
        r2 = run("mirror-map", bundled_scenario("cubic-p2"), q_bound=4)
        d1, d2 = copy.deepcopy(r1), copy.deepcopy(r2)
        d1.pop("timing_seconds")
        d2.pop("timing_seconds")
        assert json.dumps(d1, sort_keys=False) == json.dumps(d2,
                                                             sort_keys=False)

    @pytest.mark.parametrize("name", BUNDLED)
    def test_report_all_passes(self, name):
        # full-depth runs live in the acceptance suite; a reduced bound
        # keeps this loop quick while touching every command
        bound = 3 if name == "quintic-p4" else None
        report = run("report-all", bundled_scenario(name), q_bound=bound)
        fails = [c["id"] for c in report["checks"] if c["status"] == "fail"]
        assert not fails, fails


class TestMainEntry:
    def test_exit_zero_on_pass(self, capsys):
        code = main(["box", "--scenario", "p2"])
        out = capsys.readouterr().out
        assert code == 0 and "PASS" in out

    def test_exit_one_on_failure(self, capsys):
        # absurd tolerance turns a passing numeric check into a failure
        code = main(["monodromy-check", "--scenario", "p1", "--tol", "1e-30",
                     "--q-bound", "2"])
        assert code == 1

    def test_exit_two_on_bad_scenario(self, capsys):
        code = main(["box", "--scenario", "no-such-scenario"])
        assert code == 2

    def test_unknown_command_rejected(self):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate", "--scenario", "p1"])
        assert err.value.code == 2

    def test_json_report_written(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = main(["gamma-identity", "--scenario", "p1",
                     "--json", str(out)])
        assert code == 0
        data = json.loads(out.read_text())
        assert data["schema"].startswith("toricmirror-report/")
        assert data["n_fail"] == 0

    def test_flag_overrides(self, capsys):
        code = main(["mirror-map", "--scenario", "p2", "--q-bound", "3",
                     "--z-window=-12,4"])
        out = capsys.readouterr().out
        assert code == 0 and "q_bound 3" in out
