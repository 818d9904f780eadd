import json

import pytest

from loopchern.cli import eval_lk_expression, format_value, main
from loopchern.circle_k import KHatElement, LKElement
from loopchern.errors import ExpressionParseError, ScenarioLookupError
from loopchern.scenarios import ScenarioConfig, list_scenarios, run_scenario

REQUIRED_NAMES = [
    "ss61-ex1", "ss61-ex2", "ss61-ex3", "homotopy-s1", "homotopy-t2-deg2",
    "subdivision-invariance", "gauge-invariance", "restriction", "sum-tensor",
    "lk-s1-ring", "lk-s1-decision", "fundamental-property-t2",
]

SMOKE_OVERRIDES = {
    "ss61-ex1": {"grid": 512},
    "ss61-ex2": {"grid": 512},
    "ss61-ex3": {"grid": 512},
    "homotopy-s1": {"grid": 512, "convergence_grids": [256]},
    "homotopy-t2-deg2": {"grid": 256, "s_count": 16},
    "subdivision-invariance": {"grid": 768, "grid_two_chart": 512},
    "gauge-invariance": {"grid": 512},
    "restriction": {},
    "sum-tensor": {"grid": 512},
    "lk-s1-ring": {"count": 40, "grid": 256},
    "lk-s1-decision": {"pairs": 8, "grid": 128},
    "fundamental-property-t2": {"grid": 512},
}


class TestRegistry:
    def test_required_names_present(self):
        names = [name for name, _ in list_scenarios()]
        for required in REQUIRED_NAMES:
            assert required in names

    def test_stable_ordering(self):
        assert list_scenarios() == list_scenarios()

    def test_unknown_scenario(self):
        with pytest.raises(ScenarioLookupError):
            run_scenario(ScenarioConfig("not-a-scenario"))


@pytest.mark.parametrize("name", REQUIRED_NAMES)
def test_scenario_passes_at_smoke_scale(name):
    report = run_scenario(ScenarioConfig(name, dict(SMOKE_OVERRIDES[name])))
    failed = [c.identity for c in report.checks if not c.passed]
    assert report.passed, f"failed checks: {failed}"
    assert report.passed == all(c.passed for c in report.checks)


class TestReports:
    def test_deterministic_json(self, tmp_path):
        cfg = dict(SMOKE_OVERRIDES["ss61-ex2"])
        paths = []
        for i in range(2):
            report = run_scenario(ScenarioConfig("ss61-ex2", dict(cfg)))
            path = tmp_path / f"r{i}.json"
            report.write(str(path))
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_report_schema(self, tmp_path):
        report = run_scenario(ScenarioConfig("restriction", {}))
        path = tmp_path / "restriction.json"
        report.write(str(path))
        data = json.loads(path.read_text())
        assert set(data.keys()) == {"scenario", "engine", "params", "checks", "pass"}
        check = data["checks"][0]
        assert {"identity", "lhs_re", "lhs_im", "rhs_re", "rhs_im",
                "defect", "tol", "pass", "note"} == set(check.keys())
        assert data["engine"]["scheme"] == "cf4-gauss2"

    def test_csv_sidecar(self, tmp_path):
        cfg = ScenarioConfig("homotopy-s1", {"grid": 256, "convergence_grids": []})
        report = run_scenario(cfg)
        out = tmp_path / "h.json"
        report.write(str(out))
        csv = (tmp_path / "h.csv").read_text().strip().splitlines()
        assert csv[0] == "grid,defect"
        assert len(csv) == 2

    def test_engine_error_becomes_failed_check(self):
        # an odd two-chart grid cannot be split into p=2 segments
        report = run_scenario(ScenarioConfig(
            "subdivision-invariance", {"grid": 768, "p": 3, "refine": 2,
                                       "grid_two_chart": 511}))
        assert not report.passed
        assert any("errored" in c.note for c in report.checks)


class TestCli:
    def test_list_command(self, capsys):
        assert main(["list"]) == 0
        out = capsys.readouterr().out
        for name in REQUIRED_NAMES:
            assert name in out

    def test_verify_pass_exit_code(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code = main(["verify", "--scenario", "restriction", "--out", str(out)])
        assert code == 0
        assert out.exists()

    def test_verify_unknown_scenario(self, capsys):
        assert main(["verify", "--scenario", "nope"]) == 2

    def test_verify_malformed_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"name": "restriction", ')
        assert main(["verify", "--config", str(bad)]) == 2
        err = capsys.readouterr().err
        assert "line" in err and "column" in err

    def test_verify_config_file(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(
            {"name": "lk-s1-decision", "params": {"pairs": 4, "grid": 128}}))
        out = tmp_path / "out.json"
        assert main(["verify", "--config", str(cfg), "--out", str(out)]) == 0

    def test_verify_name_mismatch(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"name": "restriction", "params": {}}))
        assert main(["verify", "--scenario", "ss61-ex1", "--config", str(cfg)]) == 2


class TestLkExpressions:
    def test_exact_star(self):
        value = eval_lk_expression("[(1/2, 1/3 turns)] * [(1/2, 2/3 turns)]")
        assert isinstance(value, LKElement)
        assert format_value(value) == "[(1, 0 turns)]"

    def test_cancellation(self):
        assert format_value(eval_lk_expression("[(1, 0 turns)] - [(1, 0 turns)]")) == "0"

    def test_tokhat(self):
        value = eval_lk_expression(
            "tokhat ([(1/2, 1/4 turns), (0, 0 turns)] - [(1/2, 5/4 turns)])")
        assert isinstance(value, KHatElement)
        assert value.rank_part == 1
        assert format_value(value) == "(rank 1, det (0, 0 turns))"

    def test_imap(self):
        value = eval_lk_expression("imap 2 [(0, 1/4 turns)]")
        assert abs(value - (-1.0)) <= 1e-12

    def test_float_classes(self):
        value = eval_lk_expression("[1+2i] + [0.5]")
        assert isinstance(value, LKElement)
        assert value.plus.rank == 2

    def test_distributivity_in_expressions(self):
        a = "[(1/2, 0 turns)]"
        b = "[(0, 1/3 turns)]"
        c = "[(1, 1/6 turns), (0, 0 turns)]"
        lhs = eval_lk_expression(f"{a} * ({b} + {c})")
        rhs = eval_lk_expression(f"{a} * {b} + {a} * {c}")
        from loopchern.circle_k import lk_eq
        assert lk_eq(lhs, rhs)

    def test_mixed_modes_rejected(self):
        with pytest.raises(ExpressionParseError):
            eval_lk_expression("[(1/2, 0 turns), 1.5]")

    def test_type_mismatch_rejected(self):
        with pytest.raises(ExpressionParseError):
            eval_lk_expression("tokhat [(0, 0 turns)] + [(0, 0 turns)]")

    def test_parse_garbage(self):
        with pytest.raises(ExpressionParseError):
            eval_lk_expression("[(1/2 turns]")

    def test_cli_lk(self, capsys):
        assert main(["lk", "eval", "[(0, 1/2 turns)] * [(0, 1/2 turns)]"]) == 0
        assert capsys.readouterr().out.strip() == "[(0, 0 turns)]"

    def test_cli_lk_parse_error(self, capsys):
        assert main(["lk", "eval", "[[]]"]) == 2
