import json

from cuspfs import checks
from cuspfs.cli import COMMANDS, list_checks, load_csv_schema, main, run

SMALL_CUSP = {
    "flavor": "cusp",
    "characteristic": {"kind": "power", "alpha": 2.0},
    "base": {"kind": "points"},
    "grading": {"smax": 6.0, "ns": 769},
}


class TestCatalog:
    def test_at_least_fourteen_checks(self):
        assert len(checks.CHECKS) >= 14

    def test_output_sorted_with_anchors(self):
        lines = list_checks().splitlines()
        assert lines == sorted(lines)
        assert all(" - " in ln for ln in lines)

    def test_each_check_maps_to_one_operation(self):
        ops = {cid: spec.op for cid, spec in checks.CHECKS.items()}
        assert all(op.count(".") >= 1 for op in ops.values())
        # ids are unique keys by construction; every op names a real module attr
        import importlib

        for op in ops.values():
            mod_name, attr = op.rsplit(".", 1)
            mod = importlib.import_module(f"cuspfs.{mod_name}")
            assert hasattr(mod, attr), op

    def test_registry_commands_exist(self):
        for cid, spec in checks.CHECKS.items():
            for cmd in spec.commands:
                assert cmd in COMMANDS
                assert cid in COMMANDS[cmd]["checks"]


class TestConfigHandling:
    def test_missing_required_key(self, tmp_path):
        rc = run("solve", {"solver": {"T": 0.1}}, str(tmp_path / "o"))
        assert rc == 2
        assert not (tmp_path / "o").exists()

    def test_unknown_key_rejected(self, tmp_path):
        rc = run("validate-characteristic", {"bogus": 1}, str(tmp_path / "o"))
        assert rc == 2

    def test_unknown_command(self, tmp_path):
        assert run("fractal", {}, str(tmp_path / "o")) == 2

    def test_unknown_check_for_command(self, tmp_path):
        rc = run("validate-characteristic", {"checks": ["K.K"]}, str(tmp_path / "o"))
        assert rc == 2

    def test_unknown_tolerance_key(self, tmp_path):
        rc = run("validate-characteristic", {"tolerances": {"X.Y": 1.0}}, str(tmp_path / "o"))
        assert rc == 2

    def test_tolerance_override_applies(self, tmp_path):
        cfg = {"cusp": SMALL_CUSP, "tolerances": {"M.I.analytic": 1e-30}, "checks": ["M.I"]}
        rc = run("cusp-report", cfg, str(tmp_path / "o"))
        assert rc == 1  # impossible tolerance makes the check fail


class TestOutputs:
    def test_summary_and_csv_schema(self, tmp_path):
        out = tmp_path / "vc"
        rc = run("validate-characteristic", {"cusp": {"characteristic": {"kind": "power", "alpha": 2.0}}}, str(out))
        assert rc == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["M.IR"]["pass"] is True
        header = (out / "M.IR.csv").read_text().splitlines()[0]
        assert header.split(",") == load_csv_schema()["schemas"]["check"]["columns"]

    def test_bitwise_reproducibility(self, tmp_path):
        cfg = {"cusp": SMALL_CUSP, "checks": ["M.I", "M.fg"], "seed": 3}
        rc1 = run("cusp-report", cfg, str(tmp_path / "a"))
        rc2 = run("cusp-report", json.loads(json.dumps(cfg)), str(tmp_path / "b"))
        assert rc1 == rc2 == 0
        for name in ("summary.json", "M.I.csv", "M.fg.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_main_end_to_end(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"cusp": SMALL_CUSP, "checks": ["M.I"]}))
        rc = main(["cusp-report", "--config", str(cfg), "--out", str(tmp_path / "out")])
        assert rc == 0

    def test_main_list_checks(self, capsys):
        assert main(["list-checks"]) == 0
        out = capsys.readouterr().out
        assert "W.eq" in out and "K.K" in out

    def test_main_bad_config_path(self, tmp_path):
        rc = main(["solve", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_solve_writes_run_csv(self, tmp_path):
        cfg = {
            "cusp": SMALL_CUSP,
            "solver": {"lambda": 0.0, "q": 2.0, "T": 0.02, "dt": 5e-3, "ns": 129, "smax": 6.0},
            "study": {"heat_decay": False, "linearity": True},
        }
        out = tmp_path / "solve"
        rc = run("solve", cfg, str(out))
        assert rc == 0
        lines = (out / "run.csv").read_text().splitlines()
        assert lines[0] == "t,step_norm"
        assert len(lines) == 6  # header + 5 steps (T/dt + 1)

    def test_empty_study_rejected(self, tmp_path):
        cfg = {"cusp": SMALL_CUSP, "solver": {"q": 2.0}, "study": {}}
        assert run("solve", cfg, str(tmp_path / "o")) == 2

    def test_numerical_failure_exits_3_with_diagnostics(self, tmp_path, monkeypatch):
        import dataclasses

        from cuspfs.parabolic import NumericalFailure

        def boom(cfg, tol):
            raise NumericalFailure("linear solve diverged at step 7", step=7, node=[3])

        spec = dataclasses.replace(checks.CHECKS["D.D.decay"], fn=boom)
        monkeypatch.setitem(checks.CHECKS, "D.D.decay", spec)
        cfg = {"cusp": SMALL_CUSP, "solver": {"q": 2.0}, "study": {"heat_decay": True}}
        out = tmp_path / "o"
        rc = run("solve", cfg, str(out))
        assert rc == 3
        diag = json.loads((out / "diagnostics.json").read_text())
        assert diag["step"] == 7 and diag["node"] == [3]
