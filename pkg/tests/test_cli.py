import json
import subprocess
import sys
import time

import pytest

from ssalt_mdpde.cli import main
from ssalt_mdpde.data import electronic_components, read_dataset
from ssalt_mdpde.estimator import fit_mle_closed_form
from ssalt_mdpde.simulation import replicate_rng, sample_experiment, study_config_from_dict

HEADER = "# N: 10\n# tau1: 10\n# tau2: 33\n# x1: 1\n# x2: 2\n"


def read_csv_rows(path):
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def study_config(tmp_path):
    path = tmp_path / "study.json"
    path.write_text(json.dumps({
        "sample_size": 150, "replicates": 6, "betas": [0, 0.5, 1],
        "contamination_levels": [0, 0.05], "seed": 99,
    }))
    return path


class TestFit:
    def test_embedded(self, tmp_path, capsys):
        assert main(["fit", "--embedded", "-o", str(tmp_path), "-q"]) == 0
        rows = read_csv_rows(tmp_path / "parameters.csv")
        assert [float(r["beta"]) for r in rows] == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
        ds = electronic_components()
        mle = fit_mle_closed_form(ds.data, ds.profile)
        assert float(rows[0]["a0"]) == pytest.approx(mle.a0, abs=1e-6)
        assert float(rows[0]["a1"]) == pytest.approx(mle.a1, abs=1e-6)
        for r in rows:
            assert float(r["a0"]) == pytest.approx(10.862, rel=0.05)
            assert float(r["a1"]) == pytest.approx(-0.03026, rel=0.05)
        payload = json.loads((tmp_path / "fit.json").read_text())
        assert payload["context"]["n_units"] == 100
        assert capsys.readouterr().out == ""

    def test_single_beta_from_file(self, tmp_path, capsys):
        path = tmp_path / "d.csv"
        path.write_text(HEADER + "time,stage\n1,1\n3,1\n6,1\n12,2\n20,2\n")
        assert main(["fit", str(path), "--beta", "0.5"]) == 0
        out = capsys.readouterr().out
        assert "== parameters ==" in out and len([l for l in out.splitlines() if l.strip().startswith("0.5")]) == 1

    def test_idempotent(self, tmp_path):
        main(["fit", "--embedded", "-o", str(tmp_path / "a"), "-q"])
        main(["fit", "--embedded", "-o", str(tmp_path / "b"), "-q"])
        for name in ("parameters.csv", "fit.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_nonexistence_exit_code(self, tmp_path, caplog):
        path = tmp_path / "d.csv"
        path.write_text(HEADER + "time\n1\n2\n")
        assert main(["fit", str(path)]) == 3
        assert "stage 2" in caplog.text

    def test_parse_error_exit_code(self, tmp_path, caplog):
        path = tmp_path / "d.csv"
        path.write_text(HEADER + "time\n1\nxyz\n")
        assert main(["fit", str(path)]) == 2
        assert "d.csv:8" in caplog.text

    def test_needs_exactly_one_source(self, tmp_path):
        assert main(["fit"]) == 2

    def test_bad_flag_value(self):
        with pytest.raises(SystemExit) as err:
            main(["fit", "--embedded", "--confidence", "1.2"])
        assert err.value.code == 2


class TestCharacteristics:
    def test_from_table_parameters(self, tmp_path):
        code = main(["characteristics", "--params", "10.862", "-0.03026", "--embedded",
                     "--mission-time", "600", "--units", "hours", "-o", str(tmp_path), "-q"])
        assert code == 0
        mttf = {float(r["stress"]): r for r in read_csv_rows(tmp_path / "mttf.csv")}
        assert float(mttf[100.0]["estimate"]) == pytest.approx(0.702, rel=5e-3)
        assert float(mttf[100.0]["transformed_lower"]) == pytest.approx(0.492, rel=0.10)
        assert float(mttf[100.0]["transformed_upper"]) == pytest.approx(1.003, rel=0.10)
        assert mttf[25.0]["clamped"] == "true"

    def test_quantile_in_minutes(self, tmp_path):
        main(["characteristics", "--params", "10.862", "-0.03026", "--embedded", "--units", "minutes", "-o", str(tmp_path), "-q"])
        q = {float(r["stress"]): r for r in read_csv_rows(tmp_path / "quantile.csv")}
        assert float(q[25.0]["estimate"]) == pytest.approx(42.96, rel=5e-3)

    def test_from_fit_report(self, tmp_path):
        main(["fit", "--embedded", "-o", str(tmp_path / "fit"), "-q"])
        code = main(["characteristics", str(tmp_path / "fit" / "fit.json"), "--beta", "0", "--beta", "1",
                     "--mission-time", "0", "-o", str(tmp_path / "ch"), "-q", "--format", "csv"])
        assert code == 0
        rel = read_csv_rows(tmp_path / "ch" / "reliability.csv")
        assert len(rel) == 6
        assert all(float(r["estimate"]) == 1.0 for r in rel)
        assert not (tmp_path / "ch" / "characteristics.json").exists()

    def test_units_need_known_source_unit(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text(HEADER + "time\n1\n12\n")
        assert main(["characteristics", "--params", "3", "-1", "--dataset", str(path), "--units", "hours"]) == 2

    def test_not_a_fit_report(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text("{}")
        assert main(["characteristics", str(path)]) == 2

    def test_json_to_stdout(self, capsys):
        assert main(["characteristics", "--params", "10.862", "-0.03026", "--embedded", "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["kind"] == "characteristics"


class TestStudies:
    def test_simulate_round_trip(self, tmp_path, study_config):
        out = tmp_path / "sim.csv"
        assert main(["simulate", str(study_config), "-o", str(out), "--replicate", "3", "--contamination", "0.05"]) == 0
        cfg = study_config_from_dict(json.loads(study_config.read_text()))
        expected = sample_experiment(replicate_rng(99, 3), 150, cfg.true_params, cfg.profile, cfg.contamination(0.05))
        assert read_dataset(out).data == expected

    def test_mse_study_files(self, tmp_path, study_config):
        out = tmp_path / "mse"
        assert main(["mse-study", str(study_config), "-o", str(out), "-q"]) == 0
        for name in ("mse_a0", "mse_a1", "mse_mttf", "mse_median", "mse_reliability", "long", "failures"):
            assert (out / f"{name}.csv").exists()
        lines = (out / "mse_a1.csv").read_text().splitlines()
        assert lines[0] == "contamination,beta=0,beta=0.5,beta=1" and len(lines) == 3
        summary = json.loads((out / "study.json").read_text())
        assert summary["seed"] == 99

    def test_worker_count_gives_identical_files(self, tmp_path, study_config):
        for jobs in (1, 8):
            assert main(["coverage-study", str(study_config), "-o", str(tmp_path / f"j{jobs}"), "--jobs", str(jobs), "-q"]) == 0
        names = sorted(p.name for p in (tmp_path / "j1").iterdir())
        assert names == sorted(p.name for p in (tmp_path / "j8").iterdir())
        for name in names:
            assert (tmp_path / "j1" / name).read_bytes() == (tmp_path / "j8" / name).read_bytes()

    def test_seed_override(self, tmp_path, study_config):
        main(["mse-study", str(study_config), "-o", str(tmp_path / "a"), "-q"])
        main(["mse-study", str(study_config), "-o", str(tmp_path / "b"), "-q", "--seed", "5"])
        assert (tmp_path / "a" / "long.csv").read_bytes() != (tmp_path / "b" / "long.csv").read_bytes()

    def test_smoke_run_is_fast(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"replicates": 1, "contamination_levels": [0]}))
        start = time.perf_counter()
        assert main(["mse-study", str(cfg), "-o", str(tmp_path / "o"), "-q"]) == 0
        assert time.perf_counter() - start < 5.0

    def test_config_errors_listed(self, tmp_path, caplog):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"replicates": 0, "sample_size": 1, "oops": 1}))
        assert main(["mse-study", str(cfg), "-o", str(tmp_path / "o")]) == 2
        errors = [r for r in caplog.records if r.levelname == "ERROR"]
        assert len(errors) == 3

    def test_invalid_json(self, tmp_path, caplog):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"replicates": 1,\n "seed": }')
        assert main(["coverage-study", str(cfg), "-o", str(tmp_path / "o")]) == 2
        assert "c.json:2" in caplog.text


def test_export_dataset_round_trip(tmp_path):
    out = tmp_path / "e.csv"
    assert main(["export-dataset", "-o", str(out)]) == 0
    assert read_dataset(out).data == electronic_components().data


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "ssalt_mdpde.cli", "fit", "--embedded", "--beta", "0", "--format", "json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["tables"]["parameters"][0]["beta"] == 0.0
