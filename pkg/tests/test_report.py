import csv
import io
import json
import math

import pytest

from ssalt_mdpde.data import electronic_components
from ssalt_mdpde.errors import DomainError
from ssalt_mdpde.estimator import fit_mle_closed_form
from ssalt_mdpde.report import ReportBundle, build_characteristics_report, build_fit_report, unit_factor

TABLE_MLE = {"beta": 0.0, "a0": 10.862, "a1": -0.03026}


class TestUnits:
    def test_factors(self):
        assert unit_factor("s", "hours") == pytest.approx(1 / 3600)
        assert unit_factor("min", "seconds") == 60.0
        assert unit_factor("anything", "raw") == 1.0

    def test_unknown_source_unit(self):
        with pytest.raises(DomainError, match="--units raw"):
            unit_factor("raw", "hours")


class TestFitReport:
    def test_rows_and_oracle(self):
        ds = electronic_components()
        bundle = build_fit_report(ds, [0.0, 0.5])
        rows = bundle.tables["parameters"]
        assert [r["beta"] for r in rows] == [0.0, 0.5]
        mle = fit_mle_closed_form(ds.data, ds.profile)
        assert rows[0]["a0"] == pytest.approx(mle.a0, abs=1e-6)
        assert rows[0]["a1"] == pytest.approx(mle.a1, abs=1e-6)
        half = rows[0]["a0_upper"] - rows[0]["a0"]
        assert half == pytest.approx(1.959963984540054 * rows[0]["se_a0"], rel=1e-12)

    def test_notes_and_provenance(self):
        bundle = build_fit_report(electronic_components(), [0.0])
        assert any("910" in n for n in bundle.notes)
        assert bundle.provenance["version"] and len(bundle.provenance["config_hash"]) == 16
        again = build_fit_report(electronic_components(), [0.0])
        assert again.to_json() == bundle.to_json()

    def test_config_hash_tracks_settings(self):
        a = build_fit_report(electronic_components(), [0.0])
        b = build_fit_report(electronic_components(), [0.0], confidence=0.9)
        assert a.provenance["config_hash"] != b.provenance["config_hash"]


class TestCharacteristicsReport:
    def test_tables(self):
        ds = electronic_components()
        bundle = build_characteristics_report([TABLE_MLE], ds.profile, 100, "s", mission_time=600.0, units="hours")
        assert set(bundle.tables) == {"mttf", "reliability", "quantile"}
        mttf = {r["stress"]: r for r in bundle.tables["mttf"]}
        assert mttf[100.0]["estimate"] == pytest.approx(0.702, rel=5e-3)
        assert mttf[25.0]["clamped"] is True
        rel = {r["stress"]: r for r in bundle.tables["reliability"]}
        assert rel[25.0]["estimate"] == pytest.approx(0.976, rel=5e-3)

    def test_reliability_skipped_without_mission_time(self):
        bundle = build_characteristics_report([TABLE_MLE], electronic_components().profile, 100, "s")
        assert "reliability" not in bundle.tables
        assert any("omitted" in n for n in bundle.notes)

    def test_failing_cell_does_not_abort(self):
        ds = electronic_components()
        bundle = build_characteristics_report([TABLE_MLE], ds.profile, 100, "s", stress_levels=[-1e5, 100.0])
        bad, good = bundle.tables["mttf"]
        assert bad["error"] and math.isnan(bad["transformed_lower"])
        assert not good["error"] and good["estimate"] > 0


class TestSerialization:
    def bundle(self):
        rows = [{"name": 'a "quoted", value', "x": 1.5, "y": math.nan, "ok": True}]
        return ReportBundle("t", {"tab": rows}, {"tool": "x", "version": "0", "config_hash": "h"}, ["note"])

    def test_csv_is_rfc4180(self):
        text = self.bundle().table_csv("tab")
        assert text.endswith("\r\n")
        assert '"a ""quoted"", value"' in text
        assert list(csv.reader(io.StringIO(text)))[1] == ['a "quoted", value', "1.5", "", "true"]

    def test_json_has_no_nan(self):
        payload = json.loads(self.bundle().to_json())
        assert payload["tables"]["tab"][0]["y"] is None

    def test_text_footer(self):
        text = self.bundle().to_text()
        assert "Notes:" in text and "config h" in text
