"""Report tables for fitted step-stress models.

Values are held in data units and converted only when a table is serialized.
Every number in a :class:`ReportBundle` is a pure function of the dataset and
the settings recorded in its provenance, so rebuilding a report reproduces it
byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .asymptotics import sandwich_covariance
from .characteristics import characteristic_value, confidence_intervals, z_value
from .data import DatasetFile, format_dataset
from .errors import DomainError, SSALTError
from .estimator import FitConfig, fit_path
from .model import RegressionParams, StressProfile

__all__ = [
    "ReportBundle",
    "build_fit_report",
    "build_characteristics_report",
    "unit_factor",
    "TIME_UNITS",
]

# seconds per unit
TIME_UNITS = {
    "s": 1.0, "sec": 1.0, "second": 1.0, "seconds": 1.0,
    "min": 60.0, "minute": 60.0, "minutes": 60.0,
    "h": 3600.0, "hour": 3600.0, "hours": 3600.0,
}

READING_NOTE = (
    "Bundled dataset reading: the 910 s failure keeps its stage-1 label although it "
    "follows the stress change at 900 s, and stage-2 times are offsets from 900 s. "
    "Other readings of the source listing move the estimates by roughly 1 to 4 percent."
)


def unit_factor(data_unit: str, target: str) -> float:
    """Multiplier converting times in ``data_unit`` into ``target`` units.

    ``target="raw"`` keeps data units.  Any other target needs a data unit
    listed in :data:`TIME_UNITS`.
    """
    if target == "raw":
        return 1.0
    if target not in TIME_UNITS:
        raise DomainError(f"unknown output unit {target!r}")
    if data_unit not in TIME_UNITS:
        raise DomainError(f"cannot convert from time unit {data_unit!r} to {target!r}; use --units raw")
    return TIME_UNITS[data_unit] / TIME_UNITS[target]


def _version() -> str:
    from . import __version__
    return __version__


def _clean(value):
    """JSON-safe copy: NaN and infinities become ``None``."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def _hash(payload) -> str:
    text = json.dumps(_clean(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass
class ReportBundle:
    """Tables plus provenance.

    ``tables`` maps a table name to a list of row dicts; all rows of a table
    share the same keys.  ``notes`` end up in the text footer and the JSON.
    """

    kind: str
    tables: dict
    provenance: dict
    notes: list = field(default_factory=list)
    context: dict = field(default_factory=dict)

    def table_csv(self, name: str) -> str:
        rows = self.tables[name]
        buf = io.StringIO()
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\r\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _csv_cell(v) for k, v in row.items()})
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "kind": self.kind,
            "provenance": self.provenance,
            "context": self.context,
            "tables": self.tables,
            "notes": self.notes,
        }
        return json.dumps(_clean(payload), indent=2, sort_keys=False) + "\n"

    def to_text(self) -> str:
        lines = []
        for name, rows in self.tables.items():
            lines.append(f"== {name} ==")
            if not rows:
                lines.append("(empty)")
                continue
            keys = list(rows[0])
            cells = [[_text_cell(r[k]) for k in keys] for r in rows]
            widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
            lines.append("  ".join(k.rjust(w) for k, w in zip(keys, widths)))
            for c in cells:
                lines.append("  ".join(v.rjust(w) for v, w in zip(c, widths)))
            lines.append("")
        if self.notes:
            lines.append("Notes:")
            lines.extend(f"  * {n}" for n in self.notes)
        lines.append(
            f"{self.provenance.get('tool')} {self.provenance.get('version')}, "
            f"config {self.provenance.get('config_hash')}"
        )
        return "\n".join(lines) + "\n"


def _csv_cell(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return "" if v is None else v


def _text_cell(v):
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6g}"
    return "" if v is None else str(v)


def _profile_dict(profile: StressProfile) -> dict:
    return {k: getattr(profile, k) for k in ("x1", "x2", "tau1", "tau2", "x0")}


def build_fit_report(
    dataset: DatasetFile,
    betas: Sequence[float],
    confidence: float = 0.95,
    fit_config: FitConfig = FitConfig(),
    source: str = "",
) -> ReportBundle:
    """Fit every ``beta`` and tabulate the estimates with their intervals.

    The parameter interval is ``a_hat +- z * sqrt(sandwich_ii / N)``.  A beta
    whose fit or covariance fails keeps its row, with NaN cells and the
    reason in ``error``.
    """
    data, profile = dataset.data, dataset.profile
    data.check_existence()
    z = z_value(confidence)
    rows = []
    for res in fit_path(data, profile, betas, fit_config):
        row = {
            "beta": res.beta,
            "a0": res.params.a0,
            "a1": res.params.a1,
            "se_a0": math.nan,
            "se_a1": math.nan,
            "a0_lower": math.nan,
            "a0_upper": math.nan,
            "a1_lower": math.nan,
            "a1_upper": math.nan,
            "objective": res.objective,
            "iterations": res.iterations,
            "converged": res.converged,
            "error": "" if res.converged else res.message,
        }
        if res.converged:
            try:
                se = sandwich_covariance(res.params, profile, res.beta, data.n_units).std_errors
            except (SSALTError, ArithmeticError) as exc:
                row["error"] = str(exc)
            else:
                row["se_a0"], row["se_a1"] = float(se[0]), float(se[1])
                row["a0_lower"], row["a0_upper"] = res.params.a0 - z * se[0], res.params.a0 + z * se[0]
                row["a1_lower"], row["a1_upper"] = res.params.a1 - z * se[1], res.params.a1 + z * se[1]
        rows.append(row)

    notes = list(data.ordering_issues(profile))
    if dataset.metadata.get("embedded"):
        notes.append(READING_NOTE)
    notes.append(f"Parameter intervals: a_hat +- z * se at {confidence:g} confidence (z = {z:.6f}).")
    settings = {"betas": [float(b) for b in betas], "confidence": confidence, "fit": repr(fit_config)}
    provenance = {
        "tool": "ssalt-mdpde",
        "version": _version(),
        "command": "fit",
        "source": source,
        "config_hash": _hash({"dataset": format_dataset(data, profile, dataset.time_unit), **settings}),
        "seed": None,
        **settings,
    }
    context = {
        "profile": _profile_dict(profile),
        "n_units": data.n_units,
        "n1": data.n1,
        "n2": data.n2,
        "time_unit": dataset.time_unit,
    }
    return ReportBundle("fit", {"parameters": rows}, provenance, notes, context)


def build_characteristics_report(
    fits: Sequence[dict],
    profile: StressProfile,
    n_units: int,
    data_unit: str = "raw",
    stress_levels: Optional[Sequence[float]] = None,
    mission_time: Optional[float] = None,
    quantile_level: float = 0.9,
    confidence: float = 0.95,
    units: str = "raw",
    source: str = "",
) -> ReportBundle:
    """MTTF, reliability and quantile tables with direct and transformed intervals.

    Parameters
    ----------
    fits : sequence of dict
        Each entry carries ``beta``, ``a0`` and ``a1``.
    stress_levels : sequence of float, optional
        Defaults to ``(x0, x1, x2)`` of ``profile``.
    mission_time : float, optional
        In data units.  The reliability table is left out when omitted.
    units : str
        Output unit for times (``raw``, ``hours``, ``minutes``, ...).

    Notes
    -----
    A failing cell is reported with NaN intervals and an ``error`` message;
    the remaining cells are still computed.
    """
    factor = unit_factor(data_unit, units)
    shown_unit = data_unit if units == "raw" else units
    levels = tuple(stress_levels) if stress_levels else (profile.x0, profile.x1, profile.x2)
    requests = [("mttf", None)]
    if mission_time is not None:
        requests.append(("reliability", float(mission_time)))
    requests.append(("quantile", float(quantile_level)))

    tables = {}
    for kind, arg in requests:
        rows = []
        time_valued = kind != "reliability"
        scale = factor if time_valued else 1.0
        for fit in fits:
            params = RegressionParams(float(fit["a0"]), float(fit["a1"]))
            for x in levels:
                row = {"beta": float(fit["beta"]), "stress": float(x)}
                if arg is not None:
                    row["mission_time" if kind == "reliability" else "level"] = arg
                row.update(estimate=math.nan, std_error=math.nan, direct_lower=math.nan, direct_upper=math.nan,
                           transformed_lower=math.nan, transformed_upper=math.nan, clamped=False, error="")
                if not (math.isfinite(params.a0) and math.isfinite(params.a1)):
                    row["error"] = "no fitted parameters"
                    rows.append(row)
                    continue
                try:
                    est = confidence_intervals(kind, params, profile, float(fit["beta"]), n_units,
                                               confidence, argument=arg, x0=x)
                except (SSALTError, ArithmeticError) as exc:
                    row["error"] = str(exc)
                    try:
                        row["estimate"] = characteristic_value(kind, params, x, arg) * scale
                    except (SSALTError, ArithmeticError):
                        pass
                else:
                    row.update(
                        estimate=est.value * scale,
                        std_error=est.std_error * scale,
                        direct_lower=est.ci_direct[0] * scale,
                        direct_upper=est.ci_direct[1] * scale,
                        transformed_lower=est.ci_transformed[0] * scale,
                        transformed_upper=est.ci_transformed[1] * scale,
                        clamped=est.clamped,
                    )
                rows.append(row)
        tables[kind] = rows

    notes = [
        f"Times are in {shown_unit}" + ("" if factor == 1.0 else f" (converted from {data_unit}, factor {factor:.10g})") + ".",
        "Direct intervals are clamped to the natural range; 'clamped' marks cells where that happened.",
        "Transformed intervals use the logit scale for reliability and the log scale for MTTF and quantiles.",
    ]
    if mission_time is not None:
        notes.append(f"Mission time {mission_time:g} is in data units ({data_unit}).")
    else:
        notes.append("No mission time given; reliability table omitted.")
    settings = {
        "fits": [{k: fit[k] for k in ("beta", "a0", "a1")} for fit in fits],
        "profile": _profile_dict(profile),
        "n_units": n_units,
        "stress_levels": list(levels),
        "mission_time": mission_time,
        "quantile_level": quantile_level,
        "confidence": confidence,
        "units": units,
        "data_unit": data_unit,
    }
    provenance = {
        "tool": "ssalt-mdpde",
        "version": _version(),
        "command": "characteristics",
        "source": source,
        "config_hash": _hash(settings),
        "seed": None,
    }
    context = {"profile": _profile_dict(profile), "n_units": n_units, "time_unit": shown_unit}
    return ReportBundle("characteristics", tables, provenance, notes, context)
