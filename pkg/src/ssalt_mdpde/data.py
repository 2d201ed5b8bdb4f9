"""Observed step-stress data, the dataset file format and the bundled dataset.

Dataset file format
-------------------
A UTF-8 CSV file.  Lines starting with ``#`` form the metadata block, one
``# key: value`` pair per line.  Required keys are ``N``, ``tau1``, ``tau2``,
``x1``, ``x2``; optional keys are ``x0`` (default 0) and ``time_unit``
(default ``raw``).  After the metadata comes a header row ``time,stage`` (or
just ``time``) and one failure per row.  An empty ``stage`` cell, or a missing
column, means the stage is inferred from ``time < tau1``.  Times are absolute
(measured from the start of the test)::

    # N: 100
    # tau1: 900
    # tau2: 1096
    # x1: 100
    # x2: 150
    # x0: 25
    # time_unit: s
    time,stage
    32,1
    ...
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NonexistenceError
from .model import StressProfile

__all__ = [
    "ExperimentData",
    "DatasetFile",
    "read_dataset",
    "write_dataset",
    "parse_dataset",
    "format_dataset",
    "electronic_components",
    "ELECTRONIC_STAGE1",
    "ELECTRONIC_STAGE2_OFFSETS",
]


@dataclass(frozen=True, eq=False)
class ExperimentData:
    """Failure times of one step-stress experiment.

    Parameters
    ----------
    stage1_times : array_like
        Failure times observed under the first stress level.
    stage2_times : array_like
        Failure times observed under the second stress level (absolute times,
        not offsets from ``tau1``).
    n_units : int
        Total number of units on test, failed or censored.
    """

    stage1_times: np.ndarray
    stage2_times: np.ndarray
    n_units: int

    def __post_init__(self):
        s1 = np.sort(np.asarray(self.stage1_times, dtype=float).ravel())
        s2 = np.sort(np.asarray(self.stage2_times, dtype=float).ravel())
        s1.flags.writeable = False
        s2.flags.writeable = False
        object.__setattr__(self, "stage1_times", s1)
        object.__setattr__(self, "stage2_times", s2)
        object.__setattr__(self, "n_units", int(self.n_units))
        if self.n_units < 0:
            raise DomainError("n_units must be non-negative")
        if s1.size + s2.size > self.n_units:
            raise DomainError(
                f"n1 + n2 = {s1.size + s2.size} exceeds the number of units N = {self.n_units}"
            )
        if (s1.size and s1[0] < 0) or (s2.size and s2[0] < 0):
            raise DomainError("failure times must be non-negative")
        if not (np.all(np.isfinite(s1)) and np.all(np.isfinite(s2))):
            raise DomainError("failure times must be finite")

    @property
    def n1(self) -> int:
        return int(self.stage1_times.size)

    @property
    def n2(self) -> int:
        return int(self.stage2_times.size)

    @property
    def n_censored(self) -> int:
        return self.n_units - self.n1 - self.n2

    def __eq__(self, other):
        if not isinstance(other, ExperimentData):
            return NotImplemented
        return (
            self.n_units == other.n_units
            and np.array_equal(self.stage1_times, other.stage1_times)
            and np.array_equal(self.stage2_times, other.stage2_times)
        )

    __hash__ = None

    @classmethod
    def from_times(cls, times, profile: StressProfile, n_units: int | None = None) -> "ExperimentData":
        """Split raw lifetimes into stages and apply Type-I censoring.

        Times equal to ``tau1`` go to stage 2; times at or beyond ``tau2`` are
        censored.  ``n_units`` defaults to the number of supplied times.
        """
        t = np.asarray(times, dtype=float).ravel()
        n = t.size if n_units is None else n_units
        observed = t[t < profile.tau2]
        return cls(observed[observed < profile.tau1], observed[observed >= profile.tau1], n)

    def scaled(self, c: float) -> "ExperimentData":
        """Same experiment with every time multiplied by ``c``."""
        return ExperimentData(self.stage1_times * c, self.stage2_times * c, self.n_units)

    def replicated(self, k: int) -> "ExperimentData":
        """Dataset with every unit (failed or censored) repeated ``k`` times."""
        return ExperimentData(
            np.repeat(self.stage1_times, k), np.repeat(self.stage2_times, k), self.n_units * k
        )

    def check_existence(self) -> None:
        """Raise :class:`NonexistenceError` unless both stages have failures."""
        empty = [name for name, n in (("stage 1", self.n1), ("stage 2", self.n2)) if n == 0]
        if empty:
            raise NonexistenceError(
                "the estimator needs at least one failure in each stage; no failures in "
                + " and ".join(empty)
            )

    def ordering_issues(self, profile: StressProfile) -> list[str]:
        """Describe every time that falls outside its stage interval."""
        issues = []
        for t in self.stage1_times[self.stage1_times >= profile.tau1]:
            issues.append(f"stage-1 time {t:g} is not below tau1={profile.tau1:g}")
        for t in self.stage2_times[(self.stage2_times < profile.tau1) | (self.stage2_times >= profile.tau2)]:
            issues.append(f"stage-2 time {t:g} is outside [tau1, tau2) = [{profile.tau1:g}, {profile.tau2:g})")
        return issues


@dataclass(frozen=True)
class DatasetFile:
    """A parsed dataset file: the experiment, its design and a time-unit label."""

    data: ExperimentData
    profile: StressProfile
    time_unit: str = "raw"
    metadata: dict = field(default_factory=dict)


_REQUIRED_KEYS = ("N", "tau1", "tau2", "x1", "x2")


def parse_dataset(text: str, source: str = "<string>") -> DatasetFile:
    """Parse the dataset CSV format described in the module docstring."""
    meta: dict[str, str] = {}
    body_lines: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if not sep:
                raise DomainError(f"{source}:{lineno}: metadata line must look like '# key: value'")
            meta[key.strip()] = value.strip()
        else:
            body_lines.append((lineno, raw))

    missing = [k for k in _REQUIRED_KEYS if k not in meta]
    if missing:
        raise DomainError(f"{source}: missing metadata keys: {', '.join(missing)}")
    try:
        n_units = int(meta["N"])
        profile = StressProfile(
            x1=float(meta["x1"]),
            x2=float(meta["x2"]),
            tau1=float(meta["tau1"]),
            tau2=float(meta["tau2"]),
            x0=float(meta.get("x0", 0.0)),
        )
    except ValueError as exc:
        raise DomainError(f"{source}: bad metadata: {exc}") from exc

    if not body_lines:
        raise DomainError(f"{source}: no header row")
    header_lineno, header = body_lines[0]
    columns = [c.strip().lower() for c in next(csv.reader([header]))]
    if "time" not in columns:
        raise DomainError(f"{source}:{header_lineno}: header must contain a 'time' column")
    i_time = columns.index("time")
    i_stage = columns.index("stage") if "stage" in columns else None

    stage1, stage2 = [], []
    for lineno, raw in body_lines[1:]:
        row = next(csv.reader([raw]))
        try:
            t = float(row[i_time])
        except (ValueError, IndexError):
            raise DomainError(f"{source}:{lineno}: cannot read a failure time from {raw!r}") from None
        if not math.isfinite(t) or t < 0:
            raise DomainError(f"{source}:{lineno}: failure time must be finite and non-negative")
        stage_cell = row[i_stage].strip() if i_stage is not None and i_stage < len(row) else ""
        if stage_cell == "":
            if t >= profile.tau2:
                raise DomainError(f"{source}:{lineno}: failure at {t:g} is not before tau2={profile.tau2:g}")
            stage = 1 if t < profile.tau1 else 2
        elif stage_cell in ("1", "2"):
            stage = int(stage_cell)
        else:
            raise DomainError(f"{source}:{lineno}: stage must be 1, 2 or empty, got {stage_cell!r}")
        (stage1 if stage == 1 else stage2).append(t)

    for name, values in (("stage 1", stage1), ("stage 2", stage2)):
        if any(b < a for a, b in zip(values, values[1:])):
            raise DomainError(f"{source}: {name} times are not sorted")
    try:
        data = ExperimentData(stage1, stage2, n_units)
    except DomainError as exc:
        raise DomainError(f"{source}: {exc}") from exc
    return DatasetFile(data, profile, meta.get("time_unit", "raw"), meta)


def read_dataset(path) -> DatasetFile:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_dataset(fh.read(), source=os.fspath(path))


def format_dataset(data: ExperimentData, profile: StressProfile, time_unit: str = "raw") -> str:
    """Serialize to the dataset CSV format; ``parse_dataset`` inverts it exactly."""
    buf = io.StringIO()
    buf.write(f"# N: {data.n_units}\n")
    for key in ("tau1", "tau2", "x1", "x2", "x0"):
        buf.write(f"# {key}: {getattr(profile, key)!r}\n")
    buf.write(f"# time_unit: {time_unit}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time", "stage"])
    for t in data.stage1_times:
        writer.writerow([repr(float(t)), 1])
    for t in data.stage2_times:
        writer.writerow([repr(float(t)), 2])
    return buf.getvalue()


def write_dataset(path, data: ExperimentData, profile: StressProfile, time_unit: str = "raw") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_dataset(data, profile, time_unit))


# Electronic components under two temperatures (seconds).  Stage-2 values are
# listed as offsets from the stress change.
ELECTRONIC_STAGE1 = (
    32, 54, 59, 86, 117, 123, 213, 267, 268, 273, 299, 311, 321, 333, 339,
    386, 408, 422, 435, 437, 476, 518, 570, 632, 666, 697, 796, 854, 858, 910,
)
ELECTRONIC_STAGE2_OFFSETS = (
    16, 19, 21, 36, 37, 63, 70, 75, 83, 95, 100, 106, 110, 113, 116, 135, 136, 149, 172, 186,
)
ELECTRONIC_PROFILE = StressProfile(x1=100.0, x2=150.0, tau1=900.0, tau2=1096.0, x0=25.0)


def electronic_components() -> DatasetFile:
    """The bundled electronic-components dataset, N = 100 units at 100/150 degC.

    Stage labels are kept as listed, so the last stage-1 failure (910 s) lies
    past the stress change at 900 s; stage-2 offsets are anchored at 900 s.
    """
    profile = ELECTRONIC_PROFILE
    stage2 = [profile.tau1 + off for off in ELECTRONIC_STAGE2_OFFSETS]
    data = ExperimentData(list(ELECTRONIC_STAGE1), stage2, 100)
    return DatasetFile(data, profile, "s", {"source": "electronic components", "embedded": "true"})
