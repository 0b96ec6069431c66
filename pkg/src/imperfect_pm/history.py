"""Failure / maintenance / censoring event logs of multi-component fleets.

The CSV layout is::

    unit_id,component_id,event_type,time_hours
    U1,actuator,maintenance,4320
    U1,actuator,failure,5000
    U1,actuator,censor,8760

Every (unit, component) pair needs exactly one ``censor`` row. Maintenance is
instantaneous. A failure stamped exactly at a maintenance time is assigned to
the period that maintenance closes.
"""

from __future__ import annotations

import csv
import io
from bisect import bisect_left
from collections import defaultdict
from dataclasses import dataclass, field

from .exceptions import (
    DuplicateCensor,
    EventAfterCensor,
    EventLogError,
    MalformedRow,
    MissingCensor,
    NegativeTime,
    NonMonotonicTimes,
    UnknownEventType,
)

HEADER = ("unit_id", "component_id", "event_type", "time_hours")
EVENT_TYPES = ("failure", "maintenance", "censor")

HOURS_PER = {"hours": 1.0, "days": 24.0, "years": 8760.0}


def time_unit_convert(value, from_unit, to_unit):
    """Convert a duration between ``hours``, ``days`` and ``years`` (365 days)."""
    try:
        return value * HOURS_PER[from_unit] / HOURS_PER[to_unit]
    except KeyError as exc:
        raise ValueError(f"unknown time unit {exc.args[0]!r}; expected one of {sorted(HOURS_PER)}") from None


@dataclass(frozen=True)
class EventRecord:
    unit_id: str
    component_id: str
    event_type: str
    time: float

    def __post_init__(self):
        if self.event_type not in EVENT_TYPES:
            raise UnknownEventType(f"unknown event type {self.event_type!r}")
        if not self.time >= 0:
            raise NegativeTime(f"negative or invalid time {self.time!r}")


@dataclass(frozen=True)
class ComponentHistory:
    """Observed history of one component on one unit.

    Attributes
    ----------
    maintenance_times : tuple of float
        Strictly increasing preventive maintenance epochs (hours).
    failures_by_period : tuple of tuple of float
        ``len(maintenance_times) + 1`` groups of failure times. Group ``m``
        (0-based) holds the failures in ``(tau_m, tau_{m+1}]`` with
        ``tau_0 = 0`` and the last group bounded by ``censor_time``.
    censor_time : float
        End of observation (hours).
    unit_id : str
        Identifier of the unit the component belongs to.
    """

    maintenance_times: tuple
    failures_by_period: tuple
    censor_time: float
    unit_id: str = ""

    def __post_init__(self):
        taus = tuple(float(t) for t in self.maintenance_times)
        groups = tuple(tuple(sorted(float(t) for t in g)) for g in self.failures_by_period)
        object.__setattr__(self, "maintenance_times", taus)
        object.__setattr__(self, "failures_by_period", groups)
        object.__setattr__(self, "censor_time", float(self.censor_time))
        if not self.censor_time > 0:
            raise NegativeTime(f"censor time must be positive, got {self.censor_time}")
        if any(t < 0 for t in taus):
            raise NegativeTime("negative maintenance time")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise NonMonotonicTimes("maintenance times must be strictly increasing")
        if taus and taus[-1] >= self.censor_time:
            raise EventAfterCensor("maintenance at or after the censoring time")
        if len(groups) != len(taus) + 1:
            raise ValueError(f"expected {len(taus) + 1} failure groups, got {len(groups)}")
        bounds = (0.0,) + taus + (self.censor_time,)
        for m, g in enumerate(groups):
            lo, hi = bounds[m], bounds[m + 1]
            for t in g:
                if not lo < t <= hi:
                    raise ValueError(f"failure at {t} outside period {m + 1} ({lo}, {hi}]")

    @classmethod
    def from_failures(cls, maintenance_times, failure_times, censor_time, unit_id=""):
        """Build a history by assigning flat failure times to their periods."""
        taus = sorted(float(t) for t in maintenance_times)
        groups = [[] for _ in range(len(taus) + 1)]
        for t in failure_times:
            t = float(t)
            if t < 0:
                raise NegativeTime(f"negative failure time {t}")
            if t > censor_time:
                raise EventAfterCensor(f"failure at {t} after censoring time {censor_time}")
            # bisect_left: a failure at tau_m stays in the period tau_m closes
            groups[bisect_left(taus, t)].append(t)
        return cls(tuple(taus), tuple(tuple(g) for g in groups), censor_time, unit_id)

    @property
    def n_periods(self):
        return len(self.maintenance_times) + 1

    @property
    def failure_times(self):
        return tuple(t for g in self.failures_by_period for t in g)

    @property
    def n_failures(self):
        return sum(len(g) for g in self.failures_by_period)

    def period_bounds(self):
        """List of ``(start, end)`` for every period."""
        b = (0.0,) + self.maintenance_times + (self.censor_time,)
        return list(zip(b[:-1], b[1:]))


@dataclass(frozen=True)
class FleetHistory:
    """Histories grouped by component id, one entry per unit."""

    components: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.components:
            raise ValueError("fleet has no components")
        for cid, units in self.components.items():
            if not cid:
                raise ValueError("empty component id")
            if len(units) < 1:
                raise ValueError(f"component {cid!r} has no units")

    def component_ids(self):
        return sorted(self.components)

    def __getitem__(self, component_id):
        return self.components[component_id]


def parse_event_log(text, unit="hours"):
    """Parse CSV text into a :class:`FleetHistory`.

    Parameters
    ----------
    text : str
        CSV content with the header ``unit_id,component_id,event_type,time_hours``.
    unit : {"hours", "days", "years"}
        Unit of the time column; values are converted to hours.

    Raises
    ------
    EventLogError
        A subclass naming the problem and, when it is row-specific, the line.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow("empty event log", line=1) from None
    if tuple(h.strip() for h in header) != HEADER:
        raise MalformedRow(f"expected header {','.join(HEADER)!r}, got {','.join(header)!r}", line=1)

    # (unit, component) -> {"maintenance": [(t, line)], "failure": [...], "censor": [...]}
    groups = defaultdict(lambda: {k: [] for k in EVENT_TYPES})
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise MalformedRow(f"expected 4 fields, got {len(row)}", line=line)
        unit_id, comp, etype, raw = (c.strip() for c in row)
        if not unit_id or not comp:
            raise MalformedRow("empty unit or component id", line=line)
        if etype not in EVENT_TYPES:
            raise UnknownEventType(f"unknown event type {etype!r}", line=line)
        try:
            t = float(raw)
        except ValueError:
            raise MalformedRow(f"unparseable time {raw!r}", line=line) from None
        if t != t or t in (float("inf"), float("-inf")):
            raise MalformedRow(f"non-finite time {raw!r}", line=line)
        if t < 0:
            raise NegativeTime(f"negative time {raw}", line=line)
        groups[(unit_id, comp)][etype].append((time_unit_convert(t, unit, "hours"), line))

    if not groups:
        raise MalformedRow("event log has no rows", line=2)

    components = defaultdict(list)
    for (unit_id, comp), ev in sorted(groups.items()):
        censors = ev["censor"]
        if not censors:
            raise MissingCensor(f"unit {unit_id!r}, component {comp!r} has no censor row")
        if len(censors) > 1:
            raise DuplicateCensor(
                f"unit {unit_id!r}, component {comp!r} has {len(censors)} censor rows", line=censors[1][1]
            )
        censor, _ = censors[0]
        maint = sorted(ev["maintenance"])
        for (a, _), (b, line) in zip(maint, maint[1:]):
            if b <= a:
                raise NonMonotonicTimes(f"duplicate maintenance time {b} for unit {unit_id!r}", line=line)
        for t, line in maint + ev["failure"]:
            if t > censor or (t == censor and (t, line) in maint):
                raise EventAfterCensor(f"event at {t} not before censoring time {censor}", line=line)
        try:
            hist = ComponentHistory.from_failures(
                [t for t, _ in maint], [t for t, _ in ev["failure"]], censor, unit_id=unit_id
            )
        except EventLogError:
            raise
        except ValueError as exc:
            raise MalformedRow(f"unit {unit_id!r}, component {comp!r}: {exc}") from exc
        components[comp].append(hist)
    return FleetHistory(dict(components))


def read_event_log(path, unit="hours"):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_event_log(fh.read(), unit=unit)


def to_csv(fleet):
    """Serialize a fleet back to CSV text (times in hours, ``repr`` precision)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for comp in fleet.component_ids():
        for idx, hist in enumerate(fleet[comp]):
            uid = hist.unit_id or f"U{idx + 1}"
            events = [(t, "maintenance") for t in hist.maintenance_times]
            events += [(t, "failure") for t in hist.failure_times]
            # failure before maintenance at equal stamps; keeps the boundary rule on re-read
            events.sort(key=lambda e: (e[0], e[1] != "failure"))
            events.append((hist.censor_time, "censor"))
            for t, kind in events:
                writer.writerow((uid, comp, kind, repr(float(t))))
    return buf.getvalue()
