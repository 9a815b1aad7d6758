"""Half-week sessionization and labeled sliding-window extraction.

Weeks split into a Monday-Thursday and a Friday-Sunday session. A session's
value is the number of distinct activities completed in it (0-4). Windows take
12 consecutive session values as features; the following 3 sessions, binarized,
decide the adherence label: high (1) iff at least 2 of them contain activity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, timedelta
from enum import Enum
from pathlib import Path

from .ingestion import AcquisitionEvent, RawDatabase

WINDOW_SESSIONS = 12
FUTURE_SESSIONS = 3
WINDOW_SPAN = WINDOW_SESSIONS + FUTURE_SESSIONS


class SessionKind(Enum):
    MON_THU = "MonThu"
    FRI_SUN = "FriSun"


@dataclass(frozen=True)
class Session:
    start: date
    kind: SessionKind
    value: int  # distinct activities completed, 0..4


@dataclass
class SessionSeries:
    user_id: str
    sessions: list[Session]


@dataclass(frozen=True)
class WindowSample:
    user_id: str
    values: tuple[int, ...]  # S1..S12
    future: tuple[int, ...]  # FS1..FS3, binarized
    label: int  # adherence A
    window_end_date: date  # start date of the 12th session


def round_active_period(first: date, last: date, last_rounding: str = "previous") -> tuple[date, date]:
    """Round the raw active period to week boundaries.

    The first date is rounded back to its Monday. The last date is rounded back
    to the previous Sunday, or forward to the next Sunday with
    ``last_rounding="next"``. The result may be empty (sunday < monday).
    """
    if first > last:
        raise ValueError(f"inverted period: {first} > {last}")
    if last_rounding not in ("previous", "next"):
        raise ValueError(f"last_rounding must be 'previous' or 'next', got {last_rounding!r}")
    monday = first - timedelta(days=first.weekday())
    if last_rounding == "previous":
        sunday = last if last.weekday() == 6 else last - timedelta(days=last.weekday() + 1)
    else:
        sunday = last + timedelta(days=(6 - last.weekday()) % 7)
    return monday, sunday


def build_sessions(user_id: str, events: list[AcquisitionEvent], period: tuple[date, date]) -> SessionSeries:
    """Per-session distinct-activity counts over the rounded period.

    Events outside the period are ignored. An empty period yields no sessions.
    """
    monday, sunday = period
    sessions: list[Session] = []
    if sunday < monday:
        return SessionSeries(user_id=user_id, sessions=sessions)
    by_day: dict[date, set] = {}
    for ev in events:
        by_day.setdefault(ev.timestamp, set()).add(ev.activity)
    week = monday
    while week <= sunday:
        for kind, offsets in ((SessionKind.MON_THU, range(0, 4)), (SessionKind.FRI_SUN, range(4, 7))):
            activities: set = set()
            for off in offsets:
                activities |= by_day.get(week + timedelta(days=off), set())
            start = week if kind is SessionKind.MON_THU else week + timedelta(days=4)
            sessions.append(Session(start=start, kind=kind, value=len(activities)))
        week += timedelta(days=7)
    return SessionSeries(user_id=user_id, sessions=sessions)


def label_adherence(fs: tuple[int, ...] | list[int]) -> int:
    """Adherence from the three binarized future sessions: 0 iff their sum < 2."""
    if len(fs) != FUTURE_SESSIONS:
        raise ValueError(f"expected {FUTURE_SESSIONS} future indicators, got {len(fs)}")
    for v in fs:
        if v not in (0, 1):
            raise ValueError(f"future indicators must be 0 or 1, got {v!r}")
    return 0 if sum(fs) < 2 else 1


def extract_windows(series: SessionSeries) -> list[WindowSample]:
    """All stride-1 windows of 15 consecutive sessions, labeled."""
    values = [s.value for s in series.sessions]
    samples: list[WindowSample] = []
    for i in range(len(values) - WINDOW_SPAN + 1):
        s = tuple(values[i : i + WINDOW_SESSIONS])
        raw_future = values[i + WINDOW_SESSIONS : i + WINDOW_SPAN]
        fs = tuple(1 if v >= 1 else 0 for v in raw_future)
        samples.append(
            WindowSample(
                user_id=series.user_id,
                values=s,
                future=fs,
                label=label_adherence(fs),
                window_end_date=series.sessions[i + WINDOW_SESSIONS - 1].start,
            )
        )
    return samples


def sessionize_database(db: RawDatabase, last_rounding: str = "previous") -> list[SessionSeries]:
    """One SessionSeries per user with acquisitions, in user_id order."""
    out: list[SessionSeries] = []
    for user_id, events in sorted(db.events_by_user().items()):
        first = min(e.timestamp for e in events)
        last = max(e.timestamp for e in events)
        period = round_active_period(first, last, last_rounding)
        out.append(build_sessions(user_id, events, period))
    return out


def windows_for_database(db: RawDatabase, last_rounding: str = "previous") -> list[WindowSample]:
    """Sessionize every user and extract all windows, merged in user_id order."""
    samples: list[WindowSample] = []
    for series in sessionize_database(db, last_rounding):
        samples.extend(extract_windows(series))
    return samples


def write_windows(samples: list[WindowSample], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["user_id"]
            + [f"S{i}" for i in range(1, WINDOW_SESSIONS + 1)]
            + [f"FS{i}" for i in range(1, FUTURE_SESSIONS + 1)]
            + ["A", "window_end_date"]
        )
        for s in samples:
            w.writerow([s.user_id, *s.values, *s.future, s.label, s.window_end_date.isoformat()])


def read_windows(path: str | Path) -> list[WindowSample]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        samples = []
        for row in reader:
            values = tuple(int(row[f"S{i}"]) for i in range(1, WINDOW_SESSIONS + 1))
            fs = tuple(int(row[f"FS{i}"]) for i in range(1, FUTURE_SESSIONS + 1))
            samples.append(
                WindowSample(
                    user_id=row["user_id"],
                    values=values,
                    future=fs,
                    label=int(row["A"]),
                    window_end_date=date.fromisoformat(row["window_end_date"]),
                )
            )
    return samples
