"""Bar ingestion: CSV parsing, session calendars, resampling and log returns.

Timestamps are exchange-local and mark the END of a bar.  A bar belongs to a
session window when ``open <= t <= close`` on its calendar date.
"""
from __future__ import annotations

import csv
import math
import re
from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import date, datetime, time
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

Window = tuple[time, time]


class IngestError(ValueError):
    """Raised for malformed bar files and calendar violations."""


def _seconds(t: time) -> int:
    return t.hour * 3600 + t.minute * 60 + t.second


@dataclass(frozen=True)
class Bar:
    timestamp: datetime
    price: float

    def __post_init__(self):
        if not self.price > 0:
            raise IngestError(f"non-positive price {self.price!r} at {self.timestamp}")


@dataclass(frozen=True)
class SessionCalendar:
    """Effective-dated trading session windows.

    ``entries`` is a sequence of ``(effective_date, windows)`` pairs; the entry
    with the latest effective date not after a given date applies to it.
    """

    entries: tuple[tuple[date, tuple[Window, ...]], ...]

    def __post_init__(self):
        if not self.entries:
            raise IngestError("calendar needs at least one entry")
        dates = [d for d, _ in self.entries]
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise IngestError("calendar effective dates must be strictly increasing")
        for eff, windows in self.entries:
            if not windows:
                raise IngestError(f"calendar entry {eff} has no session windows")
            prev_close = -1
            for open_, close in windows:
                o, c = _seconds(open_), _seconds(close)
                if not c > o:
                    raise IngestError(f"window {open_}-{close} is empty")
                if o <= prev_close:
                    raise IngestError(f"windows of entry {eff} overlap or are unordered")
                prev_close = c

    @classmethod
    def default(cls) -> "SessionCalendar":
        """CSI300 futures sessions: 09:15-11:30/13:00-15:15, then 09:30-11:30/13:00-15:00 from 2016."""
        return cls(
            (
                (date(1990, 1, 1), ((time(9, 15), time(11, 30)), (time(13, 0), time(15, 15)))),
                (date(2016, 1, 1), ((time(9, 30), time(11, 30)), (time(13, 0), time(15, 0)))),
            )
        )

    @classmethod
    def parse(cls, spec: dict[str, str]) -> "SessionCalendar":
        """Build from ``{"2016-01-01": "09:30-11:30, 13:00-15:00", ...}``."""
        entries = []
        for key, value in sorted(spec.items()):
            eff = date.fromisoformat(key.strip())
            windows = []
            for chunk in value.split(","):
                m = re.fullmatch(r"\s*(\d{1,2}:\d{2}(?::\d{2})?)\s*-\s*(\d{1,2}:\d{2}(?::\d{2})?)\s*", chunk)
                if m is None:
                    raise IngestError(f"bad session window {chunk!r} for {key}")
                windows.append((time.fromisoformat(_pad(m[1])), time.fromisoformat(_pad(m[2]))))
            entries.append((eff, tuple(windows)))
        return cls(tuple(entries))

    def windows_for(self, day: date) -> tuple[Window, ...]:
        i = bisect_right([d for d, _ in self.entries], day) - 1
        if i < 0:
            raise IngestError(f"no calendar entry covers {day}")
        return self.entries[i][1]

    def window_seconds(self, day: date) -> list[tuple[int, int]]:
        return [(_seconds(o), _seconds(c)) for o, c in self.windows_for(day)]

    def session_seconds(self, day: date) -> int:
        return sum(c - o for o, c in self.window_seconds(day))

    def to_mapping(self) -> dict[str, str]:
        return {
            d.isoformat(): ", ".join(f"{o:%H:%M:%S}-{c:%H:%M:%S}" for o, c in w)
            for d, w in self.entries
        }


def _pad(s: str) -> str:
    return s if len(s.split(":")[0]) == 2 else "0" + s


@dataclass(frozen=True, eq=False)
class BarSeries:
    """Validated intraday bars at a fixed frequency (seconds per bar)."""

    frequency: int
    timestamps: np.ndarray  # datetime64[s]
    prices: np.ndarray  # float64
    day_starts: np.ndarray  # index of the first bar of each trading day
    calendar: SessionCalendar = field(default_factory=SessionCalendar.default)

    def __len__(self) -> int:
        return len(self.prices)

    @property
    def n_days(self) -> int:
        return len(self.day_starts)

    @property
    def dates(self) -> list[date]:
        return [d.astype(object) for d in self.timestamps[self.day_starts].astype("datetime64[D]")]

    @property
    def day_slices(self) -> list[slice]:
        ends = list(self.day_starts[1:]) + [len(self.prices)]
        return [slice(int(a), int(b)) for a, b in zip(self.day_starts, ends)]

    def days(self) -> Iterator[tuple[date, np.ndarray]]:
        for d, sl in zip(self.dates, self.day_slices):
            yield d, self.prices[sl]

    @property
    def bars(self) -> list[Bar]:
        return [Bar(t.astype(datetime), float(p)) for t, p in zip(self.timestamps, self.prices)]


@dataclass(frozen=True, eq=False)
class LogReturnSeries:
    """Intraday log returns; ``day_starts`` index the first return of each day.

    A day with N bars contributes N - 1 returns; no return spans two days.
    """

    values: np.ndarray
    day_starts: np.ndarray
    dates: list[date]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class CsvFormat:
    timestamp_col: int | str = 0
    price_col: int | str = 1
    timestamp_format: str = "auto"  # "auto", "iso", "compact" or a strptime pattern
    header: bool | None = None  # None: detect


_COMPACT = "%Y%m%d %H%M%S"


def _timestamp_parser(fmt: str):
    if fmt == "iso":
        return datetime.fromisoformat
    if fmt == "compact":
        return lambda s: datetime.strptime(s, _COMPACT)
    if fmt != "auto":
        return lambda s: datetime.strptime(s, fmt)

    def auto(s: str) -> datetime:
        if len(s) == 15 and s[8] == " " and s[:8].isdigit():
            return datetime.strptime(s, _COMPACT)
        return datetime.fromisoformat(s)

    return auto


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def parse_bars(
    path: str | Path,
    fmt: CsvFormat | None = None,
    *,
    frequency: int | None = None,
    calendar: SessionCalendar | None = None,
    missing: str = "reject",
) -> BarSeries:
    """Read a ``timestamp,price`` CSV into a validated :class:`BarSeries`.

    ``frequency`` is inferred from the smallest within-window spacing when not
    given.  ``missing`` is ``"reject"`` or ``"forward-fill"``.
    """
    fmt = fmt or CsvFormat()
    parse_ts = _timestamp_parser(fmt.timestamp_format)
    stamps: list[datetime] = []
    prices: list[float] = []
    lines: list[int] = []
    with open(path, newline="") as fh:
        ti, pi = fmt.timestamp_col, fmt.price_col
        first = True
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if first:
                first = False
                header = fmt.header
                if header is None:
                    header = isinstance(pi, str) or not _is_float(row[pi].strip() if pi < len(row) else "")
                if header:
                    names = [c.strip() for c in row]
                    try:
                        ti = names.index(ti) if isinstance(ti, str) else ti
                        pi = names.index(pi) if isinstance(pi, str) else pi
                    except ValueError as exc:
                        raise IngestError(f"line {lineno}: header lacks column ({exc})") from None
                    continue
            if isinstance(ti, str) or isinstance(pi, str):
                raise IngestError("named columns need a header row")
            try:
                ts = parse_ts(row[ti].strip())
                price = float(row[pi])
            except (IndexError, ValueError) as exc:
                raise IngestError(f"line {lineno}: malformed row {row!r} ({exc})") from None
            if not (price > 0 and math.isfinite(price)):
                raise IngestError(f"line {lineno}: non-positive price {row[pi].strip()!r}")
            if stamps and ts <= stamps[-1]:
                raise IngestError(f"line {lineno}: timestamp {ts} not after previous {stamps[-1]}")
            stamps.append(ts)
            prices.append(price)
            lines.append(lineno)
    if not stamps:
        raise IngestError(f"{path}: no bars")
    return build_series(
        np.array(stamps, dtype="datetime64[s]"),
        np.array(prices, dtype=np.float64),
        frequency=frequency,
        calendar=calendar,
        missing=missing,
        line_numbers=lines,
    )


def _window_ids(sec: np.ndarray, windows: list[tuple[int, int]]) -> np.ndarray:
    ids = np.full(len(sec), -1, dtype=np.int64)
    for w, (o, c) in enumerate(windows):
        ids[(sec >= o) & (sec <= c)] = w
    return ids


def build_series(
    timestamps: np.ndarray,
    prices: np.ndarray,
    *,
    frequency: int | None = None,
    calendar: SessionCalendar | None = None,
    missing: str = "reject",
    line_numbers: Sequence[int] | None = None,
) -> BarSeries:
    """Validate raw arrays against the calendar and assemble a BarSeries."""
    if missing not in ("reject", "forward-fill"):
        raise IngestError(f"unknown missing-bar policy {missing!r}")
    calendar = calendar or SessionCalendar.default()
    ts = np.asarray(timestamps, dtype="datetime64[s]")
    px = np.asarray(prices, dtype=np.float64)
    if ts.shape != px.shape or ts.ndim != 1 or len(ts) == 0:
        raise IngestError("timestamps and prices must be equal-length, non-empty 1-D arrays")
    where = (lambda i: f"line {line_numbers[i]}") if line_numbers is not None else (lambda i: f"row {i}")
    bad = np.flatnonzero(~(px > 0) | ~np.isfinite(px))
    if bad.size:
        raise IngestError(f"{where(int(bad[0]))}: non-positive price {px[bad[0]]!r}")
    nonmono = np.flatnonzero(np.diff(ts.astype(np.int64)) <= 0)
    if nonmono.size:
        raise IngestError(f"{where(int(nonmono[0]) + 1)}: non-monotone timestamp {ts[nonmono[0] + 1]}")

    days = ts.astype("datetime64[D]")
    sec = (ts - days).astype(np.int64)
    day_starts = np.flatnonzero(np.r_[True, days[1:] != days[:-1]])
    bounds = list(day_starts) + [len(ts)]

    window = np.empty(len(ts), dtype=np.int64)
    for a, b in zip(bounds, bounds[1:]):
        window[a:b] = _window_ids(sec[a:b], calendar.window_seconds(days[a].astype(object)))
    outside = np.flatnonzero(window < 0)
    if outside.size:
        rows = ", ".join(where(int(i)) for i in outside[:5])
        more = f" (+{outside.size - 5} more)" if outside.size > 5 else ""
        raise IngestError(f"bars outside session windows: {rows}{more}")

    same = (days[1:] == days[:-1]) & (window[1:] == window[:-1])
    gaps = np.diff(sec)[same]
    if frequency is None:
        if gaps.size == 0:
            raise IngestError("cannot infer bar frequency; pass frequency explicitly")
        frequency = int(gaps.min())
    if frequency <= 0:
        raise IngestError(f"frequency must be positive, got {frequency}")

    pair = np.flatnonzero(same)
    off = pair[gaps % frequency != 0]
    if off.size:
        raise IngestError(f"{where(int(off[0]) + 1)}: bar off the {frequency}s grid")
    holes = pair[gaps != frequency]
    if holes.size:
        if missing == "reject":
            i = int(holes[0])
            raise IngestError(f"missing bars between {where(i)} and {where(i + 1)} ({ts[i]} -> {ts[i + 1]})")
        reps = np.ones(len(ts), dtype=np.int64)
        reps[pair] = gaps // frequency
        idx = np.repeat(np.arange(len(ts)), reps)
        first = np.r_[0, np.cumsum(reps)[:-1]]
        step = np.arange(len(idx)) - np.repeat(first, reps)
        ts = ts[idx] + step.astype("timedelta64[s]") * frequency
        px = px[idx]
        days = ts.astype("datetime64[D]")
        day_starts = np.flatnonzero(np.r_[True, days[1:] != days[:-1]])

    ts.setflags(write=False)
    px.setflags(write=False)
    return BarSeries(int(frequency), ts, px, day_starts.astype(np.int64), calendar)


def resample(series: BarSeries, target_frequency: int) -> BarSeries:
    """Keep the last price of each ``target_frequency`` bucket inside every window.

    Buckets are anchored at the window open; a trailing partial bucket is
    stamped at the window close.
    """
    f = series.frequency
    if target_frequency <= 0 or target_frequency % f:
        raise IngestError(f"target frequency {target_frequency}s is not a multiple of {f}s")
    if target_frequency == f:
        return series
    ts = series.timestamps
    days = ts.astype("datetime64[D]")
    sec = (ts - days).astype(np.int64)
    keep_idx = []
    stamp_sec = []
    for sl in series.day_slices:
        windows = series.calendar.window_seconds(days[sl.start].astype(object))
        s = sec[sl]
        w = _window_ids(s, windows)
        opens = np.array([o for o, _ in windows])[w]
        closes = np.array([c for _, c in windows])[w]
        bucket = -((opens - s) // target_frequency)  # ceil((s - open) / target)
        key = w * 10**9 + bucket
        last = np.flatnonzero(np.r_[key[1:] != key[:-1], True])
        keep_idx.append(sl.start + last)
        stamp_sec.append(np.minimum(opens[last] + bucket[last] * target_frequency, closes[last]))
    idx = np.concatenate(keep_idx)
    new_ts = days[idx] + np.concatenate(stamp_sec).astype("timedelta64[s]")
    new_days = new_ts.astype("datetime64[D]")
    starts = np.flatnonzero(np.r_[True, new_days[1:] != new_days[:-1]])
    px = series.prices[idx]
    px.setflags(write=False)
    new_ts.setflags(write=False)
    return BarSeries(int(target_frequency), new_ts, px, starts.astype(np.int64), series.calendar)


def log_returns(series: BarSeries) -> LogReturnSeries:
    """Per-day log returns ln(P[i+1]) - ln(P[i]); overnight moves are excluded."""
    if len(series) < 2:
        raise IngestError("need at least two bars for log returns")
    logp = np.log(series.prices)
    parts = []
    starts = []
    n = 0
    for sl in series.day_slices:
        r = np.diff(logp[sl])
        starts.append(n)
        parts.append(r)
        n += len(r)
    return LogReturnSeries(np.concatenate(parts), np.array(starts, dtype=np.int64), series.dates)


def write_bars(series: BarSeries, path: str | Path) -> None:
    """Write the ``timestamp,price`` CSV that :func:`parse_bars` reads back exactly."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "price"])
        for t, p in zip(series.timestamps.astype(str), series.prices.tolist()):
            w.writerow([t, repr(p)])
