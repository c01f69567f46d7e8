"""Rating-stream parsers, dataset profiles, graph building and snapshots."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
import struct
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, Mapping

import numpy as np

from .graph import TemporalBipartiteGraph

log = logging.getLogger(__name__)

DAY = 86_400
HOUR = 3_600


class ParseError(ValueError):
    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class FormatError(ValueError):
    """The input cannot be interpreted at all (not a per-record problem)."""


class SnapshotError(ValueError):
    pass


@dataclass(frozen=True)
class RatingEvent:
    user_id: str
    item_id: str
    rating: float
    timestamp: int


@dataclass(frozen=True)
class DatasetProfile:
    name: str
    rating_scale: tuple[float, float]
    critical_window: int
    lookback_window: int
    popular_min_ratings: int
    popular_min_avg: float
    implicit_rating: float | None = None
    baseline_score: float = 5e-4

    def __post_init__(self) -> None:
        lo, hi = self.rating_scale
        if lo > hi:
            raise ValueError(f"bad rating scale {self.rating_scale}")
        if self.critical_window <= 0 or self.lookback_window <= 0:
            raise ValueError("critical_window and lookback_window must be positive")
        if self.popular_min_ratings < 1:
            raise ValueError("popular_min_ratings must be at least 1")
        if not lo <= self.popular_min_avg <= hi:
            raise ValueError(f"popular_min_avg {self.popular_min_avg} outside scale {self.rating_scale}")
        if self.implicit_rating is not None and not lo <= self.implicit_rating <= hi:
            raise ValueError(f"implicit_rating {self.implicit_rating} outside scale {self.rating_scale}")
        if not 0.0 < self.baseline_score < 0.5:
            raise ValueError("baseline_score must lie in (0, 0.5)")

    def with_overrides(self, **changes) -> "DatasetProfile":
        return replace(self, **changes)


PROFILES: dict[str, DatasetProfile] = {
    "movielens": DatasetProfile(
        name="movielens",
        rating_scale=(1.0, 5.0),
        critical_window=30 * DAY,
        lookback_window=10 * DAY,
        popular_min_ratings=29,
        popular_min_avg=4.0,
    ),
    "digg": DatasetProfile(
        name="digg",
        rating_scale=(1.0, 5.0),
        implicit_rating=5.0,
        critical_window=48 * HOUR,
        lookback_window=6 * HOUR,
        popular_min_ratings=6,
        popular_min_avg=5.0,
    ),
}


@dataclass
class ParseResult:
    """Events of one parse plus the lenient-mode bookkeeping."""

    events: list[RatingEvent] = field(default_factory=list)
    data_lines: int = 0
    skipped: int = 0
    errors: list[ParseError] = field(default_factory=list)

    def __iter__(self) -> Iterator[RatingEvent]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __getitem__(self, i):
        return self.events[i]


def _lines(source: BinaryIO | bytes | str | Path) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            yield from _lines(fh)
        return
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    for raw in source:
        yield raw.decode("utf-8").rstrip("\r\n")


def _rating(text: str, scale: tuple[float, float] | None) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"rating {text!r} is not finite")
    if scale is not None and not scale[0] <= value <= scale[1]:
        raise ValueError(f"rating {value} outside scale [{scale[0]}, {scale[1]}]")
    return value


def _timestamp(text: str) -> int:
    value = int(text)
    if value < 0:
        raise ValueError(f"negative timestamp {value}")
    return value


class _Collector:
    def __init__(self, strict: bool) -> None:
        self.strict = strict
        self.result = ParseResult()

    def fail(self, line_no: int, message: str) -> None:
        err = ParseError(line_no, message)
        if self.strict:
            raise err
        self.result.skipped += 1
        self.result.errors.append(err)


def parse_movielens(
    source: BinaryIO | bytes | str | Path,
    *,
    strict: bool = True,
    scale: tuple[float, float] | None = (1.0, 5.0),
) -> ParseResult:
    """Parse ``UserID::MovieID::Rating::Timestamp`` lines.

    Blank lines are not data lines.  In lenient mode malformed records are
    skipped and recorded in ``ParseResult.errors``.
    """
    col = _Collector(strict)
    for line_no, line in enumerate(_lines(source), start=1):
        if not line.strip():
            continue
        col.result.data_lines += 1
        parts = line.strip().split("::")
        if len(parts) != 4:
            col.fail(line_no, f"expected 4 '::'-separated fields, got {len(parts)}")
            continue
        user, item, rating, ts = parts
        try:
            event = RatingEvent(user, item, _rating(rating, scale), _timestamp(ts))
        except ValueError as exc:
            col.fail(line_no, str(exc))
            continue
        col.result.events.append(event)
    return col.result


def parse_konect(
    source: BinaryIO | bytes | str | Path,
    profile: DatasetProfile,
    *,
    strict: bool = True,
) -> ParseResult:
    """Parse a KONECT ``out.*`` edge list: ``user item [weight] timestamp``.

    With ``profile.implicit_rating`` set every event gets that rating and the
    weight column is ignored; otherwise the weight column is the rating.
    A data line without a timestamp column is a FormatError in either mode.
    """
    col = _Collector(strict)
    for line_no, line in enumerate(_lines(source), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        col.result.data_lines += 1
        parts = stripped.split()
        if len(parts) < 3:
            raise FormatError(f"line {line_no}: no timestamp column; temporal analysis needs one")
        if len(parts) > 4:
            col.fail(line_no, f"expected at most 4 columns, got {len(parts)}")
            continue
        user, item, ts = parts[0], parts[1], parts[-1]
        try:
            if profile.implicit_rating is not None:
                rating = profile.implicit_rating
            elif len(parts) == 4:
                rating = _rating(parts[2], profile.rating_scale)
            else:
                raise ValueError("no weight column and the profile has no implicit rating")
            event = RatingEvent(user, item, float(rating), _timestamp(ts))
        except ValueError as exc:
            col.fail(line_no, str(exc))
            continue
        col.result.events.append(event)
    return col.result


DEFAULT_COLUMNS = {"user": "user", "item": "item", "rating": "rating", "timestamp": "timestamp"}


def parse_generic_csv(
    source: BinaryIO | bytes | str | Path,
    columns: Mapping[str, str] = DEFAULT_COLUMNS,
    *,
    strict: bool = True,
    scale: tuple[float, float] | None = None,
    implicit_rating: float | None = None,
) -> ParseResult:
    """Parse a headed CSV; ``columns`` maps user/item/rating/timestamp to header names.

    The rating mapping may be omitted when ``implicit_rating`` is given.
    """
    need = ["user", "item", "timestamp"] + (["rating"] if implicit_rating is None else [])
    unknown = set(columns) - set(DEFAULT_COLUMNS)
    if unknown:
        raise FormatError(f"unknown column roles {sorted(unknown)}")
    missing_roles = [r for r in need if r not in columns]
    if missing_roles:
        raise FormatError(f"column map lacks roles {missing_roles}")
    reader = csv.reader(_lines(source))
    col = _Collector(strict)
    try:
        header = next(reader)
    except StopIteration:
        return col.result
    index = {name.strip(): i for i, name in enumerate(header)}
    absent = [columns[r] for r in need if columns[r] not in index]
    if absent:
        raise FormatError(f"header {header} lacks mapped columns {absent}")
    pos = {r: index[columns[r]] for r in need}
    for row in reader:
        line_no = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        col.result.data_lines += 1
        try:
            user = row[pos["user"]].strip()
            item = row[pos["item"]].strip()
            if implicit_rating is None:
                rating = _rating(row[pos["rating"]].strip(), scale)
            else:
                rating = float(implicit_rating)
            event = RatingEvent(user, item, rating, _timestamp(row[pos["timestamp"]].strip()))
        except (IndexError, ValueError) as exc:
            col.fail(line_no, str(exc) or "short row")
            continue
        col.result.events.append(event)
    return col.result


def natural_key(ident: str) -> tuple:
    """Numeric ids sort numerically, before any non-numeric id."""
    return (0, int(ident), ident) if ident.isdigit() else (1, 0, ident)


def build_graph(events: Iterable[RatingEvent]) -> TemporalBipartiteGraph:
    """One edge per distinct (user, item); a repeated pair keeps its earliest event.

    Node indices follow the natural order of the external ids, so index order
    and id order agree.
    """
    best: dict[tuple[str, str], RatingEvent] = {}
    duplicates = 0
    for ev in events:
        key = (ev.user_id, ev.item_id)
        prev = best.get(key)
        if prev is None:
            best[key] = ev
            continue
        duplicates += 1
        if ev.timestamp < prev.timestamp:
            best[key] = ev
    if duplicates:
        log.info("dropped %d duplicate (user, item) ratings", duplicates)
    users = sorted({u for u, _ in best}, key=natural_key)
    items = sorted({i for _, i in best}, key=natural_key)
    upos = {u: k for k, u in enumerate(users)}
    ipos = {i: k for k, i in enumerate(items)}
    kept = list(best.values())
    return TemporalBipartiteGraph(
        users,
        items,
        [upos[e.user_id] for e in kept],
        [ipos[e.item_id] for e in kept],
        [e.rating for e in kept],
        [e.timestamp for e in kept],
        duplicates=duplicates,
    )


# -- snapshots ---------------------------------------------------------------
#
# layout (little endian):
#   magic "RNGSNAP\0" | u16 version | u32 header length | header JSON (utf-8)
#   | int64 users[E] | int64 items[E] | float64 ratings[E] | int64 times[E]
#   | u32 crc32 of everything before it

SNAPSHOT_MAGIC = b"RNGSNAP\x00"
SNAPSHOT_VERSION = 1


def dumps_snapshot(graph: TemporalBipartiteGraph) -> bytes:
    header = json.dumps(
        {
            "user_ids": list(graph.user_ids),
            "item_ids": list(graph.item_ids),
            "edges": graph.edge_count,
            "duplicates": graph.duplicates,
        },
        separators=(",", ":"),
    ).encode("utf-8")
    parts = [
        SNAPSHOT_MAGIC,
        struct.pack("<HI", SNAPSHOT_VERSION, len(header)),
        header,
        graph.edge_user.astype("<i8").tobytes(),
        graph.edge_item.astype("<i8").tobytes(),
        graph.edge_rating.astype("<f8").tobytes(),
        graph.edge_time.astype("<i8").tobytes(),
    ]
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def loads_snapshot(data: bytes) -> TemporalBipartiteGraph:
    if len(data) < len(SNAPSHOT_MAGIC) + 6 or not data.startswith(SNAPSHOT_MAGIC):
        raise SnapshotError("not a graph snapshot (bad magic)")
    off = len(SNAPSHOT_MAGIC)
    version, hlen = struct.unpack_from("<HI", data, off)
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"snapshot version {version} unsupported (expected {SNAPSHOT_VERSION})")
    off += 6
    if len(data) < off + hlen + 4:
        raise SnapshotError("snapshot truncated in header")
    try:
        header = json.loads(data[off:off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"corrupt snapshot header: {exc}") from None
    off += hlen
    n = int(header["edges"])
    expected = off + 32 * n + 4
    if len(data) != expected:
        raise SnapshotError(f"snapshot size {len(data)} != expected {expected} (truncated or padded)")
    (crc,) = struct.unpack_from("<I", data, expected - 4)
    if crc != zlib.crc32(data[:expected - 4]):
        raise SnapshotError("snapshot checksum mismatch")

    def arr(k: int, dtype: str) -> np.ndarray:
        return np.frombuffer(data, dtype=dtype, count=n, offset=off + 8 * n * k)

    return TemporalBipartiteGraph(
        header["user_ids"],
        header["item_ids"],
        arr(0, "<i8"),
        arr(1, "<i8"),
        arr(2, "<f8"),
        arr(3, "<i8"),
        duplicates=header["duplicates"],
    )


def save_snapshot(graph: TemporalBipartiteGraph, path: str | Path) -> None:
    Path(path).write_bytes(dumps_snapshot(graph))


def load_snapshot(path: str | Path) -> TemporalBipartiteGraph:
    return loads_snapshot(Path(path).read_bytes())


_DURATION = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([smhdw]?)\s*$")
_UNIT = {"": 1, "s": 1, "m": 60, "h": HOUR, "d": DAY, "w": 7 * DAY}


def parse_duration(text: str | int) -> int:
    """``'48h'``, ``'30d'``, ``'90m'`` or plain seconds to integer seconds."""
    if isinstance(text, int):
        return text
    m = _DURATION.match(text)
    if not m:
        raise ValueError(f"cannot parse duration {text!r}")
    return int(round(float(m.group(1)) * _UNIT[m.group(2)]))
