"""Append-only behavioral event log.

Every session writes a single JSONL stream: one header line describing the
session, then one event per line. Events carry a gapless sequence number and
a session-relative timestamp in milliseconds; the stream is the sole source
of truth for metrics and replay.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MonotonicityError, ParseError, ValidationError

logger = logging.getLogger(__name__)

EVENT_KINDS = frozenset({
    "impression_enter",
    "impression_exit",
    "scroll",
    "click",
    "refresh",
    "composition_change",
    "dialogue_turn",
    "option_select",
    "free_text",
    "trigger",
    "dismiss",
    "provider_fallback",
    "search_query",
    "survey_response",
    "phase_mark",
})


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class BehaviorEvent:
    seq: int
    session_id: str
    t_ms: int
    kind: str
    payload: dict

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "session_id": self.session_id,
            "t_ms": self.t_ms,
            "kind": self.kind,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BehaviorEvent":
        return cls(
            seq=int(data["seq"]),
            session_id=str(data["session_id"]),
            t_ms=int(data["t_ms"]),
            kind=str(data["kind"]),
            payload=dict(data.get("payload", {})),
        )


@dataclass
class SessionHeader:
    session_id: str
    condition: str
    feed_spec: dict
    seeds: dict
    wall_clock_start: str
    initial_composition: dict
    categories: list
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "header": True,
            "session_id": self.session_id,
            "condition": self.condition,
            "feed_spec": self.feed_spec,
            "seeds": self.seeds,
            "wall_clock_start": self.wall_clock_start,
            "initial_composition": self.initial_composition,
            "categories": self.categories,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionHeader":
        return cls(
            session_id=str(data["session_id"]),
            condition=str(data["condition"]),
            feed_spec=dict(data.get("feed_spec", {})),
            seeds=dict(data.get("seeds", {})),
            wall_clock_start=str(data.get("wall_clock_start", "")),
            initial_composition=dict(data.get("initial_composition", {})),
            categories=list(data.get("categories", [])),
            config=dict(data.get("config", {})),
        )


class EventLogWriter:
    """Durable JSONL sink. Each line is written and flushed before the append
    call returns, so a crash can lose at most the event being written."""

    def __init__(self, path: str | Path, header: SessionHeader):
        self.path = Path(path)
        self._fh = self.path.open("w", encoding="utf-8")
        self._fh.write(canonical_json(header.to_dict()) + "\n")
        self._fh.flush()

    def write(self, event: BehaviorEvent) -> None:
        self._fh.write(canonical_json(event.to_dict()) + "\n")
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class EventStream:
    """In-memory event sequence with append-time integrity checks.

    Invariants enforced on append:
      * kind belongs to the closed event vocabulary
      * t_ms never decreases
      * seq is gapless from 0
      * at most one open impression per item, exits match an open enter
      * phase marks alternate start/end per phase name
    """

    def __init__(self, header: SessionHeader, writer: EventLogWriter | None = None):
        self.header = header
        self.events: list = []
        self.writer = writer
        self._last_t_ms = -1
        self._open_impressions: dict = {}
        self._open_phases: dict = {}

    @property
    def session_id(self) -> str:
        return self.header.session_id

    def last_t_ms(self) -> int:
        return max(self._last_t_ms, 0)

    def append(self, kind: str, payload: dict, t_ms: int) -> BehaviorEvent:
        if kind not in EVENT_KINDS:
            raise ValidationError(f"unknown event kind {kind!r}")
        if t_ms < 0:
            raise ValidationError(f"t_ms must be >= 0, got {t_ms}")
        if t_ms < self._last_t_ms:
            raise MonotonicityError(
                f"t_ms went backwards: {t_ms} < {self._last_t_ms}"
            )
        if kind == "impression_enter":
            item_id = payload.get("item_id")
            if item_id in self._open_impressions:
                raise ValidationError(f"impression already open for item {item_id!r}")
            self._open_impressions[item_id] = t_ms
        elif kind == "impression_exit":
            item_id = payload.get("item_id")
            if item_id not in self._open_impressions:
                raise ValidationError(f"impression_exit without open enter for {item_id!r}")
            del self._open_impressions[item_id]
        elif kind == "phase_mark":
            phase = payload.get("phase")
            mark = payload.get("mark")
            if mark not in ("start", "end"):
                raise ValidationError(f"phase_mark mark must be start or end, got {mark!r}")
            if mark == "start":
                if self._open_phases.get(phase):
                    raise ValidationError(f"phase {phase!r} already started")
                self._open_phases[phase] = True
            else:
                if not self._open_phases.get(phase):
                    raise ValidationError(f"phase {phase!r} ended without start")
                self._open_phases[phase] = False
        event = BehaviorEvent(
            seq=len(self.events),
            session_id=self.session_id,
            t_ms=t_ms,
            kind=kind,
            payload=payload,
        )
        self.events.append(event)
        self._last_t_ms = t_ms
        if self.writer is not None:
            self.writer.write(event)
        return event

    def open_impression_items(self) -> list:
        return list(self._open_impressions)

    def close(self) -> None:
        if self.writer is not None:
            self.writer.close()

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)


def write_stream(stream: EventStream, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(canonical_json(stream.header.to_dict()) + "\n")
        for event in stream.events:
            fh.write(canonical_json(event.to_dict()) + "\n")


def load_stream(path: str | Path) -> EventStream:
    """Read a session log back. A malformed line in the middle of the file is
    an error; a malformed final line is treated as a torn write, logged, and
    skipped."""
    path = Path(path)
    raw_lines = path.read_text(encoding="utf-8").splitlines()
    lines = [(i + 1, line) for i, line in enumerate(raw_lines) if line.strip()]
    if not lines:
        raise ParseError(f"{path}: empty event log", line=0)

    def parse(lineno: int, line: str, last: bool):
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            if last:
                logger.warning("%s line %d: skipping torn trailing record: %s", path, lineno, exc)
                return None
            raise ParseError(f"{path} line {lineno}: corrupt record: {exc}", line=lineno)

    head_no, head_line = lines[0]
    head = parse(head_no, head_line, last=len(lines) == 1)
    if head is None or not head.get("header"):
        raise ParseError(f"{path}: first line is not a session header", line=head_no)
    header = SessionHeader.from_dict(head)

    stream = EventStream(header)
    for idx, (lineno, line) in enumerate(lines[1:], start=1):
        data = parse(lineno, line, last=idx == len(lines) - 1)
        if data is None:
            break
        try:
            event = BehaviorEvent.from_dict(data)
        except (KeyError, TypeError, ValueError) as exc:
            if idx == len(lines) - 1:
                logger.warning("%s line %d: skipping torn trailing record: %s", path, lineno, exc)
                break
            raise ParseError(f"{path} line {lineno}: bad event record: {exc}", line=lineno)
        if event.seq != len(stream.events):
            raise ParseError(
                f"{path} line {lineno}: sequence gap (expected {len(stream.events)}, got {event.seq})",
                line=lineno,
            )
        stream.append(event.kind, event.payload, event.t_ms)
    return stream


def replay(stream: EventStream, consumers) -> None:
    """Feed every event, in order, to each consumer's ``consume`` method."""
    for event in stream.events:
        for consumer in consumers:
            consumer.consume(event)
