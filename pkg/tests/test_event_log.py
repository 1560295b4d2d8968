from __future__ import annotations

import json

import pytest

from feedlab.errors import MonotonicityError, ParseError, ValidationError
from feedlab.event_log import (
    EVENT_KINDS,
    BehaviorEvent,
    EventLogWriter,
    EventStream,
    SessionHeader,
    canonical_json,
    load_stream,
    replay,
    write_stream,
)


def make_header(session_id="s1", condition="FEED"):
    return SessionHeader(
        session_id=session_id,
        condition=condition,
        feed_spec={"dominant_categories": ["food"], "concentration": 0.8, "length": 35},
        seeds={"feed": 1},
        wall_clock_start="1970-01-01T00:00:00+00:00",
        initial_composition={"food": 28, "travel": 7},
        categories=[["food", "Food"], ["travel", "Travel"]],
        config={"blend_rate": 0.25},
    )


def test_vocabulary_is_closed():
    assert len(EVENT_KINDS) == 15
    assert "impression_enter" in EVENT_KINDS
    assert "provider_fallback" in EVENT_KINDS
    stream = EventStream(make_header())
    with pytest.raises(ValidationError):
        stream.append("page_view", {}, 0)


def test_append_assigns_gapless_seq():
    stream = EventStream(make_header())
    for i in range(5):
        stream.append("scroll", {"position_px": i}, i * 10)
    assert [e.seq for e in stream.events] == [0, 1, 2, 3, 4]
    assert stream.last_t_ms() == 40


def test_append_rejects_time_going_backwards():
    stream = EventStream(make_header())
    stream.append("scroll", {"position_px": 0}, 100)
    stream.append("scroll", {"position_px": 1}, 100)  # equal is fine
    with pytest.raises(MonotonicityError):
        stream.append("scroll", {"position_px": 2}, 99)
    with pytest.raises(ValidationError):
        stream.append("scroll", {"position_px": 2}, -1)


def test_append_impression_pairing():
    stream = EventStream(make_header())
    stream.append("impression_enter", {"item_id": "a"}, 0)
    with pytest.raises(ValidationError):
        stream.append("impression_enter", {"item_id": "a"}, 1)
    with pytest.raises(ValidationError):
        stream.append("impression_exit", {"item_id": "b"}, 1)
    stream.append("impression_exit", {"item_id": "a"}, 2)
    stream.append("impression_enter", {"item_id": "a"}, 3)
    assert stream.open_impression_items() == ["a"]


def test_append_phase_alternation():
    stream = EventStream(make_header())
    stream.append("phase_mark", {"phase": "warm_up", "mark": "start"}, 0)
    with pytest.raises(ValidationError):
        stream.append("phase_mark", {"phase": "warm_up", "mark": "start"}, 1)
    stream.append("phase_mark", {"phase": "warm_up", "mark": "end"}, 2)
    with pytest.raises(ValidationError):
        stream.append("phase_mark", {"phase": "exploration", "mark": "end"}, 3)
    with pytest.raises(ValidationError):
        stream.append("phase_mark", {"phase": "exploration", "mark": "middle"}, 3)


def test_canonical_json_is_stable():
    text = canonical_json({"b": 1, "a": {"d": 2, "c": [1, 2]}})
    assert text == '{"a":{"c":[1,2],"d":2},"b":1}'
    assert canonical_json({"title": "露营 guide"}) == '{"title":"露营 guide"}'


def test_round_trip_is_byte_identical(tmp_path):
    stream = EventStream(make_header())
    stream.append("impression_enter", {"item_id": "a", "category": "food"}, 5)
    stream.append("impression_exit", {"item_id": "a", "category": "food", "dwell_ms": 7}, 12)
    stream.append("survey_response", {"answers": {"q": "好"}}, 20)
    path = tmp_path / "log.jsonl"
    write_stream(stream, path)
    loaded = load_stream(path)
    assert loaded.header.to_dict() == stream.header.to_dict()
    assert [e.to_dict() for e in loaded.events] == [e.to_dict() for e in stream.events]
    second = tmp_path / "log2.jsonl"
    write_stream(loaded, second)
    assert path.read_bytes() == second.read_bytes()


def test_writer_streams_lines(tmp_path):
    path = tmp_path / "live.jsonl"
    writer = EventLogWriter(path, make_header())
    stream = EventStream(make_header(), writer)
    stream.append("scroll", {"position_px": 10}, 1)
    stream.close()
    loaded = load_stream(path)
    assert len(loaded) == 1
    assert loaded.events[0].kind == "scroll"


def test_load_stream_errors(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("\n\n", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        load_stream(empty)
    assert info.value.line == 0

    not_header = tmp_path / "nohead.jsonl"
    not_header.write_text('{"seq":0}\n', encoding="utf-8")
    with pytest.raises(ParseError):
        load_stream(not_header)


def test_load_stream_corrupt_middle_line(tmp_path):
    stream = EventStream(make_header())
    stream.append("scroll", {"position_px": 1}, 1)
    stream.append("scroll", {"position_px": 2}, 2)
    path = tmp_path / "log.jsonl"
    write_stream(stream, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    lines[1] = '{"seq": 0, "broken'
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        load_stream(path)
    assert info.value.line == 2


def test_load_stream_skips_torn_trailing_line(tmp_path):
    stream = EventStream(make_header())
    stream.append("scroll", {"position_px": 1}, 1)
    path = tmp_path / "log.jsonl"
    write_stream(stream, path)
    with path.open("a", encoding="utf-8") as fh:
        fh.write('{"seq": 1, "torn')
    loaded = load_stream(path)
    assert len(loaded) == 1


def test_load_stream_detects_seq_gap(tmp_path):
    header_line = canonical_json(make_header().to_dict())
    event = BehaviorEvent(seq=3, session_id="s1", t_ms=1, kind="scroll",
                          payload={"position_px": 1})
    path = tmp_path / "log.jsonl"
    path.write_text(header_line + "\n" + canonical_json(event.to_dict()) + "\n" +
                    canonical_json(event.to_dict()) + "\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_stream(path)


def test_replay_feeds_consumers_in_order():
    stream = EventStream(make_header())
    stream.append("scroll", {"position_px": 1}, 1)
    stream.append("refresh", {"seed": 2}, 2)

    class Probe:
        def __init__(self):
            self.kinds = []

        def consume(self, event):
            self.kinds.append(event.kind)

    a, b = Probe(), Probe()
    replay(stream, [a, b])
    assert a.kinds == ["scroll", "refresh"]
    assert b.kinds == ["scroll", "refresh"]


def test_header_round_trip():
    header = make_header()
    again = SessionHeader.from_dict(json.loads(canonical_json(header.to_dict())))
    assert again.to_dict() == header.to_dict()
