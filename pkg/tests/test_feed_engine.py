from __future__ import annotations

import math

import pytest

from feedlab.corpus import Category, ContentItem, Corpus, FeedSpec, generate_biased_feed
from feedlab.directions import Direction, DirectionMode
from feedlab.errors import CapacityError, NotFoundError, StateError, ValidationError
from feedlab.event_log import EventStream
from feedlab.feed_engine import (
    ORIGIN_BLENDED,
    ORIGIN_INITIAL,
    close_impression,
    initialize_feed,
    insert_items,
    record_click,
    record_impression,
    record_scroll,
    refresh_feed,
    replace_tail,
    set_direction,
)

from test_event_log import make_header


def build_feed(corpus, feed_spec, seed=0, blend_rate=0.25):
    items = generate_biased_feed(corpus, feed_spec, seed=seed)
    state = initialize_feed("s1", items, blend_rate)
    stream = EventStream(make_header())
    return state, stream


def test_initialize_feed_validation(corpus, feed_spec):
    items = generate_biased_feed(corpus, feed_spec, seed=0)
    with pytest.raises(ValidationError):
        initialize_feed("s1", [], 0.25)
    with pytest.raises(ValidationError):
        initialize_feed("s1", items, 0.0)
    state = initialize_feed("s1", items, 0.25)
    assert all(fi.origin == ORIGIN_INITIAL for fi in state.items)
    assert state.seen_item_ids == {it.item_id for it in items}
    assert state.cursor == 0


def test_impression_lifecycle(corpus, feed_spec):
    state, stream = build_feed(corpus, feed_spec)
    item = state.items[3].item
    record_impression(state, stream, item.item_id, 100)
    assert state.cursor == 4
    assert state.distinct_surfaced() == 1
    enter = stream.events[-1]
    assert enter.kind == "impression_enter"
    assert enter.payload["index"] == 3
    assert enter.payload["category"] == item.category
    assert enter.payload["origin"] == ORIGIN_INITIAL

    with pytest.raises(StateError):
        record_impression(state, stream, item.item_id, 150)

    record = close_impression(state, stream, item.item_id, 700)
    assert record.dwell_ms == 600
    assert stream.events[-1].payload["dwell_ms"] == 600
    with pytest.raises(StateError):
        close_impression(state, stream, item.item_id, 800)
    with pytest.raises(NotFoundError):
        record_impression(state, stream, "ghost", 900)


def test_cursor_never_retreats(corpus, feed_spec):
    state, stream = build_feed(corpus, feed_spec)
    record_impression(state, stream, state.items[10].item.item_id, 0)
    record_impression(state, stream, state.items[2].item.item_id, 10)
    assert state.cursor == 11


def test_scroll_and_click(corpus, feed_spec):
    state, stream = build_feed(corpus, feed_spec)
    record_scroll(state, stream, 500, 10)
    assert stream.events[-1].payload == {"position_px": 500}
    with pytest.raises(ValidationError):
        record_scroll(state, stream, -1, 20)

    record_click(state, stream, 30, target="analyze")
    assert stream.events[-1].payload == {"target": "analyze"}
    item = state.items[0].item
    record_click(state, stream, 40, item_id=item.item_id)
    assert stream.events[-1].payload["category"] == item.category
    with pytest.raises(ValidationError):
        record_click(state, stream, 50)


def test_set_direction_validates_and_logs(corpus, feed_spec):
    state, stream = build_feed(corpus, feed_spec)
    before = [fi.item.item_id for fi in state.items]
    set_direction(state, Direction(DirectionMode.INCREASE, ("travel",)), stream, 100,
                  corpus.category_ids())
    assert [fi.item.item_id for fi in state.items] == before
    event = stream.events[-1]
    assert event.kind == "composition_change"
    assert event.payload["cause"] == "direction_set"
    assert event.payload["replaced_indices"] == []
    with pytest.raises(ValidationError):
        set_direction(state, Direction(DirectionMode.INCREASE, ("bogus",)), stream,
                      200, corpus.category_ids())


def test_refresh_replaces_bounded_slice(corpus, feed_spec):
    state, stream = build_feed(corpus, feed_spec)
    result = refresh_feed(state, corpus, stream, seed=5, t_ms=1000)
    assert result["k_requested"] == 9  # round(0.25 * 35)
    assert result["replaced"] == 9
    assert result["shortfall"] == 0
    assert state.refresh_count == 1
    replaced = set(result["replaced_indices"])
    for idx, fi in enumerate(state.items):
        assert fi.origin == (ORIGIN_BLENDED if idx in replaced else ORIGIN_INITIAL)
    refresh_event = stream.events[-2]
    change_event = stream.events[-1]
    assert refresh_event.kind == "refresh"
    assert refresh_event.payload["seed"] == 5
    assert change_event.kind == "composition_change"
    assert len(change_event.payload["added_item_ids"]) == 9
    assert change_event.payload["fallback"] is False
    assert change_event.payload["entropy_bits"] == pytest.approx(
        state.composition().entropy_bits()
    )


def test_refresh_is_deterministic_per_seed(corpus, feed_spec):
    a_state, a_stream = build_feed(corpus, feed_spec)
    b_state, b_stream = build_feed(corpus, feed_spec)
    refresh_feed(a_state, corpus, a_stream, seed=7, t_ms=0)
    refresh_feed(b_state, corpus, b_stream, seed=7, t_ms=0)
    assert [fi.item.item_id for fi in a_state.items] == [
        fi.item.item_id for fi in b_state.items
    ]
    c_state, c_stream = build_feed(corpus, feed_spec)
    refresh_feed(c_state, corpus, c_stream, seed=8, t_ms=0)
    assert [fi.item.item_id for fi in a_state.items] != [
        fi.item.item_id for fi in c_state.items
    ]


def test_refresh_never_touches_passed_items(corpus, feed_spec):
    state, stream = build_feed(corpus, feed_spec)
    for fi in state.items[:30]:
        record_impression(state, stream, fi.item.item_id, stream.last_t_ms() + 10)
        close_impression(state, stream, fi.item.item_id, stream.last_t_ms() + 10)
    assert state.cursor == 30
    above = [fi.item.item_id for fi in state.items[:30]]
    result = refresh_feed(state, corpus, stream, seed=1, t_ms=stream.last_t_ms() + 10)
    assert [fi.item.item_id for fi in state.items[:30]] == above
    assert result["replaced"] == 5
    assert result["shortfall"] == 4
    assert min(result["replaced_indices"]) >= 30


def test_refresh_with_exhausted_cursor_is_reported(corpus, feed_spec):
    state, stream = build_feed(corpus, feed_spec)
    for fi in list(state.items):
        record_impression(state, stream, fi.item.item_id, stream.last_t_ms() + 10)
        close_impression(state, stream, fi.item.item_id, stream.last_t_ms() + 10)
    before = [fi.item.item_id for fi in state.items]
    result = refresh_feed(state, corpus, stream, seed=2, t_ms=stream.last_t_ms() + 10)
    assert result["replaced"] == 0
    assert result["shortfall"] == result["k_requested"]
    assert [fi.item.item_id for fi in state.items] == before


def test_refresh_increase_direction_hits_purity(corpus, feed_spec):
    state, stream = build_feed(corpus, feed_spec)
    set_direction(state, Direction(DirectionMode.INCREASE, ("travel",)), stream, 0,
                  corpus.category_ids())
    result = refresh_feed(state, corpus, stream, seed=3, t_ms=10)
    added = {
        fi.item.item_id: fi.item.category
        for fi in state.items
        if fi.origin == ORIGIN_BLENDED
    }
    travel_added = sum(1 for cat in added.values() if cat == "travel")
    assert travel_added >= math.ceil(0.8 * result["replaced"])
    assert result["fallback"] is False


def test_refresh_decrease_direction(corpus, feed_spec):
    state, stream = build_feed(corpus, feed_spec)
    set_direction(state, Direction(DirectionMode.DECREASE, ("food",)), stream, 0,
                  corpus.category_ids())
    result = refresh_feed(state, corpus, stream, seed=4, t_ms=10)
    change = stream.events[-1]
    added_ids = set(change.payload["added_item_ids"])
    for fi in state.items:
        if fi.item.item_id in added_ids:
            assert fi.item.category != "food"
    # target-category slots go first: all nine removed items were food
    removed_ids = set(change.payload["removed_item_ids"])
    assert len(removed_ids) == 9
    assert result["composition"]["food"] == 14 - 9


def test_refresh_surprise_direction_prefers_rare(corpus, feed_spec):
    state, stream = build_feed(corpus, feed_spec)
    set_direction(state, Direction(DirectionMode.SURPRISE), stream, 0,
                  corpus.category_ids())
    refresh_feed(state, corpus, stream, seed=6, t_ms=10)
    added = [fi.item.category for fi in state.items if fi.origin == ORIGIN_BLENDED]
    assert added
    assert all(cat not in ("food", "fashion") for cat in added)


def make_two_category_corpus(n_a=20, n_b=2):
    categories = [Category("a", "A"), Category("b", "B")]
    items = []
    for i in range(n_a):
        items.append(ContentItem(f"a-{i}", f"A post {i}", f"cover-a{i}", "au",
                                 100 + i, "a"))
    for i in range(n_b):
        items.append(ContentItem(f"b-{i}", f"B post {i}", f"cover-b{i}", "au",
                                 50 + i, "b"))
    return Corpus(categories=categories, items=items)


def test_refresh_fallback_when_target_pool_dries():
    corpus = make_two_category_corpus()
    spec = FeedSpec(dominant_categories=("a",), concentration=1.0, length=10)
    items = generate_biased_feed(corpus, spec, seed=0)
    state = initialize_feed("s1", items, 0.30)
    stream = EventStream(make_header())
    set_direction(state, Direction(DirectionMode.INCREASE, ("b",)), stream, 0, ["a", "b"])
    result = refresh_feed(state, corpus, stream, seed=1, t_ms=10)
    assert result["replaced"] == 3
    assert result["fallback"] is True
    blended = [fi.item.category for fi in state.items if fi.origin == ORIGIN_BLENDED]
    assert blended.count("b") == 2


def test_refresh_capacity_error():
    corpus = make_two_category_corpus(n_a=10, n_b=0)
    corpus = Corpus(categories=[Category("a", "A")], items=corpus.items)
    state = initialize_feed("s1", corpus.items, 0.25)
    stream = EventStream(make_header())
    with pytest.raises(CapacityError):
        refresh_feed(state, corpus, stream, seed=0, t_ms=0)


def test_insert_items_and_replace_tail(corpus, feed_spec):
    state, stream = build_feed(corpus, feed_spec)
    in_feed = state.seen_item_ids
    extras = [it for it in corpus.items if it.item_id not in in_feed][:3]
    record_impression(state, stream, state.items[4].item.item_id, 0)
    insert_items(state, extras, state.cursor)
    assert [fi.item.item_id for fi in state.items[5:8]] == [it.item_id for it in extras]
    assert all(state.items[i].origin == ORIGIN_BLENDED for i in range(5, 8))
    assert len(state.items) == 38
    with pytest.raises(ValidationError):
        insert_items(state, extras, 99)

    tail_replacements = [
        it for it in corpus.items if it.item_id not in state.seen_item_ids
    ][:2]
    removed = replace_tail(state, tail_replacements)
    assert len(state.items) == 5 + 2
    assert len(removed) == 33
    assert [fi.item.item_id for fi in state.items[5:]] == [
        it.item_id for it in tail_replacements
    ]
