from __future__ import annotations

import collections
import json

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from feedlab.corpus import (
    DEFAULT_CATEGORIES,
    FeedSpec,
    generate_biased_feed,
    feed_spec_permutations,
    load_corpus,
    round_half_up,
    search_corpus,
    synthesize_corpus,
    write_corpus,
)
from feedlab.errors import CapacityError, ParseError, ValidationError


def test_round_half_up():
    assert round_half_up(0.4) == 0
    assert round_half_up(0.5) == 1
    assert round_half_up(1.5) == 2
    assert round_half_up(2.5) == 3
    assert round_half_up(2.49) == 2
    assert round_half_up(28.0) == 28


def test_synthesize_corpus_shape(corpus):
    assert len(corpus) == 320
    assert len(corpus.categories) == 14
    ids = [it.item_id for it in corpus.items]
    assert len(set(ids)) == len(ids)
    counts = collections.Counter(it.category for it in corpus.items)
    assert min(counts.values()) >= 22
    assert max(counts.values()) <= 23


def test_synthesize_corpus_deterministic():
    a = synthesize_corpus(n_items=60, seed=3)
    b = synthesize_corpus(n_items=60, seed=3)
    assert [it.to_dict() for it in a.items] == [it.to_dict() for it in b.items]
    c = synthesize_corpus(n_items=60, seed=4)
    assert [it.to_dict() for it in a.items] != [it.to_dict() for it in c.items]


def test_synthesize_corpus_too_small():
    with pytest.raises(ValidationError):
        synthesize_corpus(n_items=5)


def test_corpus_round_trip(tmp_path, corpus):
    path = tmp_path / "corpus.jsonl"
    write_corpus(corpus, path)
    loaded = load_corpus(path)
    assert [c.id for c in loaded.categories] == [c.id for c in corpus.categories]
    assert [it.to_dict() for it in loaded.items] == [it.to_dict() for it in corpus.items]


def test_load_corpus_errors(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        load_corpus(empty)
    assert info.value.line == 0

    bad_header = tmp_path / "header.jsonl"
    bad_header.write_text("{not json\n", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        load_corpus(bad_header)
    assert info.value.line == 1

    bad_item = tmp_path / "item.jsonl"
    header = {"categories": [["food", "Food"]]}
    bad_item.write_text(
        json.dumps(header) + "\n" + json.dumps({"item_id": "x"}) + "\n",
        encoding="utf-8",
    )
    with pytest.raises(ParseError) as info:
        load_corpus(bad_item)
    assert info.value.line == 2


def test_biased_feed_basic(corpus, feed_spec):
    items = generate_biased_feed(corpus, feed_spec, seed=0)
    assert len(items) == 35
    counts = collections.Counter(it.category for it in items)
    assert counts["food"] + counts["fashion"] == 28
    assert counts["food"] == 14 and counts["fashion"] == 14
    for cid, count in counts.items():
        if cid not in ("food", "fashion"):
            assert count < 0.05 * 35
    ids = [it.item_id for it in items]
    assert len(set(ids)) == len(ids)


def test_biased_feed_deterministic(corpus, feed_spec):
    a = generate_biased_feed(corpus, feed_spec, seed=9)
    b = generate_biased_feed(corpus, feed_spec, seed=9)
    assert [it.item_id for it in a] == [it.item_id for it in b]
    c = generate_biased_feed(corpus, feed_spec, seed=10)
    assert [it.item_id for it in a] != [it.item_id for it in c]


def test_biased_feed_odd_split(corpus):
    spec = FeedSpec(dominant_categories=("food", "fashion", "travel"), length=35)
    items = generate_biased_feed(corpus, spec, seed=1)
    counts = collections.Counter(it.category for it in items)
    # 28 dominant items over three categories: earlier-listed take the remainder
    assert counts["food"] == 10
    assert counts["fashion"] == 9
    assert counts["travel"] == 9


def test_biased_feed_validation(corpus):
    with pytest.raises(ValidationError):
        generate_biased_feed(corpus, FeedSpec(dominant_categories=()), seed=0)
    with pytest.raises(ValidationError):
        generate_biased_feed(corpus, FeedSpec(dominant_categories=("nope",)), seed=0)
    with pytest.raises(ValidationError):
        generate_biased_feed(corpus, FeedSpec(("food", "food")), seed=0)
    with pytest.raises(ValidationError):
        generate_biased_feed(corpus, FeedSpec(("food",), concentration=0.0), seed=0)
    with pytest.raises(ValidationError):
        generate_biased_feed(corpus, FeedSpec(("food",), length=0), seed=0)


def test_biased_feed_capacity_error():
    tiny = synthesize_corpus(n_items=14, seed=0)
    spec = FeedSpec(dominant_categories=("food", "fashion"), length=35)
    with pytest.raises(CapacityError):
        generate_biased_feed(tiny, spec, seed=0)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 10 ** 6),
    length=st.integers(10, 40),
    concentration=st.floats(0.55, 0.95),
    n_dominant=st.integers(1, 3),
)
def test_biased_feed_properties(corpus, seed, length, concentration, n_dominant):
    dominant = tuple(cid for cid, _ in DEFAULT_CATEGORIES[:n_dominant])
    spec = FeedSpec(dominant, concentration=concentration, length=length)
    n_dom = min(round_half_up(concentration * length), length)
    # the default corpus holds 22-23 items per category
    assume(-(-n_dom // n_dominant) <= 22)
    items = generate_biased_feed(corpus, spec, seed=seed)
    assert len(items) == length
    counts = collections.Counter(it.category for it in items)
    assert sum(counts[cid] for cid in dominant) == n_dom
    ids = [it.item_id for it in items]
    assert len(set(ids)) == len(ids)
    # within the dominant block, counts differ by at most one
    dom_counts = [counts[cid] for cid in dominant]
    assert max(dom_counts) - min(dom_counts) <= 1


def test_search_ranking(corpus):
    results = search_corpus(corpus, "travel")
    assert results
    assert all(it.category == "travel" or "travel" in it.title.lower() for it in results[:5])
    # synonym hits outrank pure title substring hits
    top_categories = {it.category for it in results[:3]}
    assert "travel" in top_categories


def test_search_engagement_tiebreak(corpus):
    results = search_corpus(corpus, "hiking")
    assert results
    same_cat = [it for it in results if it.category == "outdoor"]
    assert same_cat == sorted(same_cat, key=lambda it: (-it.engagement_count, it.item_id))


def test_search_multiword_synonym(corpus):
    results = search_corpus(corpus, "home decor inspiration")
    assert results
    assert results[0].category == "home_decor"


def test_search_empty_query(corpus):
    with pytest.raises(ValidationError):
        search_corpus(corpus, "   ")
    with pytest.raises(ValidationError):
        search_corpus(corpus, "!!!")


def test_search_no_hits(corpus):
    assert search_corpus(corpus, "zzzzqqqq") == []


def test_feed_spec_permutations():
    specs = feed_spec_permutations()
    assert len(specs) == 3
    pairs = [spec.dominant_categories for spec in specs]
    assert len(set(pairs)) == 3
    for spec in specs:
        assert spec.concentration == 0.80
        assert spec.length == 35


def test_feed_spec_round_trip():
    spec = FeedSpec(("food", "pets"), concentration=0.7, length=20)
    assert FeedSpec.from_dict(spec.to_dict()) == spec
