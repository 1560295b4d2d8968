"""Feed lifecycle: initialization, impression tracking, gradual blending.

The engine owns a per-session feed of positioned items. Refreshes never touch
anything the person has already scrolled past (indices below the cursor) and
swap only a bounded fraction of the remainder, so composition shifts feel
gradual rather than jarring.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .analyzer import CategoryDistribution, ImpressionRecord
from .corpus import Corpus, round_half_up
from .directions import Direction, DirectionMode, validate_direction
from .errors import CapacityError, NotFoundError, StateError, ValidationError
from .event_log import EventStream

ORIGIN_INITIAL = "initial"
ORIGIN_BLENDED = "blended"


@dataclass
class FeedItem:
    item: "ContentItem"
    origin: str

    def to_dict(self) -> dict:
        data = self.item.to_dict()
        data["origin"] = self.origin
        return data


@dataclass
class FeedState:
    session_id: str
    items: list
    blend_rate: float = 0.25
    cursor: int = 0
    direction: Direction | None = None
    refresh_count: int = 0
    surfaced_item_ids: set = field(default_factory=set)
    seen_item_ids: set = field(default_factory=set)
    open_impressions: dict = field(default_factory=dict)
    impressions: list = field(default_factory=list)

    def composition(self) -> CategoryDistribution:
        return CategoryDistribution.from_categories(fi.item.category for fi in self.items)

    def item_index(self, item_id: str) -> int:
        for idx, fi in enumerate(self.items):
            if fi.item.item_id == item_id:
                return idx
        raise NotFoundError(f"item {item_id!r} not in feed")

    def distinct_surfaced(self) -> int:
        return len(self.surfaced_item_ids)


def initialize_feed(session_id: str, items, blend_rate: float = 0.25) -> FeedState:
    items = list(items)
    if not items:
        raise ValidationError("cannot initialize an empty feed")
    if not 0 < blend_rate < 1:
        raise ValidationError(f"blend_rate must be in (0,1), got {blend_rate}")
    state = FeedState(
        session_id=session_id,
        items=[FeedItem(item=it, origin=ORIGIN_INITIAL) for it in items],
        blend_rate=blend_rate,
    )
    state.seen_item_ids.update(it.item_id for it in items)
    return state


def current_composition(state: FeedState) -> CategoryDistribution:
    return state.composition()


def record_impression(state: FeedState, stream: EventStream, item_id: str,
                      enter_time: int) -> None:
    index = state.item_index(item_id)
    fi = state.items[index]
    if item_id in state.open_impressions:
        raise StateError(f"impression already open for item {item_id!r}")
    stream.append(
        "impression_enter",
        {
            "item_id": item_id,
            "index": index,
            "category": fi.item.category,
            "origin": fi.origin,
        },
        enter_time,
    )
    state.open_impressions[item_id] = (index, enter_time, fi.item.category, fi.origin)
    state.surfaced_item_ids.add(item_id)
    state.cursor = max(state.cursor, index + 1)


def close_impression(state: FeedState, stream: EventStream, item_id: str,
                     exit_time: int) -> ImpressionRecord:
    if item_id not in state.open_impressions:
        raise StateError(f"no open impression for item {item_id!r}")
    index, enter_t, category, origin = state.open_impressions.pop(item_id)
    record = ImpressionRecord(
        item_id=item_id,
        category=category,
        origin=origin,
        index=index,
        enter_t_ms=enter_t,
        exit_t_ms=exit_time,
    )
    stream.append(
        "impression_exit",
        {
            "item_id": item_id,
            "index": index,
            "category": category,
            "origin": origin,
            "dwell_ms": record.dwell_ms,
        },
        exit_time,
    )
    state.impressions.append(record)
    return record


def record_scroll(state: FeedState, stream: EventStream, position_px: int,
                  time_ms: int) -> None:
    if position_px < 0:
        raise ValidationError("scroll position must be >= 0")
    stream.append("scroll", {"position_px": position_px}, time_ms)


def record_click(state: FeedState, stream: EventStream, t_ms: int,
                 item_id: str | None = None, target: str | None = None) -> None:
    payload: dict = {}
    if target is not None:
        payload["target"] = target
    if item_id is not None:
        index = state.item_index(item_id)
        payload.update(
            {"item_id": item_id, "index": index, "category": state.items[index].item.category}
        )
    if not payload:
        raise ValidationError("click needs an item_id or a target")
    stream.append("click", payload, t_ms)


def set_direction(state: FeedState, direction: Direction, stream: EventStream,
                  t_ms: int, known_categories) -> None:
    """Point subsequent refreshes toward a direction. The feed content itself
    is untouched here; the logged composition_change records the pivot."""
    state.direction = validate_direction(direction, known_categories)
    composition = state.composition()
    stream.append(
        "composition_change",
        {
            "cause": "direction_set",
            "direction": direction.to_dict(),
            "composition": composition.to_dict(),
            "replaced_indices": [],
            "added_item_ids": [],
            "removed_item_ids": [],
            "fallback": False,
            "entropy_bits": composition.entropy_bits(),
        },
        t_ms,
    )


def _slot_priority(state: FeedState, eligible, shares: dict):
    """Order replaceable slots: decrease-direction targets first, then slots
    holding the biggest current share, then the deepest index."""
    direction = state.direction
    decrease_targets = set()
    if direction is not None and direction.mode == DirectionMode.DECREASE:
        decrease_targets = set(direction.target_categories)

    def key(index: int):
        category = state.items[index].item.category
        return (
            0 if category in decrease_targets else 1,
            -shares.get(category, 0.0),
            -index,
        )

    return sorted(eligible, key=key)


def _draw(pool, count: int, rng: random.Random) -> list:
    if count <= 0 or not pool:
        return []
    if len(pool) <= count:
        picked = list(pool)
        rng.shuffle(picked)
        return picked
    return rng.sample(pool, count)


def _candidate_pool(corpus: Corpus, exclude_ids, categories=None, not_categories=None):
    allowed = set(categories) if categories is not None else None
    blocked = set(not_categories) if not_categories is not None else set()
    return [
        item
        for item in corpus.items
        if item.item_id not in exclude_ids
        and (allowed is None or item.category in allowed)
        and item.category not in blocked
    ]


def _select_replacements(state: FeedState, corpus: Corpus, count: int,
                         rng: random.Random, increase_purity: float,
                         underrep_threshold: float):
    """Pick ``count`` replacement items according to the active direction.

    Returns (items, fallback) where ``fallback`` is True when a direction's
    preferred pool ran dry and the shortfall came from a wider pool. Items
    already shown this session are avoided first; if even the full corpus
    cannot cover the request outside the current feed, items may repeat
    across (never within) refresh cycles.
    """
    direction = state.direction
    exclude = set(state.seen_item_ids)
    in_feed = {fi.item.item_id for fi in state.items}
    fallback = False

    def top_up(picked, pool_builder, want):
        if len(picked) >= want:
            return picked
        chosen = {i.item_id for i in picked}
        extra = [i for i in pool_builder() if i.item_id not in chosen]
        return picked + _draw(extra, want - len(picked), rng)

    if direction is None:
        picked = _draw(_candidate_pool(corpus, exclude), count, rng)
        if len(picked) < count:
            picked = top_up(picked, lambda: _candidate_pool(corpus, in_feed), count)
            fallback = True
        return picked, fallback

    if direction.mode == DirectionMode.INCREASE:
        targets = set(direction.target_categories)
        want_target = min(count, math.ceil(increase_purity * count))
        picked = _draw(_candidate_pool(corpus, exclude, categories=targets), want_target, rng)
        if len(picked) < want_target:
            picked = top_up(
                picked, lambda: _candidate_pool(corpus, in_feed, categories=targets), want_target
            )
            if len(picked) < want_target:
                fallback = True
        picked = top_up(picked, lambda: _candidate_pool(corpus, exclude), count)
        if len(picked) < count:
            picked = top_up(picked, lambda: _candidate_pool(corpus, in_feed), count)
            fallback = True
        return picked[:count], fallback

    if direction.mode == DirectionMode.DECREASE:
        targets = set(direction.target_categories)
        picked = _draw(_candidate_pool(corpus, exclude, not_categories=targets), count, rng)
        if len(picked) < count:
            picked = top_up(
                picked, lambda: _candidate_pool(corpus, in_feed, not_categories=targets), count
            )
            fallback = True
        return picked, fallback

    # surprise: draw from categories barely present in the current feed
    composition = state.composition()
    total = composition.total()
    rare = [
        cid for cid in corpus.category_ids()
        if composition.count(cid) < underrep_threshold * total
    ]
    picked = _draw(_candidate_pool(corpus, exclude, categories=rare), count, rng)
    if len(picked) < count:
        ranked = sorted(composition.counts.items(), key=lambda p: (-p[1], p[0]))
        dominant_now = {cid for cid, c in ranked[:2] if c > 0}
        picked = top_up(
            picked, lambda: _candidate_pool(corpus, exclude, not_categories=dominant_now), count
        )
        if len(picked) < count:
            picked = top_up(picked, lambda: _candidate_pool(corpus, in_feed), count)
        fallback = True
    return picked, fallback


def refresh_feed(state: FeedState, corpus: Corpus, stream: EventStream, seed: int,
                 t_ms: int, increase_purity: float = 0.80,
                 underrep_threshold: float = 0.05, cause: str = "refresh") -> dict:
    """Swap a bounded slice of not-yet-surfaced slots for fresh items.

    The request size is round(blend_rate * n) clamped to [1, n]; slots at
    indices below the cursor are never touched, so the actual replacement
    count can fall short of the request. The shortfall is reported in the
    refresh event rather than silently absorbed.
    """
    n = len(state.items)
    if n == 0:
        raise ValidationError("cannot refresh an empty feed")
    k_requested = min(max(round_half_up(state.blend_rate * n), 1), n)
    eligible = [i for i in range(n) if i >= state.cursor]
    k_actual = min(k_requested, len(eligible))
    shortfall = k_requested - k_actual

    rng = random.Random(seed)
    before = state.composition()
    replaced_indices: list = []
    removed_ids: list = []
    fallback = False

    if k_actual > 0:
        slots = _slot_priority(state, eligible, before.proportions())[:k_actual]
        replacements, fallback = _select_replacements(
            state, corpus, len(slots), rng,
            increase_purity=increase_purity,
            underrep_threshold=underrep_threshold,
        )
        if len(replacements) < len(slots):
            raise CapacityError(
                f"corpus exhausted: needed {len(slots)} replacements, found {len(replacements)}"
            )
        for index, item in zip(sorted(slots), replacements):
            removed_ids.append(state.items[index].item.item_id)
            state.items[index] = FeedItem(item=item, origin=ORIGIN_BLENDED)
            state.seen_item_ids.add(item.item_id)
            replaced_indices.append(index)

    state.refresh_count += 1
    stream.append(
        "refresh",
        {
            "seed": seed,
            "k_requested": k_requested,
            "replaced": k_actual,
            "shortfall": shortfall,
            "cause": cause,
            "direction": state.direction.to_dict() if state.direction else None,
        },
        t_ms,
    )
    after = state.composition()
    stream.append(
        "composition_change",
        {
            "cause": cause,
            "composition": after.to_dict(),
            "replaced_indices": replaced_indices,
            "added_item_ids": [state.items[i].item.item_id for i in replaced_indices],
            "removed_item_ids": removed_ids,
            "fallback": fallback,
            "entropy_bits": after.entropy_bits(),
        },
        t_ms,
    )
    return {
        "k_requested": k_requested,
        "replaced": k_actual,
        "shortfall": shortfall,
        "fallback": fallback,
        "replaced_indices": replaced_indices,
        "composition": after.to_dict(),
    }


def insert_items(state: FeedState, items, at_index: int, origin: str = ORIGIN_BLENDED) -> None:
    """Splice extra items into the feed (search-result supplementing)."""
    if not 0 <= at_index <= len(state.items):
        raise ValidationError(f"insert index {at_index} out of range")
    new_items = [FeedItem(item=it, origin=origin) for it in items]
    state.items[at_index:at_index] = new_items
    state.seen_item_ids.update(it.item_id for it in items)


def replace_tail(state: FeedState, items, origin: str = ORIGIN_BLENDED) -> list:
    """Replace everything from the cursor down with the given items
    (search-result replace mode). Returns the removed item ids."""
    removed = [fi.item.item_id for fi in state.items[state.cursor:]]
    state.items[state.cursor:] = [FeedItem(item=it, origin=origin) for it in items]
    state.seen_item_ids.update(it.item_id for it in items)
    return removed
