"""Log-derived session measures.

Every function here is pure: it reads an event stream (plus the initial
composition stored in the header) and returns numbers. Phase windows are
inclusive on both ends. Missing data yields None fields rather than errors
when bundling, so one malformed phase never sinks a whole study run.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass

from .analyzer import compute_viewed_distribution, shannon_entropy
from .config import EngineConfig
from .errors import EmptyWindowError, ValidationError

USER_TOOL_EVENTS = ("search_query", "option_select", "free_text")


@dataclass
class SessionMetrics:
    session_id: str
    condition: str
    breadth: int
    diversity_gain_bits: float | None
    warm_up_entropy_bits: float | None
    exploration_entropy_bits: float | None
    bubble_breaking_rate: float
    expression_cost_chars: int
    time_to_first_discovery_ms: int | None
    tool_engaged_first_5min: bool | None
    conversation_turns: int
    scroll_velocity_pre_px_s: float | None
    scroll_velocity_post_px_s: float | None
    mean_dwell_initial_ms: float | None
    mean_dwell_blended_ms: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def phase_window(stream, phase: str) -> tuple:
    """Inclusive [start, end] t_ms range of the named phase. A missing end
    mark closes the window at the last event."""
    start = end = None
    for event in stream.events:
        if event.kind != "phase_mark" or event.payload.get("phase") != phase:
            continue
        if event.payload.get("mark") == "start" and start is None:
            start = event.t_ms
        elif event.payload.get("mark") == "end":
            end = event.t_ms
    if start is None:
        raise ValidationError(f"stream has no {phase!r} phase marks")
    if end is None:
        end = stream.events[-1].t_ms
    return (start, end)


def events_in_window(events, window: tuple, kinds=None):
    start, end = window
    for event in events:
        if start <= event.t_ms <= end and (kinds is None or event.kind in kinds):
            yield event


def _initially_underrepresented(stream, threshold: float) -> set:
    counts = stream.header.initial_composition
    total = sum(counts.values())
    universe = [pair[0] for pair in stream.header.categories]
    return {
        cid for cid in universe
        if counts.get(cid, 0) < threshold * total
    }


def exploration_breadth(stream) -> int:
    window = phase_window(stream, "exploration")
    seen = set()
    for event in events_in_window(stream.events, window, kinds=("impression_enter",)):
        seen.add(event.payload["category"])
    return len(seen)


def diversity_gain(stream) -> float:
    pre = compute_viewed_distribution(stream.events, phase_window(stream, "warm_up"))
    post = compute_viewed_distribution(stream.events, phase_window(stream, "exploration"))
    return shannon_entropy(post) - shannon_entropy(pre)


def bubble_breaking_rate(stream, initial_composition=None, threshold: float = 0.05) -> float:
    if initial_composition is None:
        under = _initially_underrepresented(stream, threshold)
    else:
        counts = dict(initial_composition)
        total = sum(counts.values())
        universe = [pair[0] for pair in stream.header.categories]
        under = {cid for cid in universe if counts.get(cid, 0) < threshold * total}
    if not under:
        return 0.0
    window = phase_window(stream, "exploration")
    browsed = {
        event.payload["category"]
        for event in events_in_window(stream.events, window, kinds=("impression_enter",))
    }
    return len(browsed & under) / len(under)


def expression_cost(stream) -> int:
    window = phase_window(stream, "exploration")
    total = 0
    for event in events_in_window(
        stream.events, window, kinds=("free_text", "search_query")
    ):
        total += int(event.payload.get("chars", len(event.payload.get("text", ""))))
    return total


def time_to_first_discovery(stream, initial_composition=None,
                            threshold: float = 0.05,
                            min_dwell_ms: int = 2000) -> int | None:
    if initial_composition is None:
        under = _initially_underrepresented(stream, threshold)
    else:
        counts = dict(initial_composition)
        total = sum(counts.values())
        universe = [pair[0] for pair in stream.header.categories]
        under = {cid for cid in universe if counts.get(cid, 0) < threshold * total}
    start, end = phase_window(stream, "exploration")
    for event in events_in_window(stream.events, (start, end), kinds=("impression_exit",)):
        if event.payload["category"] in under and event.payload["dwell_ms"] >= min_dwell_ms:
            return event.t_ms - start
    return None


def tool_engagement(stream, window_ms: int = 300000) -> bool | None:
    """True when the participant used search or chat inside the first
    ``window_ms`` of exploration. FEED has no tool, so the measure is None.
    AI-initiated assistant turns do not count; only user actions do."""
    if stream.header.condition == "FEED":
        return None
    start, _ = phase_window(stream, "exploration")
    for event in events_in_window(
        stream.events, (start, start + window_ms), kinds=USER_TOOL_EVENTS
    ):
        return True
    return False


def conversation_depth(stream) -> int:
    depth = 0
    for event in stream.events:
        if event.kind in ("dialogue_turn", "option_select", "free_text"):
            depth = max(depth, int(event.payload.get("turn_index", 0)))
    return depth


def scroll_velocity(stream, window: tuple) -> float | None:
    """Total |position delta| over elapsed time for scroll events inside the
    window. Needs at least two scroll events spanning nonzero time."""
    points = [
        (event.t_ms, event.payload["position_px"])
        for event in events_in_window(stream.events, window, kinds=("scroll",))
    ]
    if len(points) < 2:
        return None
    elapsed_ms = points[-1][0] - points[0][0]
    if elapsed_ms <= 0:
        return None
    distance = sum(
        abs(points[i][1] - points[i - 1][1]) for i in range(1, len(points))
    )
    return distance / (elapsed_ms / 1000.0)


def _first_composition_change_t(stream) -> int | None:
    for event in stream.events:
        if event.kind == "composition_change":
            return event.t_ms
    return None


def scroll_velocity_around_change(stream, span_ms: int = 120000) -> tuple:
    t_change = _first_composition_change_t(stream)
    if t_change is None:
        return (None, None)
    pre = scroll_velocity(stream, (t_change - span_ms, t_change))
    post = scroll_velocity(stream, (t_change, t_change + span_ms))
    return (pre, post)


def dwell_by_origin(stream, feed_history=None, window: tuple | None = None) -> tuple:
    """Mean dwell (ms) on initial-origin vs blended-origin items.

    Defaults to the exploration window when phase marks exist, else the whole
    stream. Origin comes from the impression_exit payload, so feed_history is
    accepted only for interface compatibility.
    """
    if window is None:
        try:
            window = phase_window(stream, "exploration")
        except ValidationError:
            if not stream.events:
                return (None, None)
            window = (stream.events[0].t_ms, stream.events[-1].t_ms)
    dwells: dict = {"initial": [], "blended": []}
    for event in events_in_window(stream.events, window, kinds=("impression_exit",)):
        origin = event.payload.get("origin", "initial")
        dwells.setdefault(origin, []).append(event.payload["dwell_ms"])
    mean_initial = statistics.fmean(dwells["initial"]) if dwells["initial"] else None
    mean_blended = statistics.fmean(dwells["blended"]) if dwells["blended"] else None
    return (mean_initial, mean_blended)


def compute_session_metrics(stream, config: EngineConfig | None = None) -> SessionMetrics:
    config = config or EngineConfig()
    threshold = config.underrep_threshold

    try:
        breadth = exploration_breadth(stream)
    except ValidationError:
        breadth = 0

    h_pre = h_post = gain = None
    try:
        pre = compute_viewed_distribution(stream.events, phase_window(stream, "warm_up"))
        h_pre = shannon_entropy(pre)
    except (ValidationError, EmptyWindowError):
        pass
    try:
        post = compute_viewed_distribution(
            stream.events, phase_window(stream, "exploration")
        )
        h_post = shannon_entropy(post)
    except (ValidationError, EmptyWindowError):
        pass
    if h_pre is not None and h_post is not None:
        gain = h_post - h_pre

    try:
        bubble = bubble_breaking_rate(stream, threshold=threshold)
    except ValidationError:
        bubble = 0.0
    try:
        cost = expression_cost(stream)
    except ValidationError:
        cost = 0
    try:
        ttfd = time_to_first_discovery(
            stream, threshold=threshold, min_dwell_ms=config.min_discovery_dwell_ms
        )
    except ValidationError:
        ttfd = None
    try:
        engaged = tool_engagement(stream, window_ms=config.tool_window_ms)
    except ValidationError:
        engaged = None

    pre_v, post_v = scroll_velocity_around_change(stream)
    dwell_initial, dwell_blended = dwell_by_origin(stream)

    return SessionMetrics(
        session_id=stream.header.session_id,
        condition=stream.header.condition,
        breadth=breadth,
        diversity_gain_bits=gain,
        warm_up_entropy_bits=h_pre,
        exploration_entropy_bits=h_post,
        bubble_breaking_rate=bubble,
        expression_cost_chars=cost,
        time_to_first_discovery_ms=ttfd,
        tool_engaged_first_5min=engaged,
        conversation_turns=conversation_depth(stream),
        scroll_velocity_pre_px_s=pre_v,
        scroll_velocity_post_px_s=post_v,
        mean_dwell_initial_ms=dwell_initial,
        mean_dwell_blended_ms=dwell_blended,
    )


_NUMERIC_FIELDS = (
    "breadth",
    "diversity_gain_bits",
    "bubble_breaking_rate",
    "expression_cost_chars",
    "time_to_first_discovery_ms",
    "conversation_turns",
    "scroll_velocity_pre_px_s",
    "scroll_velocity_post_px_s",
    "mean_dwell_initial_ms",
    "mean_dwell_blended_ms",
)


def summarize_metrics(metrics_list) -> dict:
    """Per-condition descriptive stats (mean, sd, median, n) for each numeric
    field, plus the engaged fraction for the tool-use flag."""
    by_condition: dict = {}
    for m in metrics_list:
        by_condition.setdefault(m.condition, []).append(m)
    summary: dict = {}
    for condition, group in sorted(by_condition.items()):
        fields: dict = {}
        for name in _NUMERIC_FIELDS:
            values = [getattr(m, name) for m in group if getattr(m, name) is not None]
            if not values:
                fields[name] = {"n": 0, "mean": None, "sd": None, "median": None}
                continue
            fields[name] = {
                "n": len(values),
                "mean": statistics.fmean(values),
                "sd": statistics.stdev(values) if len(values) > 1 else 0.0,
                "median": statistics.median(values),
            }
        engaged = [
            m.tool_engaged_first_5min
            for m in group
            if m.tool_engaged_first_5min is not None
        ]
        fields["tool_engaged_first_5min"] = {
            "n": len(engaged),
            "fraction_true": (sum(1 for e in engaged if e) / len(engaged)) if engaged else None,
        }
        summary[condition] = {"sessions": len(group), "fields": fields}
    return summary
