"""Pure analysis over feed composition and the behavioral event stream.

Everything here is a function of its inputs: distributions and entropy,
dominant and underrepresented categories, latent interest signals read off
dwell behavior, and the proactive-trigger decision.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field

from .errors import EmptyWindowError, ValidationError


@dataclass
class CategoryDistribution:
    """Category counts with derived proportions. Proportions always sum to 1
    (within float error) whenever any count is positive."""

    counts: dict = field(default_factory=dict)

    @classmethod
    def from_categories(cls, categories) -> "CategoryDistribution":
        counts: dict = {}
        for cid in categories:
            counts[cid] = counts.get(cid, 0) + 1
        return cls(counts=counts)

    def total(self):
        return sum(self.counts.values())

    def count(self, category: str):
        return self.counts.get(category, 0)

    def share(self, category: str) -> float:
        total = self.total()
        return self.counts.get(category, 0) / total if total else 0.0

    def proportions(self) -> dict:
        total = self.total()
        if not total:
            return {}
        return {cid: c / total for cid, c in self.counts.items()}

    def entropy_bits(self) -> float:
        return shannon_entropy(self.counts)

    def to_dict(self) -> dict:
        return dict(sorted(self.counts.items()))


def shannon_entropy(distribution) -> float:
    """Shannon entropy in bits: H = -sum(p_i * log2(p_i)), zero terms skipped.

    Accepts a CategoryDistribution, a mapping of weights, or an iterable of
    weights; weights need not be normalized.
    """
    if isinstance(distribution, CategoryDistribution):
        values = list(distribution.counts.values())
    elif isinstance(distribution, dict):
        values = list(distribution.values())
    else:
        values = list(distribution)
    for v in values:
        if v < 0:
            raise ValidationError(f"negative weight {v} in distribution")
    total = sum(values)
    if total <= 0:
        return 0.0
    h = 0.0
    for v in values:
        p = v / total
        # p can underflow to 0 for tiny weights; a zero term contributes 0.
        if p > 0:
            h -= p * math.log2(p)
    return h


def compute_viewed_distribution(events, window) -> CategoryDistribution:
    """Distribution over distinct items surfaced inside a time window.

    ``events`` is any iterable of BehaviorEvent; ``window`` is an inclusive
    (start_ms, end_ms) pair. Each distinct item counts once no matter how
    often it was revisited.
    """
    start, end = window
    seen: dict = {}
    for event in events:
        if event.kind != "impression_enter":
            continue
        if not start <= event.t_ms <= end:
            continue
        item_id = event.payload.get("item_id")
        if item_id not in seen:
            seen[item_id] = event.payload.get("category")
    if not seen:
        raise EmptyWindowError(f"no impressions in window [{start}, {end}]")
    return CategoryDistribution.from_categories(seen.values())


def detect_dominant(distribution: CategoryDistribution, top_n: int = 2) -> list:
    """Top categories by share as (category, share) pairs. Ties break on
    category id so output is deterministic."""
    if top_n < 1:
        raise ValidationError("top_n must be >= 1")
    present = [(cid, c) for cid, c in distribution.counts.items() if c > 0]
    present.sort(key=lambda pair: (-pair[1], pair[0]))
    total = distribution.total()
    return [(cid, c / total) for cid, c in present[:top_n]]


def detect_underrepresented(distribution: CategoryDistribution, all_categories,
                            threshold: float = 0.05) -> list:
    """Categories whose share is strictly below the threshold, judged over the
    full category set so absent categories (share 0) are included."""
    if not 0 < threshold < 1:
        raise ValidationError(f"threshold must be in (0,1), got {threshold}")
    total = distribution.total()
    out = []
    for cid in all_categories:
        count = distribution.count(cid)
        if total == 0 or count < threshold * total:
            out.append(cid)
    return out


@dataclass(frozen=True)
class ImpressionRecord:
    item_id: str
    category: str
    origin: str
    index: int
    enter_t_ms: int
    exit_t_ms: int | None = None

    @property
    def dwell_ms(self) -> int | None:
        if self.exit_t_ms is None:
            return None
        return self.exit_t_ms - self.enter_t_ms


@dataclass(frozen=True)
class LatentSignal:
    category: str
    evidence_count: int
    mean_dwell_ms: float
    baseline_dwell_ms: float

    def to_dict(self) -> dict:
        return {
            "category": self.category,
            "evidence_count": self.evidence_count,
            "mean_dwell_ms": self.mean_dwell_ms,
            "baseline_dwell_ms": self.baseline_dwell_ms,
        }


def _completed_impressions(events) -> list:
    """(category, dwell_ms) pairs from impression_exit events."""
    out = []
    for event in events:
        if event.kind == "impression_exit":
            out.append((event.payload.get("category"), int(event.payload.get("dwell_ms", 0))))
    return out


def detect_latent_signals(events, feed_composition: CategoryDistribution,
                          signal_multiplier: float = 2.0, min_evidence: int = 2,
                          min_impressions: int = 5, dominant_top_n: int = 2) -> list:
    """Non-dominant categories whose items held attention well past the
    typical dominant-category dwell.

    A category qualifies when it has at least ``min_evidence`` completed
    impressions and their mean dwell exceeds ``signal_multiplier`` times the
    median dwell over dominant-category impressions. Too little data (fewer
    than ``min_impressions`` completed impressions overall, or no
    dominant-category baseline) yields no signals rather than an error.
    """
    completed = _completed_impressions(events)
    if len(completed) < min_impressions:
        return []
    dominant = {cid for cid, _ in detect_dominant(feed_composition, top_n=dominant_top_n)}
    baseline_dwells = [dwell for cid, dwell in completed if cid in dominant]
    if not baseline_dwells:
        return []
    baseline = statistics.median(baseline_dwells)
    by_category: dict = {}
    for cid, dwell in completed:
        if cid not in dominant:
            by_category.setdefault(cid, []).append(dwell)
    signals = []
    for cid, dwells in by_category.items():
        if len(dwells) < min_evidence:
            continue
        mean_dwell = statistics.fmean(dwells)
        if mean_dwell > signal_multiplier * baseline:
            signals.append(
                LatentSignal(
                    category=cid,
                    evidence_count=len(dwells),
                    mean_dwell_ms=mean_dwell,
                    baseline_dwell_ms=float(baseline),
                )
            )
    signals.sort(key=lambda s: (-s.mean_dwell_ms, s.category))
    return signals


def _current_phase_start(events) -> int:
    start = 0
    for event in events:
        if event.kind == "phase_mark" and event.payload.get("mark") == "start":
            start = event.t_ms
    return start


def should_trigger(events, policy: str, trigger_items: int = 20,
                   eager_scroll_px: int = 3000) -> tuple:
    """Decide whether the exploration dialogue should open now.

    Returns (fire, reason). Policies:
      * reactive: fires only on an explicit analyze request (a click event
        with target "analyze") not yet answered by a trigger.
      * moderate: fires once per phase, once the count of distinct items
        surfaced over the whole session reaches ``trigger_items``.
      * eager: fires after every refresh, or once ``eager_scroll_px`` of
        scroll travel accumulates since the last trigger.
    """
    if policy not in ("reactive", "moderate", "eager"):
        raise ValidationError(f"unknown proactivity policy {policy!r}")
    events = list(events)
    phase_start = _current_phase_start(events)
    last_trigger_idx = -1
    for idx, event in enumerate(events):
        if event.kind == "trigger":
            last_trigger_idx = idx

    if policy == "reactive":
        for event in events[last_trigger_idx + 1:]:
            if event.kind == "click" and event.payload.get("target") == "analyze":
                return True, "explicit"
        return False, ""

    if policy == "moderate":
        for event in events:
            if event.kind == "trigger" and event.t_ms >= phase_start:
                return False, ""
        surfaced = {
            event.payload.get("item_id")
            for event in events
            if event.kind == "impression_enter"
        }
        if len(surfaced) >= trigger_items:
            return True, "items"
        return False, ""

    # eager
    tail = events[last_trigger_idx + 1:]
    for event in tail:
        if event.kind == "refresh":
            return True, "refresh"
    travel = 0
    last_pos = None
    for event in tail:
        if event.kind == "scroll":
            pos = int(event.payload.get("position_px", 0))
            if last_pos is not None:
                travel += abs(pos - last_pos)
            last_pos = pos
    if travel >= eager_scroll_px:
        return True, "scroll"
    return False, ""


@dataclass
class InsightReport:
    """What the assistant knows when it opens a conversation: the feed's
    composition, its entropy, what dominates, what is barely there, and any
    latent interest signals."""

    distribution: CategoryDistribution
    entropy_bits: float
    dominant: list
    underrepresented: list
    signals: list
    browsed_item_count: int

    def to_dict(self) -> dict:
        return {
            "distribution": self.distribution.to_dict(),
            "entropy_bits": self.entropy_bits,
            "dominant": [[cid, share] for cid, share in self.dominant],
            "underrepresented": self.underrepresented,
            "signals": [s.to_dict() for s in self.signals],
            "browsed_item_count": self.browsed_item_count,
        }


def build_insight(feed_composition: CategoryDistribution, events, all_categories,
                  dominant_top_n: int = 2, underrep_threshold: float = 0.05,
                  signal_multiplier: float = 2.0, min_evidence: int = 2,
                  min_impressions: int = 5) -> InsightReport:
    events = list(events)
    browsed = {
        event.payload.get("item_id")
        for event in events
        if event.kind == "impression_enter"
    }
    return InsightReport(
        distribution=feed_composition,
        entropy_bits=feed_composition.entropy_bits(),
        dominant=detect_dominant(feed_composition, top_n=dominant_top_n),
        underrepresented=detect_underrepresented(
            feed_composition, all_categories, threshold=underrep_threshold
        ),
        signals=detect_latent_signals(
            events,
            feed_composition,
            signal_multiplier=signal_multiplier,
            min_evidence=min_evidence,
            min_impressions=min_impressions,
            dominant_top_n=dominant_top_n,
        ),
        browsed_item_count=len(browsed),
    )
