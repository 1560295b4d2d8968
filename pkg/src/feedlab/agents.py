"""Simulated participants.

Four scripted behaviors stand in for humans, one per study condition:

* passive_scroller just browses (FEED)
* searcher issues keyword queries and reads the results (SEARCH)
* chat_initiator types a request when it feels like it (USER_CHAT)
* option_clicker answers the proactive dialogue with clicks only (AI_INIT)

Dwell time per item scales with the agent's interest in the item's category;
one hidden latent interest sits on a category that is underrepresented in the
assigned feed. All randomness flows from the session's agent seed, so a fixed
(plan, policy, seed) triple produces byte-identical logs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import FeedSpec
from .dialogue import Stage
from .errors import ValidationError

AGENT_KINDS = ("passive_scroller", "searcher", "chat_initiator", "option_clicker")

# Items browsed during warm-up. Kept below the default trigger threshold so
# a moderate-proactivity dialogue opens early in exploration, not in warm-up.
WARMUP_ITEMS = 18

ROW_PX = 320

CHAT_PHRASES = (
    "I keep seeing the same stuff, could you mix in some {topic} posts for me?",
    "Honestly this feed feels repetitive, show me more {topic} content instead.",
    "Can you add more {topic} to my feed? I want a change of pace today.",
    "Feels like one big loop lately. More {topic} would be nice, thanks.",
    "I would love to see some extra {topic} ideas mixed into this feed.",
)


@dataclass
class AgentPolicy:
    kind: str
    interest_vector: dict
    latent_category: str
    engage_probability: float = 0.5
    boredom_threshold: int = 12
    option_preference: str = "surprise"
    search_query_count: int = 3
    novelty_dwell_ms: int = 0

    def __post_init__(self):
        if self.kind not in AGENT_KINDS:
            raise ValidationError(f"unknown agent kind {self.kind!r}")
        for cid, weight in self.interest_vector.items():
            if weight < 0:
                raise ValidationError(f"negative interest weight for {cid!r}")
        if not 0 <= self.engage_probability <= 1:
            raise ValidationError("engage_probability must be in [0, 1]")


def default_policy(kind: str, feed_spec: FeedSpec, all_categories,
                   rng: random.Random, engage_probability: float = 0.5) -> AgentPolicy:
    """Interest weights: moderate on the feed's dominant categories, low
    elsewhere, high on one randomly chosen non-dominant (latent) category."""
    dominant = set(feed_spec.dominant_categories)
    nondominant = sorted(c for c in all_categories if c not in dominant)
    if not nondominant:
        raise ValidationError("need a non-dominant category for the latent interest")
    latent = rng.choice(nondominant)
    weights = {}
    for cid in all_categories:
        if cid == latent:
            weights[cid] = 0.95
        elif cid in dominant:
            weights[cid] = 0.55
        else:
            weights[cid] = 0.12
    novelty = 3800 if kind in ("option_clicker", "chat_initiator") else 0
    return AgentPolicy(
        kind=kind,
        interest_vector=weights,
        latent_category=latent,
        engage_probability=engage_probability,
        novelty_dwell_ms=novelty,
    )


class SimulatedAgent:
    """Drives a SessionRuntime through warm-up and exploration on a simulated
    millisecond clock."""

    def __init__(self, runtime, policy: AgentPolicy, seed: int):
        self.rt = runtime
        self.policy = policy
        self.rng = random.Random(seed)
        self.t = 0
        self.position_px = 0

    # -- primitive moves -----------------------------------------------------

    def _advance(self, lo: int, hi: int) -> None:
        self.t += self.rng.randint(lo, hi)

    def _scroll_to(self, position_px: int) -> None:
        self.position_px = max(0, position_px)
        self.rt.report_scroll(self.position_px, self.t)

    def _dwell_for(self, item: dict) -> int:
        weight = self.policy.interest_vector.get(item["category"], 0.1)
        mean = 900 + 2600 * weight
        if item.get("origin") == "blended" and self.policy.novelty_dwell_ms:
            mean = max(mean, self.policy.novelty_dwell_ms)
        dwell = self.rng.gauss(mean, 0.15 * mean)
        return max(250, int(dwell))

    def _view_item(self, item: dict) -> bool:
        """Scroll to an item, look at it, leave. Returns True when the view
        opened the proactive dialogue."""
        self._advance(250, 700)
        self._scroll_to(item["index"] * ROW_PX // 2)
        self._advance(60, 180)
        result = self.rt.report_impression(item["item_id"], "enter", self.t)
        self.t += self._dwell_for(item)
        self.rt.report_impression(item["item_id"], "exit", self.t)
        return bool(result.get("triggered"))

    def _fresh_items(self):
        feed = self.rt.feed
        return [
            dict(fi.to_dict(), index=idx)
            for idx, fi in enumerate(feed.items)
            if idx >= feed.cursor
        ]

    def browse(self, max_items: int, until_t: int | None = None,
               stop_on_trigger: bool = False) -> int:
        """View up to max_items unseen feed items in order. Stops at the time
        budget, at the end of the feed, or right after a dialogue trigger."""
        viewed = 0
        while viewed < max_items:
            if until_t is not None and self.t >= until_t:
                break
            fresh = self._fresh_items()
            if not fresh:
                break
            triggered = self._view_item(fresh[0])
            viewed += 1
            if triggered and stop_on_trigger:
                break
        return viewed

    def idle_scroll(self, until_t: int, step_ms=(2500, 5200)) -> None:
        """Drift the viewport up and down without surfacing new items."""
        while self.t + step_ms[1] < until_t:
            self._advance(*step_ms)
            delta = self.rng.randint(-260, 260)
            self._scroll_to(self.position_px + delta)

    # -- phases ----------------------------------------------------------------

    def run_warm_up(self, until_t: int) -> None:
        self.browse(WARMUP_ITEMS, until_t=until_t)
        self.idle_scroll(until_t)
        self.t = max(self.t, until_t)

    def run_exploration(self, until_t: int) -> None:
        raise NotImplementedError

    def finish_phase(self, until_t: int) -> None:
        self.idle_scroll(until_t)
        self.t = max(self.t, until_t)


class PassiveScroller(SimulatedAgent):
    """Keeps scrolling the feed as-is. Never refreshes, so the composition
    never changes under it."""

    def run_exploration(self, until_t: int) -> None:
        while self.t < until_t:
            moved = self.browse(self.policy.boredom_threshold, until_t=until_t)
            if moved == 0:
                break
            self._advance(1200, 2600)
        self.finish_phase(until_t)


class Searcher(SimulatedAgent):
    """Browses a little, then looks things up by keyword and reads results."""

    def _query_categories(self) -> list:
        others = sorted(
            cid for cid in self.policy.interest_vector
            if cid != self.policy.latent_category
            and cid not in self.rt.feed_spec.dominant_categories
        )
        picks = [self.policy.latent_category]
        picks += self.rng.sample(others, min(2, len(others)))
        return picks[: self.policy.search_query_count]

    def run_exploration(self, until_t: int) -> None:
        self.browse(5, until_t=until_t)
        names = dict(self.rt.stream.header.categories)
        for cid in self._query_categories():
            if self.t >= until_t:
                break
            query = names.get(cid, cid).lower()
            self.t += 1400 + 140 * len(query)
            self.rt.search(query, self.t)
            self._advance(400, 900)
            self.browse(6, until_t=until_t)
            self._advance(1500, 3200)
        self.finish_phase(until_t)


class ChatInitiator(SimulatedAgent):
    """Half the time opens the chat within the first five minutes, otherwise
    waits past the engagement window; either way it eventually types a
    request for its latent interest."""

    def run_exploration(self, until_t: int) -> None:
        start = self.t
        early = self.rng.random() < self.policy.engage_probability
        if early:
            engage_at = start + self.rng.randint(45000, 150000)
        else:
            engage_at = start + self.rng.randint(320000, 430000)
        self.browse(10, until_t=min(engage_at, until_t))
        self.idle_scroll(min(engage_at, until_t))
        self.t = max(self.t, engage_at)
        if self.t < until_t:
            names = dict(self.rt.stream.header.categories)
            topic = names.get(self.policy.latent_category,
                              self.policy.latent_category).lower()
            message = self.rng.choice(CHAT_PHRASES).format(topic=topic)
            self.rt.respond_text(message, self.t)
            self._advance(1800, 3500)
            if self.rt.feed.direction is not None:
                self.rt.pull_refresh(self.t)
                self._advance(600, 1200)
                self.browse(9, until_t=until_t)
        self.finish_phase(until_t)


class OptionClicker(SimulatedAgent):
    """Answers the proactive dialogue by clicking, never typing."""

    def _pick_option(self):
        options = self.rt.dialogue.presented_options
        preferred = [o for o in options if o.kind == self.policy.option_preference]
        if self.policy.option_preference == "surprise":
            preferred = [o for o in options if o.kind == "surprise"] or preferred
        return (preferred or options)[0]

    def _answer_dialogue(self, until_t: int) -> None:
        while self.rt.dialogue.stage in (Stage.AWAITING_RESPONSE, Stage.NARROWING):
            if self.t >= until_t:
                break
            self._advance(1500, 3200)
            option = self._pick_option()
            self.rt.respond_option(option.option_id, self.t)

    def run_exploration(self, until_t: int) -> None:
        self.browse(6, until_t=until_t, stop_on_trigger=True)
        if self.rt.dialogue.stage == Stage.AWAITING_RESPONSE:
            self._answer_dialogue(until_t)
        if self.rt.feed.direction is not None:
            while self.t < until_t:
                if self.rt.feed.cursor >= len(self.rt.feed.items):
                    break
                self._advance(700, 1400)
                self.rt.pull_refresh(self.t)
                self.browse(self.rng.randint(7, 9), until_t=until_t)
        self.finish_phase(until_t)


AGENT_CLASSES = {
    "passive_scroller": PassiveScroller,
    "searcher": Searcher,
    "chat_initiator": ChatInitiator,
    "option_clicker": OptionClicker,
}

CONDITION_AGENTS = {
    "FEED": "passive_scroller",
    "SEARCH": "searcher",
    "USER_CHAT": "chat_initiator",
    "AI_INIT": "option_clicker",
}


def build_agent(runtime, policy: AgentPolicy, seed: int) -> SimulatedAgent:
    return AGENT_CLASSES[policy.kind](runtime, policy, seed)
