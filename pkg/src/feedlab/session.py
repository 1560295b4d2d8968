"""Per-session glue: one feed, one dialogue, one event stream, one condition.

The runtime enforces condition capabilities, evaluates the proactive trigger
after every state change, applies confirmed directions to the feed, and can
rebuild itself from a persisted event log (replay).
"""

from __future__ import annotations

import datetime as _dt

from . import feed_engine
from .analyzer import build_insight, should_trigger
from .config import EngineConfig
from .corpus import Corpus, FeedSpec, generate_biased_feed, search_corpus
from .dialogue import DialogueOrchestrator, DialogueSession, Stage
from .errors import CapabilityError, StateError, ValidationError
from .event_log import EventLogWriter, EventStream, SessionHeader
from .feed_engine import initialize_feed
from .providers import TemplateProvider, resolve_provider

CONDITIONS = ("FEED", "SEARCH", "USER_CHAT", "AI_INIT")

CAPABILITIES = {
    "FEED": frozenset({"feed"}),
    "SEARCH": frozenset({"feed", "search"}),
    "USER_CHAT": frozenset({"feed", "chat"}),
    "AI_INIT": frozenset({"feed", "chat", "options", "analyze"}),
}

SEARCH_SPLICE_LIMIT = 10


def _now_iso() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def header_config(config: EngineConfig) -> dict:
    return {
        "proactivity": config.proactivity,
        "trigger_items": config.trigger_items,
        "eager_scroll_px": config.eager_scroll_px,
        "blend_rate": config.blend_rate,
        "increase_purity": config.increase_purity,
        "underrep_threshold": config.underrep_threshold,
        "dominant_top_n": config.dominant_top_n,
        "signal_multiplier": config.signal_multiplier,
        "min_evidence": config.min_evidence,
        "min_impressions": config.min_impressions,
        "min_discovery_dwell_ms": config.min_discovery_dwell_ms,
        "tool_window_ms": config.tool_window_ms,
        "provider_mode": config.provider_mode,
    }


class SessionRuntime:
    def __init__(self, session_id: str, condition: str, corpus: Corpus,
                 feed_spec: FeedSpec, seeds: dict, config: EngineConfig | None = None,
                 provider=None, log_path=None, wall_clock_start: str | None = None):
        if condition not in CONDITIONS:
            raise ValidationError(f"unknown condition {condition!r}")
        if "feed" not in seeds:
            raise ValidationError("seeds must include a 'feed' entry")
        self.session_id = session_id
        self.condition = condition
        self.corpus = corpus
        self.config = config or EngineConfig()
        self.feed_spec = feed_spec
        self.seeds = dict(seeds)
        self.category_ids = corpus.category_ids()

        items = generate_biased_feed(
            corpus, feed_spec, self.seeds["feed"],
            underrep_threshold=self.config.underrep_threshold,
        )
        self.feed = initialize_feed(session_id, items, self.config.blend_rate)

        header = SessionHeader(
            session_id=session_id,
            condition=condition,
            feed_spec=feed_spec.to_dict(),
            seeds=self.seeds,
            wall_clock_start=wall_clock_start or _now_iso(),
            initial_composition=self.feed.composition().to_dict(),
            categories=[[c.id, c.display_name] for c in corpus.categories],
            config=header_config(self.config),
        )
        writer = EventLogWriter(log_path, header) if log_path else None
        self.stream = EventStream(header, writer)

        self.provider = provider or resolve_provider(self.config, self.category_ids)
        self.dialogue = DialogueSession(session_id)
        self.orchestrator = DialogueOrchestrator(self.provider, corpus.categories, self.stream)
        self.notifications: list = []
        self.closed = False

    # -- helpers -------------------------------------------------------------

    def capabilities(self) -> list:
        return sorted(CAPABILITIES[self.condition])

    def _require(self, capability: str) -> None:
        if capability not in CAPABILITIES[self.condition]:
            raise CapabilityError(
                f"condition {self.condition} does not allow {capability!r}"
            )

    def _notify(self, payload: dict) -> None:
        payload = dict(payload)
        payload["seq"] = len(self.notifications) + 1
        self.notifications.append(payload)

    def poll_notifications(self, after: int = 0) -> list:
        return [n for n in self.notifications if n["seq"] > after]

    def _next_refresh_seed(self) -> int:
        return int(self.seeds.get("refresh_base", self.seeds["feed"] + 1)) + self.feed.refresh_count

    # -- feed operations -----------------------------------------------------

    def page(self, offset: int = 0, limit: int | None = None) -> dict:
        items = self.feed.items
        window = items[offset: offset + limit if limit is not None else None]
        return {
            "session_id": self.session_id,
            "condition": self.condition,
            "offset": offset,
            "total": len(items),
            "cursor": self.feed.cursor,
            "refresh_count": self.feed.refresh_count,
            "composition": self.feed.composition().to_dict(),
            "items": [
                dict(fi.to_dict(), index=offset + i) for i, fi in enumerate(window)
            ],
        }

    def report_impression(self, item_id: str, action: str, t_ms: int) -> dict:
        self._require("feed")
        if action == "enter":
            feed_engine.record_impression(self.feed, self.stream, item_id, t_ms)
            turn = self.maybe_trigger(t_ms)
            return {"ok": True, "triggered": turn is not None}
        if action == "exit":
            record = feed_engine.close_impression(self.feed, self.stream, item_id, t_ms)
            return {"ok": True, "dwell_ms": record.dwell_ms}
        raise ValidationError(f"impression action must be enter or exit, got {action!r}")

    def report_scroll(self, position_px: int, t_ms: int) -> dict:
        self._require("feed")
        feed_engine.record_scroll(self.feed, self.stream, position_px, t_ms)
        turn = self.maybe_trigger(t_ms)
        return {"ok": True, "triggered": turn is not None}

    def report_click(self, t_ms: int, item_id: str | None = None,
                     target: str | None = None) -> dict:
        self._require("feed")
        if target == "analyze":
            self._require("analyze")
        feed_engine.record_click(self.feed, self.stream, t_ms, item_id=item_id, target=target)
        turn = self.maybe_trigger(t_ms)
        return {"ok": True, "triggered": turn is not None}

    def pull_refresh(self, t_ms: int, seed: int | None = None) -> dict:
        self._require("feed")
        result = feed_engine.refresh_feed(
            self.feed, self.corpus, self.stream,
            seed if seed is not None else self._next_refresh_seed(),
            t_ms,
            increase_purity=self.config.increase_purity,
            underrep_threshold=self.config.underrep_threshold,
        )
        turn = self.maybe_trigger(t_ms)
        result["triggered"] = turn is not None
        return result

    def search(self, query: str, t_ms: int, replace: bool = False) -> dict:
        self._require("search")
        ranked = search_corpus(self.corpus, query)
        fresh = [it for it in ranked if it.item_id not in self.feed.seen_item_ids]
        spliced = fresh[:SEARCH_SPLICE_LIMIT]
        self.stream.append(
            "search_query",
            {
                "query": query,
                "chars": len(query),
                "result_count": len(ranked),
                "spliced": len(spliced),
                "replace": replace,
            },
            t_ms,
        )
        removed: list = []
        if spliced:
            if replace:
                removed = feed_engine.replace_tail(self.feed, spliced)
            else:
                feed_engine.insert_items(self.feed, spliced, self.feed.cursor)
            composition = self.feed.composition()
            self.stream.append(
                "composition_change",
                {
                    "cause": "search",
                    "composition": composition.to_dict(),
                    "replaced_indices": [],
                    "added_item_ids": [it.item_id for it in spliced],
                    "removed_item_ids": removed,
                    "fallback": False,
                    "entropy_bits": composition.entropy_bits(),
                },
                t_ms,
            )
        return {
            "results": [it.to_dict() for it in spliced],
            "result_count": len(ranked),
            "inserted_at": self.feed.cursor if spliced and not replace else None,
        }

    # -- dialogue operations ---------------------------------------------------

    def build_current_insight(self):
        return build_insight(
            self.feed.composition(),
            self.stream.events,
            self.category_ids,
            dominant_top_n=self.config.dominant_top_n,
            underrep_threshold=self.config.underrep_threshold,
            signal_multiplier=self.config.signal_multiplier,
            min_evidence=self.config.min_evidence,
            min_impressions=self.config.min_impressions,
        )

    def maybe_trigger(self, t_ms: int):
        """Open the dialogue when the trigger policy says so. Explicit analyze
        requests fire at every proactivity level; the configured level adds
        its automatic rules on top."""
        if self.condition != "AI_INIT":
            return None
        if self.dialogue.stage not in (Stage.IDLE, Stage.DISMISSED):
            return None
        fire, reason = should_trigger(
            self.stream.events, "reactive",
            trigger_items=self.config.trigger_items,
            eager_scroll_px=self.config.eager_scroll_px,
        )
        if not fire and self.config.proactivity != "reactive":
            fire, reason = should_trigger(
                self.stream.events, self.config.proactivity,
                trigger_items=self.config.trigger_items,
                eager_scroll_px=self.config.eager_scroll_px,
            )
        if not fire:
            return None
        self.stream.append(
            "trigger",
            {
                "reason": reason,
                "policy": self.config.proactivity,
                "distinct_items": self.feed.distinct_surfaced(),
            },
            t_ms,
        )
        insight = self.build_current_insight()
        turn = self.orchestrator.open_dialogue_ai(self.dialogue, insight, t_ms)
        self._notify({"type": "trigger", "reason": reason, "t_ms": t_ms, "turn": turn})
        return turn

    def request_analysis(self, t_ms: int) -> dict:
        self._require("analyze")
        if self.dialogue.stage not in (Stage.IDLE, Stage.DISMISSED):
            raise StateError("dialogue already open")
        return self.report_click(t_ms, target="analyze")

    def _auto_confirm(self, t_ms: int) -> dict | None:
        if self.dialogue.stage != Stage.BLENDING:
            return None
        confirmation = self.orchestrator.confirm_blend(self.dialogue, self.feed, t_ms)
        self._notify(
            {
                "type": "blend_confirmed",
                "t_ms": t_ms,
                "direction": self.feed.direction.to_dict(),
                "turn": confirmation,
            }
        )
        return confirmation

    def respond_option(self, option_id: str, t_ms: int) -> dict:
        self._require("options")
        turn = self.orchestrator.select_option(self.dialogue, option_id, t_ms)
        confirmation = self._auto_confirm(t_ms)
        return {
            "turn": turn,
            "confirmation": confirmation,
            "dialogue": self.dialogue.snapshot(),
        }

    def respond_text(self, text: str, t_ms: int) -> dict:
        self._require("chat")
        if self.dialogue.turn_count == 0 and self.condition == "USER_CHAT":
            turn = self.orchestrator.open_dialogue_user(self.dialogue, text, t_ms)
        else:
            turn = self.orchestrator.submit_free_text(self.dialogue, text, t_ms)
        confirmation = self._auto_confirm(t_ms)
        return {
            "turn": turn,
            "confirmation": confirmation,
            "dialogue": self.dialogue.snapshot(),
        }

    def dismiss(self, t_ms: int) -> dict:
        self._require("chat")
        return self.orchestrator.dismiss(self.dialogue, t_ms)

    # -- bookkeeping -----------------------------------------------------------

    def mark_phase(self, phase: str, mark: str, t_ms: int) -> dict:
        self.stream.append("phase_mark", {"phase": phase, "mark": mark}, t_ms)
        return {"ok": True}

    def record_survey(self, answers: dict, t_ms: int) -> dict:
        self.stream.append("survey_response", {"answers": answers}, t_ms)
        return {"ok": True}

    def metrics(self) -> dict:
        from .metrics import compute_session_metrics

        return compute_session_metrics(self.stream, self.config).to_dict()

    def dialogue_state(self) -> dict:
        snapshot = self.dialogue.snapshot()
        if self.condition == "USER_CHAT" and self.dialogue.turn_count == 0:
            snapshot["idle_prompt"] = "How can I help you?"
        return snapshot

    def close(self) -> None:
        self.stream.close()
        self.closed = True

    # -- replay ----------------------------------------------------------------

    def consume(self, event) -> None:
        """Re-execute one logged client action; derived events regenerate."""
        kind, payload, t = event.kind, event.payload, event.t_ms
        if kind == "impression_enter":
            self.report_impression(payload["item_id"], "enter", t)
        elif kind == "impression_exit":
            self.report_impression(payload["item_id"], "exit", t)
        elif kind == "scroll":
            self.report_scroll(payload["position_px"], t)
        elif kind == "click":
            self.report_click(t, item_id=payload.get("item_id"), target=payload.get("target"))
        elif kind == "refresh":
            self.pull_refresh(t, seed=payload["seed"])
        elif kind == "search_query":
            self.search(payload["query"], t, replace=payload.get("replace", False))
        elif kind == "option_select":
            self.respond_option(payload["option_id"], t)
        elif kind == "free_text":
            self.respond_text(payload["text"], t)
        elif kind == "dismiss":
            self.dismiss(t)
        elif kind == "phase_mark":
            self.mark_phase(payload["phase"], payload["mark"], t)
        elif kind == "survey_response":
            self.record_survey(payload.get("answers", {}), t)
        # composition_change, dialogue_turn, trigger, provider_fallback are
        # regenerated by the operations above, never replayed directly


def replay_session(stream, corpus: Corpus, config: EngineConfig | None = None,
                   provider=None) -> SessionRuntime:
    """Rebuild a session from its log by re-executing every client action.

    Uses the deterministic template provider by default so regenerated
    dialogue turns match what a template-backed session produced.
    """
    from .event_log import replay as replay_events

    header = stream.header
    if config is None:
        config = EngineConfig().replace(**{
            k: v for k, v in header.config.items()
            if k in header_config(EngineConfig())
        })
    runtime = SessionRuntime(
        session_id=header.session_id,
        condition=header.condition,
        corpus=corpus,
        feed_spec=FeedSpec.from_dict(header.feed_spec),
        seeds=header.seeds,
        config=config,
        provider=provider or TemplateProvider(),
        wall_clock_start=header.wall_clock_start,
    )
    if runtime.feed.composition().to_dict() != header.initial_composition:
        raise ValidationError(
            "replayed initial composition does not match the logged header"
        )
    replay_events(stream, [runtime])
    return runtime
