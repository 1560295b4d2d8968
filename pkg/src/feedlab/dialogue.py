"""The option-based exploration dialogue.

One cycle runs insight -> options -> at most one narrowing round -> blend
confirmation. The machine never touches the feed until the person commits a
direction, and dismissing is always available. A user-initiated variant backs
the chat-only condition: same vocabulary, no auto-generated options.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

from . import feed_engine
from .analyzer import InsightReport
from .directions import Direction, DirectionMode
from .errors import StateError, ValidationError
from .event_log import EventStream
from .providers import ProviderRequest, ProviderResponse, TemplateProvider

logger = logging.getLogger(__name__)


class Stage(str, Enum):
    IDLE = "Idle"
    INSIGHT_SHOWN = "InsightShown"
    AWAITING_RESPONSE = "AwaitingResponse"
    NARROWING = "Narrowing"
    BLENDING = "Blending"
    DISMISSED = "Dismissed"


AI_INITIATED = "ai_initiated"
USER_INITIATED = "user_initiated"


@dataclass
class DialogueSession:
    session_id: str
    stage: Stage = Stage.IDLE
    insight: InsightReport | None = None
    presented_options: list = field(default_factory=list)
    narrowing_rounds_used: int = 0
    chosen_direction: Direction | None = None
    turn_count: int = 0
    initiation: str = ""
    history: list = field(default_factory=list)

    def option_by_id(self, option_id: str):
        for option in self.presented_options:
            if option.option_id == option_id:
                return option
        raise ValidationError(f"unknown option_id {option_id!r}")

    def snapshot(self) -> dict:
        return {
            "stage": self.stage.value,
            "insight": self.insight.to_dict() if self.insight else None,
            "options": [o.to_dict() for o in self.presented_options],
            "narrowing_rounds_used": self.narrowing_rounds_used,
            "chosen_direction": (
                self.chosen_direction.to_dict() if self.chosen_direction else None
            ),
            "turn_count": self.turn_count,
            "initiation": self.initiation,
            "cycles_completed": len(self.history),
        }


class DialogueOrchestrator:
    """Runs DialogueSessions against a provider and logs every turn."""

    def __init__(self, provider, categories, stream: EventStream):
        self.provider = provider
        self.fallback = provider if isinstance(provider, TemplateProvider) else TemplateProvider()
        self.categories = list(categories)
        self.display_names = {c.id: c.display_name for c in self.categories}
        self.category_ids = [c.id for c in self.categories]
        self.stream = stream

    # -- provider plumbing ---------------------------------------------------

    def _generate(self, kind: str, payload: dict, t_ms: int) -> ProviderResponse:
        request = ProviderRequest(kind, payload)
        if self.provider is not self.fallback:
            try:
                return self.provider.generate(request)
            except Exception as exc:
                logger.warning("provider failed for %s, using template: %s", kind, exc)
                self.stream.append(
                    "provider_fallback",
                    {"request_kind": kind, "reason": str(exc)[:300]},
                    t_ms,
                )
        return self.fallback.generate(request)

    def _payload(self, **extra) -> dict:
        payload = {
            "display_names": self.display_names,
            "categories": self.category_ids,
        }
        payload.update(extra)
        return payload

    def _log_assistant_turn(self, dsession: DialogueSession, text: str, options,
                            t_ms: int, extra: dict | None = None) -> dict:
        payload = {
            "role": "assistant",
            "turn_index": dsession.turn_count,
            "text": text,
            "options": [o.to_dict() for o in options] if options else [],
            "stage": dsession.stage.value,
        }
        if extra:
            payload.update(extra)
        self.stream.append("dialogue_turn", payload, t_ms)
        return payload

    # -- operations ----------------------------------------------------------

    def open_dialogue_ai(self, dsession: DialogueSession, insight: InsightReport,
                         t_ms: int) -> dict:
        if dsession.stage not in (Stage.IDLE, Stage.DISMISSED):
            raise StateError(f"cannot open dialogue from stage {dsession.stage.value}")
        payload = self._payload(report=insight.to_dict())
        text_response = self._generate("insight_text", payload, t_ms)
        option_response = self._generate("option_set", payload, t_ms)
        options = option_response.options or []
        if not 3 <= len(options) <= 4:
            raise ValidationError(f"provider returned {len(options)} options, need 3-4")

        dsession.initiation = AI_INITIATED
        dsession.insight = insight
        dsession.presented_options = options
        dsession.narrowing_rounds_used = 0
        dsession.chosen_direction = None
        dsession.stage = Stage.AWAITING_RESPONSE
        dsession.turn_count += 1
        text = f"{text_response.text} {option_response.text}".strip()
        return self._log_assistant_turn(
            dsession, text, options, t_ms, extra={"initiation": AI_INITIATED}
        )

    def open_dialogue_user(self, dsession: DialogueSession, first_user_message: str,
                           t_ms: int) -> dict:
        if dsession.stage not in (Stage.IDLE, Stage.DISMISSED):
            raise StateError(f"cannot open dialogue from stage {dsession.stage.value}")
        if not first_user_message.strip():
            raise ValidationError("empty message")
        dsession.initiation = USER_INITIATED
        dsession.insight = None
        dsession.presented_options = []
        dsession.narrowing_rounds_used = 0
        dsession.chosen_direction = None
        dsession.stage = Stage.AWAITING_RESPONSE
        return self._handle_free_text(dsession, first_user_message, t_ms)

    def select_option(self, dsession: DialogueSession, option_id: str, t_ms: int) -> dict:
        if dsession.stage not in (Stage.AWAITING_RESPONSE, Stage.NARROWING):
            raise StateError(f"cannot select an option in stage {dsession.stage.value}")
        option = dsession.option_by_id(option_id)
        dsession.turn_count += 1
        self.stream.append(
            "option_select",
            {
                "option_id": option.option_id,
                "kind": option.kind,
                "direction": option.direction.to_dict(),
                "turn_index": dsession.turn_count,
                "chars": 0,
            },
            t_ms,
        )
        admits_refinement = option.direction.mode in (
            DirectionMode.INCREASE, DirectionMode.DECREASE
        )
        if (
            dsession.stage == Stage.AWAITING_RESPONSE
            and admits_refinement
            and dsession.narrowing_rounds_used == 0
        ):
            dsession.narrowing_rounds_used = 1
            response = self._generate(
                "narrowing_set",
                self._payload(direction=option.direction.to_dict()),
                t_ms,
            )
            refinements = response.options or []
            if not 2 <= len(refinements) <= 4:
                raise ValidationError(
                    f"provider returned {len(refinements)} refinements, need 2-4"
                )
            dsession.presented_options = refinements
            dsession.stage = Stage.NARROWING
            return self._log_assistant_turn(dsession, response.text, refinements, t_ms)

        dsession.chosen_direction = option.direction
        dsession.presented_options = []
        dsession.stage = Stage.BLENDING
        return {
            "role": "system",
            "turn_index": dsession.turn_count,
            "stage": dsession.stage.value,
            "direction": option.direction.to_dict(),
        }

    def submit_free_text(self, dsession: DialogueSession, text: str, t_ms: int) -> dict:
        if not text.strip():
            raise ValidationError("empty message")
        if dsession.stage in (Stage.IDLE, Stage.DISMISSED):
            if dsession.turn_count == 0:
                raise StateError("no dialogue open; nothing to reply to")
            # re-engagement starts a fresh cycle with a fresh narrowing budget
            dsession.narrowing_rounds_used = 0
            dsession.presented_options = []
            dsession.chosen_direction = None
            dsession.stage = Stage.AWAITING_RESPONSE
        return self._handle_free_text(dsession, text, t_ms)

    def _handle_free_text(self, dsession: DialogueSession, text: str, t_ms: int) -> dict:
        dsession.turn_count += 1
        self.stream.append(
            "free_text",
            {"text": text, "chars": len(text), "turn_index": dsession.turn_count},
            t_ms,
        )
        response = self._generate("map_free_text", self._payload(text=text), t_ms)
        if response.direction is not None:
            dsession.chosen_direction = response.direction
            dsession.presented_options = []
            dsession.stage = Stage.BLENDING
            return {
                "role": "system",
                "turn_index": dsession.turn_count,
                "stage": dsession.stage.value,
                "direction": response.direction.to_dict(),
            }
        return self._log_assistant_turn(dsession, response.text, None, t_ms)

    def confirm_blend(self, dsession: DialogueSession, feed_state, t_ms: int) -> dict:
        if dsession.stage != Stage.BLENDING:
            raise StateError(f"cannot confirm from stage {dsession.stage.value}")
        if dsession.chosen_direction is None:
            raise StateError("no direction chosen")
        direction = dsession.chosen_direction
        feed_engine.set_direction(feed_state, direction, self.stream, t_ms,
                                  self.category_ids)
        response = self._generate(
            "confirmation_text", self._payload(direction=direction.to_dict()), t_ms
        )
        dsession.history.append(
            {"direction": direction.to_dict(), "turns": dsession.turn_count}
        )
        dsession.stage = Stage.IDLE
        dsession.presented_options = []
        dsession.chosen_direction = None
        return self._log_assistant_turn(
            dsession, response.text, None, t_ms,
            extra={"confirmed_direction": direction.to_dict()},
        )

    def dismiss(self, dsession: DialogueSession, t_ms: int) -> dict:
        if dsession.stage == Stage.IDLE:
            raise StateError("no dialogue open to dismiss")
        if dsession.stage == Stage.DISMISSED:
            return {"stage": dsession.stage.value, "repeated": True}
        stage_before = dsession.stage.value
        dsession.stage = Stage.DISMISSED
        dsession.presented_options = []
        dsession.chosen_direction = None
        self.stream.append("dismiss", {"stage_before": stage_before}, t_ms)
        return {"stage": dsession.stage.value, "repeated": False}
