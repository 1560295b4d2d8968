"""Text generation behind the dialogue: templates by default, remote optional.

Both providers answer the same five request kinds (insight_text, option_set,
narrowing_set, map_free_text, confirmation_text) with a structured response.
The template provider is a pure function of the request so sessions replay
byte-for-byte; the remote provider speaks to any chat-completion endpoint and
is expected to fail sometimes, in which case callers fall back to templates.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass

from .config import EngineConfig
from .directions import (
    Direction,
    DirectionMode,
    ExplorationOption,
    validate_direction,
    validate_option,
)
from .errors import ProviderError, ValidationError

logger = logging.getLogger(__name__)

REQUEST_KINDS = (
    "insight_text",
    "option_set",
    "narrowing_set",
    "map_free_text",
    "confirmation_text",
)


@dataclass(frozen=True)
class ProviderRequest:
    kind: str
    payload: dict

    def __post_init__(self):
        if self.kind not in REQUEST_KINDS:
            raise ValidationError(f"unknown provider request kind {self.kind!r}")


@dataclass
class ProviderResponse:
    text: str
    options: list | None = None
    direction: Direction | None = None
    provider_tag: str = "template"

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "options": [o.to_dict() for o in self.options] if self.options else None,
            "direction": self.direction.to_dict() if self.direction else None,
            "provider_tag": self.provider_tag,
        }


from .corpus import CATEGORY_SYNONYMS

_DECREASE_CUES = (
    "less", "fewer", "reduce", "hide", "tired of", "enough", "too much",
    "too many", "stop showing", "sick of", "not interested in",
)
_SURPRISE_CUES = (
    "surprise", "random", "something new", "something different", "anything new",
    "new stuff", "wildcard", "no idea",
)

_REFINEMENT_TABLES = {
    "travel": [
        ("weekend_getaways", "Weekend getaways nearby"),
        ("long_trips", "Long-trip planning and itineraries"),
        ("vicarious_travel", "Vicarious travel (beautiful photos and stories)"),
    ],
    "food": [
        ("quick_meals", "Quick everyday meals"),
        ("restaurants", "Restaurant finds and reviews"),
        ("baking", "Baking projects"),
    ],
    "fitness": [
        ("home_workouts", "Short home workouts"),
        ("outdoor_training", "Outdoor training and running"),
        ("mobility", "Mobility and recovery"),
    ],
}

_GENERIC_INCREASE_REFINEMENTS = [
    ("everyday", "Everyday {name} ideas"),
    ("deep_dives", "{name} deep dives and guides"),
    ("visual", "{name} in photos"),
]

_DECREASE_REFINEMENTS = [
    ("much_less", "Cut it back sharply"),
    ("slightly_less", "Just a little less"),
    ("swap_fresh", "Swap in fresh topics instead"),
]

CLARIFYING_TEXT = (
    "I want to get this right. Could you name a topic, or say whether you "
    "want more or less of something?"
)


def _display(payload: dict, category: str) -> str:
    return payload.get("display_names", {}).get(category, category)


class TemplateProvider:
    """Deterministic phrasing interpolated from the request payload."""

    tag = "template"

    def generate(self, request: ProviderRequest) -> ProviderResponse:
        handler = getattr(self, "_" + request.kind)
        return handler(request.payload)

    def _insight_text(self, payload: dict) -> ProviderResponse:
        report = payload["report"]
        dominant = report.get("dominant", [])
        parts = []
        if dominant:
            names = [_display(payload, cid) for cid, _ in dominant]
            pct = round(100 * sum(share for _, share in dominant))
            if len(names) == 1:
                parts.append(f"Your feed is about {pct}% {names[0]}.")
            else:
                head = ", ".join(names[:-1])
                parts.append(f"Your feed is about {pct}% {head} and {names[-1]}.")
        signals = report.get("signals", [])
        if signals:
            name = _display(payload, signals[0]["category"])
            parts.append(f"You tend to pause on {name} posts.")
        parts.append("Want to branch out?")
        return ProviderResponse(text=" ".join(parts), provider_tag=self.tag)

    def _option_set(self, payload: dict) -> ProviderResponse:
        report = payload["report"]
        dominant = [cid for cid, _ in report.get("dominant", [])]
        signals = [s["category"] for s in report.get("signals", [])]
        options: list = []
        for cid in signals[:1]:
            options.append(
                ExplorationOption(
                    option_id=f"opt-pursue-{cid}",
                    label=f"Yes, show me more {_display(payload, cid)}",
                    direction=Direction(DirectionMode.INCREASE, (cid,)),
                    kind="pursue_signal",
                )
            )
        reduce_count = 1 if signals else 2
        for cid in dominant[:reduce_count]:
            options.append(
                ExplorationOption(
                    option_id=f"opt-reduce-{cid}",
                    label=f"Show less {_display(payload, cid)}",
                    direction=Direction(DirectionMode.DECREASE, (cid,)),
                    kind="reduce_dominant",
                )
            )
        if len(signals) > 1 and len(options) < 3:
            cid = signals[1]
            options.append(
                ExplorationOption(
                    option_id=f"opt-pursue-{cid}",
                    label=f"More {_display(payload, cid)} too",
                    direction=Direction(DirectionMode.INCREASE, (cid,)),
                    kind="pursue_signal",
                )
            )
        for cid in report.get("underrepresented", []):
            if len(options) >= 2:
                break
            if any(cid in o.direction.target_categories for o in options):
                continue
            options.append(
                ExplorationOption(
                    option_id=f"opt-explore-{cid}",
                    label=f"Try some {_display(payload, cid)}",
                    direction=Direction(DirectionMode.INCREASE, (cid,)),
                    kind="custom",
                )
            )
        options.append(
            ExplorationOption(
                option_id="opt-surprise",
                label="Surprise me with something different",
                direction=Direction(DirectionMode.SURPRISE),
                kind="surprise",
            )
        )
        if not 3 <= len(options) <= 4:
            raise ValidationError(
                f"cannot compose a 3-4 option set from this report ({len(options)} options)"
            )
        return ProviderResponse(
            text="Pick a direction, or type your own.",
            options=options,
            provider_tag=self.tag,
        )

    def _narrowing_set(self, payload: dict) -> ProviderResponse:
        direction = Direction.from_dict(payload["direction"])
        target = direction.target_categories[0] if direction.target_categories else ""
        name = _display(payload, target)
        if direction.mode == DirectionMode.DECREASE:
            question = f"How should I handle {name}?"
            table = _DECREASE_REFINEMENTS
        else:
            question = f"What kind of {name} content sounds right?"
            table = _REFINEMENT_TABLES.get(
                target,
                [(token, label.format(name=name.capitalize()))
                 for token, label in _GENERIC_INCREASE_REFINEMENTS],
            )
        options = [
            ExplorationOption(
                option_id=f"opt-refine-{token}",
                label=label,
                direction=Direction(direction.mode, direction.target_categories, token),
                kind="custom",
            )
            for token, label in table
        ]
        return ProviderResponse(text=question, options=options, provider_tag=self.tag)

    def _map_free_text(self, payload: dict) -> ProviderResponse:
        text = payload.get("text", "")
        lowered = " " + re.sub(r"[^a-z0-9]+", " ", text.lower()).strip() + " "
        known = payload.get("categories") or list(CATEGORY_SYNONYMS)
        mentioned = []
        for cid in known:
            for synonym in CATEGORY_SYNONYMS.get(cid, [cid]):
                if f" {synonym} " in lowered or lowered.strip() == synonym:
                    mentioned.append(cid)
                    break
        wants_less = any(cue in lowered for cue in _DECREASE_CUES)
        wants_surprise = any(cue in lowered for cue in _SURPRISE_CUES)
        if mentioned:
            mode = DirectionMode.DECREASE if wants_less else DirectionMode.INCREASE
            direction = Direction(mode, tuple(dict.fromkeys(mentioned)))
            verb = "Dialing back" if mode == DirectionMode.DECREASE else "Pulling in more"
            names = ", ".join(_display(payload, cid) for cid in direction.target_categories)
            return ProviderResponse(
                text=f"Got it. {verb} {names}.",
                direction=direction,
                provider_tag=self.tag,
            )
        if wants_surprise:
            return ProviderResponse(
                text="Got it. Mixing in a few wildcards.",
                direction=Direction(DirectionMode.SURPRISE),
                provider_tag=self.tag,
            )
        return ProviderResponse(text=CLARIFYING_TEXT, provider_tag=self.tag)

    def _confirmation_text(self, payload: dict) -> ProviderResponse:
        direction = Direction.from_dict(payload["direction"])
        if direction.mode == DirectionMode.SURPRISE:
            text = "Mixing a few unexpected finds into your feed now. Keep scrolling."
        else:
            names = ", ".join(
                _display(payload, cid) for cid in direction.target_categories
            )
            if direction.mode == DirectionMode.INCREASE:
                text = f"Started mixing in {names} content. Keep scrolling."
            else:
                text = f"Dialing back {names} from here on. Keep scrolling."
        return ProviderResponse(text=text, provider_tag=self.tag)


def validate_structured(raw: dict, kind: str, known_categories) -> ProviderResponse:
    """Check a remote provider's raw structured output against the response
    schema; raises ValidationError on any violation."""
    if not isinstance(raw, dict):
        raise ValidationError("provider output is not a structured record")
    text = raw.get("text", "")
    if not isinstance(text, str):
        raise ValidationError("provider text must be a string")
    options = None
    if raw.get("options") is not None:
        if not isinstance(raw["options"], list):
            raise ValidationError("provider options must be a list")
        options = [ExplorationOption.from_dict(o) for o in raw["options"]]
        for option in options:
            validate_option(option, known_categories)
        ids = [o.option_id for o in options]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate option_id in provider output")
    direction = None
    if raw.get("direction") is not None:
        direction = Direction.from_dict(raw["direction"])
        validate_direction(direction, known_categories)
    if kind == "option_set":
        if options is None or not 3 <= len(options) <= 4:
            count = len(options) if options is not None else 0
            raise ValidationError(f"option_set must carry 3-4 options, got {count}")
    if kind == "narrowing_set":
        if options is None or not 2 <= len(options) <= 4:
            count = len(options) if options is not None else 0
            raise ValidationError(f"narrowing_set must carry 2-4 options, got {count}")
    if kind == "map_free_text" and direction is None and not text.strip():
        raise ValidationError("map_free_text needs a direction or a clarifying text")
    return ProviderResponse(text=text, options=options, direction=direction,
                            provider_tag="remote")


_SYSTEM_PROMPT = (
    "You help people explore beyond their feed's comfort zone. Reply with a "
    "single JSON object: {\"text\": string, \"options\": [{\"option_id\", "
    "\"label\", \"kind\", \"direction\": {\"mode\", \"target_categories\", "
    "\"refinement\"}}] or null, \"direction\": object or null}. Modes are "
    "increase, decrease, surprise. Use only the category ids provided."
)


class RemoteProvider:
    """Chat-completion client with a strict schema check and one retry."""

    tag = "remote"

    def __init__(self, base_url: str, model: str, api_key: str = "",
                 timeout_ms: int = 5000, known_categories=(), transport=None):
        if not base_url:
            raise ValidationError("remote provider needs a base url")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout_s = max(timeout_ms, 1) / 1000
        self.known_categories = list(known_categories)
        self._transport = transport

    def _post(self, body: dict) -> dict:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        with httpx.Client(timeout=self.timeout_s, transport=self._transport) as client:
            response = client.post(
                f"{self.base_url}/chat/completions", json=body, headers=headers
            )
            response.raise_for_status()
            return response.json()

    def generate(self, request: ProviderRequest) -> ProviderResponse:
        body = {
            "model": self.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": _SYSTEM_PROMPT},
                {
                    "role": "user",
                    "content": json.dumps(
                        {"kind": request.kind, "payload": request.payload},
                        sort_keys=True,
                    ),
                },
            ],
        }
        last_error: Exception | None = None
        for attempt in range(2):
            try:
                data = self._post(body)
                content = data["choices"][0]["message"]["content"]
                raw = json.loads(content)
                return validate_structured(raw, request.kind, self.known_categories)
            except Exception as exc:  # network, schema, or parse trouble alike
                last_error = exc
                logger.warning("remote provider attempt %d failed: %s", attempt + 1, exc)
        raise ProviderError(f"remote provider failed after retry: {last_error}")


def resolve_provider(config: EngineConfig, known_categories=()):
    """Build the configured provider, honoring environment overrides."""
    mode = os.environ.get("PROVIDER_MODE", config.provider_mode)
    if mode == "template":
        return TemplateProvider()
    if mode == "remote":
        return RemoteProvider(
            base_url=os.environ.get("REMOTE_BASE_URL", config.remote_base_url),
            model=os.environ.get("REMOTE_MODEL", config.remote_model),
            api_key=os.environ.get("REMOTE_API_KEY", config.remote_api_key),
            timeout_ms=int(os.environ.get("REMOTE_TIMEOUT_MS", config.remote_timeout_ms)),
            known_categories=known_categories,
        )
    raise ValidationError(f"unknown provider mode {mode!r}")
