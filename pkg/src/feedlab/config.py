"""Engine configuration: thresholds, trigger policy, provider selection.

Defaults follow the shipped interaction design; every knob can be overridden
via a key=value config file (see ``load_config``) or, for provider settings,
via environment variables (see providers module).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError, ValidationError

PROACTIVITY_LEVELS = ("reactive", "moderate", "eager")


@dataclass
class EngineConfig:
    # dialogue trigger
    proactivity: str = "moderate"
    trigger_items: int = 20
    eager_scroll_px: int = 3000
    min_elapsed_ms: int = 0  # optional time gate for the moderate trigger, disabled by default

    # blending
    blend_rate: float = 0.25
    blend_rate_min: float = 0.20
    blend_rate_max: float = 0.30
    increase_purity: float = 0.80

    # analysis
    underrep_threshold: float = 0.05
    dominant_top_n: int = 2
    signal_multiplier: float = 2.0
    min_evidence: int = 2
    min_impressions: int = 5

    # metrics
    min_discovery_dwell_ms: int = 2000
    tool_window_ms: int = 300_000
    browse_dwell_floor_ms: int = 0

    # provider
    provider_mode: str = "template"
    remote_base_url: str = ""
    remote_model: str = ""
    remote_api_key: str = ""
    remote_timeout_ms: int = 5000

    def validate(self) -> "EngineConfig":
        if self.proactivity not in PROACTIVITY_LEVELS:
            raise ValidationError(f"unknown proactivity level: {self.proactivity!r}")
        if not 0 < self.blend_rate < 1:
            raise ValidationError(f"blend_rate must be in (0,1), got {self.blend_rate}")
        if not 0 < self.underrep_threshold < 1:
            raise ValidationError(
                f"underrep_threshold must be in (0,1), got {self.underrep_threshold}"
            )
        if self.trigger_items < 1:
            raise ValidationError("trigger_items must be >= 1")
        if self.dominant_top_n < 1:
            raise ValidationError("dominant_top_n must be >= 1")
        if self.provider_mode not in ("template", "remote"):
            raise ValidationError(f"unknown provider_mode: {self.provider_mode!r}")
        return self

    def replace(self, **kwargs) -> "EngineConfig":
        return dataclasses.replace(self, **kwargs).validate()


DEFAULT_CONFIG = EngineConfig()

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(EngineConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_config_text(text: str, base: EngineConfig | None = None) -> EngineConfig:
    """Parse the key=value config format.

    One ``key = value`` pair per line; blank lines and ``#`` comments ignored.
    Unknown keys are rejected so typos fail loudly.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError(f"config line {lineno}: expected key = value", line=lineno)
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _FIELD_TYPES:
            raise ParseError(f"config line {lineno}: unknown key {key!r}", line=lineno)
        try:
            values[key] = _coerce(key, raw)
        except ValueError as exc:
            raise ParseError(f"config line {lineno}: bad value for {key}: {exc}", line=lineno)
    config = dataclasses.replace(base or DEFAULT_CONFIG, **values)
    return config.validate()


def load_config(path: str | Path, base: EngineConfig | None = None) -> EngineConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"), base=base)
