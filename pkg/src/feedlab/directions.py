"""Exploration directions shared by the dialogue layer and the feed engine.

A direction is the distilled outcome of a dialogue cycle: pull named
categories forward, push them back, or sample something unexpected.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ValidationError


class DirectionMode(str, Enum):
    INCREASE = "increase"
    DECREASE = "decrease"
    SURPRISE = "surprise"


@dataclass(frozen=True)
class Direction:
    mode: DirectionMode
    target_categories: tuple = ()
    refinement: str = ""

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "target_categories": list(self.target_categories),
            "refinement": self.refinement,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Direction":
        return cls(
            mode=DirectionMode(data["mode"]),
            target_categories=tuple(data.get("target_categories", ())),
            refinement=str(data.get("refinement", "") or ""),
        )


def validate_direction(direction: Direction, known_categories) -> Direction:
    known = set(known_categories)
    if direction.mode in (DirectionMode.INCREASE, DirectionMode.DECREASE):
        if not direction.target_categories:
            raise ValidationError(
                f"{direction.mode.value} direction needs at least one target category"
            )
    elif direction.target_categories:
        raise ValidationError("surprise direction takes no target categories")
    for cid in direction.target_categories:
        if cid not in known:
            raise ValidationError(f"direction targets unknown category {cid!r}")
    return direction


OPTION_KINDS = ("pursue_signal", "reduce_dominant", "surprise", "custom")


@dataclass(frozen=True)
class ExplorationOption:
    """A clickable choice: a label the user sees and the direction it implies."""

    option_id: str
    label: str
    direction: Direction
    kind: str = "custom"

    def to_dict(self) -> dict:
        return {
            "option_id": self.option_id,
            "label": self.label,
            "direction": self.direction.to_dict(),
            "kind": self.kind,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExplorationOption":
        return cls(
            option_id=str(data["option_id"]),
            label=str(data["label"]),
            direction=Direction.from_dict(data["direction"]),
            kind=str(data.get("kind", "custom")),
        )


def validate_option(option: ExplorationOption, known_categories) -> ExplorationOption:
    if not option.option_id:
        raise ValidationError("option_id must be non-empty")
    if not option.label.strip():
        raise ValidationError(f"option {option.option_id!r} has an empty label")
    if option.kind not in OPTION_KINDS:
        raise ValidationError(f"unknown option kind {option.kind!r}")
    validate_direction(option.direction, known_categories)
    return option
