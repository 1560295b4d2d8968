"""Study orchestration: plans, counterbalancing, and simulated session runs.

A study assigns each participant to the AI_INIT or USER_CHAT group, runs the
two baselines (FEED, SEARCH) in counterbalanced order plus the group's
experimental condition, rotates three stock feed recipes so each condition
sees each feed about equally often, and writes one event log per session.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .agents import CONDITION_AGENTS, build_agent, default_policy
from .config import EngineConfig
from .corpus import Corpus, FeedSpec, feed_spec_permutations, search_corpus, synthesize_corpus
from .errors import ValidationError
from .metrics import compute_session_metrics, summarize_metrics
from .providers import resolve_provider
from .session import CONDITIONS, SessionRuntime

__all__ = [
    "Durations", "SessionPlan", "plan_study", "run_condition_session",
    "run_session", "run_study", "run_directional_batch", "export_results",
    "search_corpus", "capability_violations", "SIM_WALL_CLOCK",
]

SIM_WALL_CLOCK = "1970-01-01T00:00:00+00:00"
PHASE_GAP_MS = 500

# Row r assigns feed specs (by index) to (FEED, SEARCH, experimental).
_LATIN_ROWS = ((0, 1, 2), (1, 2, 0), (2, 0, 1))
# Pair each row with both baseline orders before any pair repeats; any prefix
# of this cycle keeps every (condition, feed, order) cell within one of the
# others.
_CYCLE = (
    (_LATIN_ROWS[0], 0),
    (_LATIN_ROWS[1], 1),
    (_LATIN_ROWS[2], 0),
    (_LATIN_ROWS[0], 1),
    (_LATIN_ROWS[1], 0),
    (_LATIN_ROWS[2], 1),
)


@dataclass
class Durations:
    warm_up_ms: int = 300000
    exploration_ms: int = 900000


@dataclass
class SessionPlan:
    participant_id: int
    group: str
    conditions: tuple
    feed_by_condition: dict
    seeds: dict
    engage_probability: float = 0.5

    def to_dict(self) -> dict:
        return {
            "participant_id": self.participant_id,
            "group": self.group,
            "conditions": list(self.conditions),
            "feed_by_condition": {
                cond: spec.to_dict() for cond, spec in self.feed_by_condition.items()
            },
            "seeds": self.seeds,
            "engage_probability": self.engage_probability,
        }


def _session_seeds(master_seed: int, participant_id: int, condition: str) -> dict:
    base = master_seed * 1000003 + participant_id * 9973 + CONDITIONS.index(condition) * 101
    return {"feed": base, "refresh_base": base + 1000, "agent": base + 2000}


def plan_study(n_participants: int, master_seed: int = 0) -> list:
    """Counterbalanced plans: half the participants per group, baseline order
    alternating within each group, feed recipes rotated through a Latin
    square. Group two runs the cycle three steps out of phase with group one
    so merged (condition, feed, order) cells stay within one of each other.
    """
    if n_participants <= 0 or n_participants % 2 != 0:
        raise ValidationError("participant count must be positive and even")
    rng = random.Random(master_seed)
    ids = list(range(1, n_participants + 1))
    rng.shuffle(ids)
    half = n_participants // 2
    groups = [("AI_INIT", sorted(ids[:half])), ("USER_CHAT", sorted(ids[half:]))]
    rotation = rng.randrange(6)
    specs = feed_spec_permutations()

    plans = []
    for group_index, (group, members) in enumerate(groups):
        offset = (rotation + 3 * group_index) % 6
        for gi, pid in enumerate(members):
            row, order = _CYCLE[(gi + offset) % 6]
            baselines = ("FEED", "SEARCH") if order == 0 else ("SEARCH", "FEED")
            conditions = baselines + (group,)
            feed_by_condition = {
                "FEED": specs[row[0]],
                "SEARCH": specs[row[1]],
                group: specs[row[2]],
            }
            plans.append(
                SessionPlan(
                    participant_id=pid,
                    group=group,
                    conditions=conditions,
                    feed_by_condition=feed_by_condition,
                    seeds={
                        cond: _session_seeds(master_seed, pid, cond)
                        for cond in conditions
                    },
                )
            )
    plans.sort(key=lambda p: p.participant_id)
    return plans


def run_condition_session(condition: str, feed_spec: FeedSpec, seeds: dict,
                          corpus: Corpus, config: EngineConfig | None = None,
                          durations: Durations | None = None,
                          out_dir=None, participant_id="solo",
                          engage_probability: float = 0.5,
                          policy_kind: str | None = None,
                          provider=None):
    """Run one simulated session end to end. Returns (runtime, metrics)."""
    config = config or EngineConfig()
    durations = durations or Durations()
    session_id = f"p{participant_id}-{condition.lower()}"
    log_path = Path(out_dir) / f"{session_id}.jsonl" if out_dir else None

    kind = policy_kind or CONDITION_AGENTS[condition]
    policy = default_policy(
        kind, feed_spec, corpus.category_ids(),
        random.Random(seeds["agent"] * 31 + 7),
        engage_probability=engage_probability,
    )
    runtime = SessionRuntime(
        session_id=session_id,
        condition=condition,
        corpus=corpus,
        feed_spec=feed_spec,
        seeds=seeds,
        config=config,
        provider=provider or resolve_provider(config, corpus.category_ids()),
        log_path=log_path,
        wall_clock_start=SIM_WALL_CLOCK,
    )
    agent = build_agent(runtime, policy, seeds["agent"])

    runtime.mark_phase("warm_up", "start", agent.t)
    agent.run_warm_up(durations.warm_up_ms)
    runtime.mark_phase("warm_up", "end", agent.t)

    agent.t += PHASE_GAP_MS
    runtime.mark_phase("exploration", "start", agent.t)
    agent.run_exploration(agent.t + durations.exploration_ms)
    runtime.mark_phase("exploration", "end", agent.t)

    metrics = compute_session_metrics(runtime.stream, config)
    runtime.close()
    return runtime, metrics


def run_session(plan: SessionPlan, corpus: Corpus,
                config: EngineConfig | None = None,
                durations: Durations | None = None, out_dir=None) -> dict:
    """Run one participant's three conditions in plan order."""
    results = {}
    for condition in plan.conditions:
        runtime, metrics = run_condition_session(
            condition,
            plan.feed_by_condition[condition],
            plan.seeds[condition],
            corpus,
            config=config,
            durations=durations,
            out_dir=out_dir,
            participant_id=plan.participant_id,
            engage_probability=plan.engage_probability,
        )
        results[condition] = {
            "session_id": runtime.session_id,
            "log_path": str(runtime.stream.writer.path) if runtime.stream.writer else None,
            "metrics": metrics,
        }
    return results


def run_study(n_participants: int, master_seed: int = 0, out_dir=None,
              corpus: Corpus | None = None, config: EngineConfig | None = None,
              durations: Durations | None = None) -> dict:
    corpus = corpus or synthesize_corpus(seed=11)
    plans = plan_study(n_participants, master_seed)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    all_metrics = []
    sessions = []
    for plan in plans:
        results = run_session(plan, corpus, config=config, durations=durations,
                              out_dir=out_dir)
        for condition, entry in results.items():
            all_metrics.append(entry["metrics"])
            sessions.append(
                {
                    "participant_id": plan.participant_id,
                    "condition": condition,
                    "session_id": entry["session_id"],
                    "log_path": entry["log_path"],
                    "metrics": entry["metrics"].to_dict(),
                }
            )
    report = export_results(all_metrics)
    output = {
        "plans": [p.to_dict() for p in plans],
        "sessions": sessions,
        "summary": report["summary"],
        "table": report["table"],
    }
    if out_dir:
        results_path = Path(out_dir) / "results.json"
        results_path.write_text(
            json.dumps(output, indent=2, sort_keys=True), encoding="utf-8"
        )
        (Path(out_dir) / "results.txt").write_text(report["table"], encoding="utf-8")
    return output


def run_directional_batch(n_seeds: int = 20, master_seed: int = 7,
                          corpus: Corpus | None = None,
                          config: EngineConfig | None = None,
                          durations: Durations | None = None,
                          engage_probability: float = 0.5) -> dict:
    """Run every condition n_seeds times with the shipped default agents,
    pairing seeds across conditions. Returns metrics lists keyed by
    condition."""
    corpus = corpus or synthesize_corpus(seed=11)
    specs = feed_spec_permutations()
    by_condition: dict = {cond: [] for cond in CONDITIONS}
    for i in range(n_seeds):
        feed_spec = specs[i % len(specs)]
        for condition in CONDITIONS:
            seeds = _session_seeds(master_seed, 1000 + i, condition)
            _, metrics = run_condition_session(
                condition, feed_spec, seeds, corpus,
                config=config, durations=durations,
                participant_id=f"s{i:02d}",
                engage_probability=engage_probability,
            )
            by_condition[condition].append(metrics)
    return by_condition


_TABLE_FIELDS = (
    ("breadth", "breadth"),
    ("diversity_gain_bits", "diversity gain (bits)"),
    ("bubble_breaking_rate", "bubble breaking rate"),
    ("expression_cost_chars", "expression cost (chars)"),
    ("time_to_first_discovery_ms", "time to first discovery (ms)"),
    ("conversation_turns", "conversation turns"),
    ("scroll_velocity_pre_px_s", "scroll velocity pre (px/s)"),
    ("scroll_velocity_post_px_s", "scroll velocity post (px/s)"),
    ("mean_dwell_initial_ms", "dwell initial items (ms)"),
    ("mean_dwell_blended_ms", "dwell blended items (ms)"),
)


def export_results(metrics_list) -> dict:
    """Condition-level descriptive table, machine and human readable."""
    if not metrics_list:
        raise ValidationError("no session metrics to export")
    summary = summarize_metrics(metrics_list)
    columns = [c for c in CONDITIONS]
    width = 34
    lines = []
    header = "measure".ljust(width) + "".join(c.ljust(24) for c in columns)
    lines.append(header)
    lines.append("-" * len(header))
    for field_name, label in _TABLE_FIELDS:
        row = label.ljust(width)
        for cond in columns:
            if cond not in summary:
                row += "absent".ljust(24)
                continue
            stats = summary[cond]["fields"][field_name]
            if stats["n"] == 0:
                row += "-".ljust(24)
            else:
                row += f"{stats['mean']:.2f} ({stats['sd']:.2f})".ljust(24)
        lines.append(row)
    row = "tool engaged (first 5 min)".ljust(width)
    for cond in columns:
        if cond not in summary:
            row += "absent".ljust(24)
            continue
        stats = summary[cond]["fields"]["tool_engaged_first_5min"]
        frac = stats["fraction_true"]
        row += ("n/a" if frac is None else f"{100 * frac:.0f}%").ljust(24)
    lines.append(row)
    return {"summary": summary, "table": "\n".join(lines)}


_FORBIDDEN_BY_CONDITION = {
    "FEED": {"search_query", "dialogue_turn", "option_select", "free_text",
             "trigger", "dismiss"},
    "SEARCH": {"dialogue_turn", "option_select", "free_text", "trigger", "dismiss"},
    "USER_CHAT": {"search_query", "trigger"},
    "AI_INIT": {"search_query"},
}


def capability_violations(stream) -> list:
    """Events the session's condition should never have produced."""
    forbidden = _FORBIDDEN_BY_CONDITION[stream.header.condition]
    return [
        (event.seq, event.kind)
        for event in stream.events
        if event.kind in forbidden
    ]
