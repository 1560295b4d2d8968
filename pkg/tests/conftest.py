from __future__ import annotations

import pytest

from feedlab.corpus import FeedSpec, synthesize_corpus

# Labels for the verdict lines printed after a run that includes the
# acceptance tests. Keyed by test function name.
CRITERIA = {
    "test_entropy_matches_term_sum_oracle": "entropy oracle (1000 random distributions, boundaries exact)",
    "test_biased_feed_construction": "biased-feed construction (28 dominant + 7 scattered, 100 seeds)",
    "test_blend_rate_conformance": "blend-rate conformance (500 refresh cycles within bounds)",
    "test_trigger_exactness": "trigger exactness (moderate at 20th item, reactive never, eager every refresh)",
    "test_state_machine_safety": "state-machine safety (exhaustive action sequences to length 8)",
    "test_replay_determinism": "replay determinism (byte-identical composition, metrics, logs)",
    "test_metrics_match_oracles": "metrics oracle equivalence (200 random event streams)",
    "test_directional_study_reproduction": "directional study reproduction (20 seeds per condition)",
    "test_counterbalancing": "counterbalancing (plan_study(28) cell counts within 1)",
    "test_provider_resilience": "provider resilience (unreachable remote falls back to templates)",
}

_results: list = []


@pytest.fixture(scope="session")
def corpus():
    return synthesize_corpus(n_items=320, seed=11)


@pytest.fixture()
def feed_spec():
    return FeedSpec(dominant_categories=("food", "fashion"), concentration=0.80, length=35)


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    name = report.nodeid.split("::")[-1]
    if name in CRITERIA:
        _results.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _results:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {CRITERIA[name]}")
