"""Feed exploration engine, experiment harness, and companion service."""

from .analyzer import (
    CategoryDistribution,
    InsightReport,
    LatentSignal,
    build_insight,
    compute_viewed_distribution,
    detect_dominant,
    detect_latent_signals,
    detect_underrepresented,
    shannon_entropy,
    should_trigger,
)
from .config import EngineConfig, load_config, parse_config_text
from .corpus import (
    Category,
    ContentItem,
    Corpus,
    FeedSpec,
    feed_spec_permutations,
    generate_biased_feed,
    load_corpus,
    search_corpus,
    synthesize_corpus,
    write_corpus,
)
from .dialogue import DialogueOrchestrator, DialogueSession, Stage
from .directions import Direction, DirectionMode, ExplorationOption
from .errors import (
    CapabilityError,
    CapacityError,
    EmptyWindowError,
    FeedLabError,
    MonotonicityError,
    NotFoundError,
    ParseError,
    ProviderError,
    StateError,
    ValidationError,
)
from .event_log import (
    EVENT_KINDS,
    BehaviorEvent,
    EventLogWriter,
    EventStream,
    SessionHeader,
    load_stream,
    replay,
    write_stream,
)
from .feed_engine import FeedItem, FeedState, initialize_feed, refresh_feed
from .harness import (
    Durations,
    SessionPlan,
    export_results,
    plan_study,
    run_condition_session,
    run_directional_batch,
    run_session,
    run_study,
)
from .metrics import SessionMetrics, compute_session_metrics, summarize_metrics
from .providers import ProviderRequest, ProviderResponse, RemoteProvider, TemplateProvider, resolve_provider
from .session import CONDITIONS, SessionRuntime, replay_session

__version__ = "0.1.0"
