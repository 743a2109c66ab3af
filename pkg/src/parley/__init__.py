"""Mixed-initiative open-domain dialogue engine.

Fuses a structured knowledge base with a BM25 search index, generates
candidate turns by instantiating discourse relations (expansion,
contingency, temporal, comparison), and selects the reply with a linear
ranker over pooled candidates.
"""

from .discourse import (
    DiscourseRelation,
    DiscourseState,
    SalienceEntry,
    TurnRecord,
    mark_content_used,
    replay_transcript,
    resolve_reference,
    update_state,
)
from .engine import Engine, EngineConfig, Session, default_config_path
from .errors import ParleyError
from .kb import (
    AttributeValue,
    Entity,
    KnowledgeBase,
    get_attribute,
    link_entity,
    load_ontology,
    load_snapshot,
    merge,
    related_entities,
)
from .metrics import SessionMetrics, compute_metrics, summarize
from .nlg import Template, load_templates, package_extract, pronominalize, realize_template
from .policy import (
    DialogueAct,
    Fixtures,
    PolicyDecision,
    classify_user_act,
    gather_candidates,
    select_system_act,
)
from .ranking import (
    Candidate,
    FeatureVector,
    extract_features,
    fit_weights,
    rank_pool,
)
from .relations import (
    OpinionEntry,
    RelationCandidate,
    Story,
    instantiate_comparison,
    instantiate_contingency,
    instantiate_expansion,
    instantiate_temporal,
    load_opinions,
    load_stories,
)
from .search import (
    Document,
    Index,
    SearchResult,
    build_index,
    first_sentence,
    make_query,
    query,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "AttributeValue",
    "Candidate",
    "DialogueAct",
    "DiscourseRelation",
    "DiscourseState",
    "Document",
    "Engine",
    "EngineConfig",
    "Entity",
    "FeatureVector",
    "Fixtures",
    "Index",
    "KnowledgeBase",
    "OpinionEntry",
    "ParleyError",
    "PolicyDecision",
    "RelationCandidate",
    "SalienceEntry",
    "SearchResult",
    "Session",
    "SessionMetrics",
    "Story",
    "Template",
    "TurnRecord",
    "build_index",
    "classify_user_act",
    "compute_metrics",
    "default_config_path",
    "extract_features",
    "first_sentence",
    "fit_weights",
    "gather_candidates",
    "get_attribute",
    "instantiate_comparison",
    "instantiate_contingency",
    "instantiate_expansion",
    "instantiate_temporal",
    "link_entity",
    "load_ontology",
    "load_opinions",
    "load_snapshot",
    "load_stories",
    "load_templates",
    "make_query",
    "mark_content_used",
    "merge",
    "package_extract",
    "pronominalize",
    "query",
    "rank_pool",
    "realize_template",
    "related_entities",
    "replay_transcript",
    "resolve_reference",
    "select_system_act",
    "summarize",
    "tokenize",
    "update_state",
]
