"""Linear candidate ranking: feature extraction, scoring, weight fitting."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np

from .discourse import DiscourseState, TurnRecord, update_state
from .errors import EmptyPool, InsufficientData
from .policy import DialogueAct, PolicyDecision, select_system_act
from .relations import RelationCandidate
from .search import content_words

LENGTH_CAP_WORDS = 40

# Canonical feature order; fit_weights and the weights file follow it.
FEATURE_NAMES = (
    "length_words",
    "source_is_search",
    "source_is_structured",
    "answers_question",
    "relation_match",
    "novelty",
    "entity_overlap",
    "info_density",
)

_SOURCE_RANK = {"structured": 0, "search": 1, "template": 2}


@dataclass(frozen=True)
class FeatureVector:
    length_words: float
    source_is_search: float
    source_is_structured: float
    answers_question: float
    relation_match: float
    novelty: float
    entity_overlap: float
    info_density: float

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in FEATURE_NAMES}

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=float)


@dataclass
class Candidate(RelationCandidate):
    features: Optional[FeatureVector] = None
    score: float = 0.0


def _count_mentions(text: str, name: str) -> int:
    if not name:
        return 0
    return len(re.findall(re.escape(name.lower()), text.lower()))


def extract_features(
    candidate: RelationCandidate,
    decision: PolicyDecision,
    state: DiscourseState,
) -> FeatureVector:
    words = candidate.text.split()
    density = (
        len(set(content_words(candidate.text))) / len(words) if words else 0.0
    )
    return FeatureVector(
        length_words=float(min(len(words), LENGTH_CAP_WORDS)),
        source_is_search=1.0 if candidate.source == "search" else 0.0,
        source_is_structured=1.0 if candidate.source == "structured" else 0.0,
        answers_question=(
            1.0 if decision.must_answer and candidate.dialogue_act == "ANSWER" else 0.0
        ),
        relation_match=1.0 if candidate.relation in decision.preferred_relations else 0.0,
        novelty=0.0 if candidate.content_key in state.content_ledger else 1.0,
        entity_overlap=float(_count_mentions(candidate.text, candidate.focus_name)),
        info_density=density,
    )


def score_features(features: FeatureVector, weights: dict[str, float]) -> float:
    return float(sum(weights[name] * getattr(features, name) for name in FEATURE_NAMES))


def rank_pool(
    pool: list[RelationCandidate],
    weights: dict[str, float],
    decision: PolicyDecision,
    state: DiscourseState,
) -> list[Candidate]:
    """Score and order candidates; the head of the list is the system turn.

    Total order: score descending, then structured before search before
    template, then content_key ascending.
    """
    if not pool:
        raise EmptyPool("nothing to rank")
    ranked = []
    for raw in pool:
        features = extract_features(raw, decision, state)
        ranked.append(
            Candidate(
                relation=raw.relation,
                dialogue_act=raw.dialogue_act,
                text=raw.text,
                source=raw.source,
                content_key=raw.content_key,
                focus_entity=raw.focus_entity,
                follow_up=raw.follow_up,
                focus_name=raw.focus_name,
                mentions=list(raw.mentions),
                features=features,
                score=score_features(features, weights),
            )
        )
    ranked.sort(key=lambda c: (-c.score, _SOURCE_RANK.get(c.source, 3), c.content_key))
    return ranked


def fit_weights(rated: list[tuple[FeatureVector, float]]) -> dict[str, float]:
    """Least-squares weights from (features, rating) pairs.

    A tiny ridge term keeps degenerate designs solvable; with clean data the
    recovery error it introduces is far below 1e-6.
    """
    if len(rated) < len(FEATURE_NAMES):
        raise InsufficientData(
            f"need at least {len(FEATURE_NAMES)} samples, got {len(rated)}"
        )
    X = np.stack([fv.as_array() for fv, _ in rated])
    y = np.array([rating for _, rating in rated], dtype=float)
    gram = X.T @ X + 1e-6 * np.eye(len(FEATURE_NAMES))
    solution = np.linalg.solve(gram, X.T @ y)
    return {name: float(w) for name, w in zip(FEATURE_NAMES, solution)}


def load_rated_transcript(path, kb) -> list[tuple[FeatureVector, float]]:
    """Read a transcript JSONL whose system turns carry a `rating` field and
    turn it into (features, rating) training pairs for fit_weights.

    Features are reconstructed by replaying the discourse state and rebuilding
    each chosen candidate from its persisted turn record; the decision context
    comes from re-running the policy table on the preceding user act.
    """
    samples: list[tuple[FeatureVector, float]] = []
    state = DiscourseState()
    with open(path, encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    for rec in records:
        if (
            rec["speaker"] == "system"
            and "rating" in rec
            and rec["index"] > 0
            and rec.get("content_key")
        ):
            prev = records[rec["index"] - 1]
            decision = select_system_act(DialogueAct(prev["dialogue_act"]), state)
            focus_id = rec["mentioned_entities"][0] if rec.get("mentioned_entities") else None
            focus_name = (
                kb.entities[focus_id].name if focus_id and focus_id in kb.entities else ""
            )
            candidate = RelationCandidate(
                relation=rec.get("relation_used"),
                dialogue_act=rec["dialogue_act"],
                text=rec["text"],
                source=rec.get("source_used") or "template",
                content_key=rec["content_key"],
                focus_entity=focus_id,
                focus_name=focus_name,
            )
            samples.append((extract_features(candidate, decision, state), float(rec["rating"])))
        update_state(state, TurnRecord.from_dict(rec), kb)
    return samples


def load_weights(path) -> dict[str, float]:
    with open(path, encoding="utf-8") as fh:
        weights = json.load(fh)
    missing = set(FEATURE_NAMES) - set(weights)
    if missing:
        raise ValueError(f"weights file missing features: {sorted(missing)}")
    return {name: float(weights[name]) for name in FEATURE_NAMES}


def default_weights() -> dict[str, float]:
    with resources.as_file(resources.files("parley.data").joinpath("weights.json")) as path:
        return load_weights(path)
