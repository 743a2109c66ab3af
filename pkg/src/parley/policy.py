"""Dialogue acts, the mixed-initiative policy table, and candidate pooling."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from . import nlg
from .discourse import DiscourseRelation, DiscourseState
from .errors import NoFocusEntity, NoOpinion, NoStory, StoryExhausted
from .kb import KnowledgeBase, related_entities
from .relations import (
    OpinionEntry,
    RelationCandidate,
    Story,
    canonical_edge_key,
    instantiate_comparison,
    instantiate_contingency,
    instantiate_expansion,
    instantiate_temporal,
)
from .search import Index, make_query, query, tokenize


class DialogueAct(str, Enum):
    OPEN_QUESTION = "OPEN_QUESTION"
    WH_QUESTION = "WH_QUESTION"
    YN_QUESTION = "YN_QUESTION"
    WHY_QUESTION = "WHY_QUESTION"
    TOPIC_PROPOSAL = "TOPIC_PROPOSAL"
    STATEMENT = "STATEMENT"
    STATEMENT_OPINION = "STATEMENT_OPINION"
    AGREEMENT = "AGREEMENT"
    REJECTION = "REJECTION"
    OFFER = "OFFER"
    ANSWER = "ANSWER"
    REPROMPT = "REPROMPT"


QUESTION_ACTS = frozenset(
    {
        DialogueAct.OPEN_QUESTION,
        DialogueAct.WH_QUESTION,
        DialogueAct.YN_QUESTION,
        DialogueAct.WHY_QUESTION,
    }
)

WH_WORDS = frozenset({"what", "who", "where", "when", "which", "whose", "whom", "how"})
AUX_WORDS = frozenset(
    "do does did is are was were am can could will would should shall may might must have has had".split()
)
ASSENT_WORDS = frozenset({"sure", "yes", "yep", "absolutely", "same", "okay", "ok", "yeah"})
DISSENT_WORDS = frozenset({"no", "nope", "nah", "never"})
EVALUATIVE_VERBS = frozenset({"like", "love", "hate", "think", "enjoy", "prefer"})
FIRST_PERSON = frozenset({"i", "we"})

_SENTENCE_BREAK_RE = re.compile(r"[.!?]+")
_TALK_ABOUT_RE = re.compile(r"talk(?:ing)? about\s+(.+)", re.IGNORECASE)


@dataclass
class PolicyDecision:
    system_act: DialogueAct
    preferred_relations: list[DiscourseRelation]
    must_answer: bool = False
    offer_to_execute: Optional[dict] = None


@dataclass
class Fixtures:
    """Read-only content the gatherers draw from."""

    opinions: list[OpinionEntry] = field(default_factory=list)
    stories: list[Story] = field(default_factory=list)
    templates: dict[str, nlg.Template] = field(default_factory=dict)
    attribute_map: dict[str, str] = field(default_factory=dict)


def classify_user_act(text: str, state: Optional[DiscourseState] = None) -> DialogueAct:
    """Ordered pattern rules; total over non-empty strings."""
    if not text or not text.strip():
        raise ValueError("cannot classify empty text")
    tokens = tokenize(text)
    token_set = set(tokens)

    if "why" in token_set or "how come" in " ".join(tokens):
        return DialogueAct.WHY_QUESTION
    if token_set & WH_WORDS:
        return DialogueAct.WH_QUESTION
    for sentence in _SENTENCE_BREAK_RE.split(text):
        first = tokenize(sentence)[:1]
        if first and first[0] in AUX_WORDS:
            return DialogueAct.YN_QUESTION
    if _TALK_ABOUT_RE.search(text):
        return DialogueAct.TOPIC_PROPOSAL
    if tokens and token_set <= ASSENT_WORDS:
        return DialogueAct.AGREEMENT
    if tokens and token_set <= DISSENT_WORDS:
        return DialogueAct.REJECTION
    if token_set & FIRST_PERSON and token_set & EVALUATIVE_VERBS:
        return DialogueAct.STATEMENT_OPINION
    return DialogueAct.STATEMENT


def extract_topic(text: str) -> Optional[str]:
    match = _TALK_ABOUT_RE.search(text)
    if not match:
        return None
    topic = re.sub(r"[^a-z0-9\s]", "", match.group(1).lower())
    topic = re.sub(r"\s+", " ", topic).strip()
    if topic.startswith("the "):
        topic = topic[4:]
    return topic or None


INITIATIVE_RELATIONS = [
    DiscourseRelation.EXPANSION,
    DiscourseRelation.CONTINGENCY,
    DiscourseRelation.COMPARISON,
    DiscourseRelation.TEMPORAL,
]


def select_system_act(user_act: DialogueAct, state: DiscourseState) -> PolicyDecision:
    """Deterministic policy table mapping the user's act to a system plan."""
    if user_act == DialogueAct.WHY_QUESTION:
        return PolicyDecision(
            system_act=DialogueAct.ANSWER,
            preferred_relations=[DiscourseRelation.CONTINGENCY],
            must_answer=True,
        )
    if user_act in QUESTION_ACTS:
        return PolicyDecision(
            system_act=DialogueAct.ANSWER,
            preferred_relations=[DiscourseRelation.EXPANSION],
            must_answer=True,
        )
    if user_act == DialogueAct.TOPIC_PROPOSAL:
        return PolicyDecision(
            system_act=DialogueAct.STATEMENT_OPINION,
            preferred_relations=[DiscourseRelation.EXPANSION, DiscourseRelation.CONTINGENCY],
        )
    if user_act == DialogueAct.AGREEMENT and state.pending_offer is not None:
        return PolicyDecision(
            system_act=DialogueAct.STATEMENT,
            preferred_relations=[DiscourseRelation.TEMPORAL],
            offer_to_execute=dict(state.pending_offer),
        )
    return PolicyDecision(
        system_act=DialogueAct.STATEMENT,
        preferred_relations=list(INITIATIVE_RELATIONS),
    )


def load_attribute_map(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _matched_attributes(text: str, attribute_map: dict[str, str]) -> list[str]:
    """Attribute names whose keyword phrases occur in the question, longest
    keyword first, de-duplicated."""
    lowered = " ".join(tokenize(text))
    matched: list[str] = []
    for keyword in sorted(attribute_map, key=lambda k: (-len(k), k)):
        if keyword in lowered and attribute_map[keyword] not in matched:
            matched.append(attribute_map[keyword])
    return matched


def _last_opinion_entity(state: DiscourseState) -> Optional[str]:
    for turn in reversed(state.turns):
        if (
            turn.speaker == "system"
            and turn.content_key
            and turn.content_key.startswith("opinion:")
            and turn.mentioned_entities
        ):
            return turn.mentioned_entities[0]
    return None


def _answer_candidates(
    decision: PolicyDecision,
    state: DiscourseState,
    kb: KnowledgeBase,
    index: Index,
    fixtures: Fixtures,
) -> list[RelationCandidate]:
    user_turn = state.turns[-1]
    relation = decision.preferred_relations[0]
    focus_id = state.focus_entity()
    focus = kb.entities.get(focus_id) if focus_id else None
    pool: list[RelationCandidate] = []

    if user_turn.dialogue_act == DialogueAct.WHY_QUESTION.value:
        target = _last_opinion_entity(state) or focus_id or state.topic
        if target:
            try:
                _, justification = instantiate_contingency(state, kb, fixtures.opinions, target)
                justification.dialogue_act = DialogueAct.ANSWER.value
                justification.relation = relation
                pool.append(justification)
            except NoOpinion:
                pass

    for attr_name in _matched_attributes(user_turn.text, fixtures.attribute_map):
        if attr_name in ("__opinion_topic__", "__opinion_focus__"):
            # "your favorite X" wants the system's own pick from the topic
            # bin; "what did you think of it" wants the thing in focus.
            if attr_name == "__opinion_topic__":
                targets = (state.topic, focus_id)
            else:
                targets = (focus_id, state.topic)
            for target in targets:
                if target is None:
                    continue
                try:
                    opinion, _ = instantiate_contingency(state, kb, fixtures.opinions, target)
                    opinion.dialogue_act = DialogueAct.ANSWER.value
                    opinion.relation = relation
                    pool.append(opinion)
                    break
                except NoOpinion:
                    continue
            continue
        if focus is None:
            continue
        if attr_name == "description":
            if focus.description:
                pool.append(
                    RelationCandidate(
                        relation=relation,
                        dialogue_act=DialogueAct.ANSWER.value,
                        text=nlg.attribute_fact(focus.name, "description", focus.description),
                        source="structured",
                        content_key=f"fact:{focus.id}:description",
                        focus_entity=focus.id,
                        focus_name=focus.name,
                        mentions=[focus.id],
                    )
                )
            continue
        related = related_entities(focus.id, kb, relation_filter=attr_name)
        for _, target in related:
            pool.append(
                RelationCandidate(
                    relation=relation,
                    dialogue_act=DialogueAct.ANSWER.value,
                    text=nlg.edge_fact(focus.name, attr_name, target.name),
                    source="structured",
                    content_key=canonical_edge_key(focus.id, attr_name, target.id, kb),
                    focus_entity=focus.id,
                    focus_name=focus.name,
                    mentions=[focus.id, target.id],
                )
            )
        if not related and attr_name in focus.attributes:
            pool.append(
                RelationCandidate(
                    relation=relation,
                    dialogue_act=DialogueAct.ANSWER.value,
                    text=nlg.attribute_fact(focus.name, attr_name, focus.attributes[attr_name].value),
                    source="structured",
                    content_key=f"fact:{focus.id}:{attr_name}",
                    focus_entity=focus.id,
                    focus_name=focus.name,
                    mentions=[focus.id],
                )
            )

    opinion_seeking = any(
        a in ("__opinion_topic__", "__opinion_focus__")
        for a in _matched_attributes(user_turn.text, fixtures.attribute_map)
    ) or user_turn.dialogue_act == DialogueAct.WHY_QUESTION.value
    search_query = make_query(state, user_turn.text, kb)
    if search_query and not opinion_seeking:
        # Only the top retrieval competes: search text cannot answer an
        # opinion-seeking question, and lower-ranked hits only add noise.
        for result in query(index, search_query, k=1):
            pool.append(
                RelationCandidate(
                    relation=relation,
                    dialogue_act=DialogueAct.ANSWER.value,
                    text=nlg.package_extract(result, "best_two", index),
                    source="search",
                    content_key=f"doc:{result.doc_id}:s{result.sentence_index}",
                    focus_entity=focus_id,
                    focus_name=focus.name if focus else "",
                    mentions=[focus_id] if focus_id else [],
                )
            )
    return pool


def _first_untold_story(stories: list[Story], state: DiscourseState, topic: Optional[str]) -> Optional[Story]:
    on_topic = [s for s in stories if topic is not None and s.bin == topic]
    for story in on_topic + stories:
        if f"story:{story.story_id}:0" not in state.content_ledger:
            return story
    return None


def _initiative_candidates(
    decision: PolicyDecision,
    state: DiscourseState,
    kb: KnowledgeBase,
    index: Index,
    fixtures: Fixtures,
) -> list[RelationCandidate]:
    pool: list[RelationCandidate] = []
    focus_id = state.focus_entity()

    if decision.offer_to_execute is not None:
        offer = decision.offer_to_execute
        if offer.get("kind") == "story":
            try:
                pool.append(
                    instantiate_temporal(state, fixtures.stories, offer.get("bin"), advance=False)
                )
            except (NoStory, StoryExhausted):
                pass
        return pool

    user_turn = state.turns[-1] if state.turns else None
    if (
        user_turn is not None
        and user_turn.dialogue_act == DialogueAct.TOPIC_PROPOSAL.value
        and state.topic
    ):
        key = f"topic:{state.topic}"
        if key not in state.content_ledger:
            template = fixtures.templates.get(
                f"topic_opinion:{state.topic}"
            ) or fixtures.templates.get("topic_opinion")
            if template is not None:
                # The planned move for a topic proposal is the opinion plus
                # follow-up question; generators only step in as fallback.
                return [
                    RelationCandidate(
                        relation=DiscourseRelation.EXPANSION,
                        dialogue_act=DialogueAct.STATEMENT_OPINION.value,
                        text=nlg.realize_template(template, {"topic": state.topic}),
                        source="template",
                        content_key=key,
                    )
                ]

    for relation in decision.preferred_relations:
        if relation == DiscourseRelation.EXPANSION:
            try:
                pool.extend(instantiate_expansion(state, kb, index))
            except NoFocusEntity:
                pass
        elif relation == DiscourseRelation.CONTINGENCY:
            target = focus_id or state.topic
            if target is None:
                continue
            try:
                opinion, _ = instantiate_contingency(state, kb, fixtures.opinions, target)
                pool.append(opinion)
            except NoOpinion:
                pass
        elif relation == DiscourseRelation.COMPARISON:
            candidate = instantiate_comparison(state, kb)
            if candidate is not None:
                pool.append(candidate)
        elif relation == DiscourseRelation.TEMPORAL:
            if state.story_cursor is not None:
                try:
                    pool.append(
                        instantiate_temporal(state, fixtures.stories, state.topic, advance=False)
                    )
                except (NoStory, StoryExhausted):
                    pass
            else:
                story = _first_untold_story(fixtures.stories, state, state.topic)
                template = fixtures.templates.get("story_offer")
                offer_key = f"offer:story:{story.story_id}" if story else None
                if story is not None and template is not None and offer_key not in state.content_ledger:
                    pool.append(
                        RelationCandidate(
                            relation=DiscourseRelation.TEMPORAL,
                            dialogue_act=DialogueAct.OFFER.value,
                            text=nlg.realize_template(template, {"bin": story.bin}),
                            source="template",
                            content_key=offer_key,
                        )
                    )
    return pool


def gather_candidates(
    decision: PolicyDecision,
    state: DiscourseState,
    kb: KnowledgeBase,
    index: Index,
    fixtures: Fixtures,
) -> list[RelationCandidate]:
    """Pool candidates from every applicable source, ledger-filtered and
    de-duplicated by content key."""
    if decision.must_answer:
        pool = _answer_candidates(decision, state, kb, index, fixtures)
    else:
        pool = _initiative_candidates(decision, state, kb, index, fixtures)
    seen: set[str] = set()
    filtered = []
    for candidate in pool:
        if candidate.content_key in state.content_ledger or candidate.content_key in seen:
            continue
        seen.add(candidate.content_key)
        filtered.append(candidate)
    return filtered
