"""Per-session conversational context: salience, history, ledger, offers.

Reference resolution is rule-based on recency plus type/gender agreement.
Off-the-shelf coreference models are tuned to text rather than dialogue, so
deterministic rules over the salience list are both more testable and good
enough for the short reference distances conversations actually exhibit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import MalformedTranscript, NoAntecedent, OutOfOrderTurn
from .kb import KnowledgeBase

ANAPHORA_WINDOW_TURNS = 5

NEUTER_PRONOUNS = frozenset({"it", "its"})
MALE_PRONOUNS = frozenset({"he", "him", "his"})
FEMALE_PRONOUNS = frozenset({"she", "her", "hers"})
PLURAL_PRONOUNS = frozenset({"they", "them"})


class DiscourseRelation(str, Enum):
    CONTINGENCY = "CONTINGENCY"
    COMPARISON = "COMPARISON"
    EXPANSION = "EXPANSION"
    TEMPORAL = "TEMPORAL"


@dataclass
class TurnRecord:
    index: int
    speaker: str  # "user" | "system"
    text: str
    dialogue_act: str
    mentioned_entities: list[str] = field(default_factory=list)
    relation_used: Optional[str] = None
    source_used: Optional[str] = None
    timestamp: int = 0
    content_key: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "speaker": self.speaker,
            "text": self.text,
            "dialogue_act": self.dialogue_act,
            "mentioned_entities": self.mentioned_entities,
            "relation_used": self.relation_used,
            "source_used": self.source_used,
            "timestamp": self.timestamp,
            "content_key": self.content_key,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, rec: dict) -> "TurnRecord":
        try:
            return cls(
                index=rec["index"],
                speaker=rec["speaker"],
                text=rec["text"],
                dialogue_act=rec["dialogue_act"],
                mentioned_entities=list(rec.get("mentioned_entities", [])),
                relation_used=rec.get("relation_used"),
                source_used=rec.get("source_used"),
                timestamp=rec.get("timestamp", 0),
                content_key=rec.get("content_key"),
            )
        except KeyError as exc:
            raise MalformedTranscript(f"turn record missing {exc}") from exc


@dataclass
class SalienceEntry:
    entity_id: str
    last_mention_turn: int
    type_path: list[str]


@dataclass
class DiscourseState:
    turns: list[TurnRecord] = field(default_factory=list)
    salience: list[SalienceEntry] = field(default_factory=list)
    topic: Optional[str] = None
    content_ledger: set[str] = field(default_factory=set)
    pending_offer: Optional[dict] = None
    story_cursor: Optional[tuple[str, int]] = None

    def focus_entity(self) -> Optional[str]:
        return self.salience[0].entity_id if self.salience else None

    def window_entries(self, window: int = ANAPHORA_WINDOW_TURNS) -> list[SalienceEntry]:
        cutoff = len(self.turns) - window
        return [e for e in self.salience if e.last_mention_turn >= cutoff]


def update_state(state: DiscourseState, turn: TurnRecord, kb: KnowledgeBase) -> DiscourseState:
    """Append a turn, promote its mentions, track topic and ledger."""
    if turn.index != len(state.turns):
        raise OutOfOrderTurn(f"expected index {len(state.turns)}, got {turn.index}")
    if state.turns and turn.speaker == state.turns[-1].speaker:
        raise OutOfOrderTurn(f"speaker {turn.speaker!r} took two turns in a row")
    if turn.speaker not in ("user", "system"):
        raise OutOfOrderTurn(f"unknown speaker {turn.speaker!r}")
    state.turns.append(turn)

    # Reversed so the first mention of the turn (typically the subject) ends
    # up at the salience head.
    for entity_id in reversed(turn.mentioned_entities):
        state.salience = [e for e in state.salience if e.entity_id != entity_id]
        type_path = kb.entities[entity_id].type_path if entity_id in kb.entities else []
        state.salience.insert(
            0, SalienceEntry(entity_id=entity_id, last_mention_turn=turn.index, type_path=list(type_path))
        )
    state.salience.sort(key=lambda e: -e.last_mention_turn)

    if turn.dialogue_act == "TOPIC_PROPOSAL":
        from .policy import extract_topic  # local import avoids a module cycle

        topic = extract_topic(turn.text)
        if topic:
            state.topic = topic
    if turn.speaker == "system" and turn.content_key:
        state.content_ledger.add(turn.content_key)
    return state


def mark_content_used(state: DiscourseState, content_key: str) -> DiscourseState:
    state.content_ledger.add(content_key)
    return state


def _gender_of(entity_id: str, kb: KnowledgeBase) -> Optional[str]:
    ent = kb.entities.get(entity_id)
    if ent is None:
        return None
    av = ent.attributes.get("gender")
    return str(av.value).lower() if av is not None else None


def _is_plural(entity_id: str, kb: KnowledgeBase) -> bool:
    ent = kb.entities.get(entity_id)
    if ent is None:
        return False
    av = ent.attributes.get("plural")
    return bool(av and str(av.value).lower() in ("true", "1", "yes"))


def mention_compatible(mention: str, entity_id: str, kb: KnowledgeBase) -> bool:
    """Agreement check between an anaphoric mention and an entity.

    "it" wants a non-Person; "he"/"she" want a Person with an agreeing (or
    unknown) gender; "they" wants a plural entity or a Person; "the X" wants
    a type_path containing the type that X names.
    """
    word = mention.strip().lower().rstrip(".!?,")
    ent = kb.entities.get(entity_id)
    if ent is None:
        return False
    if word in NEUTER_PRONOUNS:
        return "Person" not in ent.type_path
    if word in MALE_PRONOUNS:
        return "Person" in ent.type_path and _gender_of(entity_id, kb) in (None, "male")
    if word in FEMALE_PRONOUNS:
        return "Person" in ent.type_path and _gender_of(entity_id, kb) in (None, "female")
    if word in PLURAL_PRONOUNS:
        return _is_plural(entity_id, kb) or "Person" in ent.type_path
    if word.startswith("the "):
        type_name = kb.type_aliases.get(word[4:].strip())
        return type_name is not None and type_name in ent.type_path
    return False


def resolve_reference(state: DiscourseState, mention: str, kb: KnowledgeBase) -> str:
    """Resolve a pronoun or definite noun phrase to the most salient
    compatible entity mentioned within the anaphora window.

    "they"/"them" checks genuinely plural entities before falling back to
    the most salient Person.
    """
    window = state.window_entries()  # already in salience order
    word = mention.strip().lower().rstrip(".!?,")
    if word in PLURAL_PRONOUNS:
        for entry in window:
            if _is_plural(entry.entity_id, kb):
                return entry.entity_id
    for entry in window:
        if mention_compatible(mention, entry.entity_id, kb):
            return entry.entity_id
    raise NoAntecedent(f"no antecedent for {mention!r}")


def replay_transcript(records: list[dict], kb: KnowledgeBase) -> DiscourseState:
    """Rebuild a session state from persisted turn records."""
    state = DiscourseState()
    for rec in records:
        update_state(state, TurnRecord.from_dict(rec), kb)
    return state


def load_transcript(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
