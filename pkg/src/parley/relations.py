"""Candidate generation: one generator per discourse relation.

Each generator is pure given (state, fixtures) and never proposes content
whose key is already in the session ledger. instantiate_temporal is the one
exception to purity: committing a story sentence advances the cursor, which
callers can defer with advance=False while pooling.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional

from . import nlg
from .discourse import DiscourseRelation, DiscourseState
from .errors import (
    NoFocusEntity,
    NoOpinion,
    NoStory,
    ParseError,
    SentimentRange,
    StoryExhausted,
)
from .kb import KnowledgeBase, inverse_relation, link_entity, normalize_surface
from .search import Index, query

# The sentiment scale ships integers 1..5; these are the surface words.
SENTIMENT_LEXICON = {
    1: "terrible",
    2: "not so great",
    3: "okay",
    4: "pretty good",
    5: "awesome",
}

# Attributes that exist for agreement checks, not for telling the user about.
BOOKKEEPING_ATTRIBUTES = frozenset({"gender", "plural"})

# Phrase fragments for attribute contrast statements.
COMPARISON_PHRASES = {
    "datePublished": "was released in {value}",
    "rating": "is rated {value}",
    "genre": "is {value}",
    "firstAppearance": "first appeared in {value}",
    "publisher": "is published by {value}",
}
COMPARISON_PHRASE_DEFAULT = "has {attribute} {value}"


@dataclass(frozen=True)
class OpinionEntry:
    entity: str
    bin: str
    sentiment: int
    justifications: tuple[str, ...]


@dataclass(frozen=True)
class Story:
    story_id: str
    bin: str
    sentences: tuple[str, ...]


@dataclass
class RelationCandidate:
    relation: DiscourseRelation
    dialogue_act: str
    text: str
    source: str  # "search" | "structured" | "template"
    content_key: str
    focus_entity: Optional[str] = None
    follow_up: Optional[str] = None
    focus_name: str = ""
    mentions: list[str] = field(default_factory=list)


def load_opinions(path) -> list[OpinionEntry]:
    """Parse the opinion table CSV: entity,bin,sentiment,justifications."""
    entries = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:4]] != [
            "entity",
            "bin",
            "sentiment",
            "justifications",
        ]:
            raise ParseError("opinion table needs header entity,bin,sentiment,justifications", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) < 4:
                raise ParseError(f"expected 4 columns, got {len(row)}", line=lineno)
            try:
                sentiment = int(row[2])
            except ValueError as exc:
                raise ParseError(f"sentiment {row[2]!r} is not an integer", line=lineno) from exc
            if sentiment not in SENTIMENT_LEXICON:
                raise SentimentRange(f"line {lineno}: sentiment {sentiment} outside 1..5")
            justifications = tuple(j.strip() for j in row[3].split(";") if j.strip())
            if not justifications:
                raise ParseError("at least one justification required", line=lineno)
            entries.append(
                OpinionEntry(
                    entity=row[0].strip(),
                    bin=row[1].strip(),
                    sentiment=sentiment,
                    justifications=justifications,
                )
            )
    return entries


def load_stories(path) -> list[Story]:
    stories = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc}", line=lineno) from exc
            for key in ("story_id", "bin", "sentences"):
                if key not in rec:
                    raise ParseError(f"story missing field {key!r}", line=lineno)
            if not rec["sentences"]:
                raise ParseError("story has no sentences", line=lineno)
            stories.append(
                Story(story_id=rec["story_id"], bin=rec["bin"], sentences=tuple(rec["sentences"]))
            )
    return stories


def opinion_key(entry: OpinionEntry) -> str:
    return f"opinion:{normalize_surface(entry.entity).replace(' ', '_')}"


def _fresh(state: DiscourseState, key: str) -> bool:
    return key not in state.content_ledger


def instantiate_expansion(
    state: DiscourseState, kb: KnowledgeBase, index: Optional[Index]
) -> list[RelationCandidate]:
    """Chain off the focal entity: one fact statement per attribute/edge plus
    a follow-up question per related entity. Search extracts only step in
    when no structured fact survives the ledger."""
    focus_id = state.focus_entity()
    if focus_id is None or focus_id not in kb.entities:
        raise NoFocusEntity("no salient entity to expand from")
    focus = kb.entities[focus_id]
    out: list[RelationCandidate] = []

    for attr_name in sorted(focus.attributes):
        if attr_name in BOOKKEEPING_ATTRIBUTES:
            continue
        key = f"fact:{focus.id}:{attr_name}"
        if not _fresh(state, key):
            continue
        value = focus.attributes[attr_name].value
        out.append(
            RelationCandidate(
                relation=DiscourseRelation.EXPANSION,
                dialogue_act="STATEMENT",
                text=nlg.attribute_fact(focus.name, attr_name, value),
                source="structured",
                content_key=key,
                focus_entity=focus.id,
                focus_name=focus.name,
                mentions=[focus.id],
            )
        )
    if focus.description:
        key = f"fact:{focus.id}:description"
        if _fresh(state, key):
            out.append(
                RelationCandidate(
                    relation=DiscourseRelation.EXPANSION,
                    dialogue_act="STATEMENT",
                    text=nlg.attribute_fact(focus.name, "description", focus.description),
                    source="structured",
                    content_key=key,
                    focus_entity=focus.id,
                    focus_name=focus.name,
                    mentions=[focus.id],
                )
            )

    from .kb import related_entities  # deferred to keep import block tidy

    for rel, target in related_entities(focus.id, kb):
        key = canonical_edge_key(focus.id, rel, target.id, kb)
        if _fresh(state, key):
            out.append(
                RelationCandidate(
                    relation=DiscourseRelation.EXPANSION,
                    dialogue_act="STATEMENT",
                    text=nlg.edge_fact(focus.name, rel, target.name),
                    source="structured",
                    content_key=key,
                    focus_entity=focus.id,
                    focus_name=focus.name,
                    mentions=[focus.id, target.id],
                )
            )
        ask_key = f"ask:{focus.id}:{rel}:{target.id}"
        if _fresh(state, ask_key):
            question, act = nlg.related_entity_question(target)
            out.append(
                RelationCandidate(
                    relation=DiscourseRelation.EXPANSION,
                    dialogue_act=act,
                    text=question,
                    source="template",
                    content_key=ask_key,
                    focus_entity=target.id,
                    focus_name=target.name,
                    mentions=[target.id],
                )
            )

    has_structured = any(c.source == "structured" for c in out)
    if not has_structured and index is not None:
        for result in query(index, focus.name, k=3):
            key = f"doc:{result.doc_id}:s{result.sentence_index}"
            if not _fresh(state, key):
                continue
            out.append(
                RelationCandidate(
                    relation=DiscourseRelation.EXPANSION,
                    dialogue_act="STATEMENT",
                    text=nlg.package_extract(result, "best_two", index),
                    source="search",
                    content_key=key,
                    focus_entity=focus.id,
                    focus_name=focus.name,
                    mentions=[focus.id],
                )
            )
    return out


def canonical_edge_key(entity_id: str, rel: str, target_id: str, kb: KnowledgeBase) -> str:
    """Key an edge fact by its stored direction so the same fact reached via
    an inverse edge cannot be repeated."""
    if (rel, target_id) in kb.entities[entity_id].edges:
        return f"fact:{entity_id}:{rel}:{target_id}"
    inv = inverse_relation(rel)
    if (inv, entity_id) in kb.entities[target_id].edges:
        return f"fact:{target_id}:{inv}:{entity_id}"
    return f"fact:{entity_id}:{rel}:{target_id}"


def _singular_tokens(text: str) -> set[str]:
    return {t[:-1] if t.endswith("s") and len(t) > 3 else t for t in normalize_surface(text).split()}


def _bin_matches(bin_name: str, target: str) -> bool:
    """Bins are opaque topic keys; a bin matches a topic when they share a
    token up to naive pluralization ("comics" vs "comic books")."""
    if bin_name == target:
        return True
    return bool(_singular_tokens(bin_name) & _singular_tokens(target))


def _matching_entries(
    opinions: list[OpinionEntry], target: str, kb: KnowledgeBase
) -> list[OpinionEntry]:
    """Entries matching an entity id, a surface string, or a bin, best first."""
    target_norm = normalize_surface(target) if target else ""
    direct, by_bin = [], []
    for entry in opinions:
        entry_norm = normalize_surface(entry.entity)
        if entry_norm == target_norm or entry.entity == target:
            direct.append(entry)
            continue
        try:
            links = link_entity(entry.entity, kb)
        except ValueError:
            links = []
        if links and links[0][0] == target:
            direct.append(entry)
        elif _bin_matches(entry.bin, target):
            by_bin.append(entry)
    return direct + by_bin


def instantiate_contingency(
    state: DiscourseState,
    kb: KnowledgeBase,
    opinions: list[OpinionEntry],
    target: str,
) -> tuple[RelationCandidate, RelationCandidate]:
    """An opinion and the justification that backs it, sharing a key prefix.

    The justification is returned but meant to be held back until the user
    asks why; volunteering both at once flattens the exchange.
    """
    matching = _matching_entries(opinions, target, kb)
    # Entries whose opinion is still unsaid come first; stale-opinion entries
    # remain reachable so a later why-question can still find a justification.
    ordered = [e for e in matching if _fresh(state, opinion_key(e))] + [
        e for e in matching if not _fresh(state, opinion_key(e))
    ]
    for entry in ordered:
        base_key = opinion_key(entry)
        j_index = next(
            (i for i in range(len(entry.justifications)) if _fresh(state, f"{base_key}:{i}")),
            None,
        )
        if not _fresh(state, base_key) and j_index is None:
            continue
        try:
            links = link_entity(entry.entity, kb)
        except ValueError:
            links = []
        entity_id = links[0][0] if links else None
        display = kb.entities[entity_id].name if entity_id else entry.entity
        sentiment_word = SENTIMENT_LEXICON[entry.sentiment]

        opinion = RelationCandidate(
            relation=DiscourseRelation.CONTINGENCY,
            dialogue_act="STATEMENT_OPINION",
            text=nlg.opinion_statement(display, sentiment_word, base_key),
            source="template",
            content_key=base_key,
            focus_entity=entity_id,
            focus_name=display,
            mentions=[entity_id] if entity_id else [],
        )
        j_index = 0 if j_index is None else j_index
        subject = nlg.subject_reference(entity_id, display, state, kb)
        justification_key = f"{base_key}:{j_index}"
        justification = RelationCandidate(
            relation=DiscourseRelation.CONTINGENCY,
            dialogue_act="STATEMENT_OPINION",
            text=nlg.justification_statement(
                subject, sentiment_word, entry.justifications[j_index], justification_key
            ),
            source="template",
            content_key=justification_key,
            focus_entity=entity_id,
            focus_name=display,
            mentions=[entity_id] if entity_id else [],
        )
        return opinion, justification
    raise NoOpinion(f"no opinion entry matches {target!r}")


def instantiate_temporal(
    state: DiscourseState,
    stories: list[Story],
    bin: Optional[str],
    *,
    advance: bool = True,
) -> RelationCandidate:
    """Emit the next story sentence in source order, advancing the cursor."""
    if state.story_cursor is not None:
        story_id, idx = state.story_cursor
        story = next((s for s in stories if s.story_id == story_id), None)
        if story is None:
            raise NoStory(story_id)
        if idx >= len(story.sentences):
            raise StoryExhausted(story_id)
    else:
        candidates = [s for s in stories if bin is None or s.bin == bin]
        if not candidates:
            raise NoStory(f"no story for bin {bin!r}")
        story = next(
            (s for s in candidates if _fresh(state, f"story:{s.story_id}:0")), None
        )
        if story is None:
            raise NoStory(f"all stories for bin {bin!r} already told")
        idx = 0
    if advance:
        state.story_cursor = (story.story_id, idx + 1)
    return RelationCandidate(
        relation=DiscourseRelation.TEMPORAL,
        dialogue_act="STATEMENT",
        text=story.sentences[idx],
        source="template",
        content_key=f"story:{story.story_id}:{idx}",
    )


def instantiate_comparison(
    state: DiscourseState, kb: KnowledgeBase
) -> Optional[RelationCandidate]:
    """Contrast the two most recent same-type salient entities on a shared
    attribute with differing values; None when no pair qualifies."""
    entries = [e for e in state.window_entries() if e.entity_id in kb.entities]
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            a = kb.entities[entries[i].entity_id]
            b = kb.entities[entries[j].entity_id]
            if not a.type_path or not b.type_path or a.type_path[0] != b.type_path[0]:
                continue
            shared = sorted(
                (set(a.attributes) & set(b.attributes)) - BOOKKEEPING_ATTRIBUTES
            )
            for attr in shared:
                va, vb = a.attributes[attr].value, b.attributes[attr].value
                if va == vb:
                    continue
                lo, hi = sorted([a.id, b.id])
                key = f"compare:{lo}:{hi}:{attr}"
                if not _fresh(state, key):
                    continue
                phrase = COMPARISON_PHRASES.get(attr, COMPARISON_PHRASE_DEFAULT)
                text = nlg.comparison_statement(
                    a.name,
                    phrase.format(value=va, attribute=attr),
                    b.name,
                    phrase.format(value=vb, attribute=attr),
                )
                return RelationCandidate(
                    relation=DiscourseRelation.COMPARISON,
                    dialogue_act="STATEMENT",
                    text=text,
                    source="structured",
                    content_key=key,
                    focus_entity=a.id,
                    focus_name=a.name,
                    mentions=[a.id, b.id],
                )
    return None
