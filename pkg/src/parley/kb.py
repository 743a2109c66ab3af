"""Structured knowledge: snapshot loading, priority merge, entity linking.

Snapshots are JSONL files (one entity record per line). Live knowledge
services are out of scope; everything is merged offline so lookups at
dialogue time are pure dictionary reads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import (
    DanglingEdge,
    DuplicateId,
    ParseError,
    UnknownEntity,
    UnknownSource,
)

AttributeScalar = Union[str, int, float]

# Relations whose reverse direction has a conventional name. Unlisted
# relations get a synthesized "<name>_of" inverse so edge closure stays total.
INVERSE_RELATIONS = {
    "actor": "actedIn",
    "actedIn": "actor",
    "director": "directed",
    "directed": "director",
    "author": "wrote",
    "wrote": "author",
    "memberOf": "hasMember",
    "hasMember": "memberOf",
    "sequelOf": "hasSequel",
    "hasSequel": "sequelOf",
}

_PUNCT_RE = re.compile(r"[^a-z0-9\s]")
_WS_RE = re.compile(r"\s+")

LINK_THRESHOLD = 0.80


def inverse_relation(name: str, extra: Optional[dict[str, str]] = None) -> str:
    if extra and name in extra:
        return extra[name]
    if name in INVERSE_RELATIONS:
        return INVERSE_RELATIONS[name]
    if name.endswith("_of"):
        return name[:-3]
    return name + "_of"


@dataclass(frozen=True)
class AttributeValue:
    value: AttributeScalar
    source: str
    confidence: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0,1]")


@dataclass
class Entity:
    id: str
    name: str
    aliases: list[str]
    type_path: list[str]
    attributes: dict[str, AttributeValue] = field(default_factory=dict)
    # Values that lost a merge conflict, kept with their provenance.
    shadow_attributes: dict[str, list[AttributeValue]] = field(default_factory=dict)
    edges: list[tuple[str, str]] = field(default_factory=list)
    source: str = ""
    description: str = ""

    def is_person(self) -> bool:
        return "Person" in self.type_path


@dataclass
class KnowledgeBase:
    entities: dict[str, Entity] = field(default_factory=dict)
    alias_index: dict[str, list[str]] = field(default_factory=dict)
    ontology: dict[str, str] = field(default_factory=dict)
    source_id: str = ""
    dangling_edges: list[tuple[str, str, str]] = field(default_factory=list)
    type_aliases: dict[str, str] = field(default_factory=dict)

    def __contains__(self, entity_id: str) -> bool:
        return entity_id in self.entities


def normalize_surface(surface: str) -> str:
    return _WS_RE.sub(" ", _PUNCT_RE.sub("", surface.lower())).strip()


def _build_alias_index(entities: dict[str, Entity]) -> dict[str, list[str]]:
    index: dict[str, list[str]] = {}
    for ent in entities.values():
        for alias in ent.aliases:
            key = normalize_surface(alias)
            if not key:
                continue
            index.setdefault(key, [])
            if ent.id not in index[key]:
                index[key].append(ent.id)
    for ids in index.values():
        ids.sort()
    return index


def _build_type_aliases(entities: dict[str, Entity], ontology: dict[str, str]) -> dict[str, str]:
    """Lowercased (and naively pluralized) type names for "the X" reference.

    CamelCase types also answer to their head word, so SportsTeam is
    reachable as "the team".
    """
    names: set[str] = set(ontology)
    names.update(ontology.values())
    for ent in entities.values():
        names.update(ent.type_path)
    aliases = {}
    for name in sorted(names):
        words = re.findall(r"[A-Z][a-z0-9]*", name) or [name]
        for key in (name.lower(), words[-1].lower()):
            aliases[key] = name
            aliases[key + "s"] = name
    return aliases


def _parse_record(rec: dict, source_id: str, lineno: int) -> Entity:
    for key in ("id", "name", "aliases", "type_path"):
        if key not in rec:
            raise ParseError(f"entity record missing field {key!r}", line=lineno)
    if not rec["type_path"]:
        raise ParseError("type_path must be non-empty", line=lineno)
    attributes = {}
    for attr_name, payload in rec.get("attributes", {}).items():
        if not isinstance(payload, dict) or "value" not in payload:
            raise ParseError(f"attribute {attr_name!r} needs a value", line=lineno)
        attributes[attr_name] = AttributeValue(
            value=payload["value"],
            source=source_id,
            confidence=float(payload.get("confidence", 1.0)),
        )
    edges = [(rel, target) for rel, target in rec.get("edges", [])]
    aliases = list(rec["aliases"])
    if rec["name"] not in aliases:
        aliases.append(rec["name"])
    return Entity(
        id=rec["id"],
        name=rec["name"],
        aliases=aliases,
        type_path=list(rec["type_path"]),
        attributes=attributes,
        edges=edges,
        source=source_id,
        description=rec.get("description", ""),
    )


def load_snapshot(path, source_id: str) -> KnowledgeBase:
    """Load one snapshot into a partial knowledge base. Edges pointing outside
    the snapshot are recorded as dangling; merge() resolves or rejects them."""
    entities: dict[str, Entity] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc}", line=lineno) from exc
            entity = _parse_record(rec, source_id, lineno)
            if entity.id in entities:
                raise DuplicateId(f"{entity.id} appears twice in {source_id}")
            entities[entity.id] = entity
    kb = KnowledgeBase(entities=entities, source_id=source_id)
    kb.alias_index = _build_alias_index(entities)
    kb.dangling_edges = sorted(
        (ent.id, rel, target)
        for ent in entities.values()
        for rel, target in ent.edges
        if target not in entities
    )
    return kb


def load_ontology(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        ontology = json.load(fh)
    _check_acyclic(ontology)
    return ontology


def _check_acyclic(ontology: dict[str, str]) -> None:
    for start in ontology:
        seen = {start}
        node = start
        while node in ontology:
            node = ontology[node]
            if node in seen:
                raise ValueError(f"ontology cycle through {node!r}")
            seen.add(node)


def _merge_attributes(
    per_source: list[AttributeValue], rank: dict[str, int]
) -> tuple[AttributeValue, list[AttributeValue]]:
    """Winner = best priority rank, ties broken by lexicographically smaller
    value; everything else becomes a shadow value."""
    ordered = sorted(per_source, key=lambda av: (rank[av.source], str(av.value), av.source))
    return ordered[0], ordered[1:]


def merge(
    bases: list[KnowledgeBase],
    priority: list[str],
    ontology: Optional[dict[str, str]] = None,
) -> KnowledgeBase:
    """Fuse partial snapshots into one immutable knowledge base.

    Deterministic: output does not depend on the order of `bases`, only on
    the priority list and the record contents.
    """
    rank = {src: i for i, src in enumerate(priority)}
    for base in bases:
        if base.source_id not in rank:
            raise UnknownSource(base.source_id)
    # Content digest settles the order of equal-priority bases so the merge
    # never depends on how the input list happened to be arranged.
    by_priority = sorted(
        bases,
        key=lambda b: (rank[b.source_id], tuple(sorted((e.id, e.name) for e in b.entities.values()))),
    )

    merged: dict[str, Entity] = {}
    attr_pool: dict[str, dict[str, list[AttributeValue]]] = {}
    for base in by_priority:
        for ent in base.entities.values():
            pool = attr_pool.setdefault(ent.id, {})
            for attr_name, av in ent.attributes.items():
                pool.setdefault(attr_name, []).append(av)
            if ent.id not in merged:
                merged[ent.id] = Entity(
                    id=ent.id,
                    name=ent.name,
                    aliases=list(ent.aliases),
                    type_path=list(ent.type_path),
                    edges=list(ent.edges),
                    source=ent.source,
                    description=ent.description,
                )
            else:
                keeper = merged[ent.id]
                for alias in ent.aliases:
                    if alias not in keeper.aliases:
                        keeper.aliases.append(alias)
                for edge in ent.edges:
                    if edge not in keeper.edges:
                        keeper.edges.append(edge)
                if not keeper.description and ent.description:
                    keeper.description = ent.description

    for ent_id, pool in attr_pool.items():
        ent = merged[ent_id]
        for attr_name in sorted(pool):
            winner, shadows = _merge_attributes(pool[attr_name], rank)
            ent.attributes[attr_name] = winner
            if shadows:
                ent.shadow_attributes[attr_name] = shadows

    for ent in merged.values():
        ent.aliases = sorted(set(ent.aliases))
        ent.edges = sorted(set(ent.edges))
        for _, target in ent.edges:
            if target not in merged:
                raise DanglingEdge(f"{ent.id} -> {target}")

    entities = {eid: merged[eid] for eid in sorted(merged)}
    kb = KnowledgeBase(
        entities=entities,
        ontology=dict(ontology or {}),
        source_id="+".join(p for p in priority if any(b.source_id == p for b in bases)),
    )
    if ontology:
        _check_acyclic(kb.ontology)
    kb.alias_index = _build_alias_index(entities)
    kb.type_aliases = _build_type_aliases(entities, kb.ontology)
    return kb


def edit_distance(a: str, b: str) -> int:
    """Plain Levenshtein distance."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def link_entity(
    surface: str,
    kb: KnowledgeBase,
    type_hint: Optional[str] = None,
) -> list[tuple[str, float]]:
    """Map a surface string to entity ids with scores, best first.

    Exact alias matches score 1.0; otherwise 1 - normalized edit distance
    against each alias, keeping anything at or above the 0.80 threshold.
    """
    needle = normalize_surface(surface)
    if not needle:
        raise ValueError("surface is empty after normalization")
    scores: dict[str, float] = {}
    for exact_id in kb.alias_index.get(needle, []):
        scores[exact_id] = 1.0
    for alias, ids in kb.alias_index.items():
        dist = edit_distance(needle, alias)
        if dist == 0:
            continue
        score = 1.0 - dist / max(len(needle), len(alias))
        if score < LINK_THRESHOLD:
            continue
        for eid in ids:
            if score > scores.get(eid, 0.0):
                scores[eid] = score
    results = [
        (eid, score)
        for eid, score in scores.items()
        if type_hint is None or type_hint in kb.entities[eid].type_path
    ]
    results.sort(key=lambda pair: (-pair[1], pair[0]))
    return results


def get_attribute(entity_id: str, attribute_name: str, kb: KnowledgeBase) -> Optional[AttributeValue]:
    if entity_id not in kb.entities:
        raise UnknownEntity(entity_id)
    return kb.entities[entity_id].attributes.get(attribute_name)


def shadow_values(entity_id: str, attribute_name: str, kb: KnowledgeBase) -> list[AttributeValue]:
    if entity_id not in kb.entities:
        raise UnknownEntity(entity_id)
    return kb.entities[entity_id].shadow_attributes.get(attribute_name, [])


def related_entities(
    entity_id: str,
    kb: KnowledgeBase,
    relation_filter: Optional[str] = None,
) -> list[tuple[str, Entity]]:
    """Outgoing edges plus inverted incoming edges, deterministically ordered."""
    if entity_id not in kb.entities:
        raise UnknownEntity(entity_id)
    pairs: set[tuple[str, str]] = set()
    for rel, target in kb.entities[entity_id].edges:
        pairs.add((rel, target))
    for other in kb.entities.values():
        if other.id == entity_id:
            continue
        for rel, target in other.edges:
            if target == entity_id:
                pairs.add((inverse_relation(rel), other.id))
    ordered = sorted(pairs)
    return [
        (rel, kb.entities[target])
        for rel, target in ordered
        if relation_filter is None or rel == relation_filter
    ]


def ontology_depth(kb: KnowledgeBase, type_name: str) -> int:
    """Steps from a type to its root; bounded because the ontology is acyclic."""
    depth = 0
    node = type_name
    while node in kb.ontology:
        node = kb.ontology[node]
        depth += 1
    return depth
