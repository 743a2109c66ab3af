"""Surface realization: slot templates, pronominalization, extract packaging."""

from __future__ import annotations

import json
import re
import zlib
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional

from .errors import EmptyText, MissingSlot, ParseError
from .kb import Entity, KnowledgeBase
from .search import Index, SearchResult, first_sentence, split_sentences

_SLOT_RE = re.compile(r"\{([a-zA-Z_]+)\}")


@dataclass(frozen=True)
class Template:
    template_id: str
    pattern: str
    required_slots: tuple[str, ...]
    dialogue_act: str

    def placeholders(self) -> set[str]:
        return set(_SLOT_RE.findall(self.pattern))


def load_templates(path) -> dict[str, Template]:
    """Read the JSONL template file into an id-keyed map, validating that
    every placeholder is declared in required_slots."""
    templates: dict[str, Template] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc}", line=lineno) from exc
            for key in ("template_id", "pattern", "required_slots", "dialogue_act"):
                if key not in rec:
                    raise ParseError(f"template missing field {key!r}", line=lineno)
            template = Template(
                template_id=rec["template_id"],
                pattern=rec["pattern"],
                required_slots=tuple(rec["required_slots"]),
                dialogue_act=rec["dialogue_act"],
            )
            undeclared = template.placeholders() - set(template.required_slots)
            if undeclared:
                raise ParseError(
                    f"placeholders {sorted(undeclared)} not in required_slots", line=lineno
                )
            templates[template.template_id] = template
    return templates


@lru_cache(maxsize=1)
def default_templates() -> dict[str, Template]:
    with resources.as_file(resources.files("parley.data").joinpath("templates.jsonl")) as path:
        return load_templates(path)


def realize_template(template: Template, slots: dict[str, str]) -> str:
    """Substitute slots verbatim, capitalize the opener, ensure punctuation."""
    for slot in template.required_slots:
        if slot not in slots or not str(slots[slot]).strip():
            raise MissingSlot(slot)

    def fill(match: re.Match) -> str:
        name = match.group(1)
        if name not in slots:
            raise MissingSlot(name)
        return str(slots[name])

    text = _SLOT_RE.sub(fill, template.pattern).strip()
    return finish_utterance(text)


def finish_utterance(text: str) -> str:
    if not text:
        return text
    text = text[0].upper() + text[1:]
    if text[-1] not in ".!?":
        text += "."
    return text


def attribute_fact(entity_name: str, attribute: str, value) -> str:
    templates = default_templates()
    template = templates.get(f"fact_{attribute}")
    if template is not None:
        return realize_template(template, {"entity": entity_name, "value": str(value)})
    return realize_template(
        templates["fact_attribute_generic"],
        {"entity": entity_name, "attribute": attribute, "value": str(value)},
    )


def edge_fact(entity_name: str, relation: str, target_name: str) -> str:
    templates = default_templates()
    template = templates.get(f"fact_{relation}")
    if template is not None:
        return realize_template(template, {"entity": entity_name, "target": target_name})
    return realize_template(
        templates["fact_edge_generic"],
        {"entity": entity_name, "relation": relation, "target": target_name},
    )


def related_entity_question(target: Entity) -> tuple[str, str]:
    """A follow-up question about a related entity, with its dialogue act."""
    templates = default_templates()
    if "Person" in target.type_path:
        template = templates["followup_person"]
    elif "CreativeWork" in target.type_path:
        template = templates["followup_creative"]
    else:
        template = templates["followup_generic"]
    return realize_template(template, {"target": target.name}), template.dialogue_act


def _personal_framing(content_key: str) -> bool:
    # Deterministic rotation between "I think" and "Personally, I think".
    return zlib.crc32(content_key.encode("utf-8")) % 2 == 1


def opinion_statement(entity_name: str, sentiment_word: str, content_key: str) -> str:
    templates = default_templates()
    name = "opinion_personal" if _personal_framing(content_key) else "opinion"
    return realize_template(
        templates[name], {"entity": entity_name, "sentiment": sentiment_word}
    )


def justification_statement(
    subject: str, sentiment_word: str, justification: str, content_key: str
) -> str:
    templates = default_templates()
    name = "justification_personal" if _personal_framing(content_key) else "justification"
    return realize_template(
        templates[name],
        {"subject": subject, "sentiment": sentiment_word, "justification": justification},
    )


def comparison_statement(a_name: str, a_phrase: str, b_name: str, b_phrase: str) -> str:
    return realize_template(
        default_templates()["comparison"],
        {"a": a_name, "a_phrase": a_phrase, "b": b_name, "b_phrase": b_phrase},
    )


def pronoun_for(entity: Entity) -> str:
    if "Person" not in entity.type_path:
        return "it"
    gender = entity.attributes.get("gender")
    value = str(gender.value).lower() if gender else ""
    if value == "male":
        return "he"
    if value == "female":
        return "she"
    return "they"


def _coarse_type(type_path: list[str]) -> str:
    return "person" if "Person" in type_path else "thing"


def uniquely_salient(entity_id: str, state, kb: KnowledgeBase) -> bool:
    """True when the entity is the only one of its coarse type (Person vs
    non-Person) mentioned in the anaphora window, so a pronoun is unambiguous."""
    if entity_id not in kb.entities:
        return False
    coarse = _coarse_type(kb.entities[entity_id].type_path)
    peers = [e for e in state.window_entries() if _coarse_type(e.type_path) == coarse]
    return len(peers) == 1 and peers[0].entity_id == entity_id


def subject_reference(entity_id: Optional[str], display_name: str, state, kb: KnowledgeBase) -> str:
    """Pronoun when unambiguous, otherwise the entity's name."""
    if entity_id is not None and uniquely_salient(entity_id, state, kb):
        return pronoun_for(kb.entities[entity_id])
    return display_name


def pronominalize(text: str, focus_entity: Optional[str], state, kb: KnowledgeBase) -> str:
    """Swap the focus entity's name for a pronoun at utterance start, but only
    when the pronoun would resolve right back to that entity."""
    if focus_entity is None or focus_entity not in kb.entities:
        return text
    entity = kb.entities[focus_entity]
    if not text.lower().startswith(entity.name.lower()):
        return text
    if not uniquely_salient(focus_entity, state, kb):
        return text
    pronoun = pronoun_for(entity)
    rest = text[len(entity.name):]
    return pronoun.capitalize() + rest


def package_extract(result: SearchResult, mode: str, index: Index) -> str:
    """Turn a search result into reply text.

    first_sentence: the opening sentence of the matched document.
    best_two: the best-matching sentence plus its successor when present.
    """
    doc = index.get_document(result.doc_id)
    if not doc.body.strip():
        raise EmptyText(result.doc_id)
    if mode == "first_sentence":
        return first_sentence(doc.body)
    if mode == "best_two":
        sentences = split_sentences(doc.body)
        idx = result.sentence_index
        text = sentences[idx]
        if idx + 1 < len(sentences):
            text += " " + sentences[idx + 1]
        return text
    raise ValueError(f"unknown packaging mode {mode!r}")
