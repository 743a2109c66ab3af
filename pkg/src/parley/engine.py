"""The operational shell: configuration, fixtures, sessions, the turn loop."""

from __future__ import annotations

import json
import logging
import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from . import nlg
from .discourse import (
    DiscourseRelation,
    DiscourseState,
    NoAntecedent,
    TurnRecord,
    mention_compatible,
    resolve_reference,
    update_state,
)
from .errors import EmptyInput, UnknownSession
from .kb import KnowledgeBase, load_ontology, load_snapshot, merge, normalize_surface
from .metrics import SessionMetrics, compute_metrics
from .policy import (
    DialogueAct,
    Fixtures,
    classify_user_act,
    gather_candidates,
    load_attribute_map,
    select_system_act,
)
from .ranking import Candidate, rank_pool
from .relations import RelationCandidate, load_opinions, load_stories
from .search import Index, build_index, load_corpus
from .nlg import load_templates

logger = logging.getLogger(__name__)

PRONOUN_MENTIONS = ("it", "he", "him", "his", "she", "her", "they", "them", "its")

_THE_NP_RE = re.compile(r"\bthe\s+([a-z]+)\b")
_CAPITALIZED_RE = re.compile(r"^[A-Z][a-z]+")


def now_ms() -> int:
    return int(time.time() * 1000)


@dataclass
class EngineConfig:
    kb_snapshots: list[tuple[str, Path]]
    ontology: Path
    corpus: Path
    opinions: Path
    stories: Path
    templates: Path
    weights: Path
    attribute_map: Path
    priority: list[str]
    seed: int = 13
    turn_budget_ms: int = 200
    port: int = 8750

    @classmethod
    def load(cls, path) -> "EngineConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        base = path.parent

        def resolve(p: str) -> Path:
            resolved = base / p
            if not resolved.exists():
                raise FileNotFoundError(f"configured file does not exist: {resolved}")
            return resolved

        return cls(
            kb_snapshots=[(src, resolve(p)) for src, p in raw["kb_snapshots"]],
            ontology=resolve(raw["ontology"]),
            corpus=resolve(raw["corpus"]),
            opinions=resolve(raw["opinions"]),
            stories=resolve(raw["stories"]),
            templates=resolve(raw["templates"]),
            weights=resolve(raw["weights"]),
            attribute_map=resolve(raw["attribute_map"]),
            priority=list(raw["priority"]),
            seed=raw.get("seed", 13),
            turn_budget_ms=raw.get("turn_budget_ms", 200),
            port=raw.get("port", 8750),
        )


def default_config_path() -> Path:
    return Path(str(resources.files("parley.data").joinpath("config.json")))


@dataclass
class Session:
    session_id: str
    state: DiscourseState
    created_at: int
    transcript_path: Optional[Path] = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def records(self) -> list[dict]:
        return [turn.to_dict() for turn in self.state.turns]


class Engine:
    """Loads fixtures once, then serves any number of isolated sessions."""

    def __init__(self, config: EngineConfig, transcript_dir: Optional[Path] = None):
        self.config = config
        self.transcript_dir = Path(transcript_dir) if transcript_dir else None
        bases = [load_snapshot(p, src) for src, p in config.kb_snapshots]
        ontology = load_ontology(config.ontology)
        self.kb: KnowledgeBase = merge(bases, config.priority, ontology)
        self.index: Index = build_index(load_corpus(config.corpus))
        self.fixtures = Fixtures(
            opinions=load_opinions(config.opinions),
            stories=load_stories(config.stories),
            templates=load_templates(config.templates),
            attribute_map=load_attribute_map(config.attribute_map),
        )
        from .ranking import load_weights

        self.weights = load_weights(config.weights)
        self.sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()

    # ---------------------------------------------------------------- NLU

    def _alias_scan(self, words: list[str]) -> tuple[list[str], list[bool]]:
        """Longest-match, non-overlapping scan of word spans against the
        alias index; returns (ids in text order, consumed-word mask)."""
        consumed = [False] * len(words)
        linked: list[str] = []
        for n in range(min(7, len(words)), 0, -1):
            for i in range(0, len(words) - n + 1):
                if any(consumed[i : i + n]):
                    continue
                key = normalize_surface(" ".join(words[i : i + n]))
                ids = self.kb.alias_index.get(key)
                if ids:
                    linked.append(ids[0])
                    for j in range(i, i + n):
                        consumed[j] = True
        return list(dict.fromkeys(linked)), consumed

    def detect_mentions(self, text: str, state: DiscourseState) -> tuple[list[str], list[str]]:
        """Alias scan plus pronoun/definite-NP resolution.

        Returns (entity ids in mention order, unlinked capitalized spans).
        Only KB-linkable mentions become entity ids; the rest are flagged.
        """
        words = text.split()
        mentions, consumed = self._alias_scan(words)

        def resolve(mention_word: str) -> Optional[str]:
            for eid in mentions:  # current-turn antecedents first
                if mention_compatible(mention_word, eid, self.kb):
                    return eid
            try:
                return resolve_reference(state, mention_word, self.kb)
            except NoAntecedent:
                return None

        lowered_tokens = re.findall(r"[a-z']+", text.lower())
        for word in lowered_tokens:
            bare = word.split("'")[0]
            if bare in PRONOUN_MENTIONS:
                resolved = resolve(bare)
                if resolved and resolved not in mentions:
                    mentions.append(resolved)
        for match in _THE_NP_RE.finditer(text.lower()):
            if match.group(1) in self.kb.type_aliases:
                resolved = resolve(f"the {match.group(1)}")
                if resolved and resolved not in mentions:
                    mentions.append(resolved)

        unlinked = []
        for i, word in enumerate(words):
            if consumed[i] or i == 0 or word == "I":
                continue
            if _CAPITALIZED_RE.match(word) and not words[i - 1].rstrip().endswith((".", "!", "?")):
                unlinked.append(word.strip(".,!?"))
        return mentions, unlinked

    # ------------------------------------------------------------ sessions

    def create_session(self) -> tuple[str, str]:
        """New session with the opening prompt queued; returns (id, opening)."""
        session_id = uuid.uuid4().hex[:12]
        state = DiscourseState()
        opening = nlg.realize_template(self.fixtures.templates["opening"], {})
        turn = TurnRecord(
            index=0,
            speaker="system",
            text=opening,
            dialogue_act=DialogueAct.OPEN_QUESTION.value,
            timestamp=now_ms(),
        )
        update_state(state, turn, self.kb)
        transcript_path = None
        if self.transcript_dir is not None:
            self.transcript_dir.mkdir(parents=True, exist_ok=True)
            transcript_path = self.transcript_dir / f"{session_id}.jsonl"
        session = Session(
            session_id=session_id,
            state=state,
            created_at=now_ms(),
            transcript_path=transcript_path,
        )
        if transcript_path is not None:
            self._append_transcript(session, turn)
        with self._registry_lock:
            self.sessions[session_id] = session
        return session_id, opening

    def get_session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession(session_id)
        return session

    def _append_transcript(self, session: Session, turn: TurnRecord) -> None:
        if session.transcript_path is None:
            return
        with open(session.transcript_path, "a", encoding="utf-8") as fh:
            fh.write(turn.to_json() + "\n")

    # ------------------------------------------------------------ the loop

    def post_user_turn(self, session_id: str, text: str) -> tuple[str, dict]:
        """classify -> select -> gather -> rank -> realize -> update."""
        session = self.get_session(session_id)
        if not text or not text.strip():
            raise EmptyInput("user turn is empty")
        with session.lock:
            started = time.perf_counter()
            state = session.state
            user_ts = now_ms()

            mentions, unlinked = self.detect_mentions(text, state)
            user_act = classify_user_act(text, state)
            user_turn = TurnRecord(
                index=len(state.turns),
                speaker="user",
                text=text,
                dialogue_act=user_act.value,
                mentioned_entities=mentions,
                timestamp=user_ts,
            )
            update_state(state, user_turn, self.kb)
            self._append_transcript(session, user_turn)

            if user_act == DialogueAct.REJECTION and state.pending_offer is not None:
                state.pending_offer = None
            self._clear_exhausted_story(state)

            decision = select_system_act(user_act, state)
            pool = gather_candidates(decision, state, self.kb, self.index, self.fixtures)
            if pool:
                ranked = rank_pool(pool, self.weights, decision, state)
            else:
                ranked = rank_pool([self._reprompt(state)], self.weights, decision, state)
            top = ranked[0]

            # Search extracts stay verbatim (extract fidelity); only realized
            # structured facts and templates get pronominalized.
            if top.source == "search":
                reply = top.text
            else:
                reply = nlg.pronominalize(top.text, top.focus_entity, state, self.kb)
            if top.follow_up:
                reply = f"{reply} {top.follow_up}"

            self._apply_selection_effects(state, decision, top)

            system_mentions = list(top.mentions)
            for eid in self._scan_reply_mentions(reply):
                if eid not in system_mentions:
                    system_mentions.append(eid)

            system_turn = TurnRecord(
                index=len(state.turns),
                speaker="system",
                text=reply,
                dialogue_act=top.dialogue_act,
                mentioned_entities=system_mentions,
                relation_used=top.relation.value if top.relation else None,
                source_used=top.source,
                timestamp=now_ms(),
                content_key=top.content_key,
            )
            update_state(state, system_turn, self.kb)
            self._append_transcript(session, system_turn)

            latency_ms = (time.perf_counter() - started) * 1000.0
            if latency_ms > self.config.turn_budget_ms:
                logger.warning("turn exceeded budget: %.1fms", latency_ms)
            debug = self._debug_payload(
                user_act, decision, ranked, state, unlinked, latency_ms
            )
            return reply, debug

    def _reprompt(self, state: DiscourseState) -> RelationCandidate:
        return RelationCandidate(
            relation=None,
            dialogue_act=DialogueAct.REPROMPT.value,
            text=nlg.realize_template(self.fixtures.templates["reprompt"], {}),
            source="template",
            content_key=f"reprompt:{len(state.turns)}",
        )

    def _clear_exhausted_story(self, state: DiscourseState) -> None:
        if state.story_cursor is None:
            return
        story_id, idx = state.story_cursor
        story = next((s for s in self.fixtures.stories if s.story_id == story_id), None)
        if story is None or idx >= len(story.sentences):
            state.story_cursor = None

    def _apply_selection_effects(self, state, decision, top: Candidate) -> None:
        if decision.offer_to_execute is not None:
            state.pending_offer = None
        if top.dialogue_act == DialogueAct.OFFER.value and top.content_key.startswith("offer:story:"):
            story_id = top.content_key.split(":", 2)[2]
            story = next((s for s in self.fixtures.stories if s.story_id == story_id), None)
            if story is not None:
                state.pending_offer = {"kind": "story", "story_id": story.story_id, "bin": story.bin}
        if (
            top.relation == DiscourseRelation.TEMPORAL
            and top.content_key.startswith("story:")
        ):
            _, story_id, idx = top.content_key.split(":")
            state.story_cursor = (story_id, int(idx) + 1)

    def _scan_reply_mentions(self, reply: str) -> list[str]:
        found, _ = self._alias_scan(reply.split())
        return found

    def _debug_payload(self, user_act, decision, ranked, state, unlinked, latency_ms) -> dict:
        return {
            "user_act": user_act.value,
            "decision": {
                "system_act": decision.system_act.value,
                "preferred_relations": [r.value for r in decision.preferred_relations],
                "must_answer": decision.must_answer,
            },
            "candidates": [
                {
                    "text": c.text,
                    "source": c.source,
                    "relation": c.relation.value if c.relation else None,
                    "dialogue_act": c.dialogue_act,
                    "content_key": c.content_key,
                    "score": c.score,
                    "features": c.features.as_dict() if c.features else {},
                }
                for c in ranked[:5]
            ],
            "salience": [
                {"entity_id": e.entity_id, "last_mention_turn": e.last_mention_turn}
                for e in state.salience
            ],
            "unlinked_mentions": unlinked,
            "latency_ms": latency_ms,
            "turn_index": len(state.turns) - 1,
        }

    # ------------------------------------------------------------- metrics

    def session_metrics(self, session_id: str) -> SessionMetrics:
        session = self.get_session(session_id)
        with session.lock:
            return compute_metrics(session.records())
