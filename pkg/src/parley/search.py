"""Full-text retrieval: inverted index with BM25 scoring and sentence extraction.

Tokenization rules defined here (lowercase, split on non-alphanumerics) are
the canonical ones; the metrics and ranking modules reuse them.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .errors import DuplicateDocId, EmptyText, ParseError

BM25_K1 = 1.2
BM25_B = 0.75

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_NORM_WS_RE = re.compile(r"\s+")

# Words that never survive into a search query or a content-word count.
# Shipped as an editable data file; loaded once at import.
def _load_stopwords() -> frozenset[str]:
    text = resources.files("parley.data").joinpath("stopwords.txt").read_text()
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


STOPWORDS = _load_stopwords()

PRONOUNS = frozenset(
    "i me my mine you your yours he him his she her hers it its "
    "we us our ours they them their theirs".split()
)

# Trailing abbreviations that must not terminate a sentence.
ABBREVIATIONS = frozenset({"mr.", "mrs.", "dr.", "st.", "vs.", "e.g.", "i.e."})


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters, dropping empties."""
    return _TOKEN_RE.findall(text.lower())


def content_words(text: str) -> list[str]:
    """Tokens that carry content: non-stopword tokens longer than one char."""
    return [t for t in tokenize(text) if t not in STOPWORDS and len(t) > 1]


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    body: str
    linked_entity: Optional[str] = None


@dataclass(frozen=True)
class SearchResult:
    doc_id: str
    score: float
    best_sentence: str
    sentence_index: int


@dataclass
class Index:
    """Immutable-after-build inverted index over a document corpus."""

    docs: dict[str, Document] = field(default_factory=dict)
    postings: dict[str, dict[str, int]] = field(default_factory=dict)
    doc_len: dict[str, int] = field(default_factory=dict)
    avgdl: float = 0.0

    @property
    def size(self) -> int:
        return len(self.docs)

    def get_document(self, doc_id: str) -> Document:
        return self.docs[doc_id]

    def vocabulary(self) -> set[str]:
        return set(self.postings)


def load_corpus(path) -> list[Document]:
    """Read a JSONL corpus: {"doc_id","title","body","linked_entity"?} per line."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc}", line=lineno) from exc
            for key in ("doc_id", "title", "body"):
                if key not in rec:
                    raise ParseError(f"document missing field {key!r}", line=lineno)
            if not rec["body"]:
                raise ParseError("document body is empty", line=lineno)
            docs.append(
                Document(
                    doc_id=rec["doc_id"],
                    title=rec["title"],
                    body=rec["body"],
                    linked_entity=rec.get("linked_entity"),
                )
            )
    return docs


def build_index(docs: list[Document]) -> Index:
    """Build the inverted index. Title and body tokens both count toward
    term statistics; sentence extraction later only ever looks at the body."""
    index = Index()
    for doc in docs:
        if doc.doc_id in index.docs:
            raise DuplicateDocId(doc.doc_id)
        index.docs[doc.doc_id] = doc
        tokens = tokenize(doc.title) + tokenize(doc.body)
        index.doc_len[doc.doc_id] = len(tokens)
        for tok in tokens:
            index.postings.setdefault(tok, {})
            index.postings[tok][doc.doc_id] = index.postings[tok].get(doc.doc_id, 0) + 1
    if index.docs:
        index.avgdl = sum(index.doc_len.values()) / len(index.doc_len)
    return index


def _idf(index: Index, term: str) -> float:
    df = len(index.postings.get(term, ()))
    return math.log(1.0 + (index.size - df + 0.5) / (df + 0.5))


def bm25_score(index: Index, doc_id: str, terms: list[str]) -> float:
    """BM25 for one document over the distinct query terms."""
    score = 0.0
    dl = index.doc_len[doc_id]
    for term in dict.fromkeys(terms):
        tf = index.postings.get(term, {}).get(doc_id, 0)
        if tf == 0:
            continue
        denom = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * dl / index.avgdl)
        score += _idf(index, term) * tf * (BM25_K1 + 1.0) / denom
    return score


def query(index: Index, text: str, k: int) -> list[SearchResult]:
    """Top-k documents by BM25, ties broken by doc_id ascending."""
    if k < 1:
        raise ValueError("k must be >= 1")
    terms = tokenize(text)
    if not terms or not index.docs:
        return []
    hit_ids = set()
    for term in terms:
        hit_ids.update(index.postings.get(term, ()))
    scored = sorted(
        ((bm25_score(index, did, terms), did) for did in hit_ids),
        key=lambda pair: (-pair[0], pair[1]),
    )
    results = []
    for score, did in scored[:k]:
        sentence, idx = best_sentence(index.docs[did].body, terms)
        results.append(
            SearchResult(doc_id=did, score=score, best_sentence=sentence, sentence_index=idx)
        )
    return results


def split_sentences(text: str) -> list[str]:
    """Split on ./!/? followed by whitespace and a capital (or end of text),
    keeping guarded abbreviations (Mr., Dr., e.g., ...) intact."""
    sentences = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in ".!?":
            # Trailing closers stay attached to the sentence.
            j = i + 1
            while j < n and text[j] in "\"')":
                j += 1
            at_end = j >= n
            followed = False
            if not at_end and text[j].isspace():
                k = j
                while k < n and text[k].isspace():
                    k += 1
                followed = k < n and (text[k].isupper() or text[k].isdigit())
            if at_end or followed:
                word = text[start:j].split()[-1] if text[start:j].split() else ""
                if ch == "." and word.lower() in ABBREVIATIONS:
                    i += 1
                    continue
                unit = text[start:j].strip()
                if unit:
                    sentences.append(unit)
                start = j
                i = j
                continue
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def first_sentence(text: str) -> str:
    if not text or not text.strip():
        raise EmptyText("first_sentence needs non-empty text")
    return split_sentences(text)[0]


def best_sentence(body: str, terms: list[str]) -> tuple[str, int]:
    """Sentence with the highest distinct-term overlap; earliest wins ties."""
    term_set = set(terms)
    best = (0, "")
    best_overlap = -1
    for idx, sentence in enumerate(split_sentences(body)):
        overlap = len(term_set & set(tokenize(sentence)))
        if overlap > best_overlap:
            best_overlap = overlap
            best = (idx, sentence)
    return best[1], best[0]


def make_query(state, user_text: str, kb) -> str:
    """Search query: focal entity canonical name plus the user's content words
    (stopwords and pronouns removed)."""
    parts = []
    focus_id = state.focus_entity() if state is not None else None
    if focus_id is not None and kb is not None and focus_id in kb.entities:
        parts.append(kb.entities[focus_id].name)
    parts.extend(
        t for t in tokenize(user_text) if t not in STOPWORDS and t not in PRONOUNS
    )
    return " ".join(parts)


def normalize_whitespace(text: str) -> str:
    return _NORM_WS_RE.sub(" ", text).strip()
