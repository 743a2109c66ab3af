"""Session evaluation: per-transcript metric battery and batch aggregates.

"Conversational depth" here is the longest run of consecutive turns sharing
one topic. That definition is this artifact's own; treat cross-system
comparisons of the number accordingly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import EmptyList, MalformedTranscript
from .policy import extract_topic
from .search import tokenize


@dataclass
class SessionMetrics:
    duration_ms: float
    mean_response_delay_ms: float
    delay_defined: bool
    vocabulary_diversity: float
    da_bigrams: dict[tuple[str, str], int]
    conversational_depth: int
    reprompt_count: int
    turn_count: int

    def to_dict(self) -> dict:
        return {
            "duration_ms": self.duration_ms,
            "mean_response_delay_ms": self.mean_response_delay_ms,
            "delay_defined": self.delay_defined,
            "vocabulary_diversity": self.vocabulary_diversity,
            "da_bigrams": {f"{a}|{b}": n for (a, b), n in sorted(self.da_bigrams.items())},
            "conversational_depth": self.conversational_depth,
            "reprompt_count": self.reprompt_count,
            "turn_count": self.turn_count,
        }


NUMERIC_FIELDS = (
    "duration_ms",
    "mean_response_delay_ms",
    "vocabulary_diversity",
    "conversational_depth",
    "reprompt_count",
    "turn_count",
)


def _validate(transcript: list[dict]) -> None:
    if not isinstance(transcript, list):
        raise MalformedTranscript("transcript must be a list of turn records")
    prev_speaker = None
    for i, rec in enumerate(transcript):
        for key in ("index", "speaker", "text", "dialogue_act", "timestamp"):
            if key not in rec:
                raise MalformedTranscript(f"turn {i} missing field {key!r}")
        if rec["index"] != i:
            raise MalformedTranscript(f"turn {i} has index {rec['index']}")
        if rec["speaker"] not in ("user", "system"):
            raise MalformedTranscript(f"turn {i} has speaker {rec['speaker']!r}")
        if prev_speaker is not None and rec["speaker"] == prev_speaker:
            raise MalformedTranscript(f"turn {i} repeats speaker {prev_speaker!r}")
        prev_speaker = rec["speaker"]


def compute_metrics(transcript: list[dict]) -> SessionMetrics:
    """Metric battery over one session transcript (list of turn records)."""
    _validate(transcript)
    if not transcript:
        raise MalformedTranscript("empty transcript")

    duration = transcript[-1]["timestamp"] - transcript[0]["timestamp"]

    delays = []
    for prev, cur in zip(transcript, transcript[1:]):
        if cur["speaker"] == "system" and prev["speaker"] == "user":
            delays.append(cur["timestamp"] - prev["timestamp"])
    delay_defined = bool(delays)
    mean_delay = sum(delays) / len(delays) if delays else 0.0

    system_tokens: list[str] = []
    for rec in transcript:
        if rec["speaker"] == "system":
            system_tokens.extend(tokenize(rec["text"]))
    ttr = len(set(system_tokens)) / len(system_tokens) if system_tokens else 0.0

    bigrams: dict[tuple[str, str], int] = {}
    acts = [rec["dialogue_act"] for rec in transcript]
    for a, b in zip(acts, acts[1:]):
        bigrams[(a, b)] = bigrams.get((a, b), 0) + 1

    topic = None
    depth = 0
    run = 0
    prev_topic = object()
    for rec in transcript:
        if rec["dialogue_act"] == "TOPIC_PROPOSAL":
            topic = extract_topic(rec["text"]) or topic
        run = run + 1 if topic == prev_topic else 1
        prev_topic = topic
        depth = max(depth, run)

    return SessionMetrics(
        duration_ms=float(duration),
        mean_response_delay_ms=float(mean_delay),
        delay_defined=delay_defined,
        vocabulary_diversity=ttr,
        da_bigrams=bigrams,
        conversational_depth=depth,
        reprompt_count=sum(1 for a in acts if a == "REPROMPT"),
        turn_count=len(transcript),
    )


@dataclass
class AggregateReport:
    sessions: int
    stats: dict[str, dict[str, float]] = field(default_factory=dict)
    total_bigrams: dict[tuple[str, str], int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "sessions": self.sessions,
            "stats": self.stats,
            "total_bigrams": {f"{a}|{b}": n for (a, b), n in sorted(self.total_bigrams.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"sessions: {self.sessions}", ""]
        width = max(len(name) for name in NUMERIC_FIELDS)
        header = f"{'metric'.ljust(width)}  {'mean':>12}  {'min':>12}  {'max':>12}"
        lines.append(header)
        lines.append("-" * len(header))
        for name in NUMERIC_FIELDS:
            s = self.stats[name]
            lines.append(
                f"{name.ljust(width)}  {s['mean']:>12.4f}  {s['min']:>12.4f}  {s['max']:>12.4f}"
            )
        return "\n".join(lines)


def summarize(metrics_list: list[SessionMetrics]) -> AggregateReport:
    """Mean/min/max per numeric metric across sessions, plus pooled bigrams."""
    if not metrics_list:
        raise EmptyList("no sessions to summarize")
    report = AggregateReport(sessions=len(metrics_list))
    for name in NUMERIC_FIELDS:
        values = [float(getattr(m, name)) for m in metrics_list]
        report.stats[name] = {
            "mean": sum(values) / len(values),
            "min": min(values),
            "max": max(values),
        }
    for m in metrics_list:
        for pair, count in m.da_bigrams.items():
            report.total_bigrams[pair] = report.total_bigrams.get(pair, 0) + count
    return report
