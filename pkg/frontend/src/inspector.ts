// Pure view-model builders for the per-turn inspector. Values are taken
// verbatim from the debug payload; formatting is display-only.

import { DebugPayload } from "./protocol.js";

export const SCORE_DECIMALS = 3;

export interface CandidateRow {
  rank: number;
  text: string;
  source: string;
  relation: string;
  dialogueAct: string;
  score: number;
  scoreDisplay: string;
  features: Array<{ name: string; value: number }>;
}

export interface InspectorModel {
  userAct: string;
  decisionSummary: string;
  mustAnswer: boolean;
  candidates: CandidateRow[];
  salience: Array<{ entityId: string; lastMentionTurn: number }>;
  unlinkedMentions: string[];
  latencyDisplay: string;
  turnIndex: number;
}

export function formatScore(score: number): string {
  return score.toFixed(SCORE_DECIMALS);
}

export function buildInspectorModel(debug: DebugPayload): InspectorModel {
  return {
    userAct: debug.user_act,
    decisionSummary: `${debug.decision.system_act} via ${debug.decision.preferred_relations.join(" > ") || "-"}`,
    mustAnswer: debug.decision.must_answer,
    candidates: debug.candidates.map((candidate, i) => ({
      rank: i + 1,
      text: candidate.text,
      source: candidate.source,
      relation: candidate.relation ?? "-",
      dialogueAct: candidate.dialogue_act,
      score: candidate.score,
      scoreDisplay: formatScore(candidate.score),
      features: Object.entries(candidate.features).map(([name, value]) => ({ name, value })),
    })),
    salience: debug.salience.map((entry) => ({
      entityId: entry.entity_id,
      lastMentionTurn: entry.last_mention_turn,
    })),
    unlinkedMentions: debug.unlinked_mentions,
    latencyDisplay: `${debug.latency_ms.toFixed(1)} ms`,
    turnIndex: debug.turn_index,
  };
}
