/**
 * Lookahead-tree inspector: one column per depth, candidates in payload
 * order, the selected lineage shaded. Scores are displayed exactly as they
 * arrive in the trace document; this module never computes or reformats a
 * number (String() on the parsed JSON value only).
 */

import type { ScoredSequenceDoc, TraceDoc } from "./api.js";
import { h, type VNode } from "./vdom.js";

function sameTokens(a: ScoredSequenceDoc, b: ScoredSequenceDoc, upTo: number): boolean {
  for (let i = 0; i < upTo; i += 1) {
    const left = a.utterances[i]?.tokens ?? null;
    const right = b.utterances[i]?.tokens ?? null;
    if (left === null || right === null) return false;
    if (left.length !== right.length) return false;
    for (let j = 0; j < left.length; j += 1) {
      if (left[j] !== right[j]) return false;
    }
  }
  return true;
}

/** The winning sequence: top of the deepest hypothesis set (H0 when L=0). */
export function selectedSequence(trace: TraceDoc): ScoredSequenceDoc {
  const sets = trace.hypothesis_sets;
  if (sets.length > 0) return sets[sets.length - 1].entries[0];
  return trace.h0.entries[trace.selected_root_index];
}

function onSelectedPath(entry: ScoredSequenceDoc, winner: ScoredSequenceDoc, depth: number): boolean {
  return entry.root_index === winner.root_index && sameTokens(entry, winner, depth + 1);
}

function cell(entry: ScoredSequenceDoc, depth: number, winner: ScoredSequenceDoc): VNode {
  const scoreText = String(entry.score);
  const shaded = onSelectedPath(entry, winner, depth);
  const utterance = entry.utterances[depth];
  return h(
    "div",
    {
      class: shaded ? "cell selected" : "cell",
      title: `cumulative log-probability ${scoreText}`,
      "data-root-index": String(entry.root_index),
    },
    h("div", { class: "utterance-text" }, utterance.text),
    h("div", { class: "score" }, scoreText),
  );
}

export function traceView(trace: TraceDoc | null): VNode {
  if (trace === null) {
    return h("div", { class: "trace empty-state" }, "no trace recorded for this turn");
  }
  const winner = selectedSequence(trace);
  const columns: VNode[] = [];
  columns.push(
    h(
      "div",
      { class: "column", "data-depth": "0" },
      h("div", { class: "column-title" }, "candidates"),
      trace.h0.entries.map((entry) => cell(entry, 0, winner)),
    ),
  );
  trace.hypothesis_sets.forEach((set) => {
    columns.push(
      h(
        "div",
        { class: "column", "data-depth": String(set.depth) },
        h("div", { class: "column-title" }, `lookahead ${set.depth}`),
        set.entries.map((entry) => cell(entry, set.depth, winner)),
      ),
    );
  });
  return h(
    "div",
    { class: "trace" },
    h(
      "div",
      { class: "trace-summary" },
      `chose rank ${trace.selected_rank_in_h0} of ${trace.h0.entries.length} candidates`,
    ),
    h("div", { class: "columns" }, columns),
  );
}
