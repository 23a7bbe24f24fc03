"""Batch experiments: run strategy grids against a corpus with a scripted partner.

No live human is available in batch mode, so the partner side replays the
corpus conversation's recorded partner utterances while the engine generates
every self turn. Each (algorithm, steps, partner) cell yields a report row
with the mean conversation NLL and the candidate-selection statistics pooled
over all engine turns.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Any, Sequence

import numpy as np

from .errors import ConfigurationError
from .metrics import ExperimentRow, conversation_nll, selection_stats
from .models import SpeakerModel
from .multiturn import (
    ALGORITHMS,
    MultiTurnParams,
    PartnerKind,
    SearchTrace,
    make_partner,
    multi_turn_search,
)
from .types import Conversation, SpeakerRole

DEFAULT_STEPS = (0, 1, 2, 4, 8)
NO_PARTNER = "-"


@dataclass(frozen=True)
class ExperimentCell:
    """One strategy: utterance algorithm x lookahead steps x partner kind."""

    algorithm: str
    steps: int
    partner: str
    width: int = 10
    max_tokens: int = 20
    iterations: int = 4
    similarity_threshold: int = 3

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        if self.steps > 0:
            PartnerKind(self.partner)  # raises ValueError on junk
        if self.steps < 0 or self.width < 1:
            raise ConfigurationError("steps must be >= 0 and width >= 1")

    def params(self) -> MultiTurnParams:
        return MultiTurnParams(
            width=self.width,
            steps=self.steps,
            max_tokens=self.max_tokens,
            iterations=self.iterations,
            similarity_threshold=self.similarity_threshold,
        )


def expand_matrix(doc: dict[str, Any]) -> list[ExperimentCell]:
    """Expand a matrix document into cells.

    Either an explicit ``cells`` list, or the product of ``algorithms`` x
    ``steps`` x ``partners`` with shared knobs. Zero-step cells ignore the
    partner model entirely, so they collapse to one cell per algorithm.
    """
    shared = {
        key: doc[key]
        for key in ("width", "max_tokens", "iterations", "similarity_threshold")
        if key in doc
    }
    if "cells" in doc:
        return [ExperimentCell(**{**shared, **cell}) for cell in doc["cells"]]
    algorithms = doc.get("algorithms", list(ALGORITHMS))
    steps_list = doc.get("steps", list(DEFAULT_STEPS))
    partners = doc.get("partners", [k.value for k in PartnerKind])
    cells: list[ExperimentCell] = []
    seen: set[tuple] = set()
    for algorithm, steps, partner in product(algorithms, steps_list, partners):
        if steps == 0:
            partner = NO_PARTNER
        key = (algorithm, steps, partner)
        if key in seen:
            continue
        seen.add(key)
        cells.append(ExperimentCell(algorithm=algorithm, steps=steps, partner=partner, **shared))
    return cells


def _cell_partner(
    cell: ExperimentCell,
    self_model: SpeakerModel,
    conv: Conversation,
    mindless_model: SpeakerModel | None,
):
    if cell.steps == 0 or cell.partner == NO_PARTNER:
        # lookahead never runs; any well-formed pair will do
        return make_partner(PartnerKind.EGOCENTRIC, self_model, self_context=conv.self_context)
    kind = PartnerKind(cell.partner)
    return make_partner(
        kind,
        self_model,
        mindless_model=mindless_model,
        self_context=conv.self_context,
        partner_context=conv.partner_context,
    )


def rollout(
    self_model: SpeakerModel,
    corpus_conversation: Conversation,
    cell: ExperimentCell,
    mindless_model: SpeakerModel | None = None,
) -> tuple[Conversation, list[SearchTrace]]:
    """Engine-vs-scripted-partner playout of one corpus conversation.

    The engine generates each self turn; partner turns are replayed verbatim
    from the corpus (conversation-level teacher forcing).
    """
    partner = _cell_partner(cell, self_model, corpus_conversation, mindless_model)
    params = cell.params()
    live = Conversation.empty(corpus_conversation.self_context, corpus_conversation.partner_context)
    traces: list[SearchTrace] = []
    for utterance in corpus_conversation.utterances:
        if utterance.speaker is SpeakerRole.SELF:
            chosen, trace = multi_turn_search(
                self_model, partner, live, live.self_context, params, cell.algorithm,
                partner_kind=cell.partner,
            )
            live = live.with_utterance(chosen.utterance)
            traces.append(trace)
        else:
            live = live.with_utterance(utterance)
    return live, traces


def run_experiment(
    self_model: SpeakerModel,
    corpus: Sequence[Conversation],
    cells: Sequence[ExperimentCell],
    mindless_model: SpeakerModel | None = None,
    seed: int = 0,
    limit: int | None = None,
) -> list[ExperimentRow]:
    """Produce one report row per cell; deterministic given the seed.

    ``limit`` subsamples the corpus without replacement using ``seed``; the
    engine itself is deterministic, so the seed has no other effect.
    """
    if not corpus:
        raise ConfigurationError("experiment requires a non-empty corpus")
    conversations = list(corpus)
    if limit is not None and limit < len(conversations):
        rng = np.random.default_rng(seed)
        picks = sorted(rng.choice(len(conversations), size=limit, replace=False).tolist())
        conversations = [conversations[i] for i in picks]
    rows: list[ExperimentRow] = []
    for cell in cells:
        nlls: list[float] = []
        traces: list[SearchTrace] = []
        for conv in conversations:
            live, conv_traces = rollout(self_model, conv, cell, mindless_model)
            nlls.append(conversation_nll(live, self_model, self_model))
            traces.extend(conv_traces)
        stats = selection_stats(traces)
        rows.append(
            ExperimentRow(
                strategy=cell.algorithm,
                steps=cell.steps,
                width=cell.width,
                partner_kind=cell.partner,
                nll_mean=sum(nlls) / len(nlls),
                rate=stats.rate,
                rank=stats.mean_rank,
                gap=stats.mean_gap,
                n=len(conversations),
                n_gap_defaulted=stats.n_gap_defaulted,
            )
        )
    return rows
