"""Conversation-level NLL and candidate-selection statistics from traces."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .models import SpeakerModel, conversation_logprob
from .multiturn import SearchTrace
from .types import Conversation


def conversation_nll(
    conv: Conversation,
    self_model: SpeakerModel,
    partner_model: SpeakerModel,
) -> float:
    """Negative joint log-likelihood of a whole conversation (nats)."""
    return -conversation_logprob(conv, self_model, partner_model) + 0.0


@dataclass(frozen=True)
class SelectionStats:
    """How often, and how far, lookahead overturned the utterance-level choice.

    ``rate`` is the fraction of searches whose selected H0 rank was nonzero,
    ``mean_rank`` the average selected rank (0 = agreed with the
    utterance-level top), and ``mean_gap`` the average log-probability drop
    from the best to the second-best H0 candidate. Traces with a single H0
    candidate contribute gap 0 and are counted in ``n_gap_defaulted``.
    """

    rate: float
    mean_rank: float
    mean_gap: float
    n: int
    n_gap_defaulted: int = 0


def selection_stats(traces: Sequence[SearchTrace]) -> SelectionStats:
    if not traces:
        raise ValueError("selection_stats requires at least one trace")
    ranks = [t.selected_rank_in_h0 for t in traces]
    gaps = []
    defaulted = 0
    for t in traces:
        entries = t.h0.entries
        if len(entries) >= 2:
            gaps.append(entries[0].score - entries[1].score)
        else:
            gaps.append(0.0)
            defaulted += 1
    n = len(traces)
    return SelectionStats(
        rate=sum(1 for r in ranks if r > 0) / n,
        mean_rank=sum(ranks) / n,
        mean_gap=sum(gaps) / n,
        n=n,
        n_gap_defaulted=defaulted,
    )


REPORT_COLUMNS = ("strategy", "steps", "width", "partner_kind", "nll_mean", "rate", "rank", "gap", "n")


@dataclass(frozen=True)
class ExperimentRow:
    """One strategy cell of an experiment report."""

    strategy: str
    steps: int
    width: int
    partner_kind: str
    nll_mean: float
    rate: float
    rank: float
    gap: float
    n: int
    n_gap_defaulted: int = field(default=0, compare=False)

    def as_record(self) -> tuple:
        return (
            self.strategy,
            self.steps,
            self.width,
            self.partner_kind,
            repr(self.nll_mean),
            repr(self.rate),
            repr(self.rank),
            repr(self.gap),
            self.n,
        )


def rows_to_csv(rows: Iterable[ExperimentRow]) -> str:
    """Render report rows as CSV text (floats via repr, so byte-stable)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow(row.as_record())
    return out.getvalue()


def format_report(rows: Sequence[ExperimentRow]) -> str:
    """Plain-text report: an NLL block and a selection-statistics block."""
    lines = ["Strategy quality (negative log-likelihood per conversation)"]
    lines.append(f"{'strategy':<10}{'steps':>6}{'width':>7}{'partner':>13}{'NLL':>10}{'n':>5}")
    for r in rows:
        lines.append(
            f"{r.strategy:<10}{r.steps:>6}{r.width:>7}{r.partner_kind:>13}{r.nll_mean:>10.4f}{r.n:>5}"
        )
    lines.append("")
    lines.append("Candidate selection statistics")
    lines.append(f"{'strategy':<10}{'steps':>6}{'rate':>8}{'rank':>8}{'gap':>8}")
    for r in rows:
        flag = " *" if r.n_gap_defaulted else ""
        lines.append(f"{r.strategy:<10}{r.steps:>6}{r.rate:>8.2f}{r.rank:>8.2f}{r.gap:>8.2f}{flag}")
    if any(r.n_gap_defaulted for r in rows):
        lines.append("* includes searches with a single candidate (gap defaulted to 0)")
    return "\n".join(lines) + "\n"
