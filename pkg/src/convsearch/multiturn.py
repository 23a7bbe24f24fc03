"""Multi-turn beam search: pick the next utterance by looking ahead.

The engine first gathers a candidate set H0 with an utterance-level search,
then repeatedly extends every surviving candidate sequence by one more
utterance (generated by the partner approximation on odd lookahead depths,
by the self model on even ones), keeping the top-K utterance sequences by
cumulative log-probability at each depth. After L lookahead steps the first
utterance of the best surviving sequence is returned. The chosen utterance is
always a member of H0; lookahead can only reorder, never invent.

Three partner approximations are supported: a separately supplied
context-free model ("mindless"), the self model under its own context
("egocentric"), and the self model under the partner's true context
("transparent").
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Sequence

from .errors import ConfigurationError, SearchError
from .models import CallCountingModel, SpeakerModel
from .search import (
    ScoredUtterance,
    SearchParams,
    beam_search,
    iterative_beam_search,
)
from .types import Context, Conversation, SpeakerRole, Token, Utterance, Vocabulary

ALGORITHMS = ("beam", "iterbeam")


class PartnerKind(enum.Enum):
    MINDLESS = "mindless"
    EGOCENTRIC = "egocentric"
    TRANSPARENT = "transparent"


def make_partner(
    kind: PartnerKind,
    self_model: SpeakerModel,
    mindless_model: SpeakerModel | None = None,
    self_context: Context | None = None,
    partner_context: Context | None = None,
) -> tuple[SpeakerModel, Context]:
    """Resolve a partner approximation into a concrete (model, context) pair.

    Mindless pairs a separately supplied context-free model with an empty
    context; egocentric reuses the self model with its own context;
    transparent reuses the self model with the partner's true context.
    """
    if kind is PartnerKind.MINDLESS:
        if mindless_model is None:
            raise ConfigurationError("partner kind 'mindless' requires a mindless model")
        return mindless_model, Context.empty(SpeakerRole.PARTNER)
    if kind is PartnerKind.EGOCENTRIC:
        if self_context is None:
            raise ConfigurationError("partner kind 'egocentric' requires the self context")
        return self_model, self_context
    if kind is PartnerKind.TRANSPARENT:
        if partner_context is None:
            raise ConfigurationError("partner kind 'transparent' requires the partner context")
        return self_model, partner_context
    raise ConfigurationError(f"unknown partner kind {kind!r}")


@dataclass(frozen=True)
class MultiTurnParams:
    """Engine configuration: beam width, lookahead steps, token budget."""

    width: int = 10
    steps: int = 0
    max_tokens: int = 20
    iterations: int = 4
    similarity_threshold: int = 3

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")

    def search_params(self) -> SearchParams:
        return SearchParams(
            width=self.width,
            max_tokens=self.max_tokens,
            iterations=self.iterations,
            similarity_threshold=self.similarity_threshold,
        )


@dataclass(frozen=True)
class ScoredSequence:
    """A candidate first utterance plus lookahead continuation, with its score.

    ``score`` is the root candidate's utterance-level log-probability plus
    each continuation utterance's log-probability under the model that
    generated it.
    """

    root_index: int
    utterances: tuple[Utterance, ...]
    score: float

    @property
    def sort_key(self) -> tuple[float, int, tuple[tuple[Token, ...], ...]]:
        return (-self.score, self.root_index, tuple(u.tokens for u in self.utterances))


@dataclass(frozen=True)
class HypothesisSet:
    """Candidate sequences surviving at one lookahead depth, best first."""

    depth: int
    entries: tuple[ScoredSequence, ...]

    def __post_init__(self) -> None:
        for entry in self.entries:
            if len(entry.utterances) != self.depth + 1:
                raise ValueError(
                    f"entry at depth {self.depth} has {len(entry.utterances)} utterances"
                )


@dataclass(frozen=True)
class SearchTrace:
    """Complete record of one engine turn, serializable for inspection.

    ``expansions[d-1]`` holds the full (up to K*K) candidate pool of depth d
    before pruning, sorted; ``hypothesis_sets`` the pruned sets H1..HL.
    ``lookahead_call_count`` counts model queries made after H0 was built.
    """

    params: MultiTurnParams
    algorithm: str
    partner_kind: str | None
    h0: HypothesisSet
    expansions: tuple[tuple[ScoredSequence, ...], ...]
    hypothesis_sets: tuple[HypothesisSet, ...]
    selected_root_index: int
    selected_rank_in_h0: int
    model_call_count: int
    lookahead_call_count: int

    def to_dict(self, vocab: Vocabulary) -> dict[str, Any]:
        return trace_to_dict(self, vocab)


def _utterance_to_dict(utt: Utterance, vocab: Vocabulary) -> dict[str, Any]:
    return {
        "speaker": utt.speaker.value,
        "tokens": list(utt.tokens),
        "text": utt.text(vocab),
        "truncated": utt.truncated,
    }


def _utterance_from_dict(doc: dict[str, Any]) -> Utterance:
    return Utterance(SpeakerRole(doc["speaker"]), tuple(doc["tokens"]), doc["truncated"])


def _sequence_to_dict(seq: ScoredSequence, vocab: Vocabulary) -> dict[str, Any]:
    return {
        "root_index": seq.root_index,
        "utterances": [_utterance_to_dict(u, vocab) for u in seq.utterances],
        "score": seq.score,
    }


def _sequence_from_dict(doc: dict[str, Any]) -> ScoredSequence:
    return ScoredSequence(
        doc["root_index"],
        tuple(_utterance_from_dict(u) for u in doc["utterances"]),
        doc["score"],
    )


def _hypothesis_set_to_dict(hs: HypothesisSet, vocab: Vocabulary) -> dict[str, Any]:
    return {"depth": hs.depth, "entries": [_sequence_to_dict(e, vocab) for e in hs.entries]}


def _hypothesis_set_from_dict(doc: dict[str, Any]) -> HypothesisSet:
    return HypothesisSet(doc["depth"], tuple(_sequence_from_dict(e) for e in doc["entries"]))


def trace_to_dict(trace: SearchTrace, vocab: Vocabulary) -> dict[str, Any]:
    """Stable JSON document for a trace; field names are part of the API."""
    return {
        "params": {
            "width": trace.params.width,
            "steps": trace.params.steps,
            "max_tokens": trace.params.max_tokens,
            "iterations": trace.params.iterations,
            "similarity_threshold": trace.params.similarity_threshold,
        },
        "algorithm": trace.algorithm,
        "partner_kind": trace.partner_kind,
        "h0": _hypothesis_set_to_dict(trace.h0, vocab),
        "expansions": [
            {"depth": d + 1, "candidates": [_sequence_to_dict(s, vocab) for s in pool]}
            for d, pool in enumerate(trace.expansions)
        ],
        "hypothesis_sets": [_hypothesis_set_to_dict(hs, vocab) for hs in trace.hypothesis_sets],
        "selected_root_index": trace.selected_root_index,
        "selected_rank_in_h0": trace.selected_rank_in_h0,
        "model_call_count": trace.model_call_count,
        "lookahead_call_count": trace.lookahead_call_count,
    }


def trace_from_dict(doc: dict[str, Any]) -> SearchTrace:
    params = MultiTurnParams(**doc["params"])
    return SearchTrace(
        params=params,
        algorithm=doc["algorithm"],
        partner_kind=doc["partner_kind"],
        h0=_hypothesis_set_from_dict(doc["h0"]),
        expansions=tuple(
            tuple(_sequence_from_dict(s) for s in exp["candidates"]) for exp in doc["expansions"]
        ),
        hypothesis_sets=tuple(_hypothesis_set_from_dict(hs) for hs in doc["hypothesis_sets"]),
        selected_root_index=doc["selected_root_index"],
        selected_rank_in_h0=doc["selected_rank_in_h0"],
        model_call_count=doc["model_call_count"],
        lookahead_call_count=doc["lookahead_call_count"],
    )


def _run_utterance_algorithm(
    algorithm: str,
    model: SpeakerModel,
    history: Conversation,
    role: SpeakerRole,
    context: Context,
    params: SearchParams,
) -> list[ScoredUtterance]:
    if algorithm == "beam":
        return beam_search(model, history, role, context, params)
    if algorithm == "iterbeam":
        # Only the top-K seed expansions, keeping the K*K pool bound.
        return iterative_beam_search(model, history, role, context, params)[: params.width]
    raise ConfigurationError(f"unknown utterance algorithm {algorithm!r} (expected one of {ALGORITHMS})")


def multi_turn_search(
    self_model: SpeakerModel,
    partner: tuple[SpeakerModel, Context],
    history: Conversation,
    self_context: Context,
    params: MultiTurnParams,
    algorithm: str = "beam",
    partner_kind: str | None = None,
) -> tuple[ScoredUtterance, SearchTrace]:
    """Choose the next self utterance by beam search over whole utterances.

    Odd lookahead depths are generated by the partner pair, even depths by
    the self model under its own context (beyond one turn the speakers simply
    alternate). With ``steps=0`` this degenerates to utterance-level
    inference: the top H0 candidate is returned unchanged. The reported
    logprob of the chosen utterance is its own utterance-level score, not the
    full sequence score.

    ``partner_kind`` is carried into the trace for reporting only.
    """
    if history.next_speaker is not SpeakerRole.SELF:
        raise ValueError("multi-turn search runs on the self side; it is not self's turn")
    partner_model, partner_context = partner
    if partner_model.vocab != self_model.vocab:
        raise ConfigurationError("partner model vocabulary differs from self model vocabulary")

    counted_self = CallCountingModel(self_model)
    counted_partner = CallCountingModel(partner_model)
    search_params = params.search_params()

    h0_candidates = _run_utterance_algorithm(
        algorithm, counted_self, history, SpeakerRole.SELF, self_context, search_params
    )[: params.width]
    if not h0_candidates:
        raise SearchError("utterance-level search produced an empty candidate set")
    h0_calls = counted_self.calls

    h0 = HypothesisSet(
        0,
        tuple(
            ScoredSequence(i, (c.utterance,), c.logprob) for i, c in enumerate(h0_candidates)
        ),
    )

    current: Sequence[ScoredSequence] = h0.entries
    expansions: list[tuple[ScoredSequence, ...]] = []
    hypothesis_sets: list[HypothesisSet] = []
    for depth in range(1, params.steps + 1):
        if depth % 2 == 1:
            role, model, context = SpeakerRole.PARTNER, counted_partner, partner_context
        else:
            role, model, context = SpeakerRole.SELF, counted_self, self_context
        pool: list[ScoredSequence] = []
        for seq in current:
            extended = history.with_utterances(seq.utterances)
            replies = _run_utterance_algorithm(
                algorithm, model, extended, role, context, search_params
            )[: params.width]
            pool.extend(
                ScoredSequence(seq.root_index, seq.utterances + (r.utterance,), seq.score + r.logprob)
                for r in replies
            )
        pool.sort(key=lambda s: s.sort_key)
        expansions.append(tuple(pool))
        current = tuple(pool[: params.width])
        hypothesis_sets.append(HypothesisSet(depth, tuple(current)))

    best = current[0]
    chosen = h0_candidates[best.root_index]
    total_calls = counted_self.calls + counted_partner.calls
    trace = SearchTrace(
        params=params,
        algorithm=algorithm,
        partner_kind=partner_kind,
        h0=h0,
        expansions=tuple(expansions),
        hypothesis_sets=tuple(hypothesis_sets),
        selected_root_index=best.root_index,
        selected_rank_in_h0=best.root_index,
        model_call_count=total_calls,
        lookahead_call_count=total_calls - h0_calls,
    )
    return chosen, trace
