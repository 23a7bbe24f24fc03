"""Brute-force enumeration oracles for tiny instances.

These enumerate every admissible token sequence and therefore solve the three
inference problems exactly: the single most likely next utterance, the
optimistic conversation-level choice (maximize over futures), and the
conservative one (marginalize over futures). They exist as ground truth for
the heuristic searches and refuse instances whose enumeration would exceed a
safety cap.

Enumeration mirrors the searches' truncation rule: a sequence either ends
with eos at length <= T or is cut at exactly T tokens and scored by what it
emitted. A useful consequence is that each turn's enumerated probabilities
sum to one, so exact marginalization over futures contributes nothing and
the conservative choice coincides with the utterance-level one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import EnumerationCapError
from .models import SpeakerModel, utterance_logprob
from .search import ScoredUtterance
from .types import Context, Conversation, SpeakerRole, Token, Utterance, Vocabulary

DEFAULT_ENUMERATION_CAP = 200_000


@dataclass(frozen=True)
class OracleParams:
    """Enumeration horizon and safety bound."""

    max_tokens: int
    steps: int = 0
    cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.cap < 1:
            raise ValueError("cap must be >= 1")


def count_utterances(vocab_size: int, max_tokens: int) -> int:
    """Number of admissible token sequences of length <= max_tokens."""
    non_eos = vocab_size - 1
    finished = sum(non_eos ** (length - 1) for length in range(1, max_tokens + 1))
    return finished + non_eos ** max_tokens


def iter_utterance_token_seqs(vocab: Vocabulary, max_tokens: int) -> Iterator[tuple[Token, ...]]:
    """All eos-terminated sequences up to max_tokens, then all truncated ones."""
    non_eos = [t for t in range(len(vocab)) if t != vocab.eos_id]
    for length in range(1, max_tokens + 1):
        for prefix in itertools.product(non_eos, repeat=length - 1):
            yield prefix + (vocab.eos_id,)
    yield from itertools.product(non_eos, repeat=max_tokens)


def _require_under_cap(size: int, cap: int) -> None:
    if size > cap:
        raise EnumerationCapError(
            f"enumeration of {size} sequences exceeds cap {cap}; rerun with cap >= {size}",
            required=size,
        )


def _scored_candidates(
    model: SpeakerModel,
    history: Conversation,
    role: SpeakerRole,
    context: Context,
    max_tokens: int,
) -> list[ScoredUtterance]:
    vocab = model.vocab
    out = []
    for tokens in iter_utterance_token_seqs(vocab, max_tokens):
        lp = utterance_logprob(model, history.utterances, context, tokens)
        if lp == -math.inf:
            continue
        utt = Utterance(role, tokens, truncated=tokens[-1] != vocab.eos_id)
        out.append(ScoredUtterance(utt, lp))
    out.sort(key=lambda c: (-c.logprob, c.tokens))
    return out


def oracle_utterance_argmax(
    model: SpeakerModel,
    history: Conversation,
    role: SpeakerRole,
    context: Context,
    params: OracleParams,
) -> ScoredUtterance:
    """Exact most likely next utterance by full enumeration."""
    _require_under_cap(count_utterances(len(model.vocab), params.max_tokens), params.cap)
    candidates = _scored_candidates(model, history, role, context, params.max_tokens)
    return candidates[0]


def _turn_model(
    depth: int,
    self_model: SpeakerModel,
    self_context: Context,
    partner_model: SpeakerModel,
    partner_context: Context,
) -> tuple[SpeakerModel, Context, SpeakerRole]:
    if depth % 2 == 1:
        return partner_model, partner_context, SpeakerRole.PARTNER
    return self_model, self_context, SpeakerRole.SELF


def _conversation_cap_check(vocab_size: int, max_tokens: int, steps: int, cap: int) -> None:
    per_turn = count_utterances(vocab_size, max_tokens)
    _require_under_cap(per_turn ** (steps + 1), cap)


def optimistic_continuation_logprob(
    self_model: SpeakerModel,
    partner: tuple[SpeakerModel, Context],
    conv: Conversation,
    self_context: Context,
    params: OracleParams,
    depth: int = 1,
) -> float:
    """Log-probability of the single best ``steps``-turn continuation of ``conv``."""
    if depth > params.steps:
        return 0.0
    partner_model, partner_context = partner
    model, context, role = _turn_model(depth, self_model, self_context, partner_model, partner_context)
    best = -math.inf
    for cand in _scored_candidates(model, conv, role, context, params.max_tokens):
        total = cand.logprob + optimistic_continuation_logprob(
            self_model, partner, conv.with_utterance(cand.utterance), self_context, params, depth + 1
        )
        if total > best:
            best = total
    return best


def marginal_continuation_logprob(
    self_model: SpeakerModel,
    partner: tuple[SpeakerModel, Context],
    conv: Conversation,
    self_context: Context,
    params: OracleParams,
    depth: int = 1,
) -> float:
    """Log of the summed probability of all ``steps``-turn continuations of ``conv``."""
    if depth > params.steps:
        return 0.0
    partner_model, partner_context = partner
    model, context, role = _turn_model(depth, self_model, self_context, partner_model, partner_context)
    totals = [
        cand.logprob
        + marginal_continuation_logprob(
            self_model, partner, conv.with_utterance(cand.utterance), self_context, params, depth + 1
        )
        for cand in _scored_candidates(model, conv, role, context, params.max_tokens)
    ]
    return _logsumexp(totals)


def _argmax_with_continuation(
    self_model: SpeakerModel,
    partner: tuple[SpeakerModel, Context],
    history: Conversation,
    self_context: Context,
    params: OracleParams,
    continuation,
) -> ScoredUtterance:
    _conversation_cap_check(len(self_model.vocab), params.max_tokens, params.steps, params.cap)
    candidates = _scored_candidates(self_model, history, SpeakerRole.SELF, self_context, params.max_tokens)
    best_cand: ScoredUtterance | None = None
    best_total = -math.inf
    for cand in candidates:  # already in rank order; ties keep the better rank
        total = cand.logprob + continuation(
            self_model, partner, history.with_utterance(cand.utterance), self_context, params
        )
        if total > best_total:
            best_total = total
            best_cand = cand
    assert best_cand is not None
    return best_cand


def oracle_optimistic_argmax(
    self_model: SpeakerModel,
    partner: tuple[SpeakerModel, Context],
    history: Conversation,
    self_context: Context,
    params: OracleParams,
) -> ScoredUtterance:
    """Exact optimistic conversation-level choice.

    For every candidate first utterance, add the log-probability of its best
    possible continuation over ``steps`` alternating turns, then return the
    candidate with the best total. The returned logprob is the candidate's
    own utterance-level score, matching what the engine reports.
    """
    return _argmax_with_continuation(
        self_model, partner, history, self_context, params, optimistic_continuation_logprob
    )


def oracle_conservative_argmax(
    self_model: SpeakerModel,
    partner: tuple[SpeakerModel, Context],
    history: Conversation,
    self_context: Context,
    params: OracleParams,
) -> ScoredUtterance:
    """Exact conservative conversation-level choice.

    Identical to the optimistic oracle except the continuation term is the
    log of the summed probability of all continuations, truncated at
    ``steps`` turns.
    """
    return _argmax_with_continuation(
        self_model, partner, history, self_context, params, marginal_continuation_logprob
    )


def _logsumexp(values: Sequence[float]) -> float:
    finite = [v for v in values if v != -math.inf]
    if not finite:
        return -math.inf
    peak = max(finite)
    return peak + math.log(sum(math.exp(v - peak) for v in finite))
