"""Utterance-level inference: greedy, beam, and iterative beam search.

All three walk a speaker model token by token from a conversation prefix and
return candidates scored by raw cumulative log-probability (no length
normalization). Ties are broken deterministically everywhere: higher score
first, then lexicographic token-id order with a shorter sequence winning on
full prefix equality, i.e. the ordering of ``(-logprob, tokens)`` keys.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import SearchError
from .models import SpeakerModel
from .types import Context, Conversation, SpeakerRole, Token, Utterance

# Pads the shorter sequence in Hamming comparisons; never equals a token id.
PAD_SENTINEL = -1


@dataclass(frozen=True)
class ScoredUtterance:
    """A candidate utterance with its cumulative token log-probability."""

    utterance: Utterance
    logprob: float

    @property
    def tokens(self) -> tuple[Token, ...]:
        return self.utterance.tokens


@dataclass(frozen=True)
class SearchParams:
    """Knobs shared by the utterance-level searches.

    ``iterations`` and ``similarity_threshold`` only apply to iterative beam
    search. Defaults: width 10 for standalone beam search; the iterative
    preset uses four iterations of width 5 with threshold 3.
    """

    width: int = 10
    max_tokens: int = 20
    iterations: int = 4
    similarity_threshold: int = 3

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.similarity_threshold < 0:
            raise ValueError("similarity_threshold must be >= 0")

    @classmethod
    def beam_defaults(cls) -> "SearchParams":
        return cls(width=10)

    @classmethod
    def iterbeam_defaults(cls) -> "SearchParams":
        return cls(width=5, iterations=4, similarity_threshold=3)


def hamming_distance(a: Sequence[Token], b: Sequence[Token]) -> int:
    """Positionwise mismatch count after padding the shorter sequence.

    The pad sentinel never matches a real token, so a length difference
    counts one mismatch per missing position.
    """
    n = max(len(a), len(b))
    return sum(
        1
        for i in range(n)
        if (a[i] if i < len(a) else PAD_SENTINEL) != (b[i] if i < len(b) else PAD_SENTINEL)
    )


@dataclass(frozen=True)
class _Hyp:
    tokens: tuple[Token, ...]
    logprob: float
    finished: bool

    @property
    def sort_key(self) -> tuple[float, tuple[Token, ...]]:
        return (-self.logprob, self.tokens)


def _check_turn(history: Conversation, role: SpeakerRole) -> None:
    if history.next_speaker is not role:
        raise ValueError(f"next speaker in history is {history.next_speaker.value}, not {role.value}")


def greedy_search(
    model: SpeakerModel,
    history: Conversation,
    role: SpeakerRole,
    context: Context,
    max_tokens: int,
) -> ScoredUtterance:
    """Follow the argmax token at every position (ties -> lowest token id)."""
    _check_turn(history, role)
    tokens: list[Token] = []
    logprob = 0.0
    for _ in range(max_tokens):
        lps = model.next_token_logprobs(history.utterances, context, tuple(tokens))
        best = int(lps.argmax())  # argmax returns the first (lowest-id) maximum
        tokens.append(best)
        logprob += float(lps[best])
        if best == model.vocab.eos_id:
            break
    utterance = Utterance(role, tuple(tokens), truncated=tokens[-1] != model.vocab.eos_id)
    return ScoredUtterance(utterance, logprob)


def _beam(
    model: SpeakerModel,
    history: Conversation,
    role: SpeakerRole,
    context: Context,
    params: SearchParams,
    keep: Callable[[tuple[Token, ...]], bool] | None = None,
) -> list[ScoredUtterance]:
    """Beam search core with an optional hypothesis filter (iterative reuse).

    Finished hypotheses stay in the beam and compete with partials on raw
    log-probability. Zero-probability expansions are dropped, so the beam can
    hold fewer than ``width`` hypotheses (under a filter, possibly none).
    """
    eos = model.vocab.eos_id
    size = len(model.vocab)
    beam: list[_Hyp] = [_Hyp((), 0.0, False)]
    for _ in range(params.max_tokens):
        open_hyps = [h for h in beam if not h.finished]
        if not open_hyps:
            break
        pool = [h for h in beam if h.finished]
        for hyp in open_hyps:
            lps = model.next_token_logprobs(history.utterances, context, hyp.tokens)
            for token in range(size):
                lp = float(lps[token])
                if lp == -math.inf:
                    continue
                pool.append(_Hyp(hyp.tokens + (token,), hyp.logprob + lp, token == eos))
        if keep is not None:
            pool = [h for h in pool if keep(h.tokens)]
        pool.sort(key=lambda h: h.sort_key)
        beam = pool[:params.width]
        if not beam:
            return []
    results = sorted(beam, key=lambda h: h.sort_key)
    return [
        ScoredUtterance(Utterance(role, h.tokens, truncated=not h.finished), h.logprob)
        for h in results
    ]


def beam_search(
    model: SpeakerModel,
    history: Conversation,
    role: SpeakerRole,
    context: Context,
    params: SearchParams,
) -> list[ScoredUtterance]:
    """Standard beam search over tokens; at most ``width`` candidates, sorted."""
    _check_turn(history, role)
    return _beam(model, history, role, context, params)


def iterative_beam_search_grouped(
    model: SpeakerModel,
    history: Conversation,
    role: SpeakerRole,
    context: Context,
    params: SearchParams,
) -> list[list[ScoredUtterance]]:
    """Run ``iterations`` beam searches, forcing later ones away from earlier results.

    From the second iteration on, any partial or complete hypothesis closer
    than ``similarity_threshold`` (Hamming, padded) to some previously
    returned candidate is pruned before each beam ranking. An iteration whose
    beam empties under pruning contributes nothing. Returns one candidate
    list per iteration.
    """
    _check_turn(history, role)
    groups: list[list[ScoredUtterance]] = []
    previous: list[tuple[Token, ...]] = []
    threshold = params.similarity_threshold
    for iteration in range(params.iterations):
        if iteration == 0 or not previous:
            keep = None
        else:
            seen = list(previous)

            def keep(tokens: tuple[Token, ...], _seen=seen) -> bool:
                return all(hamming_distance(tokens, prior) >= threshold for prior in _seen)

        found = _beam(model, history, role, context, params, keep)
        if iteration == 0 and not found:
            raise SearchError("iterative beam search found no candidates in its first iteration")
        groups.append(found)
        previous.extend(c.tokens for c in found)
    return groups


def iterative_beam_search(
    model: SpeakerModel,
    history: Conversation,
    role: SpeakerRole,
    context: Context,
    params: SearchParams,
) -> list[ScoredUtterance]:
    """Union of all iterations' candidates, deduplicated and sorted by score."""
    groups = iterative_beam_search_grouped(model, history, role, context, params)
    seen: set[tuple[Token, ...]] = set()
    merged: list[ScoredUtterance] = []
    for group in groups:
        for cand in group:
            if cand.tokens not in seen:
                seen.add(cand.tokens)
                merged.append(cand)
    merged.sort(key=lambda c: (-c.logprob, c.tokens))
    return merged
