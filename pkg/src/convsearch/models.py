"""Speaker models: conditional next-token distributions over a shared vocabulary.

A speaker model maps (history, context, partial utterance) to a log-probability
vector over the vocabulary. The conversation joint factorizes into one such
prediction per token, with each side scored by its own model and its own
context. Two toy implementations are provided: a first-order tabular model and
an additively smoothed n-gram model fitted from a corpus.
"""

from __future__ import annotations

import abc
import math
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, IngestionError
from .types import Context, Conversation, SpeakerRole, Token, Utterance, Vocabulary

START_KEY = "START"

# Sentinel padding the left edge of n-gram windows; never a valid token id.
START_TOKEN = -1

_ROW_SUM_TOL = 1e-9


class SpeakerModel(abc.ABC):
    """Next-token distribution interface.

    Implementations are deterministic and immutable after construction, so a
    single instance can serve concurrent sessions. ``exp`` of the returned
    vector sums to one; entries may be ``-inf`` for impossible tokens.
    """

    vocab: Vocabulary

    @abc.abstractmethod
    def next_token_logprobs(
        self,
        history: Sequence[Utterance],
        context: Context,
        partial: Sequence[Token],
    ) -> np.ndarray:
        """Log-probabilities over the next token of the ongoing utterance.

        ``history`` is the full alternating utterance sequence so far (both
        speakers); ``context`` is whatever conditioning information this call
        grants the model; ``partial`` holds the tokens already emitted in the
        utterance being generated.
        """


class CallCountingModel(SpeakerModel):
    """Delegating wrapper that counts distribution queries.

    Used to instrument search complexity; shares the wrapped model's
    vocabulary and is otherwise transparent.
    """

    def __init__(self, inner: SpeakerModel):
        self.inner = inner
        self.vocab = inner.vocab
        self.calls = 0

    def next_token_logprobs(self, history, context, partial) -> np.ndarray:
        self.calls += 1
        return self.inner.next_token_logprobs(history, context, partial)


def _validate_row(probs: np.ndarray, size: int, where: str) -> None:
    if probs.shape != (size,):
        raise ValueError(f"{where}: row has length {probs.shape[0]}, expected {size}")
    if np.any(probs < 0):
        raise ValueError(f"{where}: negative probability")
    total = float(probs.sum())
    if abs(total - 1.0) > _ROW_SUM_TOL:
        raise ValueError(f"{where}: row sums to {total!r}, expected 1 within {_ROW_SUM_TOL}")


class TabularModel(SpeakerModel):
    """First-order transition table keyed on (context key, most recent token).

    The most recent token is read off the flattened history-plus-partial token
    stream. The end-of-utterance token resets the chain: a finished utterance
    makes the next one condition on START, while a truncated utterance exposes
    its final token across the turn boundary. Context enters as a discrete
    key, the flat rendering of the context lines (empty context -> "").
    """

    def __init__(self, vocab: Vocabulary, tables: Mapping[str, Mapping[str, Sequence[float]]]):
        self.vocab = vocab
        self._logs: dict[str, dict[str, np.ndarray]] = {}
        self._probs: dict[str, dict[str, np.ndarray]] = {}
        for ckey, rows in tables.items():
            self._probs[ckey] = {}
            self._logs[ckey] = {}
            for rkey, row in rows.items():
                probs = np.asarray(row, dtype=np.float64)
                _validate_row(probs, len(vocab), f"context {ckey!r}, row {rkey!r}")
                with np.errstate(divide="ignore"):
                    logs = np.log(probs)
                self._probs[ckey][rkey] = probs
                self._logs[ckey][rkey] = logs

    @property
    def context_keys(self) -> tuple[str, ...]:
        return tuple(self._logs)

    def probabilities(self, context_key: str, row_key: str) -> np.ndarray:
        return self._probs[context_key][row_key].copy()

    def _row_key(self, history: Sequence[Utterance], partial: Sequence[Token]) -> str:
        if partial:
            last = partial[-1]
        elif history:
            last = history[-1].tokens[-1]
        else:
            return START_KEY
        if last == self.vocab.eos_id:
            return START_KEY
        return self.vocab.surface(last)

    def next_token_logprobs(self, history, context, partial) -> np.ndarray:
        ckey = context.render(self.vocab)
        try:
            rows = self._logs[ckey]
        except KeyError:
            raise ConfigurationError(
                f"tabular model has no context key {ckey!r} (known: {sorted(self._logs)})"
            ) from None
        rkey = self._row_key(history, partial)
        try:
            return rows[rkey]
        except KeyError:
            raise ConfigurationError(
                f"tabular model context {ckey!r} has no row for {rkey!r}"
            ) from None


class NGramModel(SpeakerModel):
    """Additively smoothed model conditioning on the previous ``order`` tokens.

    The conditioning window slides over one flat stream: context tokens (when
    the model uses context), then every history token in order, then the
    partial utterance. The stream's left edge is padded with a START sentinel.
    With smoothing alpha > 0 every conditional probability is at least
    alpha / (total + alpha * |V|), so no prediction is ever impossible.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        order: int,
        alpha: float,
        counts: Mapping[tuple[int, ...], np.ndarray] | None = None,
        role: SpeakerRole = SpeakerRole.SELF,
        use_context: bool = True,
    ):
        if order < 1:
            raise ValueError("order must be >= 1")
        if alpha <= 0:
            raise ValueError("smoothing alpha must be > 0")
        self.vocab = vocab
        self.order = order
        self.alpha = alpha
        self.role = role
        self.use_context = use_context
        self.counts: dict[tuple[int, ...], np.ndarray] = {
            tuple(w): np.asarray(c, dtype=np.float64) for w, c in (counts or {}).items()
        }

    def _window(self, stream: Sequence[int]) -> tuple[int, ...]:
        padded = [START_TOKEN] * self.order + list(stream)
        return tuple(padded[-self.order:])

    def _stream(self, history: Sequence[Utterance], context: Context, partial: Sequence[Token]) -> list[int]:
        stream: list[int] = []
        if self.use_context:
            stream.extend(context.token_stream())
        for utt in history:
            stream.extend(utt.tokens)
        stream.extend(partial)
        return stream

    def next_token_logprobs(self, history, context, partial) -> np.ndarray:
        window = self._window(self._stream(history, context, partial))
        counts = self.counts.get(window)
        size = len(self.vocab)
        if counts is None:
            counts = np.zeros(size)
        total = float(counts.sum())
        return np.log((counts + self.alpha) / (total + self.alpha * size))


def fit_ngram(
    corpus: Sequence[Conversation],
    order: int,
    alpha: float,
    vocab: Vocabulary,
    role: SpeakerRole = SpeakerRole.SELF,
    use_context: bool = True,
) -> NGramModel:
    """Accumulate n-gram counts for one speaker role over a corpus.

    Only utterances spoken by ``role`` contribute counts; the conditioning
    stream still spans both speakers' preceding tokens, mirroring how the
    model is queried at decode time. ``use_context=False`` trains a
    context-free model whose predictions are invariant to any context that is
    later supplied.
    """
    if not corpus:
        raise IngestionError("cannot fit an n-gram model on an empty corpus")
    model = NGramModel(vocab, order, alpha, role=role, use_context=use_context)
    size = len(vocab)
    for conv in corpus:
        context = conv.context_for(role)
        for idx, utt in enumerate(conv.utterances):
            if utt.speaker is not role:
                continue
            history = conv.utterances[:idx]
            for t, token in enumerate(utt.tokens):
                if not 0 <= token < size:
                    raise IngestionError(f"token id {token} outside vocabulary of size {size}")
                window = model._window(model._stream(history, context, utt.tokens[:t]))
                row = model.counts.get(window)
                if row is None:
                    row = np.zeros(size)
                    model.counts[window] = row
                row[token] += 1
    return model


def utterance_logprob(
    model: SpeakerModel,
    history: Sequence[Utterance],
    context: Context,
    tokens: Sequence[Token],
) -> float:
    """Sum of per-token log-probabilities for one utterance, no normalization.

    Short-circuits at ``-inf``: once an impossible token is hit the utterance
    probability is zero regardless of what follows.
    """
    total = 0.0
    for t, token in enumerate(tokens):
        lp = float(model.next_token_logprobs(history, context, tokens[:t])[token])
        if lp == -math.inf:
            return -math.inf
        total += lp
    return total


def conversation_logprob(
    conv: Conversation,
    self_model: SpeakerModel,
    partner_model: SpeakerModel,
) -> float:
    """Joint log-probability of a conversation under the two speaker models.

    Each utterance is scored by its speaker's model conditioned on that
    speaker's own context and the full preceding utterance history; the empty
    conversation scores zero.
    """
    if self_model.vocab != partner_model.vocab:
        raise ConfigurationError("self and partner models must share one vocabulary")
    vocab = self_model.vocab
    total = 0.0
    for idx, utt in enumerate(conv.utterances):
        utt.validate(vocab)
        model = self_model if utt.speaker is SpeakerRole.SELF else partner_model
        context = conv.context_for(utt.speaker)
        lp = utterance_logprob(model, conv.utterances[:idx], context, utt.tokens)
        if lp == -math.inf:
            return -math.inf
        total += lp
    return total
