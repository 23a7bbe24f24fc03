"""Domain types for two-speaker conversations over a closed vocabulary.

A conversation is a strictly alternating sequence of utterances between the
engine side ("self", which always opens) and its interlocutor ("partner"),
plus one private context per side that stays fixed for the whole
conversation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import IngestionError

Token = int  # index into a Vocabulary

DEFAULT_EOS = "</s>"


class SpeakerRole(enum.Enum):
    SELF = "self"
    PARTNER = "partner"

    @property
    def complement(self) -> "SpeakerRole":
        return SpeakerRole.PARTNER if self is SpeakerRole.SELF else SpeakerRole.SELF


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token inventory with a single end-of-utterance marker."""

    tokens: tuple[str, ...]
    eos_id: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError("vocabulary must not be empty")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary surface strings must be unique")
        if not 0 <= self.eos_id < len(self.tokens):
            raise ValueError(f"eos_id {self.eos_id} out of range for size {len(self.tokens)}")

    @classmethod
    def from_tokens(cls, tokens: Iterable[str], eos: str = DEFAULT_EOS) -> "Vocabulary":
        """Build a vocabulary, appending the eos surface if not present."""
        toks = list(tokens)
        if eos not in toks:
            toks.append(eos)
        return cls(tuple(toks), toks.index(eos))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def eos_surface(self) -> str:
        return self.tokens[self.eos_id]

    def surface(self, token: Token) -> str:
        if not 0 <= token < len(self.tokens):
            raise IngestionError(f"token id {token} out of range for vocabulary of size {len(self.tokens)}")
        return self.tokens[token]

    def id_of(self, surface: str) -> Token:
        try:
            return self.tokens.index(surface)
        except ValueError:
            raise IngestionError(f"token {surface!r} not in vocabulary") from None

    def encode(self, text: str) -> tuple[Token, ...]:
        """Whitespace-tokenize ``text`` and map each token to its id."""
        return tuple(self.id_of(t) for t in text.split())

    def decode(self, tokens: Sequence[Token]) -> str:
        return " ".join(self.surface(t) for t in tokens)


@dataclass(frozen=True)
class Utterance:
    """One turn's token sequence.

    ``truncated`` is true exactly when the sequence was cut at the length
    limit before emitting eos; eos may only appear in final position.
    """

    speaker: SpeakerRole
    tokens: tuple[Token, ...]
    truncated: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError("utterance must contain at least one token")

    @classmethod
    def from_tokens(cls, speaker: SpeakerRole, tokens: Sequence[Token], vocab: Vocabulary) -> "Utterance":
        """Build an utterance, deriving ``truncated`` from the eos position."""
        toks = tuple(tokens)
        utt = cls(speaker, toks, truncated=toks[-1] != vocab.eos_id)
        utt.validate(vocab)
        return utt

    def validate(self, vocab: Vocabulary) -> None:
        for t in self.tokens:
            if not 0 <= t < len(vocab):
                raise IngestionError(f"token id {t} out of range for vocabulary of size {len(vocab)}")
        if vocab.eos_id in self.tokens[:-1]:
            raise ValueError("eos may only appear at the last position of an utterance")
        has_eos = self.tokens[-1] == vocab.eos_id
        if has_eos == self.truncated:
            raise ValueError("truncated must be true exactly when eos is absent")

    def text(self, vocab: Vocabulary) -> str:
        return vocab.decode(self.tokens)


@dataclass(frozen=True)
class Context:
    """Static private description lines conditioning one speaker.

    May be empty: a context-free model sees exactly this.
    """

    lines: tuple[tuple[Token, ...], ...]
    owner: SpeakerRole

    def __post_init__(self) -> None:
        object.__setattr__(self, "lines", tuple(tuple(line) for line in self.lines))

    @classmethod
    def empty(cls, owner: SpeakerRole) -> "Context":
        return cls((), owner)

    @classmethod
    def from_lines(cls, lines: Sequence[str], vocab: Vocabulary, owner: SpeakerRole) -> "Context":
        return cls(tuple(vocab.encode(line) for line in lines), owner)

    @property
    def is_empty(self) -> bool:
        return not self.lines

    def token_stream(self) -> tuple[Token, ...]:
        return tuple(t for line in self.lines for t in line)

    def render(self, vocab: Vocabulary) -> str:
        """Flat surface rendering; doubles as the discrete context key."""
        return " ".join(vocab.surface(t) for t in self.token_stream())


@dataclass(frozen=True)
class Conversation:
    """Chronological utterances plus both private contexts.

    Speakers strictly alternate and self always initiates.
    """

    utterances: tuple[Utterance, ...]
    self_context: Context
    partner_context: Context

    def __post_init__(self) -> None:
        object.__setattr__(self, "utterances", tuple(self.utterances))
        expected = SpeakerRole.SELF
        for i, utt in enumerate(self.utterances):
            if utt.speaker is not expected:
                raise ValueError(f"utterance {i} spoken by {utt.speaker.value}, expected {expected.value}")
            expected = expected.complement

    @classmethod
    def empty(cls, self_context: Context | None = None, partner_context: Context | None = None) -> "Conversation":
        return cls(
            (),
            self_context if self_context is not None else Context.empty(SpeakerRole.SELF),
            partner_context if partner_context is not None else Context.empty(SpeakerRole.PARTNER),
        )

    def __len__(self) -> int:
        return len(self.utterances)

    @property
    def next_speaker(self) -> SpeakerRole:
        return SpeakerRole.SELF if len(self.utterances) % 2 == 0 else SpeakerRole.PARTNER

    def context_for(self, role: SpeakerRole) -> Context:
        return self.self_context if role is SpeakerRole.SELF else self.partner_context

    def with_utterance(self, utterance: Utterance) -> "Conversation":
        if utterance.speaker is not self.next_speaker:
            raise ValueError(f"expected {self.next_speaker.value} to speak next, got {utterance.speaker.value}")
        return Conversation(self.utterances + (utterance,), self.self_context, self.partner_context)

    def with_utterances(self, utterances: Sequence[Utterance]) -> "Conversation":
        conv = self
        for utt in utterances:
            conv = conv.with_utterance(utt)
        return conv
