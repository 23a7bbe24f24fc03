"""Conversation corpus ingestion: JSONL, one conversation per line.

Line schema::

    {"self_persona": ["..."], "partner_persona": ["..."],
     "turns": [{"speaker": "self"|"partner", "text": "..."}]}

Text is whitespace-tokenized. Persona-style exports convert to this schema;
turn order must strictly alternate starting with "self".
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from .errors import IngestionError
from .types import Context, Conversation, SpeakerRole, Utterance, Vocabulary


def iter_corpus_lines(path: str | Path) -> Iterable[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestionError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None


def build_vocab(path: str | Path, eos: str = "</s>") -> Vocabulary:
    """Collect every token appearing in personas or turns, in first-seen order."""
    tokens: dict[str, None] = {}
    for _, doc in iter_corpus_lines(path):
        for key in ("self_persona", "partner_persona"):
            for persona_line in doc.get(key, []):
                for tok in persona_line.split():
                    tokens.setdefault(tok, None)
        for turn in doc.get("turns", []):
            for tok in turn.get("text", "").split():
                tokens.setdefault(tok, None)
    tokens.pop(eos, None)
    return Vocabulary.from_tokens(tokens, eos=eos)


def _conversation_from_doc(doc: dict, vocab: Vocabulary, where: str) -> Conversation:
    try:
        self_ctx = Context.from_lines(doc.get("self_persona", []), vocab, SpeakerRole.SELF)
        partner_ctx = Context.from_lines(doc.get("partner_persona", []), vocab, SpeakerRole.PARTNER)
    except IngestionError as exc:
        raise IngestionError(f"{where}: {exc}") from None
    utterances = []
    for i, turn in enumerate(doc.get("turns", [])):
        try:
            speaker = SpeakerRole(turn["speaker"])
        except (KeyError, ValueError):
            raise IngestionError(f"{where}: turn {i} has no valid speaker") from None
        text = turn.get("text", "")
        try:
            tokens = list(vocab.encode(text))
        except IngestionError as exc:
            raise IngestionError(f"{where}: turn {i}: {exc}") from None
        if not tokens:
            raise IngestionError(f"{where}: turn {i} is empty")
        if vocab.eos_id in tokens[:-1]:
            raise IngestionError(f"{where}: turn {i} contains a non-final end-of-utterance token")
        if tokens[-1] != vocab.eos_id:
            tokens.append(vocab.eos_id)
        utterances.append(Utterance(speaker, tuple(tokens), truncated=False))
    try:
        return Conversation(tuple(utterances), self_ctx, partner_ctx)
    except ValueError as exc:
        raise IngestionError(f"{where}: {exc}") from None


def load_corpus(path: str | Path, vocab: Vocabulary) -> list[Conversation]:
    """Parse and validate every conversation in a JSONL corpus file."""
    return [
        _conversation_from_doc(doc, vocab, f"{path}:{lineno}")
        for lineno, doc in iter_corpus_lines(path)
    ]


def save_corpus(conversations: Sequence[Conversation], vocab: Vocabulary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for conv in conversations:
            doc = {
                "self_persona": [vocab.decode(line) for line in conv.self_context.lines],
                "partner_persona": [vocab.decode(line) for line in conv.partner_context.lines],
                "turns": [
                    {"speaker": u.speaker.value, "text": u.text(vocab)} for u in conv.utterances
                ],
            }
            fh.write(json.dumps(doc) + "\n")
