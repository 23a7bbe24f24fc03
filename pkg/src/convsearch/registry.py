"""Model file formats and the directory-backed model registry.

Tabular model files are JSON documents::

    {"vocab": ["a", "b", "</s>"], "eos": "</s>",
     "contexts": {"c1": {"START": [0.6, 0.3, 0.1], "a": [...], ...}}}

Row keys are "START" or a token surface string; each row must sum to 1
within 1e-9. Fitted n-gram models are stored as::

    {"kind": "ngram", "vocab": [...], "eos": "</s>", "order": 1,
     "alpha": 1.0, "role": "self", "use_context": true,
     "counts": [{"window": [-1], "counts": [3, 0, 1]}, ...]}

The registry loads every ``*.json`` under a directory (id = file stem) on
top of the built-in fixture models; models are immutable and shared across
sessions.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import IngestionError
from .models import NGramModel, SpeakerModel, TabularModel
from .types import SpeakerRole, Vocabulary


def _vocab_from_doc(doc: dict[str, Any], where: str) -> Vocabulary:
    try:
        tokens = list(doc["vocab"])
        eos = doc["eos"]
    except KeyError as exc:
        raise IngestionError(f"{where}: missing field {exc}") from None
    if eos not in tokens:
        raise IngestionError(f"{where}: eos token {eos!r} not present in vocab")
    return Vocabulary(tuple(tokens), tokens.index(eos))


def tabular_from_doc(doc: dict[str, Any], where: str = "<tabular>") -> TabularModel:
    vocab = _vocab_from_doc(doc, where)
    try:
        return TabularModel(vocab, doc["contexts"])
    except KeyError:
        raise IngestionError(f"{where}: missing field 'contexts'") from None
    except ValueError as exc:
        raise IngestionError(f"{where}: {exc}") from None


def tabular_to_doc(model: TabularModel) -> dict[str, Any]:
    return {
        "vocab": list(model.vocab.tokens),
        "eos": model.vocab.eos_surface,
        "contexts": {
            ckey: {rkey: list(model.probabilities(ckey, rkey)) for rkey in model._probs[ckey]}
            for ckey in model.context_keys
        },
    }


def ngram_from_doc(doc: dict[str, Any], where: str = "<ngram>") -> NGramModel:
    vocab = _vocab_from_doc(doc, where)
    try:
        counts = {
            tuple(entry["window"]): np.asarray(entry["counts"], dtype=np.float64)
            for entry in doc["counts"]
        }
        return NGramModel(
            vocab,
            order=int(doc["order"]),
            alpha=float(doc["alpha"]),
            counts=counts,
            role=SpeakerRole(doc.get("role", "self")),
            use_context=bool(doc.get("use_context", True)),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise IngestionError(f"{where}: malformed n-gram model ({exc})") from None


def ngram_to_doc(model: NGramModel) -> dict[str, Any]:
    return {
        "kind": "ngram",
        "vocab": list(model.vocab.tokens),
        "eos": model.vocab.eos_surface,
        "order": model.order,
        "alpha": model.alpha,
        "role": model.role.value,
        "use_context": model.use_context,
        "counts": [
            {"window": list(window), "counts": [float(c) for c in counts]}
            for window, counts in sorted(model.counts.items())
        ],
    }


def model_from_doc(doc: dict[str, Any], where: str = "<model>") -> SpeakerModel:
    if doc.get("kind") == "ngram" or "counts" in doc:
        return ngram_from_doc(doc, where)
    if "contexts" in doc:
        return tabular_from_doc(doc, where)
    raise IngestionError(f"{where}: unrecognized model document (no 'contexts' or 'counts')")


def load_model_file(path: str | Path) -> SpeakerModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IngestionError(f"{path}: invalid JSON ({exc.msg})") from None
    return model_from_doc(doc, str(path))


def save_model_file(model: SpeakerModel, path: str | Path) -> None:
    if isinstance(model, TabularModel):
        doc = tabular_to_doc(model)
    elif isinstance(model, NGramModel):
        doc = ngram_to_doc(model)
    else:
        raise TypeError(f"cannot serialize model of type {type(model).__name__}")
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


class ModelRegistry:
    """Read-only collection of named speaker models."""

    def __init__(self, models: dict[str, SpeakerModel]):
        self._models = dict(models)

    @classmethod
    def load(cls, models_dir: str | Path | None = None, include_fixtures: bool = True) -> "ModelRegistry":
        """Built-in fixtures plus every JSON model under ``models_dir``.

        A file whose stem collides with a fixture id overrides the fixture.
        """
        models: dict[str, SpeakerModel] = {}
        if include_fixtures:
            from . import fixtures

            models.update(fixtures.builtin_models())
        if models_dir is not None:
            for path in sorted(Path(models_dir).glob("*.json")):
                models[path.stem] = load_model_file(path)
        return cls(models)

    def __contains__(self, model_id: str) -> bool:
        return model_id in self._models

    def register(self, model_id: str, model: SpeakerModel) -> None:
        self._models[model_id] = model

    def ids(self) -> list[str]:
        return sorted(self._models)

    def get(self, model_id: str) -> SpeakerModel:
        try:
            return self._models[model_id]
        except KeyError:
            raise KeyError(f"unknown model id {model_id!r} (known: {self.ids()})") from None

    def describe(self) -> list[dict[str, Any]]:
        out = []
        for model_id in self.ids():
            model = self._models[model_id]
            info: dict[str, Any] = {
                "id": model_id,
                "kind": "tabular" if isinstance(model, TabularModel) else "ngram",
                "vocab": list(model.vocab.tokens),
                "eos": model.vocab.eos_surface,
            }
            if isinstance(model, TabularModel):
                info["context_keys"] = sorted(model.context_keys)
            out.append(info)
        return out
