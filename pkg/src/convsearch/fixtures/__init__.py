"""Built-in toy models shipped with the package.

``f1`` is a single-context first-order model whose probabilities are easy to
multiply by hand. ``f2`` is a two-context model built so that utterance-level
inference and one-step lookahead disagree: under the self context ``c1`` the
most likely utterance is the truncated "a a", whose trailing token leads the
partner context ``c2`` into a deliberately flat row (best reply probability
0.05), while the runner-up "b </s>" resets the partner to a sharp row whose
best reply has probability 0.855. The construction is validated against the
enumeration oracles in the test suite before anything else relies on it.
"""

from __future__ import annotations

import json
from importlib import resources

from ..models import TabularModel
from ..types import Context, SpeakerRole


def _load(name: str) -> dict:
    return json.loads(resources.files(__package__).joinpath(name).read_text(encoding="utf-8"))


def fixture_f1() -> TabularModel:
    from ..registry import tabular_from_doc

    return tabular_from_doc(_load("f1.json"), "fixture f1")


def fixture_f2() -> TabularModel:
    from ..registry import tabular_from_doc

    return tabular_from_doc(_load("f2.json"), "fixture f2")


def builtin_models() -> dict[str, TabularModel]:
    return {"f1": fixture_f1(), "f2": fixture_f2()}


def f1_context() -> Context:
    model = fixture_f1()
    return Context.from_lines(["c1"], model.vocab, SpeakerRole.SELF)


def f2_self_context() -> Context:
    model = fixture_f2()
    return Context.from_lines(["c1"], model.vocab, SpeakerRole.SELF)


def f2_partner_context() -> Context:
    model = fixture_f2()
    return Context.from_lines(["c2"], model.vocab, SpeakerRole.PARTNER)
