import numpy as np
import pytest

from convsearch import (
    Context,
    Conversation,
    HypothesisSet,
    MultiTurnParams,
    ScoredSequence,
    SearchTrace,
    SpeakerRole,
    TabularModel,
    Utterance,
    Vocabulary,
)
from convsearch.fixtures import (
    f1_context,
    f2_partner_context,
    f2_self_context,
    fixture_f1,
    fixture_f2,
)


@pytest.fixture(scope="session")
def f1():
    return fixture_f1()


@pytest.fixture(scope="session")
def f1_ctx():
    return f1_context()


@pytest.fixture(scope="session")
def f2():
    return fixture_f2()


@pytest.fixture(scope="session")
def f2_ctx_self():
    return f2_self_context()


@pytest.fixture(scope="session")
def f2_ctx_partner():
    return f2_partner_context()


def generic_vocab(size: int) -> Vocabulary:
    if size == 3:
        return Vocabulary(("a", "b", "</s>"), 2)
    surfaces = tuple(f"t{i}" for i in range(size - 1)) + ("</s>",)
    return Vocabulary(surfaces, size - 1)


def random_tabular(rng: np.random.Generator, size: int = 3, concentration: float = 1.0) -> TabularModel:
    """Context-free random first-order model; rows over START and every non-eos token."""
    vocab = generic_vocab(size)
    rows = {"START": rng.dirichlet(np.ones(size) * concentration).tolist()}
    for token in range(size):
        if token == vocab.eos_id:
            continue
        rows[vocab.surface(token)] = rng.dirichlet(np.ones(size) * concentration).tolist()
    return TabularModel(vocab, {"": rows})


def empty_conv() -> Conversation:
    return Conversation.empty()


def no_context() -> Context:
    return Context.empty(SpeakerRole.SELF)


def make_trace(h0_scores, selected_rank, steps=1, width=None) -> SearchTrace:
    """Hand-build a minimal trace for metrics tests."""
    vocab = generic_vocab(3)
    entries = tuple(
        ScoredSequence(i, (Utterance(SpeakerRole.SELF, (0, vocab.eos_id)),), score)
        for i, score in enumerate(h0_scores)
    )
    width = width if width is not None else len(entries)
    return SearchTrace(
        params=MultiTurnParams(width=width, steps=steps, max_tokens=2),
        algorithm="beam",
        partner_kind="egocentric",
        h0=HypothesisSet(0, entries),
        expansions=(),
        hypothesis_sets=(),
        selected_root_index=selected_rank,
        selected_rank_in_h0=selected_rank,
        model_call_count=0,
        lookahead_call_count=0,
    )
