import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convsearch import (
    CallCountingModel,
    ConfigurationError,
    Context,
    Conversation,
    IngestionError,
    NGramModel,
    SpeakerRole,
    TabularModel,
    Utterance,
    Vocabulary,
    conversation_logprob,
    fit_ngram,
    utterance_logprob,
)
from conftest import empty_conv, generic_vocab, no_context, random_tabular

SELF = SpeakerRole.SELF
PARTNER = SpeakerRole.PARTNER


def chain_model():
    """Deterministic model: START -> a -> b -> eos, probability 1 throughout."""
    vocab = generic_vocab(3)
    rows = {"START": [1.0, 0.0, 0.0], "a": [0.0, 1.0, 0.0], "b": [0.0, 0.0, 1.0]}
    return TabularModel(vocab, {"": rows})


class TestTabularModel:
    def test_rows_must_sum_to_one(self):
        vocab = generic_vocab(3)
        with pytest.raises(ValueError, match="sums to"):
            TabularModel(vocab, {"": {"START": [0.5, 0.4, 0.2]}})

    def test_negative_probability_rejected(self):
        vocab = generic_vocab(3)
        with pytest.raises(ValueError, match="negative"):
            TabularModel(vocab, {"": {"START": [1.1, -0.1, 0.0]}})

    def test_f1_start_row(self, f1, f1_ctx):
        lps = f1.next_token_logprobs((), f1_ctx, ())
        assert np.allclose(np.exp(lps), [0.6, 0.3, 0.1, 0.0])

    def test_conditioning_follows_last_partial_token(self, f1, f1_ctx):
        lps = f1.next_token_logprobs((), f1_ctx, (0,))
        assert np.allclose(np.exp(lps), [0.1, 0.6, 0.3, 0.0])

    def test_finished_history_utterance_resets_to_start(self, f1, f1_ctx):
        history = (Utterance(SELF, (0, 2)),)  # "a </s>"
        lps = f1.next_token_logprobs(history, f1_ctx, ())
        assert np.allclose(np.exp(lps), [0.6, 0.3, 0.1, 0.0])

    def test_truncated_history_utterance_exposes_last_token(self, f1, f1_ctx):
        history = (Utterance(SELF, (1, 0), truncated=True),)  # "b a"
        lps = f1.next_token_logprobs(history, f1_ctx, ())
        assert np.allclose(np.exp(lps), [0.1, 0.6, 0.3, 0.0])

    def test_only_last_token_matters(self):
        # First-order property: histories agreeing on the final token agree everywhere.
        rng = np.random.default_rng(7)
        model = random_tabular(rng)
        ctx = no_context()
        h1 = (Utterance(SELF, (0, 1), truncated=True),)
        h2 = (
            Utterance(SELF, (1, 1), truncated=True),
            Utterance(PARTNER, (0, 0, 1), truncated=True),
        )
        np.testing.assert_array_equal(
            model.next_token_logprobs(h1, ctx, ()), model.next_token_logprobs(h2, ctx, ())
        )

    def test_unknown_context_key_raises(self, f1):
        bad = Context.from_lines(["a"], f1.vocab, PARTNER)
        with pytest.raises(ConfigurationError, match="context key 'a'"):
            f1.next_token_logprobs((), bad, ())


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), size=st.integers(2, 5))
def test_distributions_normalize(seed, size):
    rng = np.random.default_rng(seed)
    model = random_tabular(rng, size=size)
    ctx = no_context()
    for partial in [(), (0,)]:
        lps = model.next_token_logprobs((), ctx, partial)
        assert len(lps) == size
        assert math.isclose(float(np.exp(lps).sum()), 1.0, abs_tol=1e-9)


class TestConversationLogprob:
    def test_empty_conversation_is_zero(self, f1):
        assert conversation_logprob(empty_conv(), f1, f1) == 0.0

    def test_deterministic_model_scores_zero(self):
        model = chain_model()
        utt = Utterance(SELF, (0, 1, 2))
        conv = Conversation.empty().with_utterance(utt)
        assert conversation_logprob(conv, model, model) == 0.0

    def test_f1_hand_multiplied(self, f1, f1_ctx):
        conv = Conversation((Utterance(SELF, (0, 1, 2)),), f1_ctx, Context.empty(PARTNER))
        expected = 3 * math.log(0.6)
        assert conversation_logprob(conv, f1, f1) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(-1.5325, abs=5e-5)

    def test_vocabulary_mismatch_rejected(self, f1, f2):
        with pytest.raises(ConfigurationError, match="vocabulary"):
            conversation_logprob(empty_conv(), f1, f2)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1))
    def test_additive_over_continuations(self, seed):
        rng = np.random.default_rng(seed)
        model = random_tabular(rng)
        vocab = model.vocab
        u1 = Utterance(SELF, (0, vocab.eos_id))
        u2 = Utterance(PARTNER, (1, vocab.eos_id))
        prefix = Conversation.empty().with_utterance(u1)
        full = prefix.with_utterance(u2)
        incremental = utterance_logprob(model, prefix.utterances, full.partner_context, u2.tokens)
        total = conversation_logprob(full, model, model)
        assert total == pytest.approx(conversation_logprob(prefix, model, model) + incremental, abs=1e-12)


def _single_speaker_corpus(vocab, texts, role=SELF):
    conversations = []
    for text in texts:
        tokens = vocab.encode(text)
        utts = []
        if role is PARTNER:
            utts.append(Utterance(SELF, (0,), truncated=True))
        utts.append(Utterance(role, tokens, truncated=tokens[-1] != vocab.eos_id))
        conversations.append(Conversation(tuple(utts), Context.empty(SELF), Context.empty(PARTNER)))
    return conversations


class TestFitNgram:
    def test_single_observed_event_dominates_as_alpha_vanishes(self):
        vocab = generic_vocab(3)
        corpus = _single_speaker_corpus(vocab, ["a </s>"] * 5)
        model = fit_ngram(corpus, order=1, alpha=1e-9, vocab=vocab)
        p_a = math.exp(model.next_token_logprobs((), no_context(), ())[0])
        assert p_a == pytest.approx(1.0, abs=1e-6)

    def test_additive_smoothing_formula(self):
        # Nine observations after 'a', none of them 'b': p(b|a) = (0+1)/(9+3).
        vocab = generic_vocab(3)
        corpus = _single_speaker_corpus(vocab, ["a a a a a a a a a </s>"])
        model = fit_ngram(corpus, order=1, alpha=1.0, vocab=vocab)
        lps = model.next_token_logprobs((), no_context(), (0,))
        assert math.exp(lps[1]) == pytest.approx(1 / 12, abs=1e-12)

    def test_roles_fit_separately(self):
        vocab = generic_vocab(3)
        u_self = Utterance(SELF, (0, 2))      # self says "a </s>"
        u_partner = Utterance(PARTNER, (1, 2))  # partner says "b </s>"
        conv = Conversation((u_self, u_partner), Context.empty(SELF), Context.empty(PARTNER))
        self_model = fit_ngram([conv, conv], order=1, alpha=0.1, vocab=vocab, role=SELF)
        partner_model = fit_ngram([conv, conv], order=1, alpha=0.1, vocab=vocab, role=PARTNER)
        lp_self = self_model.next_token_logprobs((), no_context(), ())
        lp_partner = partner_model.next_token_logprobs((u_self,), no_context(), ())
        assert lp_self[0] > lp_self[1]
        assert lp_partner[1] > lp_partner[0]

    def test_context_free_fit_ignores_context(self):
        vocab = generic_vocab(3)
        corpus = _single_speaker_corpus(vocab, ["a b </s>"])
        model = fit_ngram(corpus, order=2, alpha=0.5, vocab=vocab, use_context=False)
        ctx = Context.from_lines(["b b b"], vocab, PARTNER)
        np.testing.assert_array_equal(
            model.next_token_logprobs((), ctx, ()),
            model.next_token_logprobs((), no_context(), ()),
        )

    def test_empty_corpus_rejected(self):
        with pytest.raises(IngestionError, match="empty corpus"):
            fit_ngram([], order=1, alpha=1.0, vocab=generic_vocab(3))

    def test_smoothing_never_yields_minus_inf(self):
        vocab = generic_vocab(4)
        corpus = _single_speaker_corpus(vocab, ["t0 t1 </s>"])
        model = fit_ngram(corpus, order=2, alpha=0.25, vocab=vocab)
        for partial in [(), (0,), (1, 2)]:
            lps = model.next_token_logprobs((), no_context(), partial)
            assert np.all(np.isfinite(lps))
            # additive smoothing lower bound
            floor = math.log(0.25) - math.log(max(c.sum() for c in model.counts.values()) + 0.25 * 4)
            assert np.all(lps >= floor - 1e-12)

    def test_invalid_order_and_alpha(self):
        vocab = generic_vocab(3)
        with pytest.raises(ValueError, match="order"):
            NGramModel(vocab, order=0, alpha=1.0)
        with pytest.raises(ValueError, match="alpha"):
            NGramModel(vocab, order=1, alpha=0.0)


def test_call_counting_wrapper(f1, f1_ctx):
    counted = CallCountingModel(f1)
    assert counted.calls == 0
    counted.next_token_logprobs((), f1_ctx, ())
    counted.next_token_logprobs((), f1_ctx, (0,))
    assert counted.calls == 2
    assert counted.vocab == f1.vocab
