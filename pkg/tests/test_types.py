import pytest

from convsearch import (
    Context,
    Conversation,
    IngestionError,
    SpeakerRole,
    Utterance,
    Vocabulary,
)


class TestVocabulary:
    def test_encode_decode_round_trip(self):
        vocab = Vocabulary(("a", "b", "</s>"), 2)
        assert vocab.encode("a b </s>") == (0, 1, 2)
        assert vocab.decode((0, 1, 2)) == "a b </s>"

    def test_duplicate_surfaces_rejected(self):
        with pytest.raises(ValueError, match="unique"):
            Vocabulary(("a", "a", "</s>"), 2)

    def test_eos_id_must_be_in_range(self):
        with pytest.raises(ValueError, match="eos_id"):
            Vocabulary(("a", "b"), 2)

    def test_from_tokens_appends_missing_eos(self):
        vocab = Vocabulary.from_tokens(["x", "y"])
        assert vocab.eos_surface == "</s>"
        assert vocab.eos_id == 2

    def test_unknown_token_error_names_it(self):
        vocab = Vocabulary(("a", "</s>"), 1)
        with pytest.raises(IngestionError, match="'zzz'"):
            vocab.encode("a zzz")


class TestUtterance:
    def test_from_tokens_derives_truncated(self):
        vocab = Vocabulary(("a", "b", "</s>"), 2)
        assert not Utterance.from_tokens(SpeakerRole.SELF, (0, 2), vocab).truncated
        assert Utterance.from_tokens(SpeakerRole.SELF, (0, 1), vocab).truncated

    def test_empty_tokens_rejected(self):
        with pytest.raises(ValueError, match="at least one token"):
            Utterance(SpeakerRole.SELF, ())

    def test_mid_utterance_eos_rejected(self):
        vocab = Vocabulary(("a", "b", "</s>"), 2)
        with pytest.raises(ValueError, match="last position"):
            Utterance(SpeakerRole.SELF, (0, 2, 1), truncated=True).validate(vocab)

    def test_inconsistent_truncated_flag_rejected(self):
        vocab = Vocabulary(("a", "b", "</s>"), 2)
        with pytest.raises(ValueError, match="truncated"):
            Utterance(SpeakerRole.SELF, (0, 2), truncated=True).validate(vocab)


def test_role_complement_is_an_involution():
    assert SpeakerRole.SELF.complement is SpeakerRole.PARTNER
    assert SpeakerRole.PARTNER.complement is SpeakerRole.SELF
    for role in SpeakerRole:
        assert role.complement.complement is role


class TestConversation:
    def test_speakers_must_alternate_starting_with_self(self):
        u_self = Utterance(SpeakerRole.SELF, (0,), truncated=True)
        u_partner = Utterance(SpeakerRole.PARTNER, (0,), truncated=True)
        Conversation.empty().with_utterance(u_self).with_utterance(u_partner)
        with pytest.raises(ValueError, match="expected self"):
            Conversation.empty().with_utterance(u_partner)
        with pytest.raises(ValueError, match="spoken by"):
            Conversation((u_self, u_self), Context.empty(SpeakerRole.SELF), Context.empty(SpeakerRole.PARTNER))

    def test_next_speaker_alternates(self):
        conv = Conversation.empty()
        assert conv.next_speaker is SpeakerRole.SELF
        conv = conv.with_utterance(Utterance(SpeakerRole.SELF, (0,), truncated=True))
        assert conv.next_speaker is SpeakerRole.PARTNER


class TestContext:
    def test_empty_render(self):
        vocab = Vocabulary(("a", "</s>"), 1)
        ctx = Context.empty(SpeakerRole.PARTNER)
        assert ctx.is_empty
        assert ctx.render(vocab) == ""

    def test_render_flattens_lines(self):
        vocab = Vocabulary(("a", "b", "</s>"), 2)
        ctx = Context.from_lines(["a b", "b"], vocab, SpeakerRole.SELF)
        assert ctx.render(vocab) == "a b b"
        assert ctx.token_stream() == (0, 1, 1)
