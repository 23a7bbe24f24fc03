import json

import pytest
from fastapi.testclient import TestClient

from convsearch.registry import ModelRegistry
from convsearch.service import create_app
from convsearch.session import SessionConfig, SessionStore, TurnConflictError

F1_CONFIG = {
    "model": "f1",
    "partner": "egocentric",
    "width": 10,
    "steps": 0,
    "max_tokens": 3,
    "self_context": ["c1"],
}

F2_CONFIG = {
    "model": "f2",
    "partner": "transparent",
    "width": 2,
    "steps": 1,
    "max_tokens": 2,
    "self_context": ["c1"],
    "partner_context": ["c2"],
}


@pytest.fixture()
def store(tmp_path):
    return SessionStore(tmp_path, ModelRegistry.load())


@pytest.fixture()
def client(tmp_path):
    app = create_app(data_dir=tmp_path / "svc")
    with TestClient(app) as client:
        yield client


class TestSessionConfig:
    def test_single_letter_aliases(self):
        config = SessionConfig.from_dict({"model": "f1", "K": 4, "L": 2, "T": 7, "partner": "Egocentric"})
        assert (config.width, config.steps, config.max_tokens) == (4, 2, 7)
        assert config.partner == "egocentric"

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError, match="unknown config field"):
            SessionConfig.from_dict({"model": "f1", "beam": 3})

    def test_round_trip(self):
        config = SessionConfig.from_dict(F2_CONFIG)
        assert SessionConfig.from_dict(config.to_dict()) == config


class TestSessionStore:
    def test_create_opens_with_engine_utterance(self, store):
        session = store.create(dict(F1_CONFIG))
        assert len(session.conversation) == 1
        assert session.conversation.utterances[0].speaker.value == "self"
        assert len(session.traces) == 1
        # L=0 opening equals utterance-level top-1: greedy argmax path of f1
        assert session.conversation.utterances[0].tokens == (0, 1, 2)

    def test_unknown_model_raises_keyerror(self, store):
        with pytest.raises(KeyError, match="unknown model id"):
            store.create({"model": "missing"})

    def test_invalid_params_raise_valueerror(self, store):
        with pytest.raises(ValueError, match="steps"):
            store.create({"model": "f1", "L": -1})
        with pytest.raises(ValueError, match="width"):
            store.create({"model": "f1", "K": 0})

    def test_partner_turn_flow_and_reply(self, store):
        session = store.create(dict(F1_CONFIG))
        reply, trace_index = store.post_partner_utterance(session.id, "b a", turn=1)
        assert trace_index == 1
        assert reply.speaker.value == "self"
        assert len(store.get(session.id).conversation) == 3

    def test_turn_conflict_on_stale_index(self, store):
        session = store.create(dict(F1_CONFIG))
        store.post_partner_utterance(session.id, "b", turn=1)
        with pytest.raises(TurnConflictError, match="expected turn 3"):
            store.post_partner_utterance(session.id, "b", turn=1)

    def test_oov_tokens_listed(self, store):
        session = store.create(dict(F1_CONFIG))
        with pytest.raises(Exception, match="zebra"):
            store.post_partner_utterance(session.id, "a zebra yak")

    def test_reload_reproduces_equal_sessions(self, tmp_path):
        registry = ModelRegistry.load()
        store = SessionStore(tmp_path, registry)
        session = store.create(dict(F2_CONFIG))
        store.post_partner_utterance(session.id, "c </s>", turn=1)
        doc_before = store.session_doc(session.id)

        reloaded = SessionStore(tmp_path, registry)
        doc_after = reloaded.session_doc(session.id)
        assert json.dumps(doc_before, sort_keys=True) == json.dumps(doc_after, sort_keys=True)
        again = reloaded.get(session.id)
        original = store.get(session.id)
        assert again.conversation == original.conversation
        assert again.traces == original.traces
        assert again.config == original.config

    def test_concurrent_posts_serialize_one_wins(self, store):
        import threading

        session = store.create(dict(F1_CONFIG))
        outcomes = []

        def post():
            try:
                outcomes.append(("ok", store.post_partner_utterance(session.id, "b", turn=1)))
            except TurnConflictError as exc:
                outcomes.append(("conflict", str(exc)))

        threads = [threading.Thread(target=post) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(kind for kind, _ in outcomes) == ["conflict", "ok"]
        assert len(store.get(session.id).conversation) == 3  # exactly one exchange landed

    def test_identical_inputs_identical_replies(self, tmp_path):
        registry = ModelRegistry.load()
        store = SessionStore(tmp_path, registry)
        replies = []
        for _ in range(2):
            session = store.create(dict(F2_CONFIG))
            reply, _ = store.post_partner_utterance(session.id, "c </s>")
            replies.append((session.conversation.utterances[0], reply))
        assert replies[0] == replies[1]


class TestService:
    def test_models_endpoint_lists_fixtures(self, client):
        response = client.get("/models")
        assert response.status_code == 200
        ids = [m["id"] for m in response.json()]
        assert "f1" in ids and "f2" in ids

    def test_create_session_f1(self, client):
        response = client.post("/sessions", json=F1_CONFIG)
        assert response.status_code == 201
        doc = response.json()
        utts = doc["conversation"]["utterances"]
        assert len(utts) == 1
        assert utts[0]["text"] == "a b </s>"
        assert doc["next_speaker"] == "partner"
        assert len(doc["traces"]) == 1

    def test_create_session_f2_adversarial_choice(self, client):
        response = client.post("/sessions", json=F2_CONFIG)
        assert response.status_code == 201
        doc = response.json()
        assert doc["conversation"]["utterances"][0]["text"] == "b </s>"
        assert doc["traces"][0]["selected_rank_in_h0"] == 1

    def test_create_unknown_model_404(self, client):
        response = client.post("/sessions", json={"model": "missing"})
        assert response.status_code == 404

    def test_create_invalid_params_422(self, client):
        response = client.post("/sessions", json={"model": "f1", "L": -1})
        assert response.status_code == 422

    def test_utterance_round_trip_and_trace(self, client):
        session = client.post("/sessions", json=F1_CONFIG).json()
        response = client.post(
            f"/sessions/{session['id']}/utterances", json={"text": "b a", "turn": 1}
        )
        assert response.status_code == 200
        body = response.json()
        assert body["reply"]["speaker"] == "self"
        assert body["trace_index"] == 1
        trace = client.get(f"/sessions/{session['id']}/traces/1")
        assert trace.status_code == 200
        assert trace.json()["selected_rank_in_h0"] == 0

    def test_post_oov_400_lists_tokens(self, client):
        session = client.post("/sessions", json=F1_CONFIG).json()
        response = client.post(f"/sessions/{session['id']}/utterances", json={"text": "a zebra"})
        assert response.status_code == 400
        assert "zebra" in response.json()["detail"]

    def test_double_post_conflict_409(self, client):
        session = client.post("/sessions", json=F1_CONFIG).json()
        first = client.post(f"/sessions/{session['id']}/utterances", json={"text": "b", "turn": 1})
        assert first.status_code == 200
        second = client.post(f"/sessions/{session['id']}/utterances", json={"text": "b", "turn": 1})
        assert second.status_code == 409

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope").status_code == 404
        assert client.post("/sessions/nope/utterances", json={"text": "b"}).status_code == 404

    def test_out_of_range_trace_404(self, client):
        session = client.post("/sessions", json=F1_CONFIG).json()
        assert client.get(f"/sessions/{session['id']}/traces/5").status_code == 404

    def test_trace_scores_match_session_doc(self, client):
        session = client.post("/sessions", json=F2_CONFIG).json()
        trace = client.get(f"/sessions/{session['id']}/traces/0").json()
        assert trace == session["traces"][0]
        h0 = trace["h0"]["entries"]
        assert len(h0) == 2
        scores = [entry["score"] for entry in h0]
        assert scores == sorted(scores, reverse=True)
