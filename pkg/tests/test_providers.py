import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from ontogen.errors import ProviderError
from ontogen.providers import (
    HashingEmbedder,
    RemoteEmbedder,
    RemotePredictionProvider,
    TablePredictionProvider,
    cosine_similarity,
)
from ontogen.relations import RelationClass


@pytest.fixture
def stub_server():
    """Scripted JSON endpoint; each test loads a queue of responses."""
    script = []
    requests = []

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            body = self.rfile.read(int(self.headers.get("Content-Length", 0)))
            requests.append(json.loads(body))
            status, payload = script.pop(0) if script else (500, {})
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.end_headers()
            self.wfile.write(json.dumps(payload).encode())

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server, script, requests
    server.shutdown()
    server.server_close()


def endpoint(server):
    return f"http://127.0.0.1:{server.server_address[1]}/"


class TestTableProvider:
    def test_lookup(self, tmp_path):
        path = tmp_path / "pred.tsv"
        path.write_text("databases\tsql\tsupertopic\n")
        provider = TablePredictionProvider(path)
        assert provider.get_prediction(("databases", "sql")) is RelationClass.SUPERTOPIC

    def test_lookup_normalizes_labels(self, tmp_path):
        path = tmp_path / "pred.tsv"
        path.write_text("Databases\tSQL\tsupertopic\n")
        provider = TablePredictionProvider(path)
        assert provider.get_prediction(("databases", "sql")) is RelationClass.SUPERTOPIC

    def test_missing_pair_hard_error(self, tmp_path):
        path = tmp_path / "pred.tsv"
        path.write_text("a\tb\tother\n")
        provider = TablePredictionProvider(path, on_missing="error")
        with pytest.raises(ProviderError):
            provider.get_prediction(("x", "y"))

    def test_missing_pair_feature_only_fallback(self, tmp_path):
        path = tmp_path / "pred.tsv"
        path.write_text("a\tb\tother\n")
        provider = TablePredictionProvider(path, on_missing="feature_only")
        assert provider.get_prediction(("x", "y")) is None

    def test_malformed_class_rejected_at_load(self, tmp_path):
        path = tmp_path / "pred.tsv"
        path.write_text("a\tb\trelated\n")
        with pytest.raises(ProviderError):
            TablePredictionProvider(path)


class TestRemotePrediction:
    def provider(self, server, retries=3):
        return RemotePredictionProvider(
            endpoint(server), timeout=2.0, retries=retries, backoff_base=0.01,
            sleep=lambda s: None,
        )

    def test_success(self, stub_server):
        server, script, requests = stub_server
        script.append((200, {"relation": "same-as"}))
        got = self.provider(server).get_prediction(("haptic interface", "haptic device"))
        assert got is RelationClass.SAME_AS
        assert requests == [{"topic_a": "haptic interface", "topic_b": "haptic device"}]

    def test_retries_transient_500_then_succeeds(self, stub_server):
        server, script, _ = stub_server
        script.extend([(500, {}), (500, {}), (200, {"relation": "other"})])
        assert self.provider(server).get_prediction(("a", "b")) is RelationClass.OTHER

    def test_gives_up_after_bounded_retries(self, stub_server):
        server, script, requests = stub_server
        script.extend([(500, {})] * 10)
        with pytest.raises(ProviderError):
            self.provider(server, retries=2).get_prediction(("a", "b"))
        assert len(requests) == 3  # initial + 2 retries

    def test_malformed_class_names_pair(self, stub_server):
        server, script, _ = stub_server
        script.append((200, {"relation": "equivalent"}))
        with pytest.raises(ProviderError) as exc:
            self.provider(server).get_prediction(("a", "b"))
        assert "('a', 'b')" in str(exc.value)

    def test_connection_refused_is_provider_error(self):
        provider = RemotePredictionProvider(
            "http://127.0.0.1:1/", timeout=0.2, retries=1, backoff_base=0.01,
            sleep=lambda s: None,
        )
        with pytest.raises(ProviderError):
            provider.get_prediction(("a", "b"))


class TestHashingEmbedder:
    def test_identical_labels_similarity_one(self):
        emb = HashingEmbedder()
        sim = cosine_similarity(emb("haptic interface"), emb("haptic interface"))
        assert math.isclose(sim, 1.0, abs_tol=1e-12)

    def test_shared_prefix_closer_than_disjoint(self):
        emb = HashingEmbedder()
        close = cosine_similarity(emb("haptic interface"), emb("haptic device"))
        far = cosine_similarity(emb("haptic interface"), emb("quantum money"))
        assert close > far

    def test_deterministic(self):
        assert HashingEmbedder()("deep learning") == HashingEmbedder()("deep learning")

    def test_zero_vector_similarity_zero(self):
        assert cosine_similarity([0.0, 0.0], [1.0, 0.0]) == 0.0


class TestRemoteEmbedder:
    def test_vector_roundtrip(self, stub_server):
        server, script, requests = stub_server
        script.append((200, {"vector": [1.0, 0.0, 0.0]}))
        emb = RemoteEmbedder(endpoint(server), sleep=lambda s: None)
        assert emb("sql") == [1.0, 0.0, 0.0]
        assert requests == [{"label": "sql"}]

    def test_dimension_change_rejected(self, stub_server):
        server, script, _ = stub_server
        script.extend([(200, {"vector": [1.0, 0.0]}), (200, {"vector": [1.0]})])
        emb = RemoteEmbedder(endpoint(server), sleep=lambda s: None)
        emb("a")
        with pytest.raises(ProviderError):
            emb("b")

    def test_missing_vector_rejected(self, stub_server):
        server, script, _ = stub_server
        script.append((200, {"nope": 1}))
        emb = RemoteEmbedder(endpoint(server), sleep=lambda s: None)
        with pytest.raises(ProviderError):
            emb("a")
