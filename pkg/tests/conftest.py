"""Shared fixtures: dataset builders and the scripted fake provider server."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from escirank.models import (
    Catalog,
    Dataset,
    EsciLabel,
    Judgment,
    JudgmentSet,
    Product,
    Query,
    QuerySet,
)


def make_product(pid: str, title: str | None = None, **kwargs) -> Product:
    return Product(product_id=pid, title=title or f"Product {pid}", **kwargs)


def make_dataset(
    judgment_rows: list[tuple[str, str, str, str]],
    catalog_ids: list[str] | None = None,
    query_texts: dict[str, str] | None = None,
    products: list[Product] | None = None,
) -> Dataset:
    """Build a dataset from (query_id, product_id, label, split) rows.

    The catalog covers every judged product plus any extra ids given, so
    padding fixtures can carry a larger pool than the judged set.
    """
    judged_products = {row[1] for row in judgment_rows}
    ids = sorted(judged_products | set(catalog_ids or ()))
    by_id = {p.product_id: p for p in products or ()}
    catalog = Catalog(by_id.get(pid, make_product(pid)) for pid in ids)
    query_ids = sorted({row[0] for row in judgment_rows})
    texts = query_texts or {}
    queries = QuerySet(Query(qid, texts.get(qid, f"query {qid}")) for qid in query_ids)
    judgments = JudgmentSet(
        Judgment(qid, pid, EsciLabel.parse(label), split=split)
        for qid, pid, label, split in judgment_rows
    )
    return Dataset.build(catalog, queries, judgments)


class _ScriptedHandler(BaseHTTPRequestHandler):
    server: "ScriptedProviderServer"

    def log_message(self, *args) -> None:  # silence stderr noise
        pass

    def do_POST(self) -> None:
        route = self.path.strip("/")
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length) or b"{}")
        script = self.server.script  # type: ignore[attr-defined]
        with script.lock:
            script.requests.append(
                {"route": route, "payload": payload, "auth": self.headers.get("Authorization")}
            )
            status = script.status_override.get(route)
            if status is not None:
                self.send_response(status)
                self.end_headers()
                return
            remaining_failures = script.fail_first.get(route, 0)
            if remaining_failures > 0:
                script.fail_first[route] = remaining_failures - 1
                self.send_response(500)
                self.end_headers()
                return
            handler = script.responses.get(route, script.default_response)
        body = json.dumps(handler(route, payload)).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class ScriptedProviderServer:
    """In-process provider backend with scriptable failures per route."""

    def __init__(self):
        self.lock = threading.Lock()
        self.requests: list[dict] = []
        self.fail_first: dict[str, int] = {}
        self.status_override: dict[str, int] = {}
        self.responses: dict[str, object] = {}
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), _ScriptedHandler)
        self._httpd.script = self  # type: ignore[attr-defined]
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    @property
    def base_url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def requests_for(self, route: str) -> list[dict]:
        with self.lock:
            return [r for r in self.requests if r["route"] == route]

    @staticmethod
    def default_response(route: str, payload: dict) -> dict:
        """Deterministic per-input responses, distinct per distinct input."""

        def vec(text: str) -> list[float]:
            total = float(sum(text.encode("utf-8")) % 997)
            return [float(len(text)), total, 1.0]

        if route == "embed_text":
            return {"vectors": [vec(t) for t in payload["texts"]], "model_id": "fake-embed"}
        if route == "embed_image":
            return {"vector": vec(payload["image_ref"]), "model_id": "fake-embed"}
        if route == "caption":
            return {"text": f"server caption of {payload['image_ref']}"}
        if route == "tag":
            return {"tags": [[t, float(len(t))] for t in payload["vocabulary"]]}
        if route == "cross_score":
            return {"scores": [float(len(d)) for d in payload["docs"]]}
        if route == "preprocess":
            return {"keywords": payload["query"].split()}
        return {}

    def close(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture
def fake_server():
    server = ScriptedProviderServer()
    yield server
    server.close()
