"""HTTP API tying the runtime together.

Plain WSGI (stdlib only): upload applications, open sessions, post turns,
read transcripts, metrics and attribute tables.  One turn may be in flight
per session at a time; a concurrent post loses with 409.  All payloads are
UTF-8 JSON.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Optional
from wsgiref.simple_server import WSGIRequestHandler, WSGIServer, make_server

from socketserver import ThreadingMixIn

from .engine import Engine, PlatformState, Session, SessionEndedError
from .model import has_errors, parse_bundle_dict, validate_bundle
from .nlu import pack_from_json, train_pack
from .nlu.pack import TrainingError
from .nrg import DEFAULT_GENERATOR, Generator
from .store import DataStore, MetricQuery, StoreError, UnknownSessionError, utc_now_iso


class ApiError(Exception):
    def __init__(self, status: int, message: str, details=None):
        super().__init__(message)
        self.status = status
        self.message = message
        self.details = details


@dataclass
class RegisteredApp:
    app_id: str
    engine: Engine
    loaded_at: str


@dataclass
class LiveSession:
    session: Session
    app: RegisteredApp
    lock: threading.Lock


_STATUS_TEXT = {
    200: "200 OK",
    204: "204 No Content",
    400: "400 Bad Request",
    404: "404 Not Found",
    405: "405 Method Not Allowed",
    409: "409 Conflict",
    410: "410 Gone",
    500: "500 Internal Server Error",
}

_SESSION_TURNS_RE = re.compile(r"^/sessions/([^/]+)/turns$")
_SESSION_TRANSCRIPT_RE = re.compile(r"^/sessions/([^/]+)/transcript$")


class FlowkitService:
    """Application registry plus the WSGI handler."""

    def __init__(
        self,
        data_dir: Optional[str] = None,
        generator: Optional[Generator] = None,
        console_dir: Optional[str] = None,
    ):
        self.store = DataStore(data_dir)
        self.platform = PlatformState(on_change=self.store.set_attribute)
        # Rehydrate persisted user/community values into the live store.
        for user_id, table in self.store.attributes.get("user", {}).items():
            self.platform.users[user_id] = dict(table)
        for ns, table in self.store.attributes.get("community", {}).items():
            self.platform.communities[ns] = dict(table)
        self.generator = generator or DEFAULT_GENERATOR
        self.apps: Dict[str, RegisteredApp] = {}
        self.sessions: Dict[str, LiveSession] = {}
        self.console_dir = Path(console_dir) if console_dir else None
        self._registry_lock = threading.Lock()

    # -- registry -------------------------------------------------------------

    def register_bundle_dict(self, doc: dict, pack=None) -> RegisteredApp:
        """Validate, train (unless a pre-trained pack is supplied) and
        register in one step; raises ApiError on bad input."""
        bundle = parse_bundle_dict(doc)
        diagnostics = validate_bundle(bundle)
        if has_errors(diagnostics):
            raise ApiError(400, "bundle failed validation",
                           details=[str(d) for d in diagnostics])
        if pack is None:
            try:
                pack = train_pack(bundle)
            except TrainingError as err:
                raise ApiError(400, f"training failed: {err}")
        canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        app_id = "app-" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]
        engine = Engine(bundle, pack, generator=self.generator, store=self.store,
                        platform=self.platform, app_id=app_id)
        app = RegisteredApp(app_id=app_id, engine=engine, loaded_at=utc_now_iso())
        with self._registry_lock:
            self.apps[app_id] = app
        return app

    def load_apps_dir(self, apps_dir: str) -> list:
        """Register every loadable bundle in the directory; files that are
        not valid bundles are skipped with a warning.  A sibling
        ``<name>.pack.json`` (as written by ``flowkit train``) is loaded
        instead of retraining."""
        loaded = []
        for path in sorted(Path(apps_dir).glob("*.json")):
            if path.name.endswith(".pack.json"):
                continue
            try:
                doc = json.loads(path.read_text(encoding="utf-8"))
                pack = None
                pack_path = path.parent / (path.stem + ".pack.json")
                if pack_path.exists():
                    pack = pack_from_json(pack_path.read_text(encoding="utf-8"))
                loaded.append(self.register_bundle_dict(doc, pack=pack))
            except (ValueError, ApiError) as err:
                print(f"skipping {path.name}: {err}", flush=True)
        return loaded

    # -- request handling ------------------------------------------------------

    def wsgi(self, environ, start_response):
        try:
            status, body, content_type = self._dispatch(environ)
        except ApiError as err:
            payload = {"error": err.message}
            if err.details is not None:
                payload["details"] = err.details
            status, body, content_type = err.status, json.dumps(payload), "application/json"
        except (StoreError, ValueError) as err:
            status, body, content_type = 400, json.dumps({"error": str(err)}), "application/json"
        except Exception as err:  # storage failures and bugs surface as 500
            status, body, content_type = 500, json.dumps({"error": str(err)}), "application/json"
        raw = body if isinstance(body, bytes) else body.encode("utf-8")
        start_response(
            _STATUS_TEXT.get(status, f"{status} Error"),
            [
                ("Content-Type", content_type + ("; charset=utf-8" if content_type.startswith("text/") or content_type == "application/json" else "")),
                ("Content-Length", str(len(raw))),
                ("Access-Control-Allow-Origin", "*"),
                ("Access-Control-Allow-Headers", "Content-Type"),
                ("Access-Control-Allow-Methods", "GET, POST, OPTIONS"),
            ],
        )
        return [raw]

    __call__ = wsgi

    def _dispatch(self, environ):
        method = environ["REQUEST_METHOD"]
        path = environ.get("PATH_INFO", "/")
        query = self._parse_query(environ.get("QUERY_STRING", ""))

        if method == "OPTIONS":
            return 204, "", "application/json"

        if method == "POST" and path == "/applications":
            doc = self._read_json(environ)
            app = self.register_bundle_dict(doc)
            return 200, json.dumps({"appId": app.app_id}), "application/json"

        if method == "POST" and path == "/sessions":
            return self._create_session(self._read_json(environ))

        m = _SESSION_TURNS_RE.match(path)
        if m and method == "POST":
            return self._post_turn(m.group(1), self._read_json(environ))

        m = _SESSION_TRANSCRIPT_RE.match(path)
        if m and method == "GET":
            return self._get_transcript(m.group(1))

        if method == "GET" and path == "/metrics":
            return self._get_metrics(query)

        if method == "GET" and path == "/attributes":
            return self._get_attributes(query)

        if method == "GET" and path == "/applications":
            apps = [
                {"appId": a.app_id, "loadedAt": a.loaded_at, "main": a.engine.bundle.main_dialogue_id}
                for a in sorted(self.apps.values(), key=lambda a: a.app_id)
            ]
            return 200, json.dumps({"applications": apps}), "application/json"

        if method == "GET" and self.console_dir is not None:
            served = self._serve_static(path)
            if served is not None:
                return served

        raise ApiError(404, f"no route for {method} {path}")

    def _create_session(self, body: dict):
        app = self.apps.get(body.get("appId", ""))
        if app is None:
            raise ApiError(404, f"unknown application {body.get('appId')!r}")
        seed = body.get("seed")
        if seed is not None and not isinstance(seed, int):
            raise ApiError(400, "seed must be an integer")
        session_id = "s-" + uuid.uuid4().hex[:16]
        session, result = app.engine.start_session(
            user_id=body.get("userId", "anonymous"),
            community=body.get("community", "default"),
            client_tag=body.get("client", "web"),
            seed=seed,
            session_id=session_id,
        )
        self.sessions[session_id] = LiveSession(session=session, app=app, lock=threading.Lock())
        return 200, json.dumps(
            {"sessionId": session_id, "responses": result.responses, "ended": result.ended}
        ), "application/json"

    def _post_turn(self, session_id: str, body: dict):
        live = self.sessions.get(session_id)
        if live is None:
            raise ApiError(404, f"unknown session {session_id!r}")
        utterance = body.get("utterance")
        if not isinstance(utterance, str):
            raise ApiError(400, "utterance must be a string")
        if not live.lock.acquire(blocking=False):
            raise ApiError(409, "a turn is already in flight for this session")
        try:
            if live.session.ended:
                raise ApiError(410, "session has ended")
            try:
                result = live.app.engine.process_turn(live.session, utterance)
            except SessionEndedError as err:
                raise ApiError(410, str(err))
            return 200, json.dumps(
                {"responses": result.responses, "ended": result.ended}
            ), "application/json"
        finally:
            live.lock.release()

    def _get_transcript(self, session_id: str):
        try:
            records = self.store.get_transcript(session_id)
        except UnknownSessionError:
            raise ApiError(404, f"unknown session {session_id!r}")
        return 200, json.dumps(
            {"sessionId": session_id, "records": [r.to_dict() for r in records]}
        ), "application/json"

    def _get_metrics(self, query: dict):
        def parse_time(key):
            raw = query.get(key)
            if raw is None:
                return None
            try:
                dt = datetime.fromisoformat(raw)
            except ValueError:
                raise ApiError(400, f"bad {key!r} timestamp {raw!r}")
            return dt if dt.tzinfo else dt.replace(tzinfo=timezone.utc)

        q = MetricQuery(
            metric=query.get("metric", "sessions"),
            group_by=query.get("groupBy", "none"),
            granularity=query.get("granularity", "day"),
            time_from=parse_time("from"),
            time_to=parse_time("to"),
            user=query.get("user"),
            application=query.get("application"),
        )
        try:
            series = self.store.query_metrics(q)
        except ValueError as err:
            raise ApiError(400, str(err))
        return 200, json.dumps(series.to_dict()), "application/json"

    def _get_attributes(self, query: dict):
        scope = query.get("scope", "")
        key = query.get("key", "")
        if scope not in ("user", "community"):
            raise ApiError(400, "scope must be 'user' or 'community'")
        table = self.platform.table(scope, key)
        return 200, json.dumps(
            {"attributes": [{"name": k, "value": v} for k, v in sorted(table.items())]}
        ), "application/json"

    def _serve_static(self, path: str):
        rel = path.lstrip("/") or "index.html"
        target = (self.console_dir / rel).resolve()
        if not str(target).startswith(str(self.console_dir.resolve())) or not target.is_file():
            return None
        types = {
            ".html": "text/html", ".js": "application/javascript",
            ".css": "text/css", ".map": "application/json", ".svg": "image/svg+xml",
        }
        return 200, target.read_bytes(), types.get(target.suffix, "application/octet-stream")

    @staticmethod
    def _parse_query(raw: str) -> dict:
        from urllib.parse import parse_qs

        return {k: v[0] for k, v in parse_qs(raw).items()}

    @staticmethod
    def _read_json(environ) -> dict:
        try:
            length = int(environ.get("CONTENT_LENGTH") or 0)
        except ValueError:
            length = 0
        raw = environ["wsgi.input"].read(length) if length else b""
        if not raw:
            raise ApiError(400, "request body must be JSON")
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as err:
            raise ApiError(400, f"invalid JSON body: {err}")
        if not isinstance(doc, dict):
            raise ApiError(400, "request body must be a JSON object")
        return doc


class ThreadingWSGIServer(ThreadingMixIn, WSGIServer):
    daemon_threads = True


class _QuietHandler(WSGIRequestHandler):
    def log_message(self, *args):
        pass


def serve(service: FlowkitService, host: str = "127.0.0.1", port: int = 8080):
    """Blocking server loop; returns the bound server (for tests use
    ``make_threaded_server`` instead)."""
    server = make_threaded_server(service, host, port)
    print(f"flowkit serving on http://{host}:{server.server_port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return server


def make_threaded_server(service: FlowkitService, host: str = "127.0.0.1", port: int = 0):
    return make_server(host, port, service.wsgi,
                       server_class=ThreadingWSGIServer, handler_class=_QuietHandler)
