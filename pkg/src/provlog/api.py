"""HTTP/JSON service over an evaluated store.

Endpoints (all read-only; negation wizard state lives in the client):

    GET  /relations                      names, arities, io kinds, counts
    GET  /tuples/{relation}?prefix=&limit=&offset=
    POST /explain            {tuple, depth}
    POST /expand             {tuple}
    POST /negation/candidates {tuple}
    POST /negation/evaluate  {tuple, rule, bindings}
    GET  /stats

Errors are JSON {error, detail} with 400 (malformed), 404 (unknown
relation or tuple), 409 (negation query for a derivable tuple).
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .ast import Program, Rule, Variable
from .engine import EvalStats
from .explorer import (
    Explorer,
    IncompleteBindings,
    TupleExists,
    UnificationError,
    UnknownTuple,
)
from .render import (
    dump_json,
    failed_subproof_payload,
    proof_node_payload,
    tuple_values,
)
from .store import Database

DEFAULT_PAGE_LIMIT = 100


class RequestError(Exception):
    def __init__(self, status: int, code: str, detail: str):
        super().__init__(detail)
        self.status = status
        self.code = code
        self.detail = detail


def _bad(detail: str) -> RequestError:
    return RequestError(400, "bad-request", detail)


class ApiContext:
    def __init__(self, db: Database, program: Program, stats: EvalStats):
        self.db = db
        self.program = program
        self.stats = stats
        self.explorer = Explorer(db, program)

    # -- request decoding ------------------------------------------------

    def decode_tuple(self, payload) -> tuple[str, tuple[int, ...]]:
        if not isinstance(payload, list) or not payload:
            raise _bad("tuple must be a list [relation, arguments...]")
        relation = payload[0]
        if not isinstance(relation, str) or not self.program.has_relation(relation):
            raise RequestError(404, "unknown-relation", f"unknown relation {relation!r}")
        decl = self.program.decl(relation)
        raw = payload[1:]
        if len(raw) != decl.arity:
            raise _bad(f"{relation} expects {decl.arity} arguments, found {len(raw)}")
        values: list[int] = []
        for value, (_, attr_type) in zip(raw, decl.attributes):
            if attr_type == "number":
                if not isinstance(value, int) or isinstance(value, bool):
                    raise _bad(f"{value!r} is not a number")
                values.append(value)
            else:
                if not isinstance(value, str):
                    raise _bad(f"{value!r} is not a symbol")
                values.append(self.program.symbols.intern(value))
        return relation, tuple(values)

    def _coerce_binding(self, rule: Rule, name: str, value) -> int:
        var_types = self.program.variable_types(rule)
        if var_types.get(name) == "number":
            if not isinstance(value, int) or isinstance(value, bool):
                raise _bad(f"binding {name}: {value!r} is not a number")
            return value
        if not isinstance(value, str):
            raise _bad(f"binding {name}: {value!r} is not a symbol")
        return self.program.symbols.intern(value)

    # -- endpoints ----------------------------------------------------------

    def relations(self) -> dict:
        out = []
        for decl in self.program.declarations:
            out.append(
                {
                    "name": decl.name,
                    "arity": decl.arity,
                    "io": decl.io,
                    "attributes": [{"name": n, "type": t} for n, t in decl.attributes],
                    "tuples": len(self.db.relation(decl.name)),
                }
            )
        return {"relations": out}

    def tuples(self, relation: str, query: dict) -> dict:
        if not self.program.has_relation(relation):
            raise RequestError(404, "unknown-relation", f"unknown relation {relation!r}")
        decl = self.program.decl(relation)
        store = self.db.relation(relation)

        prefix: tuple[int, ...] = ()
        raw_prefix = query.get("prefix", [""])[0]
        if raw_prefix:
            parts = raw_prefix.split(",")
            if len(parts) > decl.arity:
                raise _bad("prefix longer than relation arity")
            values = []
            for part, (_, attr_type) in zip(parts, decl.attributes):
                if attr_type == "number":
                    try:
                        values.append(int(part))
                    except ValueError:
                        raise _bad(f"{part!r} is not a number") from None
                else:
                    values.append(self.program.symbols.intern(part))
            prefix = tuple(values)

        def int_param(name: str, default: int) -> int:
            raw = query.get(name, [None])[0]
            if raw is None:
                return default
            try:
                value = int(raw)
            except ValueError:
                raise _bad(f"{name} must be an integer") from None
            if value < 0:
                raise _bad(f"{name} must be non-negative")
            return value

        limit = int_param("limit", DEFAULT_PAGE_LIMIT)
        offset = int_param("offset", 0)

        matching = list(store.scan_prefix(prefix))
        page = matching[offset : offset + limit]
        return {
            "relation": relation,
            "io": decl.io,
            "total": len(matching),
            "offset": offset,
            "limit": limit,
            "tuples": [
                {
                    "tuple": [relation, *tuple_values(self.program, relation, row)],
                    "rule": ann.rule,
                    "height": ann.height,
                }
                for row, ann in page
            ],
        }

    def explain(self, body: dict) -> dict:
        relation, args = self.decode_tuple(body.get("tuple"))
        depth = body.get("depth", None)
        if depth is not None and (not isinstance(depth, int) or depth < 1):
            raise _bad("depth must be a positive integer")
        try:
            node = self.explorer.explain(relation, args, depth)
        except UnknownTuple as err:
            raise RequestError(404, "unknown-tuple", str(err)) from None
        return proof_node_payload(self.program, node)

    def expand(self, body: dict) -> dict:
        relation, args = self.decode_tuple(body.get("tuple"))
        try:
            node = self.explorer.explain(relation, args, 1)
        except UnknownTuple as err:
            raise RequestError(404, "unknown-tuple", str(err)) from None
        return proof_node_payload(self.program, node)

    def negation_candidates(self, body: dict) -> dict:
        relation, args = self.decode_tuple(body.get("tuple"))
        try:
            candidates = self.explorer.negation_candidates(relation, args)
        except TupleExists as err:
            raise RequestError(409, "tuple-exists", str(err)) from None
        rules = []
        for rule in candidates:
            entry: dict = {"id": rule.id, "text": self.program.rule_text(rule)}
            try:
                free = self.explorer.negation_free_variables(rule, relation, args)
            except UnificationError:
                entry["unifies"] = False
                entry["freeVariables"] = []
                entry["body"] = []
            else:
                entry["unifies"] = True
                entry["freeVariables"] = free
                entry["body"] = self._bound_body_texts(rule, relation, args)
            rules.append(entry)
        return {
            "tuple": [relation, *tuple_values(self.program, relation, args)],
            "rules": rules,
        }

    def _bound_body_texts(self, rule: Rule, relation: str, args) -> list[str]:
        from .explorer import _unify_head

        bindings = _unify_head(rule.head, args)
        types = self.program.variable_types(rule)

        def term_text(term, attr_type: str) -> str:
            if isinstance(term, Variable):
                if term.name in bindings:
                    value = bindings[term.name]
                    if attr_type == "symbol":
                        return f'"{self.program.symbols.name(value)}"'
                    return str(value)
                return term.name
            return self.program.term_text(term, attr_type)

        def atom_text(atom) -> str:
            attr_types = self.program.decl(atom.relation).attribute_types()
            inner = ", ".join(term_text(t, attr_types[i]) for i, t in enumerate(atom.args))
            return f"{atom.relation}({inner})"

        parts = [atom_text(a) for a in rule.body]
        parts += [f"!{atom_text(a)}" for a in rule.negations]
        for c in rule.constraints:
            def side(term):
                if isinstance(term, Variable):
                    attr_type = types.get(term.name, "symbol")
                else:
                    attr_type = "symbol" if term.symbol else "number"
                return term_text(term, attr_type)

            parts.append(f"{side(c.lhs)} {c.op} {side(c.rhs)}")
        return parts

    def negation_evaluate(self, body: dict) -> dict:
        relation, args = self.decode_tuple(body.get("tuple"))
        rule_id = body.get("rule")
        if not isinstance(rule_id, int):
            raise _bad("rule must be a rule number")
        try:
            candidates = self.explorer.negation_candidates(relation, args)
        except TupleExists as err:
            raise RequestError(409, "tuple-exists", str(err)) from None
        rule = next((r for r in candidates if r.id == rule_id), None)
        if rule is None:
            raise _bad(f"rule {rule_id} does not derive {relation}")
        raw_bindings = body.get("bindings", {})
        if not isinstance(raw_bindings, dict):
            raise _bad("bindings must be an object")
        bindings = {
            name: self._coerce_binding(rule, name, value)
            for name, value in raw_bindings.items()
        }
        try:
            failed = self.explorer.evaluate_failed_subproof(rule, relation, args, bindings)
        except (IncompleteBindings, UnificationError) as err:
            raise _bad(str(err)) from None
        return failed_subproof_payload(self.program, failed)


class _Handler(BaseHTTPRequestHandler):
    context: ApiContext  # set on the server class

    def log_message(self, *args) -> None:  # quiet
        pass

    def _send(self, status: int, payload: dict | None = None, body: bytes | None = None) -> None:
        if body is None:
            body = (dump_json(payload) + "\n").encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, err: RequestError) -> None:
        self._send(err.status, {"error": err.code, "detail": err.detail})

    def do_OPTIONS(self) -> None:
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self) -> None:
        ctx = self.server.context  # type: ignore[attr-defined]
        url = urlparse(self.path)
        try:
            if url.path == "/relations":
                self._send(200, ctx.relations())
            elif url.path == "/stats":
                self._send(200, ctx.stats.as_json())
            elif url.path.startswith("/tuples/"):
                relation = url.path[len("/tuples/") :]
                self._send(200, ctx.tuples(relation, parse_qs(url.query)))
            else:
                self._error(RequestError(404, "unknown-endpoint", self.path))
        except RequestError as err:
            self._error(err)
        except Exception as err:  # pragma: no cover - defensive
            self._send(500, {"error": "internal", "detail": str(err)})

    def do_POST(self) -> None:
        ctx = self.server.context  # type: ignore[attr-defined]
        url = urlparse(self.path)
        try:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length)
            try:
                body = json.loads(raw.decode() or "{}")
            except (UnicodeDecodeError, json.JSONDecodeError):
                raise _bad("request body is not valid JSON") from None
            if not isinstance(body, dict):
                raise _bad("request body must be a JSON object")
            if url.path == "/explain":
                self._send(200, ctx.explain(body))
            elif url.path == "/expand":
                self._send(200, ctx.expand(body))
            elif url.path == "/negation/candidates":
                self._send(200, ctx.negation_candidates(body))
            elif url.path == "/negation/evaluate":
                self._send(200, ctx.negation_evaluate(body))
            else:
                self._error(RequestError(404, "unknown-endpoint", self.path))
        except RequestError as err:
            self._error(err)
        except Exception as err:  # pragma: no cover - defensive
            self._send(500, {"error": "internal", "detail": str(err)})


def build_server(
    db: Database,
    program: Program,
    stats: EvalStats,
    port: int,
    host: str = "127.0.0.1",
) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), _Handler)
    server.context = ApiContext(db, program, stats)  # type: ignore[attr-defined]
    return server


def start_in_thread(db, program, stats, port: int = 0, host: str = "127.0.0.1"):
    """Start a server on a background thread; returns (server, thread)."""
    server = build_server(db, program, stats, port, host)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread


def serve_forever(db, program, stats, port: int, host: str = "127.0.0.1") -> None:
    server = build_server(db, program, stats, port, host)
    print(f"serving explorer API on http://{host}:{server.server_address[1]}/")
    try:
        server.serve_forever()
    finally:
        server.server_close()
