"""Review REST API: drive a mapping-review session over HTTP."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import (
    InvalidTransition,
    MalformedDocument,
    NoApprovedPairs,
    TargetConflict,
    UnknownConcept,
    UnknownPair,
    UnknownSession,
    VforgeError,
)
from ..infusion.matching import MatchResult
from ..ontology import Ontology, load_ontology
from ..schema_infer import SourceSchema
from .annotate import annotations_from_dicts
from .orchestrate import provenance_timestamp
from .session import ReviewSession, create_session, decide
from .translation import compile_config

_STATUS_BY_ERROR: dict[type[VforgeError], int] = {
    UnknownSession: 404,
    UnknownPair: 404,
    UnknownConcept: 404,
    InvalidTransition: 409,
    TargetConflict: 409,
    NoApprovedPairs: 409,
    MalformedDocument: 400,
}


@dataclass
class SessionContext:
    """A live session plus everything compile needs later."""

    session: ReviewSession
    schema: SourceSchema
    target_ont: Ontology
    provenance: dict[str, Any] = field(default_factory=dict)


class SessionStore:
    def __init__(self, on_change: Any = None) -> None:
        self.contexts: dict[str, SessionContext] = {}
        self._on_change = on_change

    def add(self, context: SessionContext) -> None:
        self.contexts[context.session.session_id] = context
        self.changed(context)

    def get(self, session_id: str) -> SessionContext:
        if session_id not in self.contexts:
            raise UnknownSession(f"no session {session_id!r}")
        return self.contexts[session_id]

    def changed(self, context: SessionContext) -> None:
        if self._on_change is not None:
            self._on_change(context)


def _session_summary(session: ReviewSession) -> dict[str, Any]:
    counts: dict[str, int] = {}
    for cand in session.candidates.values():
        counts[cand.status] = counts.get(cand.status, 0) + 1
    return {
        "sessionId": session.session_id,
        "progress": session.progress(),
        "statusCounts": dict(sorted(counts.items())),
        "approvedPairs": [
            {"source": src, "target": tgt} for src, tgt in session.approved_pairs()
        ],
    }


def _annotation_rows(session: ReviewSession, concept: str) -> list[dict[str, Any]]:
    rows = []
    for sample in session.annotations:
        for ann in sample.annotations:
            if ann.source_concept == concept:
                doc = ann.to_dict()
                doc["sampleIndex"] = sample.sample_index
                rows.append(doc)
    return rows


def context_from_documents(body: Mapping[str, Any]) -> SessionContext:
    """Build a session from serialized pipeline artifacts."""
    for key in ("match", "annotations", "schema", "targetOntology"):
        if key not in body:
            raise MalformedDocument(f"session request needs {key!r}")
    match = MatchResult.from_dict(body["match"])
    annotations = annotations_from_dicts(body["annotations"])
    schema = SourceSchema.from_dict(body["schema"])
    target_ont = load_ontology(body["targetOntology"])
    features = {
        pid: [float(f) for f in feats]
        for pid, feats in (body.get("features") or {}).items()
    }
    session = create_session(match, annotations, features=features or None)
    return SessionContext(
        session=session,
        schema=schema,
        target_ont=target_ont,
        provenance=dict(body.get("provenance") or {}),
    )


def create_review_app(store: SessionStore | None = None) -> FastAPI:
    sessions = store or SessionStore()
    app = FastAPI(title="vforge review", docs_url=None, redoc_url=None)
    app.state.sessions = sessions

    @app.exception_handler(VforgeError)
    async def on_vforge_error(request: Request, exc: VforgeError) -> JSONResponse:
        status = _STATUS_BY_ERROR.get(type(exc), 400)
        return JSONResponse(
            status_code=status, content={"error": exc.code, "message": str(exc)}
        )

    @app.get("/api/sessions")
    async def index() -> list[dict[str, Any]]:
        return [
            _session_summary(sessions.contexts[sid].session)
            for sid in sorted(sessions.contexts)
        ]

    @app.post("/api/sessions", status_code=201)
    async def create(body: dict[str, Any]) -> dict[str, Any]:
        context = context_from_documents(body)
        sessions.add(context)
        return _session_summary(context.session)

    @app.get("/api/sessions/{session_id}")
    async def summary(session_id: str) -> dict[str, Any]:
        return _session_summary(sessions.get(session_id).session)

    @app.get("/api/sessions/{session_id}/candidates")
    async def candidates(session_id: str, status: str | None = None) -> list[dict[str, Any]]:
        session = sessions.get(session_id).session
        return [c.to_dict() for c in session.by_status(status)]

    @app.get("/api/sessions/{session_id}/annotations/{concept}")
    async def annotations(session_id: str, concept: str) -> list[dict[str, Any]]:
        session = sessions.get(session_id).session
        rows = _annotation_rows(session, concept)
        if not rows:
            raise UnknownConcept(f"no annotations for concept {concept!r}")
        return rows

    @app.post("/api/sessions/{session_id}/candidates/{pair_id}/decision")
    async def decision(
        session_id: str, pair_id: str, body: dict[str, Any]
    ) -> dict[str, Any]:
        context = sessions.get(session_id)
        session = context.session
        action = str(body.get("action", ""))
        target = body.get("target")
        decide(
            session,
            pair_id,
            action,
            target=str(target) if target is not None else None,
            decided_by=str(body.get("decidedBy", "human")),
        )
        sessions.changed(context)
        return _session_summary(session)

    @app.post("/api/sessions/{session_id}/compile")
    async def compile_(session_id: str, body: dict[str, Any] | None = None) -> dict[str, Any]:
        context = sessions.get(session_id)
        provenance = {
            "sessionId": context.session.session_id,
            "sourceOntology": context.schema.root_concept,
            "targetOntology": context.target_ont.name,
            **context.provenance,
        }
        stamp = provenance_timestamp((body or {}).get("epoch"))
        if stamp is not None:
            provenance["generatedAt"] = stamp
        config = compile_config(
            context.session, context.schema, context.target_ont, provenance=provenance
        )
        return config.to_dict()

    return app
