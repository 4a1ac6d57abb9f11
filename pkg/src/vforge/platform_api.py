"""REST control plane over a :class:`~vforge.platform.Platform` instance."""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .errors import (
    AlreadyAdded,
    DuplicateId,
    InvalidSourceConfig,
    NotFound,
    UnknownFlavour,
    UnknownSilo,
    UnknownVThing,
    VforgeError,
)
from .platform import Platform, SourceKind, ThingVisorDescriptor

_STATUS_BY_ERROR: dict[type[VforgeError], int] = {
    DuplicateId: 409,
    AlreadyAdded: 409,
    UnknownSilo: 404,
    UnknownVThing: 404,
    NotFound: 404,
    InvalidSourceConfig: 400,
    UnknownFlavour: 400,
}


def create_app(platform: Platform | None = None) -> FastAPI:
    """Build the control-plane app; a fresh in-process platform by default."""
    plat = platform or Platform()
    app = FastAPI(title="vforge control plane", docs_url=None, redoc_url=None)
    app.state.platform = plat

    @app.exception_handler(VforgeError)
    async def on_vforge_error(request: Request, exc: VforgeError) -> JSONResponse:
        status = _STATUS_BY_ERROR.get(type(exc), 400)
        return JSONResponse(
            status_code=status, content={"error": exc.code, "message": str(exc)}
        )

    @app.post("/api/thingvisors", status_code=201)
    async def register_thingvisor(body: dict[str, Any]) -> dict[str, Any]:
        try:
            source_kind = SourceKind(body.get("sourceKind", ""))
        except ValueError:
            raise InvalidSourceConfig(
                f"sourceKind {body.get('sourceKind')!r} is not supported"
            ) from None
        desc = ThingVisorDescriptor(
            id=str(body.get("id", "")),
            source_kind=source_kind,
            source_config=body.get("sourceConfig") or {},
            translation_config_ref=body.get("translationConfigRef"),
            vthings=list(body.get("vthings") or []),
        )
        plat.register_thingvisor(desc)
        return desc.to_dict()

    @app.get("/api/thingvisors")
    async def list_thingvisors() -> list[dict[str, Any]]:
        return [plat.thing_visors[k].to_dict() for k in sorted(plat.thing_visors)]

    @app.get("/api/vthings")
    async def list_vthings() -> list[dict[str, Any]]:
        return [v.to_dict() for v in plat.list_vthings()]

    @app.post("/api/vsilos", status_code=201)
    async def create_vsilo(body: dict[str, Any]) -> dict[str, Any]:
        silo = plat.create_vsilo(str(body.get("tenantId", "")), str(body.get("flavour", "")))
        return silo.to_dict()

    @app.post("/api/vsilos/{silo_id}/vthings", status_code=201)
    async def add_vthing(silo_id: str, body: dict[str, Any]) -> dict[str, Any]:
        plat.add_vthing_to_silo(silo_id, str(body.get("vThingId", "")))
        return plat.silos[silo_id].to_dict()

    @app.get("/api/vsilos/{silo_id}/entities/{entity_ref:path}")
    async def retrieve_entity(silo_id: str, entity_ref: str) -> Any:
        plat.drain(timeout=5.0)
        return plat.silo_retrieve(silo_id, entity_ref)

    return app
