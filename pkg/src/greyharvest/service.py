"""REST service: citation formats, archive links, history and PURL redirects.

    GET /api/{json,bibtex,ris,rdf,wiki}?uri=U   the record in that format
    GET /api/archives?uri=U                     known archive snapshots
    GET /api/history?uri=U                      record version summaries
    GET /purl/{id}                              302 to the current location

Any lookup of an unknown URI resolves it and registers it for continuity.
"""

import asyncio
import logging

from aiohttp import web

from .config import Config, get_config
from .continuity import UnknownPurl
from .fetcher import FetchError
from .lookup import Harvester
from .model import MalformedUri, UnsupportedScheme, normalize_uri, snapshot_to_dict
from .serializers import FORMATS
from .store import StoreError

logger = logging.getLogger(__name__)

HARVESTER = web.AppKey("harvester", Harvester)
CONTINUITY_TASK = web.AppKey("continuity_task", asyncio.Task)
CONTINUITY_STOP = web.AppKey("continuity_stop", asyncio.Event)


def _error(status: int, error: str, detail: str) -> web.Response:
    return web.json_response({"error": error, "detail": detail}, status=status)


@web.middleware
async def error_middleware(request: web.Request, handler):
    try:
        return await handler(request)
    except web.HTTPException:
        raise
    except (MalformedUri, UnsupportedScheme) as e:
        return _error(400, type(e).__name__, str(e))
    except UnknownPurl as e:
        return _error(404, type(e).__name__, str(e))
    except FetchError as e:
        logger.warning(f"upstream failure: {e}")
        return _error(502, type(e).__name__, str(e))
    except asyncio.TimeoutError:
        return _error(504, "ResolveTimeout", "resolve did not finish in time")
    except StoreError as e:
        logger.exception("store failure")
        return _error(500, type(e).__name__, str(e))


def _uri_param(request: web.Request) -> str:
    raw = request.query.get("uri")
    if not raw:
        raise MalformedUri("", "missing uri parameter")
    return normalize_uri(raw)


async def _lookup(request: web.Request):
    harvester = request.app[HARVESTER]
    uri = _uri_param(request)
    record = await harvester.lookup(uri, timeout=harvester.config.service.resolve_timeout)
    return uri, record


async def cite(request: web.Request) -> web.Response:
    output = FORMATS[request.match_info["format"]]
    _, record = await _lookup(request)
    return web.Response(text=output.render(record), content_type=output.media_type, charset="utf-8")


async def archives(request: web.Request) -> web.Response:
    uri, _ = await _lookup(request)
    snapshots = request.app[HARVESTER].store.get_archives(uri)
    return web.json_response([snapshot_to_dict(s) for s in snapshots])


async def history(request: web.Request) -> web.Response:
    uri, _ = await _lookup(request)
    return web.json_response(request.app[HARVESTER].history(uri))


async def purl(request: web.Request) -> web.Response:
    location = request.app[HARVESTER].continuity.resolve_purl(request.match_info["id"])
    raise web.HTTPFound(location)


async def _continuity_ctx(app: web.Application):
    stop = asyncio.Event()
    app[CONTINUITY_STOP] = stop
    app[CONTINUITY_TASK] = asyncio.create_task(app[HARVESTER].continuity.run_forever(stop))
    yield
    stop.set()
    await app[CONTINUITY_TASK]


async def _harvester_ctx(app: web.Application):
    yield
    await app[HARVESTER].close()


def create_app(
    config: Config | None = None,
    harvester: Harvester | None = None,
    run_continuity: bool = False,
) -> web.Application:
    """Build the application; tests inject a harvester wired to mock transports."""
    app = web.Application(middlewares=[error_middleware])
    app[HARVESTER] = harvester or Harvester(config or get_config())

    formats = "|".join(FORMATS)
    app.router.add_get("/api/archives", archives)
    app.router.add_get("/api/history", history)
    app.router.add_get(f"/api/{{format:{formats}}}", cite)
    app.router.add_get("/purl/{id}", purl)

    # contexts unwind in reverse, so the harvester closes last
    app.cleanup_ctx.append(_harvester_ctx)
    if run_continuity:
        app.cleanup_ctx.append(_continuity_ctx)
    return app


def serve(config: Config | None = None) -> None:
    """Run the service until interrupted, with continuity passes alongside."""
    config = config or get_config()
    logging.basicConfig(
        level=config.service.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logger.info(f"serving on {config.service.host}:{config.service.port}")
    web.run_app(
        create_app(config, run_continuity=True),
        host=config.service.host,
        port=config.service.port,
        print=None,
    )
