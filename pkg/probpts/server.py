"""
Analysis service
================

.. currentmodule:: probpts.server

:mod:`probpts.server` serves the analyzer, the interpreter and the soundness check over HTTP on
:ref:`aiohttp <aiohttp-web>`. Every endpoint takes program text as the ``POST`` body and answers with JSON.

``POST /analyze?while_mode=safe``
    The JSON report of ``probpts analyze``.

``POST /run?fuel=1000&init=x=3,y=%26z``
    The distinct final environments with their summed weights, plus the abort, out-of-fuel and final masses.

``POST /check?while_mode=safe&fuel=1000&init=...``
    ``{"verdict": "pass", "exit_code": 0, "counterexample": null, "warnings": []}``.

Program text that does not parse, and malformed ``init`` bindings, receive a HTTP 400 (Bad Request) response. A ``par``
with no fixpoint, or with too many threads to serialize, receives a HTTP 422 (Unprocessable Entity) response. Request
bodies larger than ``max_request_body_size`` receive a HTTP 413 (Request Entity Too Large) response.

Analyses run on an :class:`Executor <concurrent.futures.Executor>`, off the event loop.


Serving
-------

.. code:: python

    from probpts.server import serve

    serve(port=8080)

Or, from the command line, ``probpts serve --port 8080``.


API reference
-------------

.. autoclass:: AnalysisHandler
    :members:

.. autofunction:: serve
"""
import asyncio
from asyncio.base_events import Server
import logging
import os
from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import contextmanager
from fractions import Fraction
from typing import Any, Callable, Dict, Generator, Mapping, Optional, Tuple
from aiohttp.web import (
    Application,
    AppRunner,
    BaseSite,
    TCPSite,
    UnixSite,
    Request,
    Response,
    HTTPBadRequest,
    HTTPRequestEntityTooLarge,
    HTTPUnprocessableEntity,
    json_response,
)
from probpts.analyzer import WHILE_MODES, AnalysisError, AnalyzerConfig, analyze_program
from probpts.check import InitError, check_program, parse_init
from probpts.interp import PermutationCapError, RunConfig, WeightedEnv, aggregate, run
from probpts.report import build_entries, build_report, dump_outcomes
from probpts.syntax import ParseError, parse
from probpts.utils import parse_sockname

logger = logging.getLogger(__name__)

Query = Mapping[str, str]


def _analyzer_cfg(query: Query) -> AnalyzerConfig:
    while_mode = query.get("while_mode", "safe")
    if while_mode not in WHILE_MODES:
        raise HTTPBadRequest(text=f"while_mode should be one of {', '.join(WHILE_MODES)}")
    return AnalyzerConfig(while_mode=while_mode)


def _run_cfg(query: Query) -> RunConfig:
    try:
        fuel = int(query.get("fuel", "1000"))
    except ValueError:
        raise HTTPBadRequest(text="fuel should be int") from None
    if fuel < 1:
        raise HTTPBadRequest(text="fuel should be >= 1")
    return RunConfig(fuel=fuel)


def _analyze(text: str, query: Query) -> Dict[str, Any]:
    program = parse(text)
    cfg = _analyzer_cfg(query)
    result = analyze_program(program, cfg=cfg)
    return build_report(build_entries(program, result), result, path="<request>", mode=cfg.while_mode)


def _run(text: str, query: Query) -> Dict[str, Any]:
    program = parse(text)
    env = parse_init(query.get("init", ""), program.vars)
    outcomes = run(program.body, WeightedEnv(env, Fraction(1)), _run_cfg(query))
    return dump_outcomes(aggregate(outcomes))


def _check(text: str, query: Query) -> Dict[str, Any]:
    program = parse(text)
    env = parse_init(query.get("init", ""), program.vars)
    result = check_program(program, env, _analyzer_cfg(query), _run_cfg(query))
    return {
        "verdict": result.verdict,
        "exit_code": result.exit_code,
        "counterexample": result.counterexample.dump() if result.counterexample else None,
        "warnings": result.analysis.warnings,
    }


def _run_action(action: Callable[[str, Query], Dict[str, Any]], text: str, query: Query) -> Response:
    try:
        return json_response(action(text, query))
    except (ParseError, InitError) as ex:
        raise HTTPBadRequest(text=str(ex))
    except (AnalysisError, PermutationCapError) as ex:
        raise HTTPUnprocessableEntity(text=str(ex))


class AnalysisHandler:

    """
    Request handlers for the analysis endpoints.

    :param int max_request_body_size: {max_request_body_size}
    :param concurrent.futures.Executor executor: {executor}
    """

    def __init__(
        self,
        *,
        max_request_body_size: int = 1048576,
        executor: Optional[Executor] = None,
    ):
        assert isinstance(max_request_body_size, int), "max_request_body_size should be int"
        assert max_request_body_size >= 0, "max_request_body_size should be >= 0"
        self._max_request_body_size = max_request_body_size
        self._executor = executor

    async def _read_body(self, request: Request) -> str:
        # Check for body size overflow.
        if request.content_length is not None and request.content_length > self._max_request_body_size:
            raise HTTPRequestEntityTooLarge(
                max_size=self._max_request_body_size,
                actual_size=request.content_length,
            )
        # Buffer the body.
        body = bytearray()
        while True:
            block = await request.content.readany()
            if not block:
                break
            if len(body) + len(block) > self._max_request_body_size:
                raise HTTPRequestEntityTooLarge(
                    max_size=self._max_request_body_size,
                    actual_size=len(body) + len(block),
                )
            body.extend(block)
        try:
            return body.decode("utf-8")
        except UnicodeDecodeError:
            raise HTTPBadRequest(text="program text should be UTF-8") from None

    async def _handle(self, action: Callable[[str, Query], Dict[str, Any]], request: Request) -> Response:
        text = await self._read_body(request)
        loop = asyncio.get_event_loop()
        return await loop.run_in_executor(
            self._executor,
            _run_action,
            action,
            text,
            dict(request.query),
        )

    async def analyze(self, request: Request) -> Response:
        return await self._handle(_analyze, request)

    async def run(self, request: Request) -> Response:
        return await self._handle(_run, request)

    async def check(self, request: Request) -> Response:
        return await self._handle(_check, request)


@contextmanager
def run_server(
    *,
    # asyncio config.
    threads: int = 4,
    # Server config.
    host: Optional[str] = None,
    port: int = 8080,
    # Unix server config.
    unix_socket: Optional[str] = None,
    unix_socket_perms: int = 0o600,
    # Shared server config.
    backlog: int = 1024,
    # aiohttp config.
    shutdown_timeout: float = 60.0,
    **kwargs: Any,
) -> Generator[Tuple[asyncio.AbstractEventLoop, BaseSite], None, None]:
    # Set up async context.
    loop = asyncio.new_event_loop()
    asyncio.set_event_loop(loop)
    assert threads >= 1, "threads should be >= 1"
    executor = ThreadPoolExecutor(threads)
    # Create aiohttp app.
    handler = AnalysisHandler(executor=executor, **kwargs)
    app = Application()
    app.router.add_post("/analyze", handler.analyze)
    app.router.add_post("/run", handler.run)
    app.router.add_post("/check", handler.check)
    # Start the app runner.
    runner = AppRunner(app)
    loop.run_until_complete(runner.setup())
    # Set up the server.
    if unix_socket is not None:
        site: BaseSite = UnixSite(runner, path=unix_socket, backlog=backlog, shutdown_timeout=shutdown_timeout)
    else:
        site = TCPSite(runner, host=host, port=port, backlog=backlog, shutdown_timeout=shutdown_timeout)
    loop.run_until_complete(site.start())
    # Set socket permissions.
    if unix_socket is not None:
        os.chmod(unix_socket, unix_socket_perms)
    # Report.
    assert site._server is not None
    assert isinstance(site._server, Server)
    assert site._server.sockets is not None
    server_uri = " ".join(
        "http://{}:{}".format(*parse_sockname(socket.getsockname()))
        for socket
        in site._server.sockets
    )
    logger.info("Serving on %s", server_uri)
    try:
        yield loop, site
    finally:
        # Clean up unix sockets.
        for socket in site._server.sockets:
            sock_host, sock_port = parse_sockname(socket.getsockname())
            if sock_host == "unix":
                os.unlink(sock_port)
        logger.debug("Shutting down server on %s", server_uri)
        loop.run_until_complete(site.stop())
        loop.run_until_complete(runner.cleanup())
        executor.shutdown()
        loop.close()
        asyncio.set_event_loop(None)
        logger.info("Stopped serving on %s", server_uri)


def serve(**kwargs: Any) -> None:  # pragma: no cover
    """
    Serves the analysis endpoints until keyboard interrupt.

    :param int max_request_body_size: {max_request_body_size}
    :param int threads: {threads}
    :param str host: {host}
    :param int port: {port}
    :param str unix_socket: {unix_socket}
    :param int unix_socket_perms: {unix_socket_perms}
    :param int backlog: {backlog}
    :param int shutdown_timeout: {shutdown_timeout}
    """
    with run_server(**kwargs) as (loop, site):
        try:
            loop.run_forever()
        except KeyboardInterrupt:
            pass


DEFAULTS = {}
DEFAULTS.update(AnalysisHandler.__init__.__kwdefaults__)  # type: ignore
DEFAULTS.update(run_server.__wrapped__.__kwdefaults__)  # type: ignore

HELP = {
    "max_request_body_size": (
        "Maximum number of bytes in request body. Defaults to ``{max_request_body_size!r}``. "
        "Larger requests will receive a HTTP 413 (Request Entity Too Large) response."
    ).format_map(DEFAULTS),
    "executor": "An Executor instance used to run analyses. Defaults to the :mod:`asyncio` base executor.",
    "host": "Host interfaces to bind. Defaults to ``'0.0.0.0'`` and ``'::'``.",
    "port": "Port to bind. Defaults to ``{port!r}``.".format_map(DEFAULTS),
    "unix_socket": "Path to a unix socket to bind, cannot be used with ``host``.",
    "unix_socket_perms": (
        "Filesystem permissions to apply to the unix socket. Defaults to ``{unix_socket_perms!r}``."
    ).format_map(DEFAULTS),
    "backlog": "Socket connection backlog. Defaults to {backlog!r}.".format_map(DEFAULTS),
    "threads": "Number of threads used to run analyses. Defaults to ``{threads!r}``.".format_map(DEFAULTS),
    "shutdown_timeout": (
        "Timeout when closing client connections on server shutdown. Defaults to ``{shutdown_timeout!r}``."
    ).format_map(DEFAULTS),
}


if __debug__:
    assert AnalysisHandler.__doc__ is not None
    AnalysisHandler.__doc__ = AnalysisHandler.__doc__.format_map(HELP)
    assert serve.__doc__ is not None
    serve.__doc__ = serve.__doc__.format_map(HELP)
