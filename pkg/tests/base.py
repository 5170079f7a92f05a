from asyncio.base_events import Server
import os
import unittest
from collections import namedtuple
from contextlib import contextmanager
from fractions import Fraction
from tempfile import NamedTemporaryFile
from typing import Any, AsyncGenerator, ContextManager, Dict, Generator, Sequence, Tuple
import aiohttp
import asyncio
from hypothesis import strategies as st
from probpts.lattice import Address, Env, PtsType, Value
from probpts.server import run_server
from probpts.syntax import (
    BinOp, BoolConst, Compare, Num, Var, Program, Stmt, Assign, AddrAssign, Skip, If, While, Par,
    make_program, parse, seq,
)
from probpts.utils import parse_sockname


PROGRAMS = os.path.join(os.path.dirname(__file__), "programs")

VARS = ("w", "x", "y", "z")


def program_path(name: str) -> str:
    return os.path.join(PROGRAMS, name)


def load_program(name: str) -> Program:
    with open(program_path(name), encoding="utf-8") as handle:
        return parse(handle.read())


def pts(names: Sequence[str], **entries: Dict[str, Any]) -> PtsType:
    """
    Builds a type over ``names`` from keyword entries like ``a={"c": "1/2"}``.
    """
    return PtsType({
        name: {Address(addr): Fraction(prob) for addr, prob in entries.get(name, {}).items()}
        for name in names
    })


# Strategies.

@st.composite
def weights(draw: Any, count: int) -> Tuple[Fraction, ...]:
    # Weights summing to at most one.
    raw = [draw(st.integers(0, 6)) for _ in range(count)]
    total = max(sum(raw) + draw(st.integers(0, 6)), 1)
    return tuple(Fraction(value, total) for value in raw)


@st.composite
def pts_types(draw: Any, names: Sequence[str] = VARS) -> PtsType:
    entries = {}
    for name in names:
        addrs = draw(st.lists(st.sampled_from(VARS), unique=True, max_size=len(VARS)))
        probs = draw(weights(len(addrs)))
        entries[name] = {Address(addr): prob for addr, prob in zip(addrs, probs)}
    return PtsType(entries)


@st.composite
def modelled_envs(draw: Any, types: PtsType) -> Env:
    # Every variable holds an integer, or an address in its support.
    values: Dict[str, Value] = {}
    for name, row in types.items():
        choices = [draw(st.integers(-3, 3))] + list(row)
        values[name] = draw(st.sampled_from(choices))
    return Env(values)


aexprs = st.recursive(
    st.one_of(st.builds(Num, st.integers(0, 5)), st.builds(Var, st.sampled_from(VARS))),
    lambda children: st.builds(BinOp, children, st.sampled_from("+-*"), children),
    max_leaves=4,
)


def _straight_line(var_names: Sequence[str]) -> Any:
    names = st.sampled_from(var_names)
    return st.one_of(
        st.builds(Assign, names, st.one_of(st.builds(Num, st.integers(0, 3)), st.builds(Var, names))),
        st.builds(AddrAssign, names, names),
        st.just(Skip()),
    )


def _compose(children: Any) -> Any:
    return st.one_of(
        st.lists(children, min_size=2, max_size=3).map(lambda stmts: seq(*stmts)),
        st.lists(children, min_size=2, max_size=3).map(lambda threads: Par(tuple(threads))),
    )


# Programs without branches, loops or dereferences, whose runs lose no mass.
conservative_programs = st.recursive(_straight_line(VARS), _compose, max_leaves=8).map(make_program)


# Chains of assignments only.
straight_line_programs = st.lists(_straight_line(VARS), min_size=1, max_size=6).map(
    lambda stmts: make_program(seq(*stmts)),
)


conditions = st.sampled_from([BoolConst(True), BoolConst(False), Compare(Var("x"), "<=", Num(1))])


def _branch(children: Any) -> Any:
    return st.one_of(
        st.lists(children, min_size=2, max_size=3).map(lambda stmts: seq(*stmts)),
        st.builds(If, conditions, st.fractions(0, 1, max_denominator=4), children, children),
        st.builds(While, conditions, st.integers(0, 2), children),
    )


# Sequential programs with branches and loops, but no dereferences.
branching_programs = st.recursive(_straight_line(VARS), _branch, max_leaves=6).map(make_program)


@st.composite
def straight_line_threads(draw: Any, count: int) -> Tuple[Stmt, ...]:
    line = _straight_line(VARS)
    return tuple(seq(*draw(st.lists(line, min_size=1, max_size=3))) for _ in range(count))


# HTTP.

Response = namedtuple("Response", ("status", "reason", "headers", "content"))


async def streaming_request_body() -> AsyncGenerator:
    for _ in range(100):
        yield b"skip;\n"


class TestClient:

    def __init__(
        self,
        test_case: unittest.TestCase,
        loop: asyncio.AbstractEventLoop,
        host: str,
        port: str,
        session: aiohttp.ClientSession,
    ) -> None:
        self._test_case = test_case
        self._loop = loop
        self._host = host
        self._port = port
        self._session = session

    def request(self, method: str = "POST", path: str = "/analyze", **kwargs: Any) -> Response:
        if self._host == "unix":
            # The connector carries the socket path; keep it out of the request path.
            uri = f"http://localhost{path}"
        else:
            uri = f"http://{self._host}:{self._port}{path}"
        response = self._loop.run_until_complete(self._session.request(method, uri, **kwargs))
        return Response(
            response.status,
            response.reason,
            response.headers,
            self._loop.run_until_complete(response.read()),
        )

    def assert_response(self, *args: Any, data: bytes = b"", **kwargs: Any) -> None:
        response = self.request(*args, data=data, **kwargs)
        self._test_case.assertEqual(response.status, 200)


class AsyncTestCase(unittest.TestCase):

    @contextmanager
    def _run_server(self, *args: Any, **kwargs: Any) -> Generator[TestClient, None, None]:
        with run_server(*args, **kwargs) as (loop, site):
            assert site._server is not None
            assert isinstance(site._server, Server)
            assert site._server.sockets is not None
            host, port = parse_sockname(site._server.sockets[0].getsockname())
            async def create_session() -> aiohttp.ClientSession:
                if host == "unix":
                    connector: aiohttp.BaseConnector = aiohttp.UnixConnector(path=port)
                else:
                    connector = aiohttp.TCPConnector()
                return aiohttp.ClientSession(connector=connector)
            session = loop.run_until_complete(create_session())
            try:
                yield TestClient(self, loop, host, port, session)
            finally:
                loop.run_until_complete(session.close())

    def run_server(self, *args: Any, **kwargs: Any) -> ContextManager[TestClient]:
        return self._run_server(
            *args,
            host="127.0.0.1",
            port="0",
            **kwargs,
        )

    def run_server_unix(self, *args: Any, **kwargs: Any) -> ContextManager[TestClient]:
        socket_file = NamedTemporaryFile()
        socket_file.close()
        return self._run_server(
            *args,
            unix_socket=socket_file.name,
            **kwargs
        )
