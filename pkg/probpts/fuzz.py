"""
Soundness fuzzing
=================

.. currentmodule:: probpts.fuzz

:func:`run_fuzz` generates random programs and runs :func:`probpts.check.check_program` on each of them, counting the
verdicts.

Programs are drawn from a bounded grammar. Case ``i`` of a run seeded with ``s`` is generated from its own random
stream seeded with ``"s:i"``, so every case can be regenerated alone, and cases can be checked in any order, on any
number of threads, while the summary stays byte-identical.

-   Data variables are drawn from ``a``, ``b``, ``c``, ``d``. Only data variables are assigned, address-taken or
    dereferenced.
-   Every loop counts with a fresh counter ``i0``, ``i1``, ... from zero up to a trip count no larger than its
    annotated bound, so a loop never runs more often than the analysis assumes.
-   Branch and guard probabilities lie strictly between ``0`` and ``1``.
-   Programs whose exhaustive interpretation would explore more than :data:`PATH_BUDGET` paths are redrawn.


API reference
-------------

.. autoclass:: FuzzConfig

.. autofunction:: run_fuzz

.. autofunction:: generate_program
"""
import logging
import random
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from math import factorial
from typing import List, Optional
from probpts.analyzer import AnalysisError, AnalyzerConfig
from probpts.check import FAIL, INCONCLUSIVE, PASS, Counterexample, check_program
from probpts.interp import PermutationCapError, RunConfig
from probpts.syntax import (
    AExpr, BExpr, BinOp, BoolConst, Compare, Logic, Not, Num, Var, Program,
    Stmt, Assign, AddrAssign, StarAssign, DerefAssign, Skip, Seq, If, While, Par, ParIf, ParFor, Arm,
    make_program, render, seq,
)


logger = logging.getLogger(__name__)

DATA_VARS = "abcd"

PROBS = tuple(Fraction(p) for p in ("1/4", "1/3", "1/2", "2/3", "3/5", "3/4"))

PATH_BUDGET = 10000

ERROR = "error"


class FuzzConfig:

    """
    Bounds for the generated programs of :func:`run_fuzz`.

    :param int seed: {seed}
    :param int count: {count}
    :param int max_vars: {max_vars}
    :param int max_threads: {max_threads}
    :param int max_loop_bound: {max_loop_bound}
    :param int max_depth: {max_depth}
    :param int threads: {threads}
    """

    def __init__(
        self,
        *,
        seed: int = 0,
        count: int = 100,
        max_vars: int = 4,
        max_threads: int = 3,
        max_loop_bound: int = 2,
        max_depth: int = 3,
        threads: int = 4,
    ) -> None:
        assert isinstance(seed, int), "seed should be int"
        assert isinstance(count, int), "count should be int"
        assert count >= 1, "count should be >= 1"
        assert 1 <= max_vars <= 4, "max_vars should be in 1..4"
        assert 1 <= max_threads <= 3, "max_threads should be in 1..3"
        assert 0 <= max_loop_bound <= 2, "max_loop_bound should be in 0..2"
        assert 0 <= max_depth <= 4, "max_depth should be in 0..4"
        assert threads >= 1, "threads should be >= 1"
        self.seed = seed
        self.count = count
        self.max_vars = max_vars
        self.max_threads = max_threads
        self.max_loop_bound = max_loop_bound
        self.max_depth = max_depth
        self.threads = threads


class _Generator:

    def __init__(self, cfg: FuzzConfig, rng: random.Random) -> None:
        self._cfg = cfg
        self._rng = rng
        self._vars = DATA_VARS[:cfg.max_vars]
        self._counters = 0

    def var(self) -> str:
        return self._rng.choice(self._vars)

    def prob(self) -> Fraction:
        return self._rng.choice(PROBS)

    def aexpr(self) -> AExpr:
        roll = self._rng.random()
        if roll < 0.3:
            return Num(self._rng.randint(0, 3))
        if roll < 0.8:
            return Var(self.var())
        return BinOp(Var(self.var()), self._rng.choice("+-*"), Num(self._rng.randint(0, 2)))

    def bexpr(self, depth: int = 0) -> BExpr:
        roll = self._rng.random()
        if roll < 0.1:
            return BoolConst(self._rng.random() < 0.5)
        if depth < 1 and roll < 0.2:
            return Not(self.bexpr(depth + 1))
        if depth < 1 and roll < 0.3:
            return Logic(self.bexpr(depth + 1), self._rng.choice(("&&", "||")), self.bexpr(depth + 1))
        if roll < 0.55:
            return Compare(Var(self.var()), "==", Var(self.var()))
        return Compare(Var(self.var()), "<=", Num(self._rng.randint(0, 2)))

    def simple(self) -> Stmt:
        kind = self._rng.choice(("assign", "addr", "addr", "deref", "store", "skip"))
        if kind == "assign":
            return Assign(self.var(), self.aexpr())
        if kind == "addr":
            return AddrAssign(self.var(), self.var())
        if kind == "deref":
            return DerefAssign(self.var(), self.var())
        if kind == "store":
            return StarAssign(self.var(), self.aexpr())
        return Skip()

    def block(self, depth: int) -> Stmt:
        return seq(*(self.stmt(depth) for _ in range(self._rng.randint(1, 3))))

    def loop(self, depth: int) -> Stmt:
        counter = f"i{self._counters}"
        self._counters += 1
        bound = self._rng.randint(0, self._cfg.max_loop_bound)
        trips = self._rng.randint(0, bound)
        step = Assign(counter, BinOp(Var(counter), "+", Num(1)))
        cond = Compare(BinOp(Var(counter), "+", Num(1)), "<=", Num(trips))
        return seq(Assign(counter, Num(0)), While(cond, bound, seq(self.block(depth), step)))

    def threads(self) -> int:
        return self._rng.randint(1, self._cfg.max_threads)

    def stmt(self, depth: int) -> Stmt:
        if depth >= self._cfg.max_depth or self._rng.random() < 0.5:
            return self.simple()
        kinds = ("if", "while", "par", "parif", "parfor") if self._cfg.max_threads >= 2 else ("if", "while", "parif")
        kind = self._rng.choice(kinds)
        if kind == "if":
            return If(self.bexpr(), self.prob(), self.block(depth + 1), self.block(depth + 1))
        if kind == "while":
            return self.loop(depth + 1)
        if kind == "par":
            # A par needs two threads to be written down.
            threads = self._rng.randint(2, self._cfg.max_threads)
            return Par(tuple(self.block(depth + 1) for _ in range(threads)))
        if kind == "parif":
            return ParIf(tuple(Arm(self.bexpr(), self.prob(), self.block(depth + 1)) for _ in range(self.threads())))
        return ParFor(self.threads(), self.block(depth + 1))


def count_paths(stmt: Stmt) -> int:
    """
    An upper bound on the number of paths :func:`probpts.interp.run` explores for ``stmt``, assuming every loop runs
    to its annotated bound.
    """
    if isinstance(stmt, Seq):
        return count_paths(stmt.first) * count_paths(stmt.second)
    if isinstance(stmt, If):
        return max(count_paths(stmt.then), count_paths(stmt.orelse))
    if isinstance(stmt, While):
        return count_paths(stmt.body) ** stmt.bound
    if isinstance(stmt, Par):
        total = factorial(len(stmt.threads))
        for thread in stmt.threads:
            total *= count_paths(thread)
        return total
    if isinstance(stmt, ParIf):
        total = factorial(len(stmt.arms))
        for arm in stmt.arms:
            total *= count_paths(arm.body)
        return total
    if isinstance(stmt, ParFor):
        return factorial(stmt.count) * count_paths(stmt.body) ** stmt.count
    return 1


def generate_program(cfg: FuzzConfig, index: int) -> Program:
    """
    Generates case ``index`` of the run configured by ``cfg``.
    """
    rng = random.Random(f"{cfg.seed}:{index}")
    while True:
        generator = _Generator(cfg, rng)
        body = seq(*(generator.stmt(0) for _ in range(rng.randint(1, 4))))
        if count_paths(body) <= PATH_BUDGET:
            return make_program(body)
        logger.debug("Case %d: redrawing, too many paths", index)


@dataclass(frozen=True)
class FuzzCase:
    index: int
    program: Program
    verdict: str
    counterexample: Optional[Counterexample] = None
    error: Optional[str] = None


@dataclass
class FuzzSummary:
    seed: int
    cases: List[FuzzCase] = field(default_factory=list)

    def count(self, verdict: str) -> int:
        return sum(1 for case in self.cases if case.verdict == verdict)

    @property
    def failures(self) -> List[FuzzCase]:
        return [case for case in self.cases if case.verdict == FAIL]

    @property
    def exit_code(self) -> int:
        return 3 if self.failures else 0

    def format(self) -> str:
        lines = [
            f"seed: {self.seed}",
            f"cases: {len(self.cases)}",
            f"passed: {self.count(PASS)}",
            f"failed: {self.count(FAIL)}",
            f"inconclusive: {self.count(INCONCLUSIVE)}",
            f"errors: {self.count(ERROR)}",
        ]
        for case in self.failures[:1]:
            lines.append("")
            lines.append(f"first failure: seed {self.seed} case {case.index}")
            lines.append(str(case.counterexample))
            lines.append(render(case.program))
        return "\n".join(lines)


def _check_case(cfg: FuzzConfig, analyzer_cfg: AnalyzerConfig, run_cfg: RunConfig, index: int) -> FuzzCase:
    program = generate_program(cfg, index)
    try:
        result = check_program(program, analyzer_cfg=analyzer_cfg, run_cfg=run_cfg)
    except (AnalysisError, PermutationCapError) as ex:
        logger.warning("Case %d: %s", index, ex)
        return FuzzCase(index, program, ERROR, error=str(ex))
    logger.debug("Case %d: %s", index, result.verdict)
    return FuzzCase(index, program, result.verdict, result.counterexample)


def run_fuzz(
    cfg: Optional[FuzzConfig] = None,
    analyzer_cfg: Optional[AnalyzerConfig] = None,
    run_cfg: Optional[RunConfig] = None,
    executor: Optional[Executor] = None,
) -> FuzzSummary:
    """
    Generates and checks ``cfg.count`` programs. Cases are checked on ``executor``, which defaults to a
    :class:`~concurrent.futures.ThreadPoolExecutor` of ``cfg.threads`` threads, and summarized in case order.
    """
    cfg = cfg or FuzzConfig()
    check_case = partial(_check_case, cfg, analyzer_cfg or AnalyzerConfig(), run_cfg or RunConfig())
    logger.info("Fuzzing %d cases from seed %d", cfg.count, cfg.seed)
    if executor is None:
        with ThreadPoolExecutor(cfg.threads) as owned:
            cases = list(owned.map(check_case, range(cfg.count)))
    else:
        cases = list(executor.map(check_case, range(cfg.count)))
    summary = FuzzSummary(cfg.seed, cases)
    logger.info("Fuzzed %d cases, %d failed", len(cases), len(summary.failures))
    return summary


DEFAULTS = {}
DEFAULTS.update(FuzzConfig.__init__.__kwdefaults__)  # type: ignore

HELP = {
    "seed": "Seed of the generated program sequence. Defaults to ``{seed!r}``.".format_map(DEFAULTS),
    "count": "Number of programs to generate and check. Defaults to ``{count!r}``.".format_map(DEFAULTS),
    "max_vars": "Number of data variables, at most 4. Defaults to ``{max_vars!r}``.".format_map(DEFAULTS),
    "max_threads": (
        "Maximum number of threads per ``par``, ``parif`` or ``parfor``, at most 3. Defaults to ``{max_threads!r}``."
    ).format_map(DEFAULTS),
    "max_loop_bound": "Maximum loop bound, at most 2. Defaults to ``{max_loop_bound!r}``.".format_map(DEFAULTS),
    "max_depth": "Maximum statement nesting depth, at most 4. Defaults to ``{max_depth!r}``.".format_map(DEFAULTS),
    "threads": "Number of threads checking cases. Defaults to ``{threads!r}``.".format_map(DEFAULTS),
}


if __debug__:
    assert FuzzConfig.__doc__ is not None
    FuzzConfig.__doc__ = FuzzConfig.__doc__.format_map(HELP)
