"""
Reference interpreter
=====================

.. currentmodule:: probpts.interp

:mod:`probpts.interp` executes programs over *weighted states*: a concrete store paired with the probability weight
of the execution path that reached it. It is the oracle that the analysis is checked against.

-   Expressions evaluate to an integer, an address, a boolean, or the failure marker :data:`FAIL`. Arithmetic and
    ``<=`` fail on addresses, ``==`` compares any two values, and ``&&`` / ``||`` evaluate both sides.
-   Assignments keep the weight. An unsafe dereference, or a failing expression, aborts the path.
-   ``if`` scales the weight of the branch it takes by the annotated probability ``p`` (then) or ``1 - p`` (else).
    The branch itself is chosen by the concrete condition.
-   ``while`` follows the concrete condition and ignores its bound. Every iteration consumes one unit of fuel, and a
    path that runs out of fuel ends in :class:`OutOfFuel`.
-   ``par`` runs its threads *whole*, one after another, in every one of the ``n!`` orders, scaling each order's
    weight by ``1/n!``. Threads never interleave at statement granularity.
-   ``parif`` runs as a ``par`` of guarded ``if`` statements, and ``parfor @n`` as a ``par`` of ``n`` copies.

:func:`run` returns the multiset of outcomes as a list, in a deterministic order. Aborted and out-of-fuel paths carry
the weight they had reached.


API reference
-------------

.. autoclass:: RunConfig

.. autofunction:: run

.. autofunction:: total_mass

.. autofunction:: aggregate

.. autoexception:: PermutationCapError
"""
import enum
import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from math import factorial
from typing import Deque, Dict, List, Optional, Sequence, Tuple, Union
from probpts.lattice import Address, Env, Value
from probpts.syntax import (
    AExpr, BExpr, BinOp, BoolConst, Compare, Logic, Not, Num, Var,
    Stmt, Assign, AddrAssign, StarAssign, DerefAssign, Skip, Seq, If, While, Par, ParIf, ParFor,
    desugar_parif, replicate,
)
from probpts.utils import Prob


logger = logging.getLogger(__name__)


class Fail(enum.Enum):
    FAIL = "!"


FAIL = Fail.FAIL

EvalResult = Union[Value, bool, Fail]


class PermutationCapError(RuntimeError):

    """
    Raised when a ``par`` has more threads than the configured ``permutation_cap``.
    """


@dataclass(frozen=True)
class WeightedEnv:
    env: Env
    weight: Prob


@dataclass(frozen=True)
class Final(WeightedEnv):
    pass


@dataclass(frozen=True)
class Abort:
    weight: Prob = Fraction(1)


@dataclass(frozen=True)
class OutOfFuel:
    weight: Prob = Fraction(1)


Outcome = Union[Final, Abort, OutOfFuel]


class RunConfig:

    """
    Limits for :func:`run`.

    :param int fuel: {fuel}
    :param int permutation_cap: {permutation_cap}
    """

    def __init__(self, *, fuel: int = 1000, permutation_cap: int = 6) -> None:
        assert isinstance(fuel, int), "fuel should be int"
        assert fuel >= 1, "fuel should be >= 1"
        assert isinstance(permutation_cap, int), "permutation_cap should be int"
        assert permutation_cap >= 1, "permutation_cap should be >= 1"
        self.fuel = fuel
        self.permutation_cap = permutation_cap


def eval_aexpr(expr: AExpr, env: Env) -> Union[Value, Fail]:
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        return env[expr.name]
    left = eval_aexpr(expr.left, env)
    right = eval_aexpr(expr.right, env)
    if not isinstance(left, int) or not isinstance(right, int):
        return FAIL
    if expr.op == "+":
        return left + right
    if expr.op == "-":
        return left - right
    return left * right


def eval_bexpr(expr: BExpr, env: Env) -> Union[bool, Fail]:
    if isinstance(expr, BoolConst):
        return expr.value
    if isinstance(expr, Not):
        operand = eval_bexpr(expr.operand, env)
        return FAIL if operand is FAIL else not operand
    if isinstance(expr, Compare):
        left = eval_aexpr(expr.left, env)
        right = eval_aexpr(expr.right, env)
        if expr.op == "==":
            if left is FAIL or right is FAIL:
                return FAIL
            return left == right
        if not isinstance(left, int) or not isinstance(right, int):
            return FAIL
        return left <= right
    assert isinstance(expr, Logic)
    # Both sides are evaluated, so a failure on either side fails the whole.
    lhs = eval_bexpr(expr.left, env)
    rhs = eval_bexpr(expr.right, env)
    if lhs is FAIL or rhs is FAIL:
        return FAIL
    return (lhs and rhs) if expr.op == "&&" else (lhs or rhs)


# A path is an outcome together with the fuel left on it.
Path = Tuple[Outcome, int]


def _assign(name: str, value: Union[Value, Fail], env: Env, weight: Prob) -> Outcome:
    if value is FAIL:
        return Abort(weight)
    assert not isinstance(value, Fail)
    return Final(env.set(name, value), weight)


def _then(paths: Sequence[Path], stmt: Stmt, cfg: RunConfig) -> List[Path]:
    # Runs stmt after every final path, passing the other outcomes through.
    results: List[Path] = []
    for outcome, fuel in paths:
        if isinstance(outcome, Final):
            results.extend(_exec(stmt, outcome.env, outcome.weight, fuel, cfg))
        else:
            results.append((outcome, fuel))
    return results


def _exec_par(threads: Sequence[Stmt], env: Env, weight: Prob, fuel: int, cfg: RunConfig) -> List[Path]:
    if len(threads) > cfg.permutation_cap:
        raise PermutationCapError(
            f"par with {len(threads)} threads exceeds permutation_cap {cfg.permutation_cap}"
        )
    share = weight * Fraction(1, factorial(len(threads)))
    results: List[Path] = []
    for order in permutations(range(len(threads))):
        paths: List[Path] = [(Final(env, share), fuel)]
        for index in order:
            paths = _then(paths, threads[index], cfg)
        results.extend(paths)
    return results


def _exec_while(stmt: While, env: Env, weight: Prob, fuel: int, cfg: RunConfig) -> List[Path]:
    results: List[Path] = []
    pending: Deque[Tuple[Env, Prob, int]] = deque([(env, weight, fuel)])
    while pending:
        env, weight, fuel = pending.popleft()
        cond = eval_bexpr(stmt.cond, env)
        if cond is FAIL:
            results.append((Abort(weight), fuel))
        elif not cond:
            results.append((Final(env, weight), fuel))
        elif fuel == 0:
            results.append((OutOfFuel(weight), 0))
        else:
            for outcome, left in _exec(stmt.body, env, weight, fuel - 1, cfg):
                if isinstance(outcome, Final):
                    pending.append((outcome.env, outcome.weight, left))
                else:
                    results.append((outcome, left))
    return results


def _exec(stmt: Stmt, env: Env, weight: Prob, fuel: int, cfg: RunConfig) -> List[Path]:
    if isinstance(stmt, Assign):
        return [(_assign(stmt.target, eval_aexpr(stmt.expr, env), env, weight), fuel)]
    if isinstance(stmt, AddrAssign):
        return [(Final(env.set(stmt.target, Address(stmt.source)), weight), fuel)]
    if isinstance(stmt, StarAssign):
        pointer = env[stmt.target]
        if not isinstance(pointer, Address):
            return [(Abort(weight), fuel)]
        return [(_assign(pointer.of, eval_aexpr(stmt.expr, env), env, weight), fuel)]
    if isinstance(stmt, DerefAssign):
        pointer = env[stmt.source]
        if not isinstance(pointer, Address):
            return [(Abort(weight), fuel)]
        return [(Final(env.set(stmt.target, env[pointer.of]), weight), fuel)]
    if isinstance(stmt, Skip):
        return [(Final(env, weight), fuel)]
    if isinstance(stmt, Seq):
        paths: List[Path] = [(Final(env, weight), fuel)]
        link: Stmt = stmt
        while isinstance(link, Seq):
            paths = _then(paths, link.first, cfg)
            link = link.second
        return _then(paths, link, cfg)
    if isinstance(stmt, If):
        cond = eval_bexpr(stmt.cond, env)
        if cond is FAIL:
            return [(Abort(weight), fuel)]
        if cond:
            return _exec(stmt.then, env, weight * stmt.prob, fuel, cfg)
        return _exec(stmt.orelse, env, weight * (1 - stmt.prob), fuel, cfg)
    if isinstance(stmt, While):
        return _exec_while(stmt, env, weight, fuel, cfg)
    if isinstance(stmt, Par):
        return _exec_par(stmt.threads, env, weight, fuel, cfg)
    if isinstance(stmt, ParIf):
        return _exec_par(desugar_parif(stmt).threads, env, weight, fuel, cfg)
    if isinstance(stmt, ParFor):
        return _exec_par(replicate(stmt.body, stmt.count).threads, env, weight, fuel, cfg)
    raise AssertionError(f"unknown statement {stmt!r}")


def run(stmt: Stmt, start: WeightedEnv, cfg: Optional[RunConfig] = None) -> List[Outcome]:
    """
    Runs ``stmt`` from ``start``, exploring every serialization of every ``par``.

    :raises PermutationCapError: if a ``par`` has more threads than ``cfg.permutation_cap``.
    """
    cfg = cfg or RunConfig()
    outcomes = [outcome for outcome, _ in _exec(stmt, start.env, start.weight, cfg.fuel, cfg)]
    logger.debug("Run produced %d outcomes", len(outcomes))
    return outcomes


def total_mass(outcomes: Sequence[Outcome]) -> Prob:
    """
    The summed weight of the final outcomes.
    """
    return sum((outcome.weight for outcome in outcomes if isinstance(outcome, Final)), Fraction(0))


@dataclass
class Summary:
    finals: Dict[Env, Prob] = field(default_factory=dict)
    abort: Prob = Fraction(0)
    out_of_fuel: Prob = Fraction(0)
    aborts: int = 0
    out_of_fuels: int = 0

    @property
    def total(self) -> Prob:
        return sum(self.finals.values(), Fraction(0))


def aggregate(outcomes: Sequence[Outcome]) -> Summary:
    """
    Sums the weights of identical final environments, keeping them in order of first occurrence.
    """
    summary = Summary()
    for outcome in outcomes:
        if isinstance(outcome, Final):
            summary.finals[outcome.env] = summary.finals.get(outcome.env, Fraction(0)) + outcome.weight
        elif isinstance(outcome, Abort):
            summary.abort += outcome.weight
            summary.aborts += 1
        else:
            summary.out_of_fuel += outcome.weight
            summary.out_of_fuels += 1
    return summary


DEFAULTS = {}
DEFAULTS.update(RunConfig.__init__.__kwdefaults__)  # type: ignore

HELP = {
    "fuel": (
        "Maximum number of loop iterations along one execution path. Defaults to ``{fuel!r}``."
    ).format_map(DEFAULTS),
    "permutation_cap": (
        "Maximum number of threads in a ``par`` the interpreter will serialize in every order. "
        "Defaults to ``{permutation_cap!r}``."
    ).format_map(DEFAULTS),
}


if __debug__:
    assert RunConfig.__doc__ is not None
    RunConfig.__doc__ = RunConfig.__doc__.format_map(HELP)
