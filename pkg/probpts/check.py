"""
Soundness checking
==================

.. currentmodule:: probpts.check

:func:`check_program` tests the analysis against the interpreter on one program. It analyzes the program, runs it
from the initial environment, exploring every ``par`` serialization, and checks that every final environment is
modelled by the analysis's post type: each address a variable holds at the end must lie in that variable's support.

The initial environment is all zeros unless bindings such as ``x=3,y=&z`` are given. An initialized address widens the
pre type, so ``y=&z`` starts the analysis with ``y`` pointing to ``z'`` with probability ``1``.

The verdict is one of:

``pass``
    Every final environment is modelled by the post type, and no path ran out of fuel.

``fail``
    Some final environment holds an address outside the post type. The first such environment is reported.

``inconclusive``
    No final environment escapes the post type, but a path ran out of fuel, so not every execution was checked.


API reference
-------------

.. autofunction:: check_program

.. autofunction:: parse_init

.. autofunction:: initial_pts

.. autoclass:: CheckResult
    :members:

.. autoexception:: InitError
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Optional, Sequence, Tuple
from probpts.analyzer import AnalysisResult, AnalyzerConfig, analyze_program
from probpts.interp import Final, OutOfFuel, Outcome, RunConfig, WeightedEnv, run
from probpts.lattice import Address, Env, PtsType, dump_env, format_env, violations
from probpts.syntax import Program
from probpts.utils import Prob, format_prob


logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

EXIT_CODES = {
    PASS: 0,
    FAIL: 3,
    INCONCLUSIVE: 4,
}


class InitError(ValueError):

    """
    Raised when initial bindings are malformed, or name a variable the program does not use.
    """


def parse_init(text: str, names: Sequence[str]) -> Env:
    """
    Parses bindings like ``x=3,y=&z`` into an environment over ``names``. Unbound variables are ``0``.

    :raises InitError: if a binding is malformed or names an unknown variable.
    """
    env = Env.zeros(names)
    for item in filter(None, (item.strip() for item in text.split(","))):
        name, sep, value = (part.strip() for part in item.partition("="))
        if not sep or not name or not value:
            raise InitError(f"binding {item!r} should have format 'x=3' or 'x=&y'")
        if name not in env:
            raise InitError(f"unknown variable {name!r}")
        if value.startswith("&"):
            target = value[1:].strip()
            if target not in env:
                raise InitError(f"unknown variable {target!r} in {item!r}")
            env = env.set(name, Address(target))
        else:
            try:
                env = env.set(name, int(value))
            except ValueError:
                raise InitError(f"invalid value {value!r} for {name}") from None
    return env


def initial_pts(env: Env) -> PtsType:
    """
    The pre type modelling ``env``: every address ``env`` holds has probability ``1``, and nothing else is stored.
    """
    return PtsType({
        name: {value: Fraction(1)} if isinstance(value, Address) else {}
        for name, value in env.items()
    })


@dataclass(frozen=True)
class Counterexample:
    env: Env
    weight: Prob
    escaped: Tuple[Tuple[str, Address], ...]

    def __str__(self) -> str:
        escaped = ", ".join(f"{name}={addr}" for name, addr in self.escaped)
        return f"final state {{{format_env(self.env)}}} with weight {format_prob(self.weight)} escapes at {escaped}"

    def dump(self) -> Dict[str, Any]:
        return {
            "env": dump_env(self.env),
            "weight": format_prob(self.weight),
            "escaped": [[name, str(addr)] for name, addr in self.escaped],
        }


@dataclass(frozen=True)
class CheckResult:

    """
    The verdict of :func:`check_program`, with the analysis and outcomes it was drawn from.
    """

    verdict: str
    analysis: AnalysisResult
    outcomes: Tuple[Outcome, ...]
    counterexample: Optional[Counterexample] = None

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]


def check_program(
    program: Program,
    init: Optional[Env] = None,
    analyzer_cfg: Optional[AnalyzerConfig] = None,
    run_cfg: Optional[RunConfig] = None,
) -> CheckResult:
    """
    Checks that every final state of ``program`` run from ``init`` is modelled by the analysis's post type.

    :raises probpts.analyzer.AnalysisError: if a ``par`` reaches no fixpoint.
    :raises probpts.interp.PermutationCapError: if a ``par`` has too many threads to serialize.
    """
    env = init if init is not None else Env.zeros(program.vars)
    analysis = analyze_program(program, initial_pts(env), analyzer_cfg)
    post = analysis.final
    assert post is not None
    outcomes = tuple(run(program.body, WeightedEnv(env, Fraction(1)), run_cfg))
    for outcome in outcomes:
        if isinstance(outcome, Final):
            escaped = violations(outcome.env, post)
            if escaped:
                counterexample = Counterexample(outcome.env, outcome.weight, tuple(escaped))
                logger.info("Soundness violation: %s", counterexample)
                return CheckResult(FAIL, analysis, outcomes, counterexample)
    if any(isinstance(outcome, OutOfFuel) for outcome in outcomes):
        logger.info("Inconclusive: some paths ran out of fuel")
        return CheckResult(INCONCLUSIVE, analysis, outcomes)
    return CheckResult(PASS, analysis, outcomes)
