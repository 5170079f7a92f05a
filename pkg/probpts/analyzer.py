"""
Probabilistic points-to analysis
================================

.. currentmodule:: probpts.analyzer

:func:`analyze_program` computes, for every statement of a program, the points-to type holding before and after it.
The analysis is a deterministic, syntax-directed type derivation ``S: pts -> pts'``:

-   ``x := e`` gives ``x`` the type of ``e``: the type of ``y`` if ``e`` is the variable ``y``, else the empty set.
-   ``x := &y`` gives ``x`` the set ``{(y', 1)}``.
-   ``x := *y`` joins, weighted by ``y``'s probabilities, the types ``x`` would get from copying each target of ``y``.
-   ``*x := e`` updates every target ``z`` of ``x`` to the join of its old type (weighted by ``1 - p``) and the type
    of ``e`` (weighted by ``p``), where ``p`` is the probability that ``x`` points to ``z``.
-   ``if`` joins both branches, weighted by the annotated probability.
-   ``while (b) @n`` averages the first ``n`` iterates of the body. In ``safe`` mode the type before the loop joins the
    average as a zero-iteration iterate. In ``paper`` mode it does not, and a loop that runs zero times can then
    reach a state the result does not model.
-   ``par`` solves the mutually recursive thread equations by Jacobi iteration: every thread is analyzed from the
    equal-weight join of the type before the ``par`` and the other threads' results, until a round changes nothing,
    or changes probabilities only. Supports still changing at the round cap are an error.
-   ``parif`` is analyzed as a ``par`` of guarded ``if`` statements. ``parfor @n`` takes the least upper bound of
    ``par`` over ``1..n`` copies of its body.

A dereference whose pointer may hold no address is analyzed as best the rules allow, and a warning is recorded, since
the program aborts there when the pointer holds an integer.

A statement analyzed in several contexts (loop iterates, ``parfor`` copies) records the least upper bound of every
context as its type. A statement the analysis never reaches (the body of a loop bounded by ``@0``) records bottom.


API reference
-------------

.. autoclass:: AnalyzerConfig

.. autoclass:: AnalysisResult
    :members:

.. autofunction:: analyze_program

.. autofunction:: transfer

.. autofunction:: solve_par

.. autofunction:: check_leq_judgment

.. autoexception:: AnalysisError
"""
import logging
from fractions import Fraction
from types import MappingProxyType
from typing import Dict, List, Optional, Sequence, Tuple
from probpts.lattice import AddrProbSet, Address, PtsType, bottom, equiv, leq, lub, nabla
from probpts.syntax import (
    SYNTHETIC, AExpr, Var, Program, Stmt,
    Assign, AddrAssign, StarAssign, DerefAssign, Skip, Seq, If, While, Par, ParIf, ParFor,
    describe, desugar_parif, replicate, walk,
)


logger = logging.getLogger(__name__)

WHILE_MODES = ("paper", "safe")


class AnalysisError(RuntimeError):

    """
    Raised when the threads of a ``par`` reach no fixpoint, not even on supports, within ``par_round_cap`` rounds.
    """


class AnalyzerConfig:

    """
    Options for :func:`analyze_program`.

    :param str while_mode: {while_mode}
    :param int par_round_cap: {par_round_cap}
    :param bool parfor_stabilize: {parfor_stabilize}
    """

    def __init__(
        self,
        *,
        while_mode: str = "safe",
        par_round_cap: int = 16,
        parfor_stabilize: bool = True,
    ) -> None:
        assert while_mode in WHILE_MODES, f"while_mode should be one of {', '.join(WHILE_MODES)}"
        assert isinstance(par_round_cap, int), "par_round_cap should be int"
        assert par_round_cap >= 2, "par_round_cap should be >= 2"
        self.while_mode = while_mode
        self.par_round_cap = par_round_cap
        self.parfor_stabilize = parfor_stabilize


class AnalysisResult:

    """
    The points-to types recorded at every program point, plus any warnings.

    A ``scratch`` result collects warnings without logging them. They are logged once merged into a result that is
    not scratch.
    """

    def __init__(self, *, scratch: bool = False) -> None:
        self._visits: Dict[int, Tuple[List[PtsType], List[PtsType]]] = {}
        self._scratch = scratch
        self.warnings: List[str] = []
        self.final: Optional[PtsType] = None

    def record(self, stmt: Stmt, pre: PtsType, post: PtsType) -> None:
        if stmt.label == SYNTHETIC:
            return
        pres, posts = self._visits.setdefault(stmt.label, ([], []))
        pres.append(pre)
        posts.append(post)

    def warn(self, message: str) -> None:
        if message not in self.warnings:
            if not self._scratch:
                logger.warning("%s", message)
            self.warnings.append(message)

    def merge(self, other: "AnalysisResult") -> None:
        for label, (pres, posts) in other._visits.items():
            mine = self._visits.setdefault(label, ([], []))
            mine[0].extend(pres)
            mine[1].extend(posts)
        for message in other.warnings:
            self.warn(message)

    def __contains__(self, label: object) -> bool:
        return label in self._visits

    @property
    def pre(self) -> Dict[int, PtsType]:
        """
        The type holding before each statement, by label.
        """
        return {label: _join(pres) for label, (pres, _) in sorted(self._visits.items())}

    @property
    def post(self) -> Dict[int, PtsType]:
        """
        The type holding after each statement, by label.
        """
        return {label: _join(posts) for label, (_, posts) in sorted(self._visits.items())}


def _join(types: Sequence[PtsType]) -> PtsType:
    first = types[0]
    if all(pts == first for pts in types):
        return first
    return lub(types)


def _where(stmt: Stmt) -> str:
    return f"line {stmt.span[0]}: {describe(stmt)}"


def type_aexpr(expr: AExpr, pts: PtsType) -> AddrProbSet:
    """
    The addresses ``expr`` may evaluate to. Only a variable can evaluate to an address.
    """
    if isinstance(expr, Var):
        return pts[expr.name]
    return MappingProxyType({})


def _transfer_deref(stmt: DerefAssign, pts: PtsType, out: AnalysisResult) -> PtsType:
    targets = pts[stmt.source]
    if not targets:
        out.warn(f"{_where(stmt)}: {stmt.source} may hold no address, possible abort")
        return pts.update({stmt.target: {}})
    copies = [(pts.update({stmt.target: pts[addr.of]}), prob) for addr, prob in targets.items()]
    return pts.update({stmt.target: nabla(copies)[stmt.target]})


def _transfer_store(stmt: StarAssign, pts: PtsType, out: AnalysisResult) -> PtsType:
    targets = pts[stmt.target]
    if not targets:
        out.warn(f"{_where(stmt)}: {stmt.target} may hold no address, possible abort")
        return pts
    value = type_aexpr(stmt.expr, pts)
    changes: Dict[str, AddrProbSet] = {}
    # Every update reads the type before the statement.
    for addr, prob in targets.items():
        assigned = pts.update({addr.of: value})
        changes[addr.of] = nabla([(pts, 1 - prob), (assigned, prob)])[addr.of]
    return pts.update(changes)


def _transfer_while(stmt: While, pts: PtsType, cfg: AnalyzerConfig, out: AnalysisResult) -> PtsType:
    if stmt.bound == 0:
        return pts
    iterates: List[PtsType] = []
    current = pts
    for _ in range(stmt.bound):
        current = transfer(stmt.body, current, cfg, out)
        iterates.append(current)
    if cfg.while_mode == "safe":
        iterates.insert(0, pts)
    weight = Fraction(1, len(iterates))
    return nabla([(iterate, weight) for iterate in iterates])


def _transfer_parfor(stmt: ParFor, pts: PtsType, cfg: AnalyzerConfig, out: AnalysisResult) -> PtsType:
    posts = [
        solve_par(replicate(stmt.body, copies).threads, pts, cfg, out)
        for copies in range(1, stmt.count + 1)
    ]
    if cfg.parfor_stabilize and stmt.count >= 2 and not equiv(posts[-2], posts[-1]):
        out.warn(f"{_where(stmt)}: supports still growing at {stmt.count} copies")
    return lub(posts)


def _transfer_seq(stmt: Seq, pts: PtsType, cfg: AnalyzerConfig, out: AnalysisResult) -> PtsType:
    # Walks the right-nested chain in a loop. The inner Seq nodes are recorded here, the outermost by transfer().
    inner: List[Tuple[Seq, PtsType]] = []
    link: Stmt = stmt
    while isinstance(link, Seq):
        if link is not stmt:
            inner.append((link, pts))
        pts = transfer(link.first, pts, cfg, out)
        link = link.second
    post = transfer(link, pts, cfg, out)
    for node, pre in inner:
        out.record(node, pre, post)
    return post


def _transfer(stmt: Stmt, pts: PtsType, cfg: AnalyzerConfig, out: AnalysisResult) -> PtsType:
    if isinstance(stmt, Assign):
        return pts.update({stmt.target: type_aexpr(stmt.expr, pts)})
    if isinstance(stmt, AddrAssign):
        return pts.update({stmt.target: {Address(stmt.source): Fraction(1)}})
    if isinstance(stmt, DerefAssign):
        return _transfer_deref(stmt, pts, out)
    if isinstance(stmt, StarAssign):
        return _transfer_store(stmt, pts, out)
    if isinstance(stmt, Skip):
        return pts
    if isinstance(stmt, Seq):
        return _transfer_seq(stmt, pts, cfg, out)
    if isinstance(stmt, If):
        then = transfer(stmt.then, pts, cfg, out)
        orelse = transfer(stmt.orelse, pts, cfg, out)
        return nabla([(then, stmt.prob), (orelse, 1 - stmt.prob)])
    if isinstance(stmt, While):
        return _transfer_while(stmt, pts, cfg, out)
    if isinstance(stmt, Par):
        return solve_par(stmt.threads, pts, cfg, out)
    if isinstance(stmt, ParIf):
        return solve_par(desugar_parif(stmt).threads, pts, cfg, out)
    if isinstance(stmt, ParFor):
        return _transfer_parfor(stmt, pts, cfg, out)
    raise AssertionError(f"unknown statement {stmt!r}")


def transfer(stmt: Stmt, pts: PtsType, cfg: AnalyzerConfig, out: AnalysisResult) -> PtsType:
    """
    The type after ``stmt`` when ``pts`` holds before it. Records both types under the label of ``stmt`` in ``out``.
    """
    post = _transfer(stmt, pts, cfg, out)
    out.record(stmt, pts, post)
    return post


def _thread_inputs(pts: PtsType, solutions: Sequence[PtsType]) -> List[PtsType]:
    weight = Fraction(1, len(solutions))
    return [
        nabla([(pts, weight)] + [(other, weight) for j, other in enumerate(solutions) if j != i])
        for i in range(len(solutions))
    ]


def solve_par(threads: Sequence[Stmt], pts: PtsType, cfg: AnalyzerConfig, out: AnalysisResult) -> PtsType:
    """
    Analyzes fork-join threads. Each thread ``i`` gets the type ``pts_i`` satisfying
    ``S_i: nabla((pts, 1/n), (pts_j, 1/n) for j != i) -> pts_i``, found by Jacobi iteration from ``pts_i = pts``. The
    result is the equal-weight join of the ``pts_i``.

    Iteration stops at the first round that leaves every ``pts_i`` unchanged. From the second round on, it also
    stops, with a warning, at a round that changes probabilities but no support.

    :raises AnalysisError: if supports are still changing after ``cfg.par_round_cap`` rounds.
    """
    assert threads, "par should have at least one thread"
    solutions = [pts] * len(threads)
    where = f"line {threads[0].span[0]}: par"
    for rounds in range(1, cfg.par_round_cap + 1):
        # Each round analyzes against a scratch result, and only the last round is kept.
        scratch = AnalysisResult(scratch=True)
        updated = [
            transfer(thread, thread_pts, cfg, scratch)
            for thread, thread_pts in zip(threads, _thread_inputs(pts, solutions))
        ]
        converged = updated == solutions
        stable = all(equiv(new, old) for new, old in zip(updated, solutions))
        solutions = updated
        if converged:
            logger.debug("%s: converged after %d rounds", where, rounds)
            break
        if stable and rounds >= 2:
            out.warn(f"{where}: probabilities still changing after {rounds} rounds, supports are stable")
            break
    else:
        raise AnalysisError(f"{where}: no fixpoint within {cfg.par_round_cap} rounds")
    out.merge(scratch)
    weight = Fraction(1, len(solutions))
    return nabla([(solution, weight) for solution in solutions])


def analyze_program(
    program: Program,
    pre: Optional[PtsType] = None,
    cfg: Optional[AnalyzerConfig] = None,
) -> AnalysisResult:
    """
    Analyzes ``program`` from ``pre``, which defaults to bottom.

    :raises AnalysisError: if a ``par`` reaches no fixpoint.
    """
    cfg = cfg or AnalyzerConfig()
    if pre is None:
        pre = bottom(program.vars)
    out = AnalysisResult()
    out.final = transfer(program.body, pre, cfg, out)
    empty = bottom(pre.vars)
    for stmt in walk(program.body):
        if stmt.label not in out:
            out.record(stmt, empty, empty)
    logger.debug("Analyzed %d program points in %s mode", len(out._visits), cfg.while_mode)
    return out


def check_leq_judgment(pre_weak: PtsType, pre: PtsType, post: PtsType, post_weak: PtsType) -> bool:
    """
    Whether a derivation ``S: pre -> post`` justifies ``S: pre_weak -> post_weak`` by subsumption.
    """
    return leq(pre_weak, pre) and leq(post, post_weak)


DEFAULTS = {}
DEFAULTS.update(AnalyzerConfig.__init__.__kwdefaults__)  # type: ignore

HELP = {
    "while_mode": (
        "How loops are analyzed: ``safe`` joins the zero-iteration case into the loop's type, ``paper`` averages the "
        "body iterates only. Defaults to ``{while_mode!r}``."
    ).format_map(DEFAULTS),
    "par_round_cap": (
        "Maximum number of Jacobi rounds when solving the threads of a ``par``. Defaults to ``{par_round_cap!r}``."
    ).format_map(DEFAULTS),
    "parfor_stabilize": (
        "Warn when the supports of a ``parfor`` still grow between its last two copy counts. "
        "Defaults to ``{parfor_stabilize!r}``."
    ).format_map(DEFAULTS),
}


if __debug__:
    assert AnalyzerConfig.__doc__ is not None
    AnalyzerConfig.__doc__ = AnalyzerConfig.__doc__.format_map(HELP)
