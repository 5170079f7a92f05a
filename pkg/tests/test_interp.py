import unittest
from fractions import Fraction
from math import factorial
from typing import Optional
from hypothesis import given, settings, strategies as st
from probpts.interp import (
    FAIL, Abort, Final, OutOfFuel, PermutationCapError, RunConfig, WeightedEnv,
    aggregate, eval_aexpr, eval_bexpr, run, total_mass,
)
from probpts.lattice import Address, Env, Value
from probpts.syntax import (
    BinOp, BoolConst, Compare, Logic, Not, Num, Par, Program, Var, Assign, AddrAssign, parse, walk,
)
from tests.base import (
    VARS, branching_programs, conservative_programs, load_program, straight_line_programs, straight_line_threads,
)


def start(program: Program, **values: object) -> WeightedEnv:
    env = Env.zeros(program.vars)
    for name, value in values.items():
        env = env.set(name, value)  # type: ignore
    return WeightedEnv(env, Fraction(1))


def execute(program: Program, cfg: Optional[RunConfig] = None, **values: object) -> list:
    return run(program.body, start(program, **values), cfg)


class EvalTest(unittest.TestCase):

    env = Env({"x": 3, "p": Address("x")})

    def testArithmetic(self) -> None:
        self.assertEqual(eval_aexpr(BinOp(Var("x"), "*", BinOp(Num(2), "-", Num(5))), self.env), -9)

    def testArithmeticOnAddress(self) -> None:
        self.assertIs(eval_aexpr(BinOp(Var("p"), "+", Num(1)), self.env), FAIL)

    def testVariableHoldsAddress(self) -> None:
        self.assertEqual(eval_aexpr(Var("p"), self.env), Address("x"))

    def testCompare(self) -> None:
        self.assertIs(eval_bexpr(Compare(Var("x"), "<=", Num(3)), self.env), True)
        self.assertIs(eval_bexpr(Compare(Var("p"), "<=", Num(3)), self.env), FAIL)
        self.assertIs(eval_bexpr(Compare(Var("p"), "==", Var("p")), self.env), True)
        self.assertIs(eval_bexpr(Compare(Var("p"), "==", Num(3)), self.env), False)

    def testLogicEvaluatesBothSides(self) -> None:
        failing = Compare(Var("p"), "<=", Num(0))
        self.assertIs(eval_bexpr(Logic(BoolConst(False), "&&", failing), self.env), FAIL)
        self.assertIs(eval_bexpr(Logic(BoolConst(True), "||", BoolConst(False)), self.env), True)
        self.assertIs(eval_bexpr(Not(failing), self.env), FAIL)
        self.assertIs(eval_bexpr(Not(BoolConst(True)), self.env), False)


class RunTest(unittest.TestCase):

    def testParallelSerializations(self) -> None:
        outcomes = execute(load_program("parallel.prog"))
        self.assertEqual(outcomes, [
            Final(Env({"a": Address("d"), "c": 0, "d": 0}), Fraction(1, 2)),
            Final(Env({"a": Address("c"), "c": 0, "d": 0}), Fraction(1, 2)),
        ])

    def testIfTakesConcreteBranch(self) -> None:
        program = parse("if (0 <= 0) @0.6 { b := &c; } else { b := &d; }")
        self.assertEqual(execute(program), [Final(Env({"b": Address("c"), "c": 0, "d": 0}), Fraction(3, 5))])

    def testIfElseBranch(self) -> None:
        program = parse("if (1 <= 0) @0.6 { b := &c; } else { b := &d; }")
        self.assertEqual(execute(program), [Final(Env({"b": Address("d"), "c": 0, "d": 0}), Fraction(2, 5))])

    def testAbort(self) -> None:
        self.assertEqual(execute(load_program("abort.prog")), [Abort(Fraction(1))])

    def testDerefAbortsOnInteger(self) -> None:
        self.assertEqual(execute(parse("x := *y;")), [Abort(Fraction(1))])

    def testStoreThroughPointer(self) -> None:
        outcomes = execute(parse("p := &x; *p := 7; y := *p;"))
        self.assertEqual(outcomes, [Final(Env({"p": Address("x"), "x": 7, "y": 7}), Fraction(1))])

    def testWhileIgnoresBound(self) -> None:
        outcomes = execute(parse("while (i <= 4) @1 { i := i + 1; }"))
        self.assertEqual(outcomes, [Final(Env({"i": 5}), Fraction(1))])

    def testOutOfFuel(self) -> None:
        outcomes = execute(load_program("spin.prog"), RunConfig(fuel=5))
        self.assertEqual(outcomes, [OutOfFuel(Fraction(1))])
        self.assertEqual(total_mass(outcomes), 0)

    def testParFor(self) -> None:
        outcomes = execute(parse("parfor @3 { x := x + 1; }"))
        self.assertEqual(len(outcomes), 6)
        self.assertEqual(aggregate(outcomes).finals, {Env({"x": 3}): Fraction(1)})

    def testParIf(self) -> None:
        outcomes = execute(parse("parif (true @0.5) { x := &y; } (false @0.5) { x := 1; }"))
        self.assertEqual(aggregate(outcomes).finals, {Env({"x": Address("y"), "y": 0}): Fraction(1, 4)})

    def testPermutationCap(self) -> None:
        program = parse("par " + " ".join("{ skip; }" for _ in range(7)))
        with self.assertRaises(PermutationCapError):
            execute(program)
        self.assertEqual(len(execute(program, RunConfig(permutation_cap=7))), factorial(7))

    def testRunConfigValidation(self) -> None:
        with self.assertRaises(AssertionError):
            RunConfig(fuel=0)
        with self.assertRaises(AssertionError):
            RunConfig(permutation_cap=0)

    def testPointers(self) -> None:
        summary = aggregate(execute(load_program("pointers.prog")))
        # The inner branch is taken on each of the 100 iterations.
        self.assertEqual(summary.total, Fraction(3, 5) * Fraction(1, 2) ** 100)
        self.assertEqual(summary.abort, 0)
        self.assertEqual(summary.out_of_fuel, 0)

    def testLongChain(self) -> None:
        program = parse("\n".join(f"x := x + {i};" for i in range(800)))
        self.assertEqual(execute(program), [Final(Env({"x": sum(range(800))}), Fraction(1))])


class AggregateTest(unittest.TestCase):

    def testAggregate(self) -> None:
        env = Env({"x": 1})
        summary = aggregate([
            Final(env, Fraction(1, 4)),
            Abort(Fraction(1, 8)),
            Final(env, Fraction(1, 4)),
            OutOfFuel(Fraction(1, 8)),
            Abort(Fraction(1, 8)),
        ])
        self.assertEqual(summary.finals, {env: Fraction(1, 2)})
        self.assertEqual(summary.total, Fraction(1, 2))
        self.assertEqual(summary.abort, Fraction(1, 4))
        self.assertEqual(summary.aborts, 2)
        self.assertEqual(summary.out_of_fuel, Fraction(1, 8))
        self.assertEqual(summary.out_of_fuels, 1)

    def testTotalMassIgnoresFailures(self) -> None:
        self.assertEqual(total_mass([Abort(Fraction(1, 2)), Final(Env({}), Fraction(1, 3))]), Fraction(1, 3))


class RunPropertyTest(unittest.TestCase):

    @settings(max_examples=200, deadline=None)
    @given(conservative_programs)
    def testMassIsConserved(self, program: Program) -> None:
        outcomes = execute(program)
        self.assertTrue(all(isinstance(outcome, Final) for outcome in outcomes))
        self.assertEqual(total_mass(outcomes), 1)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 4).flatmap(straight_line_threads))
    def testEveryOrderIsRun(self, threads: tuple) -> None:
        env = Env.zeros(VARS)
        outcomes = run(Par(threads), WeightedEnv(env, Fraction(1)))
        self.assertEqual(len(outcomes), factorial(len(threads)))
        self.assertTrue(all(outcome.weight == Fraction(1, factorial(len(threads))) for outcome in outcomes))

    @settings(max_examples=200, deadline=None)
    @given(straight_line_programs, st.fractions(0, 1, max_denominator=8))
    def testStraightLineUpdatesInOrder(self, program: Program, weight: Fraction) -> None:
        env = Env.zeros(program.vars)
        for stmt in walk(program.body):
            if isinstance(stmt, Assign):
                expr = stmt.expr
                assert isinstance(expr, (Num, Var))
                value: Value = expr.value if isinstance(expr, Num) else env[expr.name]
                env = env.set(stmt.target, value)
            elif isinstance(stmt, AddrAssign):
                env = env.set(stmt.target, Address(stmt.source))
        outcomes = run(program.body, WeightedEnv(Env.zeros(program.vars), weight))
        self.assertEqual(outcomes, [Final(env, weight)])

    @settings(max_examples=200, deadline=None)
    @given(branching_programs, st.fractions(0, 1, max_denominator=8))
    def testMassIsBoundedByStartWeight(self, program: Program, weight: Fraction) -> None:
        outcomes = run(program.body, WeightedEnv(Env.zeros(program.vars), weight), RunConfig(fuel=20))
        self.assertLessEqual(total_mass(outcomes), weight)
        self.assertLessEqual(sum((outcome.weight for outcome in outcomes), Fraction(0)), weight)
