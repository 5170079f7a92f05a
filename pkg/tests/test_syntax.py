import unittest
from fractions import Fraction
from probpts.fuzz import FuzzConfig, generate_program
from probpts.syntax import (
    SYNTHETIC, BoolConst, Compare, Num, Var, ParseError,
    Assign, AddrAssign, DerefAssign, Skip, Seq, If, Par, ParIf, ParFor,
    collect_vars, desugar_parif, parse, render, replicate, walk,
)
from tests.base import load_program


class ParseTest(unittest.TestCase):

    def testParseSkip(self) -> None:
        program = parse("skip;")
        self.assertEqual(program.body, Skip(label=0))
        self.assertEqual(program.vars, ())

    def testParseAddrAssign(self) -> None:
        self.assertEqual(parse("a := &c;").body, AddrAssign("a", "c"))

    def testParseDecimalProbability(self) -> None:
        body = parse("if (x <= 0) @0.6 { b := &c; } else { b := &d; }").body
        assert isinstance(body, If)
        self.assertEqual(body.prob, Fraction(3, 5))
        self.assertEqual(body.cond, Compare(Var("x"), "<=", Num(0)))

    def testParseFractionProbability(self) -> None:
        body = parse("if (true) @3/5 { skip; } else { skip; }").body
        assert isinstance(body, If)
        self.assertEqual(body.prob, Fraction(3, 5))
        self.assertEqual(body.cond, BoolConst(True))

    def testParseProbabilityOutOfRange(self) -> None:
        with self.assertRaises(ParseError) as cm:
            parse("if (x <= 0) @1.5 { skip; } else { skip; }")
        self.assertIn("1.5", str(cm.exception))
        self.assertEqual(cm.exception.line, 1)

    def testParseSyntaxError(self) -> None:
        with self.assertRaises(ParseError) as cm:
            parse("skip;\nx := ;")
        self.assertEqual(cm.exception.line, 2)
        self.assertIn("line 2", str(cm.exception))

    def testParseUnexpectedEnd(self) -> None:
        with self.assertRaises(ParseError) as cm:
            parse("while (x <= 1) @2 {")
        self.assertEqual((cm.exception.line, cm.exception.column), (1, 20))
        self.assertIn("line 1, column 20: unexpected end of input", str(cm.exception))

    def testParseUnexpectedEndAfterNewline(self) -> None:
        with self.assertRaises(ParseError) as cm:
            parse("skip;\nwhile (true) @1 {\n")
        self.assertEqual((cm.exception.line, cm.exception.column), (3, 1))

    def testParseLongChain(self) -> None:
        text = "\n".join(f"x := x + {i};" for i in range(1000))
        program = parse(text)
        self.assertEqual(len(render(program).splitlines()), 1000)
        self.assertEqual(program.vars, ("x",))
        self.assertEqual([stmt.label for stmt in walk(program.body)], list(range(1999)))

    def testParseZeroCopies(self) -> None:
        with self.assertRaises(ParseError):
            parse("parfor @0 { skip; }")

    def testParseEmptyBlock(self) -> None:
        body = parse("if (true) @1 { } else { x := 1; }").body
        assert isinstance(body, If)
        self.assertIsInstance(body.then, Skip)

    def testParseComments(self) -> None:
        self.assertEqual(parse("// nothing here\nskip; // or here").body, Skip())

    def testParsePrecedence(self) -> None:
        body = parse("x := 1 + 2 * y;").body
        assert isinstance(body, Assign)
        self.assertEqual(render(parse("x := 1 + 2 * y;")), "x := 1 + (2 * y);")
        self.assertEqual(render(parse("if (!x == y && true || false) @1 { skip; } else { skip; }")).splitlines()[0],
                         "if ((!(x == y) && true) || false) @1/1 {")

    def testParseKeywordsAreNotVariables(self) -> None:
        with self.assertRaises(ParseError):
            parse("par := 1;")

    def testLabelsArePreorder(self) -> None:
        program = parse("a := &c; par { a := &c; } { a := &d; }")
        self.assertEqual([stmt.label for stmt in walk(program.body)], [0, 1, 2, 3, 4])
        body = program.body
        assert isinstance(body, Seq)
        self.assertIsInstance(body.first, AddrAssign)
        self.assertEqual(body.first.label, 1)
        self.assertIsInstance(body.second, Par)

    def testLabelsAreDeterministic(self) -> None:
        self.assertEqual(load_program("pointers.prog"), load_program("pointers.prog"))

    def testSpans(self) -> None:
        program = load_program("pointers.prog")
        body = program.body
        assert isinstance(body, Seq)
        self.assertEqual(body.first.span, (2, 1))


class RenderTest(unittest.TestCase):

    def testRenderSkip(self) -> None:
        self.assertEqual(render(parse("skip;")), "skip;")

    def testRenderCanonicalProbability(self) -> None:
        text = render(parse("if (x <= 0) @0.6 { b := &c; } else { b := &d; }"))
        self.assertEqual(text, "if (x <= 0) @3/5 {\n    b := &c;\n} else {\n    b := &d;\n}")

    def testRenderParallel(self) -> None:
        text = render(parse("parif (x == y @0.5) { x := *y; } (true @1) { *x := 2; } parfor @2 { skip; }"))
        self.assertEqual(text, "\n".join([
            "parif (x == y @1/2) {",
            "    x := *y;",
            "} (true @1/1) {",
            "    *x := 2;",
            "}",
            "parfor @2 {",
            "    skip;",
            "}",
        ]))

    def testRoundTripPointers(self) -> None:
        program = load_program("pointers.prog")
        self.assertEqual(parse(render(program)), program)

    def testRoundTripGenerated(self) -> None:
        cfg = FuzzConfig(seed=3, max_depth=4)
        for index in range(200):
            program = generate_program(cfg, index)
            self.assertEqual(parse(render(program)), program, render(program))


class CollectVarsTest(unittest.TestCase):

    def testCollectVarsSkip(self) -> None:
        self.assertEqual(collect_vars(Skip()), ())

    def testCollectVarsPointers(self) -> None:
        program = load_program("pointers.prog")
        self.assertEqual(set(program.vars), {"a", "b", "c", "d", "e"})
        self.assertEqual(program.vars, ("a", "c", "b", "d", "e"))

    def testCollectVarsDeref(self) -> None:
        self.assertEqual(collect_vars(DerefAssign("x", "y")), ("x", "y"))

    def testCollectVarsGuards(self) -> None:
        self.assertEqual(parse("parif (u <= 1 @0.5) { x := &y; }").vars, ("u", "x", "y"))


class DesugarTest(unittest.TestCase):

    def testDesugarParIf(self) -> None:
        body = parse("parif (x <= 1 @0.5) { x := &y; } (true @1) { skip; }").body
        assert isinstance(body, ParIf)
        par = desugar_parif(body)
        self.assertEqual(par.label, SYNTHETIC)
        self.assertEqual(len(par.threads), 2)
        first = par.threads[0]
        assert isinstance(first, If)
        self.assertEqual(first.prob, Fraction(1, 2))
        self.assertEqual(first.then, body.arms[0].body)
        self.assertIsInstance(first.orelse, Skip)

    def testReplicate(self) -> None:
        body = parse("parfor @3 { x := &y; }").body
        assert isinstance(body, ParFor)
        self.assertEqual(replicate(body.body, 3).threads, (body.body,) * 3)
