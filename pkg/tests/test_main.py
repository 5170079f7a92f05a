import io
import json
import unittest
from contextlib import redirect_stderr, redirect_stdout
from typing import Tuple
from probpts.__main__ import main
from probpts.lattice import PtsType
from probpts.report import load_report
from tests.base import program_path


def invoke(*args: str) -> Tuple[int, str]:
    stdout = io.StringIO()
    with redirect_stdout(stdout), redirect_stderr(io.StringIO()):
        code = main(list(args))
    return code, stdout.getvalue()


class AnalyzeTest(unittest.TestCase):

    def testTable(self) -> None:
        code, output = invoke("analyze", program_path("pointers.prog"), "-q")
        self.assertEqual(code, 0)
        lines = output.splitlines()
        self.assertEqual(lines[0].split(), ["line", "after", "points-to"])
        self.assertIn("(entry)", lines[1])
        self.assertIn("e -> {(d', 50/101)}", output)
        self.assertTrue(any("(exit)" in line for line in lines))

    def testPaperMode(self) -> None:
        code, output = invoke("analyze", program_path("pointers.prog"), "--while-mode", "paper", "-q")
        self.assertEqual(code, 0)
        self.assertIn("e -> {(d', 1/2)}", output)
        self.assertIn("b -> {(c', 3/5), (d', 2/5)}", output)

    def testJson(self) -> None:
        path = program_path("pointers.prog")
        code, output = invoke("analyze", path, "--format", "json", "-q")
        self.assertEqual(code, 0)
        report = json.loads(output)
        self.assertEqual(list(report), ["program", "mode", "points", "warnings"])
        self.assertEqual(report["program"], path)
        self.assertEqual(report["mode"], "safe")
        self.assertEqual(list(report["points"][0]), ["label", "line", "pre", "post"])
        self.assertEqual([point["label"] for point in report["points"]], list(range(16)))
        loaded = load_report(output)
        self.assertIsInstance(loaded["points"][0]["post"], PtsType)
        self.assertEqual(dict(loaded["points"][-1]["post"]["c"]), {})

    def testSkip(self) -> None:
        code, output = invoke("analyze", program_path("skip.prog"), "-q")
        self.assertEqual(code, 0)
        self.assertEqual([line.split() for line in output.splitlines()], [
            ["line", "after", "points-to"],
            ["(entry)"],
            ["1", "skip;"],
            ["(exit)"],
        ])

    def testWarningsArePrinted(self) -> None:
        code, output = invoke("analyze", program_path("abort.prog"), "-q")
        self.assertEqual(code, 0)
        self.assertIn("warning: line 1:", output)

    def testParseError(self) -> None:
        code, _ = invoke("analyze", program_path("bad_prob.prog"))
        self.assertEqual(code, 1)

    def testMissingFile(self) -> None:
        code, _ = invoke("analyze", program_path("missing.prog"))
        self.assertEqual(code, 2)

    def testNoFixpoint(self) -> None:
        code, _ = invoke("analyze", program_path("ping_pong.prog"), "--par-round-cap", "2")
        self.assertEqual(code, 2)

    def testInvalidArguments(self) -> None:
        for args in (["--while-mode", "fast"], ["--par-round-cap", "1"]):
            with self.subTest(args=args), self.assertRaises(SystemExit) as cm:
                invoke("analyze", program_path("pointers.prog"), *args)
            self.assertEqual(cm.exception.code, 2)


class RunTest(unittest.TestCase):

    def testParallel(self) -> None:
        code, output = invoke("run", program_path("parallel.prog"), "-q")
        self.assertEqual(code, 0)
        self.assertEqual(output.splitlines(), [
            "{a=d', c=0, d=0}: 1/2 (0.500000)",
            "{a=c', c=0, d=0}: 1/2 (0.500000)",
            "abort: 0/1",
            "out of fuel: 0/1",
            "total mass: 1/1",
        ])

    def testSkip(self) -> None:
        code, output = invoke("run", program_path("skip.prog"), "-q")
        self.assertEqual(code, 0)
        self.assertEqual(output.splitlines()[0], "{}: 1/1 (1.000000)")

    def testAbort(self) -> None:
        code, output = invoke("run", program_path("abort.prog"), "-q")
        self.assertEqual(code, 0)
        self.assertIn("abort: 1/1", output.splitlines())
        self.assertIn("total mass: 0/1", output.splitlines())

    def testInit(self) -> None:
        code, output = invoke("run", program_path("abort.prog"), "--init", "x=&x", "-q")
        self.assertEqual(code, 0)
        self.assertEqual(output.splitlines()[0], "{x=1}: 1/1 (1.000000)")

    def testOutOfFuel(self) -> None:
        code, output = invoke("run", program_path("spin.prog"), "--fuel", "3", "-q")
        self.assertEqual(code, 0)
        self.assertIn("out of fuel: 1/1", output.splitlines())

    def testBadInit(self) -> None:
        code, _ = invoke("run", program_path("abort.prog"), "--init", "w=1")
        self.assertEqual(code, 2)

    def testPermutationCap(self) -> None:
        code, _ = invoke("run", program_path("parallel.prog"), "--parcap", "1")
        self.assertEqual(code, 2)


class CheckTest(unittest.TestCase):

    def testPass(self) -> None:
        code, output = invoke("check", program_path("pointers.prog"), "-q")
        self.assertEqual(code, 0)
        self.assertEqual(output.strip(), "pass")

    def testFail(self) -> None:
        args = ("check", program_path("zero_trip.prog"), "--init", "y=&x", "-q")
        code, output = invoke(*args, "--while-mode", "paper")
        self.assertEqual(code, 3)
        self.assertEqual(output.splitlines()[0], "fail")
        self.assertIn("escapes at y=x'", output)
        code, output = invoke(*args)
        self.assertEqual(code, 0)

    def testInconclusive(self) -> None:
        code, output = invoke("check", program_path("spin.prog"), "--fuel", "5", "-q")
        self.assertEqual(code, 4)
        self.assertEqual(output.strip(), "inconclusive")


class FuzzTest(unittest.TestCase):

    def testFuzz(self) -> None:
        code, output = invoke("fuzz", "--seed", "1", "--count", "5", "--threads", "1", "-q")
        self.assertEqual(code, 0)
        self.assertEqual(output.splitlines()[:2], ["seed: 1", "cases: 5"])
        self.assertIn("failed: 0", output.splitlines())

    def testBounds(self) -> None:
        with self.assertRaises(SystemExit) as cm:
            invoke("fuzz", "--max-threads", "5")
        self.assertEqual(cm.exception.code, 2)


class ParserTest(unittest.TestCase):

    def testCommandRequired(self) -> None:
        with self.assertRaises(SystemExit) as cm:
            invoke()
        self.assertEqual(cm.exception.code, 2)

    def testVersion(self) -> None:
        with self.assertRaises(SystemExit) as cm:
            invoke("--version")
        self.assertEqual(cm.exception.code, 0)
