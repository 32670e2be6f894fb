"""
 Copyright 2026 Google LLC

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
 """

import math
import unittest

import numpy as np

from homcell import expressions
from homcell.errors import (
    ExpressionSyntaxError,
    MapDomainError,
    UnknownFunctionError,
    UnknownIdentifierError,
)
from homcell.expressions import Add, Call, Div, Mul, Neg, Num, Param, Pow, Sub, Var


def random_tree(rng: np.random.Generator, depth: int):
    if depth == 0 or rng.random() < 0.2:
        leaf = rng.integers(4)
        if leaf == 0:
            return Num(float(rng.integers(0, 20)) / 4 * 10.0 ** int(rng.integers(-12, 13)))
        if leaf == 1:
            return Var("x")
        if leaf == 2:
            return Var("y")
        return Param("a")
    kind = rng.integers(8)
    if kind == 0:
        return Neg(random_tree(rng, depth - 1))
    if kind == 1:
        return Call(str(rng.choice(["sin", "cos", "exp", "sqrt"])), random_tree(rng, depth - 1))
    binary = [Add, Sub, Mul, Div, Pow, Add][kind - 2]
    return binary(random_tree(rng, depth - 1), random_tree(rng, depth - 1))


class ParseTest(unittest.TestCase):
    def test_parse_map_expression(self):
        test_cases = [
            {
                "desc": "sums and differences associate to the left",
                "source": "y + a - x^2",
                "expected": Sub(Add(Var("y"), Param("a")), Pow(Var("x"), Num(2.0))),
            },
            {
                "desc": "power is right associative",
                "source": "x^y^2",
                "expected": Pow(Var("x"), Pow(Var("y"), Num(2.0))),
            },
            {
                "desc": "unary minus binds tighter than power",
                "source": "-x^2",
                "expected": Pow(Neg(Var("x")), Num(2.0)),
            },
            {
                "desc": "neg is a function spelling of unary minus",
                "source": "neg(x) * 3",
                "expected": Mul(Neg(Var("x")), Num(3.0)),
            },
            {
                "desc": "function call over a parenthesized sum",
                "source": "sin(x + y) / 2",
                "expected": Div(Call("sin", Add(Var("x"), Var("y"))), Num(2.0)),
            },
            {
                "desc": "scientific notation",
                "source": "1.5e-3 * x",
                "expected": Mul(Num(1.5e-3), Var("x")),
            },
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                self.assertEqual(expressions.parse_map_expression(tc["source"], ["a"]), tc["expected"])

    def test_parse_errors(self):
        test_cases = [
            {
                "desc": "operator where an operand belongs",
                "source": "x + * y",
                "error": ExpressionSyntaxError,
                "offset": 4,
            },
            {
                "desc": "unclosed parenthesis",
                "source": "(x + y",
                "error": ExpressionSyntaxError,
                "offset": 6,
            },
            {
                "desc": "trailing operand",
                "source": "x y",
                "error": ExpressionSyntaxError,
                "offset": 2,
            },
            {
                "desc": "offsets count bytes, not characters",
                "source": "é",
                "error": UnknownIdentifierError,
                "offset": 0,
            },
            {
                "desc": "unknown function",
                "source": "tan(x)",
                "error": UnknownFunctionError,
                "offset": 0,
            },
            {
                "desc": "undeclared parameter",
                "source": "x + b",
                "error": UnknownIdentifierError,
                "offset": 4,
            },
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                with self.assertRaises(tc["error"]) as ctx:
                    expressions.parse_map_expression(tc["source"], ["a"])
                self.assertEqual(ctx.exception.diagnostics["offset"], tc["offset"])

    def test_offset_after_multibyte_parameter(self):
        with self.assertRaises(ExpressionSyntaxError) as ctx:
            expressions.parse_map_expression("é + $", ["é"])
        self.assertEqual(ctx.exception.offset, 5)

    def test_syntax_error_lists_expected_tokens(self):
        with self.assertRaises(ExpressionSyntaxError) as ctx:
            expressions.parse_map_expression("x +")
        self.assertIn("number", ctx.exception.expected)
        self.assertEqual(ctx.exception.offset, 3)

    def test_random_round_trips(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            tree = random_tree(rng, 6)
            text = expressions.to_text(tree)
            reparsed = expressions.parse_map_expression(text, ["a"])
            self.assertEqual(reparsed, tree, text)
            self.assertEqual(expressions.to_text(reparsed), text)


class EvaluateTest(unittest.TestCase):
    def test_evaluate(self):
        test_cases = [
            {"desc": "henon x component", "source": "a - x^2 - 0.3*y", "x": 0.5, "y": 2.0,
             "expected": 1.4 - 0.25 - 0.6},
            {"desc": "negative integer power", "source": "x^-2", "x": 2.0, "y": 0.0, "expected": 0.25},
            {"desc": "real power of a positive base", "source": "x^0.5", "x": 9.0, "y": 0.0, "expected": 3.0},
            {"desc": "functions", "source": "exp(x) + cos(y)", "x": 0.0, "y": math.pi, "expected": 0.0},
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                node = expressions.parse_map_expression(tc["source"], ["a"])
                value = expressions.evaluate(node, tc["x"], tc["y"], {"a": 1.4})
                self.assertAlmostEqual(value, tc["expected"], places=12)

    def test_vectorized_evaluation(self):
        node = expressions.parse_map_expression("x*y + 1")
        xs = np.array([0.0, 1.0, 2.0])
        np.testing.assert_allclose(expressions.evaluate(node, xs, xs), [1.0, 2.0, 5.0])

    def test_domain_errors(self):
        test_cases = [
            {"desc": "division by zero", "source": "1 / x"},
            {"desc": "sqrt of a negative", "source": "sqrt(x - 1)"},
            {"desc": "zero to a negative power", "source": "x^-1"},
            {"desc": "real power of a negative base", "source": "(x - 1)^0.5"},
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                node = expressions.parse_map_expression(tc["source"])
                with self.assertRaises(MapDomainError):
                    expressions.evaluate(node, 0.0, 0.0)

    def test_gradient_matches_finite_differences(self):
        sources = ["sin(x*y) + x^3", "exp(-x) * y^2", "sqrt(x^2 + y^2 + 1)", "x^y", "(x + 2) / (y + 3)"]
        h = 1e-6
        for source in sources:
            with self.subTest(source):
                func = expressions.compile_expression(expressions.parse_map_expression(source))
                x, y = 1.3, 0.7
                value, dx, dy = expressions.gradient(func, x, y)
                self.assertAlmostEqual(value, func(x, y), places=12)
                self.assertAlmostEqual(dx, (func(x + h, y) - func(x - h, y)) / (2 * h), places=6)
                self.assertAlmostEqual(dy, (func(x, y + h) - func(x, y - h)) / (2 * h), places=6)

    def test_constant_integer(self):
        test_cases = [
            {"desc": "integer literal", "node": Num(3.0), "expected": 3},
            {"desc": "negated integer", "node": Neg(Num(2.0)), "expected": -2},
            {"desc": "fraction", "node": Num(0.5), "expected": None},
            {"desc": "variable", "node": Var("x"), "expected": None},
        ]
        for tc in test_cases:
            self.assertEqual(expressions.constant_integer(tc["node"]), tc["expected"], tc["desc"])


if __name__ == "__main__":
    unittest.main()
