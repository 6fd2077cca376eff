from pathlib import Path

import pytest
from hypothesis import given, settings

from choramend.assertions import End, Interaction, Prefix, RecCall, RecDef
from choramend.errors import ParseError
from choramend.logic import (
    Add,
    And,
    BoolLit,
    Cmp,
    Divisible,
    Exists,
    Forall,
    Implies,
    Lit,
    Mul,
    Not,
    Or,
    Sub,
    Var,
)
from choramend.parser import (
    format_assertion,
    format_formula,
    parse,
    parse_formula,
)

from .strategies import quantifier_free, well_formed_assertions

CORPUS = Path(__file__).parent / "corpus"


class TestParseAssertions:
    def test_two_step_greeting(self):
        g = parse("Alice -> Bob : (a | a > 0) . Bob -> Carol : (b | b > a) . end")
        assert g == Prefix(
            Interaction("Alice", "Bob", ("a",), Cmp(">", Var("a"), Lit(0))),
            Prefix(
                Interaction("Bob", "Carol", ("b",), Cmp(">", Var("b"), Var("a"))),
                End(),
            ),
        )

    def test_bare_end(self):
        assert parse("end") == End()

    def test_loop_header(self):
        g = parse("rec t<10>(v | v > 0) . Alice -> Bob : (v1 | v >= v1) . t<v1>")
        assert isinstance(g, RecDef)
        assert g.name == "t"
        assert g.init_args == (Lit(10),)
        assert g.params == ("v",)
        assert g.invariant == Cmp(">", Var("v"), Lit(0))
        body = g.body
        assert isinstance(body, Prefix)
        assert body.continuation == RecCall("t", (Var("v1"),))

    def test_multi_payload_and_multi_argument(self):
        g = parse("rec t<1, 2>(a b | a > b) . Alice -> Bob : (x y | x = y) . t<x, y>")
        assert isinstance(g, RecDef)
        assert g.params == ("a", "b")
        assert g.init_args == (Lit(1), Lit(2))
        inner = g.body
        assert isinstance(inner, Prefix)
        assert inner.interaction.variables == ("x", "y")

    def test_comments_and_whitespace(self):
        text = "// leading note\nAlice -> Bob : (a | a > 0) . // trailing\n  end\n"
        g = parse(text)
        assert isinstance(g, Prefix)
        assert g.continuation == End()

    def test_primed_identifiers(self):
        g = parse("Alice -> Bob : (v' | v' > 0) . end")
        assert isinstance(g, Prefix)
        assert g.interaction.variables == ("v'",)

    def test_spans_point_into_source(self):
        text = "Alice -> Bob : (a | a > 0) .\nend"
        g = parse(text)
        assert isinstance(g, Prefix)
        span = g.interaction.span
        assert span is not None
        assert span.line == 1
        assert text[span.start:span.end].startswith("Alice")


class TestParseErrors:
    def test_position_reported(self):
        with pytest.raises(ParseError) as info:
            parse("Alice -> Bob : (a | a > ) . end")
        assert info.value.line == 1
        assert info.value.column == 25

    def test_missing_dot(self):
        with pytest.raises(ParseError):
            parse("Alice -> Bob : (a | a > 0) end")

    def test_keyword_as_participant(self):
        with pytest.raises(ParseError):
            parse("rec -> Bob : (a | true) . end")

    def test_trailing_input(self):
        with pytest.raises(ParseError) as info:
            parse("end end")
        assert "trailing" in str(info.value)

    def test_nonlinear_product(self):
        with pytest.raises(ParseError) as info:
            parse_formula("x * y > 0")
        assert "coefficient" in str(info.value)

    def test_str_has_position_prefix(self):
        with pytest.raises(ParseError) as info:
            parse("choice Alice -> Bob { }")
        assert str(info.value).startswith("1:")


class TestFormulaSyntax:
    def test_precedence_layers(self):
        f = parse_formula("a > 0 && b > 0 || c > 0 => d > 0")
        assert f == Implies(
            Or((And((Cmp(">", Var("a"), Lit(0)), Cmp(">", Var("b"), Lit(0)))), Cmp(">", Var("c"), Lit(0)))),
            Cmp(">", Var("d"), Lit(0)),
        )

    def test_implication_is_right_associative(self):
        f = parse_formula("a > 0 => b > 0 => c > 0")
        assert f == Implies(Cmp(">", Var("a"), Lit(0)), Implies(Cmp(">", Var("b"), Lit(0)), Cmp(">", Var("c"), Lit(0))))

    def test_quantifier_swallows_rest(self):
        f = parse_formula("exists z . x > z && z > 6")
        assert f == Exists(("z",), And((Cmp(">", Var("x"), Var("z")), Cmp(">", Var("z"), Lit(6)))))

    def test_multi_name_quantifier(self):
        f = parse_formula("forall a b . a = b")
        assert f == Forall(("a", "b"), Cmp("=", Var("a"), Var("b")))

    def test_negation_and_parens(self):
        f = parse_formula("!(a > 0 || b > 0)")
        assert f == Not(Or((Cmp(">", Var("a"), Lit(0)), Cmp(">", Var("b"), Lit(0)))))

    def test_subtraction_and_coefficients(self):
        f = parse_formula("v5 < v3 - 2 && 3 * x >= x")
        assert f == And(
            (
                Cmp("<", Var("v5"), Sub(Var("v3"), Lit(2))),
                Cmp(">=", Mul(3, Var("x")), Var("x")),
            )
        )

    def test_unary_minus(self):
        f = parse_formula("-x < -3")
        assert f == Cmp("<", Mul(-1, Var("x")), Lit(-3))

    def test_parenthesized_comparison_operand(self):
        f = parse_formula("(a + b) * 2 > c")
        assert f == Cmp(">", Mul(2, Add(Var("a"), Var("b"))), Var("c"))


class TestPrinting:
    def test_canonical_loop_layout(self):
        g = parse((CORPUS / "ex32.ga").read_text())
        assert format_assertion(g) == (
            "rec t<10>(v | v > 0) .\n"
            "  Alice -> Bob : (v1 | v >= v1) .\n"
            "  Bob -> Carol : (v2 | v2 > v1) .\n"
            "  Carol -> Alice : (v3 | v3 > v1) .\n"
            "  Carol -> Bob : (v4 | v4 > v) .\n"
            "  t<v1>\n"
        )

    def test_canonical_choice_layout(self):
        g = parse((CORPUS / "choice_small.ga").read_text())
        assert format_assertion(g) == (
            "Seller -> Buyer : (price | price > 0) .\n"
            "choice Buyer -> Seller {\n"
            "  {price < 100} pay:\n"
            "    Buyer -> Seller : (amount | amount = price) .\n"
            "    end\n"
            "  ;\n"
            "  {price >= 100} quit:\n"
            "    end\n"
            "}\n"
        )

    def test_formula_parens_minimal(self):
        f = Or((And((Cmp(">", Var("a"), Lit(0)), Cmp(">", Var("b"), Lit(0)))), Cmp(">", Var("c"), Lit(0))))
        assert format_formula(f) == "a > 0 && b > 0 || c > 0"
        g = And((Or((Cmp(">", Var("a"), Lit(0)), Cmp(">", Var("b"), Lit(0)))), Cmp(">", Var("c"), Lit(0))))
        assert format_formula(g) == "(a > 0 || b > 0) && c > 0"

    def test_nested_conjunction_kept_nested(self):
        f = And((And((Cmp(">", Var("a"), Lit(0)), Cmp(">", Var("b"), Lit(0)))), Cmp(">", Var("c"), Lit(0))))
        assert format_formula(f) == "(a > 0 && b > 0) && c > 0"
        assert parse_formula(format_formula(f)) == f

    def test_boolean_literals_not_absorbed(self):
        f = And((BoolLit(True), Cmp(">", Var("x"), Lit(8)), Cmp(">", Lit(8), Lit(6))))
        assert format_formula(f) == "true && x > 8 && 8 > 6"

    def test_divisibility_renders(self):
        assert format_formula(Divisible(2, Var("x"))) == "divides(2, x)"

    def test_corpus_roundtrip_exact(self):
        for name in ("eq1.ga", "ex21.ga", "ex31.ga", "ex32.ga", "ex36.ga", "choice_small.ga"):
            g = parse((CORPUS / name).read_text())
            text = format_assertion(g)
            assert parse(text) == g
            assert format_assertion(parse(text)) == text

    @given(well_formed_assertions())
    @settings(max_examples=200, deadline=None)
    def test_parse_inverts_format(self, g):
        assert parse(format_assertion(g)) == g

    @given(quantifier_free(("a", "b", "c"), max_leaves=5))
    @settings(max_examples=200, deadline=None)
    def test_formula_roundtrip(self, f):
        assert parse_formula(format_formula(f)) == f
