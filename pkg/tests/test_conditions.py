import pytest
from hypothesis import given, strategies as st

from flowkit.model.conditions import (
    And,
    Call,
    Cmp,
    EvalError,
    Lit,
    MappingView,
    Not,
    Or,
    ParseError,
    Ref,
    eval_condition,
    parse_condition,
)


def ev(text, values=None):
    return eval_condition(parse_condition(text), MappingView(values or {}))


class TestParsing:
    def test_boolean_literal(self):
        assert parse_condition("true") == Lit(True)
        assert parse_condition("false") == Lit(False)
        assert parse_condition("null") == Lit(None)

    def test_spec_shaped_expression(self):
        ast = parse_condition("session.count > 2 && defined(user.name)")
        assert ast == And(
            Cmp(">", Ref("session", "count"), Lit(2)),
            Call("defined", (Ref("user", "name"),)),
        )

    def test_truncated_comparison_position(self):
        with pytest.raises(ParseError) as err:
            parse_condition("session.x >")
        assert err.value.pos == 12

    def test_precedence_not_cmp_and_or(self):
        # not > comparisons > and > or
        ast = parse_condition("!true && false || true")
        assert ast == Or(And(Not(Lit(True)), Lit(False)), Lit(True))

    def test_parentheses(self):
        ast = parse_condition("true && (false || true)")
        assert ast == And(Lit(True), Or(Lit(False), Lit(True)))

    def test_numbers_and_strings(self):
        assert parse_condition("-3") == Lit(-3)
        assert parse_condition("2.5") == Lit(2.5)
        assert parse_condition('"hi\\nthere"') == Lit("hi\nthere")

    def test_ref_requires_known_scope(self):
        with pytest.raises(ParseError):
            parse_condition("global.x == 1")

    def test_unknown_identifier(self):
        with pytest.raises(ParseError):
            parse_condition("maybe")

    def test_trailing_garbage(self):
        with pytest.raises(ParseError):
            parse_condition("true true")

    def test_error_position_is_one_based(self):
        with pytest.raises(ParseError) as err:
            parse_condition("?")
        assert err.value.pos == 1


class TestEvaluation:
    def test_defined_unset_is_false(self):
        assert ev("defined(user.name)") is False

    def test_defined_set_is_true(self):
        assert ev("defined(user.name)", {"user.name": "Sam"}) is True

    def test_string_equality(self):
        assert ev('session.favMovie == "Matrix"', {"session.favMovie": "Matrix"}) is True

    def test_mixed_type_order_is_an_error(self):
        with pytest.raises(EvalError, match="type-mismatch"):
            ev('1 < "a"')

    def test_equality_against_null(self):
        assert ev("session.x == null") is True
        assert ev("session.x != null", {"session.x": 1}) is True

    def test_numbers_compare_across_int_and_decimal(self):
        assert ev("session.x >= 2.5", {"session.x": 3}) is True

    def test_boolean_ops_demand_booleans(self):
        with pytest.raises(EvalError):
            ev("1 && true")
        with pytest.raises(EvalError):
            ev("!0")

    def test_short_circuit_skips_bad_right_side(self):
        assert ev('defined(session.x) && session.x > 1') is False
        assert ev('true || (1 && true)') is True

    def test_contains_and_len(self):
        assert ev('contains("hello world", "lo w")') is True
        assert ev('len("abc") == 3') is True
        with pytest.raises(EvalError):
            ev("len(1)")
        with pytest.raises(EvalError):
            ev('contains("a", 1)')

    def test_unknown_builtin(self):
        with pytest.raises(EvalError, match="unknown built-in"):
            ev("frobnicate(session.x)")

    def test_defined_requires_a_reference(self):
        with pytest.raises(EvalError):
            ev("defined(1)")

    def test_missing_reference_resolves_to_null(self):
        assert ev("session.ghost == null") is True


# Random AST generation: evaluation must be total (never loop, never crash
# with anything but EvalError) and pure (same result twice).
_literals = st.one_of(
    st.booleans().map(Lit),
    st.integers(-100, 100).map(Lit),
    st.text("ab", max_size=3).map(Lit),
    st.just(Lit(None)),
)
_refs = st.tuples(
    st.sampled_from(["turn", "session", "user", "community"]), st.sampled_from(["x", "y"])
).map(lambda t: Ref(*t))


def _exprs(children):
    return st.one_of(
        st.tuples(children, children).map(lambda t: And(*t)),
        st.tuples(children, children).map(lambda t: Or(*t)),
        children.map(Not),
        st.tuples(st.sampled_from(["==", "!=", "<", "<=", ">", ">="]), children, children).map(
            lambda t: Cmp(t[0], t[1], t[2])
        ),
    )


_ast = st.recursive(st.one_of(_literals, _refs), _exprs, max_leaves=25)


@given(_ast, st.dictionaries(st.sampled_from(["session.x", "user.y"]), st.integers(-5, 5), max_size=2))
def test_eval_is_total_and_pure(expr, values):
    view = MappingView(values)
    try:
        first = eval_condition(expr, view)
    except EvalError:
        with pytest.raises(EvalError):
            eval_condition(expr, view)
        return
    assert eval_condition(expr, view) == first
