import random
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxforge.mathtext import (
    Binary,
    DivisionByZero,
    Equation,
    Number,
    ParseError,
    QuestionStructure,
    Unary,
    UnboundVariable,
    Variable,
    alpha_equivalent,
    canonicalize,
    count_questions,
    distinct_values,
    evaluate,
    extract_numeric_literals,
    find_expressions,
    parse_expression,
    to_text,
)

from astgen import perturb_nth_number, random_ast, rename_variables

D = Decimal


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def test_parse_table1_formula():
    got = parse_expression("1000 - 2.50(C+15)")
    want = Binary(
        "-",
        Number(D("1000")),
        Binary("*", Number(D("2.50")), Binary("+", Variable("C"), Number(D("15")))),
    )
    assert got == want


def test_parse_dollar_delimited_formula_matches_plain():
    assert parse_expression("1000 - 2.50$(C+15)$") == parse_expression("1000 - 2.50(C+15)")


def test_parse_implicit_coefficient():
    got = parse_expression("80 - 6x")
    want = Binary("-", Number(D("80")), Binary("*", Number(D("6")), Variable("x")))
    assert got == want


def test_parse_adjacent_parens():
    got = parse_expression("(1+2)(3+4)")
    assert got == Binary(
        "*",
        Binary("+", Number(D(1)), Number(D(2))),
        Binary("+", Number(D(3)), Number(D(4))),
    )


def test_parse_single_variable():
    assert parse_expression("x") == Variable("x")


def test_parse_error_offset():
    with pytest.raises(ParseError) as err:
        parse_expression("2+")
    assert err.value.offset == 2


def test_parse_rejects_empty():
    with pytest.raises(ParseError):
        parse_expression("   ")


def test_parse_unary_minus_binds_tighter_than_mul():
    # -2x is (-2) * x
    got = parse_expression("-2x")
    assert got == Binary("*", Unary("neg", Number(D(2))), Variable("x"))


def test_precedence_and_associativity():
    got = parse_expression("1 - 2 - 3")
    assert got == Binary("-", Binary("-", Number(D(1)), Number(D(2))), Number(D(3)))
    got = parse_expression("1 + 2 * 3")
    assert got == Binary("+", Number(D(1)), Binary("*", Number(D(2)), Number(D(3))))


def test_unicode_operators():
    assert parse_expression("6×7") == parse_expression("6*7")
    assert parse_expression("6÷7") == parse_expression("6/7")


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

def test_extract_table1_value_set(paper_problems):
    full = paper_problems["cd-album"].full_text()
    assert distinct_values(full) == {D("15"), D("1000"), D("2.50"), D("85"), D("125"), D("250"), D("385")}


def test_extract_bare_equation():
    literals = extract_numeric_literals("2x + 3 = 15")
    assert [l.value for l in literals] == [D(2), D(3), D(15)]


def test_extract_empty():
    assert extract_numeric_literals("") == []


def test_extract_nba_variant_word_numbers_ignored(paper_variants):
    text = paper_variants[("eq-1", "NBA")]
    # "a single point" contributes nothing; 2-point compounds do.
    assert distinct_values(text) == {D(2), D(3), D(15)}


def test_extract_currency_and_thousands():
    literals = extract_numeric_literals("they spent $1,250.75 on 3 items")
    assert [(l.raw, l.value) for l in literals] == [("$1,250.75", D("1250.75")), ("3", D(3))]


def test_extract_spans_strictly_increasing_and_reparseable(paper_variants):
    for text in paper_variants.values():
        data = text.encode("utf-8")
        last_end = -1
        for lit in extract_numeric_literals(text):
            offset, length = lit.span
            assert offset > last_end
            last_end = offset + length
            raw = data[offset : offset + length].decode("utf-8")
            assert raw == lit.raw
            assert D(raw.lstrip("$").replace(",", "")) == lit.value


def test_extract_skips_enumeration_markers():
    text = "1. How much is left from 85 CDs?\n(2) second item with 7 things"
    assert distinct_values(text) == {D(85), D(7)}


# ---------------------------------------------------------------------------
# find_expressions
# ---------------------------------------------------------------------------

def test_find_table1_variant_formula(paper_problems, paper_variants):
    hits = find_expressions(paper_variants[("cd-album", "TikTok")])
    assert len(hits) == 1
    _, equation = hits[0]
    assert isinstance(equation, Equation)
    assert alpha_equivalent(equation.rhs, parse_expression("1000-2.50(I+15)"))
    assert alpha_equivalent(equation.rhs, parse_expression("1000 - 2.50(C+15)"))


def test_find_nothing_in_plain_prose():
    assert find_expressions("plain prose with no math") == []


def test_find_none_in_equation_writing_task(paper_variants):
    # The TikTok rewrite of 2x+3=15 names 'x' but states no expression.
    assert find_expressions(paper_variants[("eq-1", "TikTok")]) == []


def test_find_ignores_compound_word_hyphens(paper_variants):
    # "2-point field goal" must not parse as a subtraction.
    assert find_expressions(paper_variants[("eq-1", "NBA")]) == []


def test_find_bare_equation_line():
    hits = find_expressions("2x + 3 = 15")
    assert len(hits) == 1
    _, equation = hits[0]
    assert equation == Equation(
        Binary("+", Binary("*", Number(D(2)), Variable("x")), Number(D(3))),
        Number(D(15)),
    )


def test_find_chained_equalities_rejected():
    assert find_expressions("a = b = c") == []


def test_find_standalone_expression_in_prose():
    hits = find_expressions("Use the rule 80 - 6x to decide.")
    assert len(hits) == 1
    span, ast = hits[0]
    assert alpha_equivalent(ast, parse_expression("80 - 6y"))


def test_find_spans_point_into_source():
    text = "First line\nThe total = 4 + 5\n"
    hits = find_expressions(text)
    assert len(hits) == 1
    (offset, length), _ = hits[0]
    assert text.encode("utf-8")[offset : offset + length].decode("utf-8") == "The total = 4 + 5"


# ---------------------------------------------------------------------------
# Canonicalization / equivalence
# ---------------------------------------------------------------------------

def test_canonicalize_renames_in_first_occurrence_order():
    ast = parse_expression("1000 - 2.50(I+15)")
    canonical = canonicalize(ast)
    assert canonical == parse_expression("1000 - 2.50(v0+15)")


def test_canonicalize_identifies_renamings():
    assert canonicalize(parse_expression("x + y")) == canonicalize(parse_expression("a + b"))


def test_canonicalize_idempotent_random():
    rng = random.Random(4)
    for _ in range(200):
        tree = random_ast(rng)
        assert canonicalize(canonicalize(tree)) == canonicalize(tree)


def test_alpha_equivalent_paper_renames():
    base = parse_expression("1000 - 2.50(C+15)")
    assert alpha_equivalent(base, parse_expression("1000-2.50(B+15)"))
    assert alpha_equivalent(base, parse_expression("1000-2.50(I+15)"))
    assert alpha_equivalent(base, base)


def test_alpha_equivalent_exact_decimal_numbers():
    assert alpha_equivalent(parse_expression("2.50x"), parse_expression("2.5y"))


def test_alpha_equivalent_rejects_changed_constant():
    # Evaluation oracle: at C=85 the originals give 750 vs 700.
    a = parse_expression("1000 - 2.50(C+15)")
    b = parse_expression("1000 - 3.00(C+15)")
    assert evaluate(a, {"C": D(85)}) == D("750.00")
    assert evaluate(b, {"C": D(85)}) == D("700.00")
    assert not alpha_equivalent(a, b)


def test_alpha_equivalent_no_commutativity():
    assert not alpha_equivalent(parse_expression("1 + x"), parse_expression("x + 1"))


def test_inconsistent_renaming_rejected():
    assert not alpha_equivalent(parse_expression("x + x"), parse_expression("x + y"))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def test_evaluate_paper_values():
    ast = parse_expression("1000 - 2.50(C+15)")
    assert evaluate(ast, {"C": D(85)}) == D("750.00")
    assert evaluate(ast, {"C": D(385)}) == D("0.00")


def test_evaluate_identity():
    assert evaluate(Variable("x"), {"x": D(0)}) == D(0)


def test_evaluate_unbound():
    with pytest.raises(UnboundVariable):
        evaluate(Variable("x"), {})


def test_evaluate_division_by_zero():
    with pytest.raises(DivisionByZero):
        evaluate(parse_expression("1 / (x - 1)"), {"x": D(1)})


def test_evaluate_division_rounds_half_even_at_12_digits():
    result = evaluate(parse_expression("1 / 3"), {})
    assert result == D("0.333333333333")
    assert evaluate(parse_expression("5 / 2"), {}) == D("2.5")


# ---------------------------------------------------------------------------
# Question structure
# ---------------------------------------------------------------------------

def test_counts_table1_original(paper_problems):
    counts = count_questions(paper_problems["cd-album"].full_text())
    assert counts.enumerated_items == 4
    assert counts.question_marks == 4
    assert counts.imperative_tasks == 0


def test_counts_table2_variants(paper_variants):
    tiktok = count_questions(paper_variants[("eq-1", "TikTok")])
    assert tiktok.question_marks == 0
    assert tiktok.imperative_tasks == 1  # "Create an equation ..."
    nba = count_questions(paper_variants[("eq-1", "NBA")])
    assert nba.question_marks == 0
    assert nba.imperative_tasks == 2  # "Write ...", "Use 'x' ..."


def test_counts_empty():
    assert count_questions("") == QuestionStructure(0, 0, 0)


def test_counts_lettered_items_and_decimal_dots():
    text = "(a) It costs 2.50 per item?\n(b) Find the total.\n"
    counts = count_questions(text)
    assert counts.enumerated_items == 2
    assert counts.question_marks == 1
    assert counts.imperative_tasks == 1


def test_counts_abbreviations_do_not_split():
    counts = count_questions("Dr. Smith has 3 CDs, e.g. albums. How many are left?")
    assert counts.question_marks == 1
    assert counts.imperative_tasks == 0


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------

@st.composite
def expr_trees(draw, max_depth=5):
    if max_depth <= 0:
        leaf = draw(st.integers(min_value=0, max_value=3))
        if leaf == 0:
            return Variable(draw(st.sampled_from(["x", "y", "z"])))
        return Number(Decimal(draw(st.integers(min_value=0, max_value=50))))
    kind = draw(st.sampled_from(["leaf", "leaf", "+", "-", "*", "/", "neg"]))
    if kind == "leaf":
        return draw(expr_trees(max_depth=0))
    if kind == "neg":
        return Unary("neg", draw(expr_trees(max_depth=max_depth - 1)))
    return Binary(
        kind,
        draw(expr_trees(max_depth=max_depth - 1)),
        draw(expr_trees(max_depth=max_depth - 1)),
    )


@settings(max_examples=200, deadline=None)
@given(expr_trees())
def test_print_parse_round_trip(tree):
    assert parse_expression(to_text(tree)) == tree


@settings(max_examples=200, deadline=None)
@given(expr_trees(), st.permutations(["x", "y", "z"]))
def test_alpha_equivalence_invariant_under_injective_renaming(tree, renamed):
    mapping = dict(zip(["x", "y", "z"], renamed))
    assert alpha_equivalent(tree, rename_variables(tree, mapping))


@settings(max_examples=200, deadline=None)
@given(expr_trees())
def test_alpha_equivalence_reflexive_and_symmetric(tree):
    assert alpha_equivalent(tree, tree)
    other = rename_variables(tree, {"x": "u", "y": "v", "z": "w"})
    assert alpha_equivalent(tree, other) == alpha_equivalent(other, tree)


def test_alpha_equivalence_transitive_sampled():
    rng = random.Random(11)
    for _ in range(200):
        a = random_ast(rng, max_depth=4)
        b = rename_variables(a, {"x": "p", "y": "q", "z": "r"})
        c = rename_variables(a, {"x": "m", "y": "n", "z": "o"})
        assert alpha_equivalent(a, b) and alpha_equivalent(b, c) and alpha_equivalent(a, c)


def test_constant_perturbation_breaks_equivalence():
    rng = random.Random(23)
    checked = 0
    while checked < 200:
        tree = random_ast(rng, max_depth=4)
        from astgen import number_nodes

        n = number_nodes(tree)
        if n == 0:
            continue
        index = rng.randrange(n)
        delta = Decimal(rng.choice([1, -1, 3, 7]))
        perturbed = perturb_nth_number(tree, index, delta)
        assert not alpha_equivalent(tree, perturbed)
        checked += 1
