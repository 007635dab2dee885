#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace nego;
using testsupport::F;
using testsupport::Rng;

TEST_CASE("free variables") {
    CHECK(free_vars(*F("x < 5 && x > y")) == std::set<Var>{make_var("x"), make_var("y")});
    CHECK(free_vars(*F("exists y. (x < 5 && x > y && y > 0)")) == std::set<Var>{make_var("x")});
    CHECK(free_vars(*F("true")).empty());
    CHECK(free_vars(*F("s1.capacity >= 0")) == std::set<Var>{make_var("s1", "capacity")});
    // shadowing: the outer binder still hides the inner free occurrence
    CHECK(free_vars(*F("exists x. (x > 0 && exists x. (x < 1))")).empty());
}

TEST_CASE("substitution") {
    auto renamed = substitute(F("p <= 10"), make_var("p"), variable(make_var("p'")));
    CHECK(equal(renamed, F("p' <= 10")));

    auto bound_untouched = substitute(F("exists p. (p <= q)"), make_var("q"),
                                      variable(make_var("r")));
    CHECK(equal(bound_untouched, F("exists p. (p <= r)")));

    auto partial = substitute(F("s = 6 && p >= 8"), make_var("p"), variable(make_var("p'")));
    CHECK(equal(partial, F("s = 6 && p' >= 8")));

    // the replacement may not mention a bound variable
    CHECK_THROWS_AS(substitute(F("exists p. (p <= q)"), make_var("q"), testsupport::T("p + 1")),
                    CaptureError);
}

TEST_CASE("substitution round trip on generated formulas") {
    Rng rng(11);
    std::vector<Var> vars{make_var("x"), make_var("y"), make_var("z")};
    Var x = make_var("x"), fresh = make_var("x_fresh");
    for (int i = 0; i < 200; ++i) {
        FormulaPtr f = testsupport::gen_formula(rng, vars, 3);
        FormulaPtr there = substitute(f, x, variable(fresh));
        FormulaPtr back = substitute(there, fresh, variable(x));
        CHECK(equal(back, f));
    }
}

TEST_CASE("evaluation") {
    Valuation v{{make_var("x"), Rational(3)}};
    CHECK(evaluate(*F("x < 5 && x > 0"), v));
    CHECK_FALSE(evaluate(*F("x < 5 && x > 0"), {{make_var("x"), Rational(5)}}));
    Valuation storage{{make_var("capacity"), Rational(2)}, {make_var("price"), Rational(5)}};
    CHECK(evaluate(*F("capacity = 2 && price <= 5"), storage));
    CHECK_THROWS_AS(evaluate(*F("x < y"), v), MissingVariableError);
    CHECK_THROWS(evaluate(*F("exists y. (x < y)"), v));
}

TEST_CASE("negation normal form flips relations") {
    CHECK(equal(to_nnf(F("!(x <= 3)")), F("x > 3")));
    CHECK(equal(to_nnf(F("!(x = 1 && y < 2)")), F("x != 1 || y >= 2")));
    CHECK(equal(to_nnf(F("!(!(x > 0))")), F("x > 0")));
}

TEST_CASE("disjunctive normal form") {
    // (a || b) && c distributes
    auto dist = to_dnf(F("(x = 1 || y = 2) && z = 3"));
    CHECK(equivalent(dist, F("(x = 1 && z = 3) || (y = 2 && z = 3)")));
    CHECK(equal(to_dnf(F("x != 1")), F("x < 1 || x > 1")));
    auto a = F("x <= 3");
    CHECK(equal(to_dnf(a), a));
}

TEST_CASE("dnf cap") {
    // 2^12 disjuncts exceeds a cap of 64
    std::vector<FormulaPtr> parts;
    for (int i = 0; i < 12; ++i) {
        std::string v = "v" + std::to_string(i);
        parts.push_back(disj(F(v + " < 0"), F(v + " > 1")));
    }
    CHECK_THROWS_AS(to_dnf(conjunction(parts), 64), ResourceLimitError);
}

TEST_CASE("nnf and dnf preserve evaluation on random formulas") {
    Rng rng(13);
    std::vector<Var> vars{make_var("x"), make_var("y"), make_var("z")};
    for (int i = 0; i < 150; ++i) {
        FormulaPtr f = testsupport::gen_formula(rng, vars, 3);
        FormulaPtr nf = to_nnf(f);
        FormulaPtr df = to_dnf(f, 1 << 20);
        for (int k = 0; k < 10; ++k) {
            Valuation v = testsupport::gen_valuation(rng, free_vars(*f));
            bool expected = evaluate(*f, v);
            CHECK(evaluate(*nf, v) == expected);
            CHECK(evaluate(*df, v) == expected);
        }
    }
}

TEST_CASE("derived constructors expand to the core grammar") {
    CHECK(is_true_atom(*true_formula()));
    CHECK(is_false_atom(*false_formula()));
    CHECK(equal(F("true"), true_formula()));
    CHECK(equal(F("false"), false_formula()));
    // x <= 1 -> x <= 2  expands to  !(x <= 1) || x <= 2
    CHECK(equal(F("x <= 1 -> x <= 2"), disj(neg(F("x <= 1")), F("x <= 2"))));
    CHECK(quantifier_free(*F("x < 1 || x > 2")));
    CHECK_FALSE(quantifier_free(*F("exists x. (x > 0)")));
}

TEST_CASE("linear form of nested scaling flattens") {
    LinearForm lf = linear_form(*testsupport::T("2*(3*x + y) - x + 1/2"));
    CHECK(lf.coeffs.at(make_var("x")) == Rational(5));
    CHECK(lf.coeffs.at(make_var("y")) == Rational(2));
    CHECK(lf.constant == Rational(1, 2));
}
