#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace nego;
using testsupport::F;
using testsupport::Rng;

namespace {
const Var x = make_var("x");
const Var y = make_var("y");
}  // namespace

TEST_CASE("atoms normalize with flipped relations") {
    ConstraintSystem s = atoms_to_system(F("x >= 3"));
    REQUIRE(s.constraints.size() == 1);
    CHECK(s.constraints[0].coeffs.at(x) == Rational(-1));
    CHECK(s.constraints[0].bound == Rational(-3));
    CHECK(s.constraints[0].cmp == Cmp::le);

    ConstraintSystem storage = atoms_to_system(F("capacity >= 0 && price >= 0"));
    CHECK(storage.constraints.size() == 2);

    ConstraintSystem lt = atoms_to_system(F("x + 2*y < 7"));
    REQUIRE(lt.constraints.size() == 1);
    CHECK(lt.constraints[0].coeffs.at(y) == Rational(2));
    CHECK(lt.constraints[0].cmp == Cmp::lt);

    CHECK_THROWS(atoms_to_system(F("x != 1")));  // != must be split by DNF first
}

TEST_CASE("eliminate_var pairs bounds and substitutes equalities") {
    // {y < x, x < 5, 0 < y} along x -> {y < 5, 0 < y}
    ConstraintSystem s = atoms_to_system(F("y < x && x < 5 && 0 < y"));
    ConstraintSystem px = eliminate_var(s, x);
    CHECK(equivalent(system_to_formula(px), F("y < 5 && 0 < y")));

    // absent variable: unchanged
    ConstraintSystem t = atoms_to_system(F("x <= 3"));
    CHECK(equivalent(system_to_formula(eliminate_var(t, y)), F("x <= 3")));

    // equality substitutes exactly: {x = y + 1, x <= 4} -> {y <= 3}
    ConstraintSystem e = atoms_to_system(F("x = y + 1 && x <= 4"));
    CHECK(equivalent(system_to_formula(eliminate_var(e, x)), F("y <= 3")));
}

TEST_CASE("strictness propagates through combinations") {
    auto proj = [&](const char* text) {
        return system_to_formula(eliminate_var(atoms_to_system(F(text)), x));
    };
    CHECK(equivalent(proj("y <= x && x <= z"), F("y <= z")));
    CHECK(equivalent(proj("y < x && x <= z"), F("y < z")));
    CHECK(equivalent(proj("y <= x && x < z"), F("y < z")));
    CHECK(equivalent(proj("y < x && x < z"), F("y < z")));
}

TEST_CASE("qe reproduces the projection example") {
    FormulaPtr g = qe(F("exists y. (x < 5 && x > y && y > 0)"));
    CHECK(quantifier_free(*g));
    CHECK(equivalent(g, F("x < 5 && x > 0")));

    CHECK(equal(qe(F("exists x. (x > 0)")), true_formula()));
    CHECK(equal(qe(F("exists x. (x < 0 && x > 1)")), false_formula()));
    // no quantifier: unchanged
    CHECK(equal(qe(F("x < 5")), F("x < 5")));
}

TEST_CASE("satisfiability") {
    CHECK(is_satisfiable(F("capacity = 10 && price <= 5")));
    CHECK_FALSE(is_satisfiable(F("x < 0 && x > 1")));
    // witness {c -> 100, p -> 5} checked by evaluate, then by the solver
    FormulaPtr qr = F("c = 100 && p <= 5 && 33/10 <= p && p <= 5");
    Valuation witness{{make_var("c"), Rational(100)}, {make_var("p"), Rational(5)}};
    CHECK(evaluate(*qr, witness));
    CHECK(is_satisfiable(qr));
    // nested quantifiers are fine
    CHECK(is_satisfiable(F("exists x. exists y. (x < y && y < x + 1)")));
}

TEST_CASE("entailment and equivalence") {
    CHECK(entails(F("x = 3"), F("x <= 5")));
    CHECK_FALSE(entails(F("x <= 5"), F("x = 3")));
    CHECK(entails(F("c = 2 && p = 5"), F("c = 2 && p >= 5")));
    CHECK(equivalent(F("x < 5 && x > 0"), F("0 < x && x < 5")));
    CHECK(equivalent(qe(F("exists y. (x < 5 && x > y && y > 0)")), F("x < 5 && x > 0")));
    CHECK_FALSE(equivalent(F("x <= 5"), F("x < 5")));
}

TEST_CASE("simplify rewrites") {
    CHECK(equal(simplify(F("p <= 8 && p >= 8")), F("p = 8")));
    CHECK(equal(simplify(F("x <= 5 && x <= 7")), F("x <= 5")));
    CHECK(equal(simplify(F("x < 1 || false")), F("x < 1")));
    CHECK(equal(simplify(F("x < 1 && 0 = 0 && 1 >= 0")), F("x < 1")));
    CHECK(equal(simplify(F("(x < 1) || (x < 1)")), F("x < 1")));
    CHECK(equal(simplify(F("x < 1 && x > 2")), false_formula()));
    CHECK(equal(simplify(F("x = 2 && x >= 1")), F("x = 2")));
}

TEST_CASE("simplify preserves equivalence on random formulas") {
    Rng rng(19);
    std::vector<Var> vars{x, y, make_var("z")};
    for (int i = 0; i < 120; ++i) {
        FormulaPtr f = testsupport::gen_formula(rng, vars, 3);
        CHECK(equivalent(simplify(f), f));
    }
}

TEST_CASE("preference strengthening") {
    FormulaPtr offer = F("speed = 6 && price <= 10 && price >= 8");
    FormulaPtr min = apply_preference(offer, make_var("price"), Direction::minimize);
    CHECK(equivalent(min, F("speed = 6 && price = 8")));

    CHECK(equivalent(apply_preference(F("price >= 0 && price <= 4"), make_var("price"),
                                      Direction::maximize),
                     F("price = 4")));

    // an open bound has no attained optimum
    CHECK(equal(apply_preference(F("price < 1"), make_var("price"), Direction::minimize),
                false_formula()));

    // no-op with a warning when the parameter is not free
    std::string warning;
    FormulaPtr same = apply_preference(F("speed = 6"), make_var("price"), Direction::minimize,
                                       {}, &warning);
    CHECK(equal(same, F("speed = 6")));
    CHECK(!warning.empty());
}

TEST_CASE("preference result entails its input") {
    Rng rng(23);
    std::vector<Var> vars{x, y};
    for (int i = 0; i < 80; ++i) {
        FormulaPtr f = testsupport::gen_formula(rng, vars, 2, /*allow_ne=*/false);
        Direction dir = rng.chance(0.5) ? Direction::minimize : Direction::maximize;
        FormulaPtr g = apply_preference(f, x, dir);
        CHECK(entails(g, f));
    }
}

TEST_CASE("one-variable projections agree with the sampling oracle") {
    Rng rng(29);
    std::vector<Var> vars{x, y, make_var("z"), make_var("w")};
    for (int i = 0; i < 200; ++i) {
        FormulaPtr body = testsupport::gen_formula(rng, vars, 3);
        FormulaPtr projected = qe(exists(x, body));
        REQUIRE(quantifier_free(*projected));
        std::set<Var> rest = free_vars(*body);
        rest.erase(x);
        for (int k = 0; k < 10; ++k) {
            Valuation v = testsupport::gen_valuation(rng, rest);
            bool via_qe = evaluate(*projected, v);
            bool via_oracle = testsupport::oracle_exists(body, x, v);
            CHECK(via_qe == via_oracle);
        }
    }
}

TEST_CASE("projection order does not matter") {
    Rng rng(31);
    std::vector<Var> vars{x, y, make_var("z")};
    for (int i = 0; i < 40; ++i) {
        FormulaPtr f = testsupport::gen_formula(rng, vars, 3);
        FormulaPtr xy = qe(exists(x, exists(y, f)));
        FormulaPtr a = qe(exists(x, qe(exists(y, f))));
        FormulaPtr b = qe(exists(y, qe(exists(x, f))));
        CHECK(equivalent(a, b));
        CHECK(equivalent(a, xy));
    }
}

TEST_CASE("conjunction splits across an unused quantifier") {
    // exists x. (phi && psi)  <=>  phi && exists x. psi   when x not free in phi
    Rng rng(37);
    std::vector<Var> outer{y, make_var("z")};
    std::vector<Var> inner{x, y, make_var("z")};
    for (int i = 0; i < 60; ++i) {
        FormulaPtr phi = testsupport::gen_formula(rng, outer, 2);
        FormulaPtr psi = testsupport::gen_formula(rng, inner, 2);
        FormulaPtr lhs = qe(exists(x, conj(phi, psi)));
        FormulaPtr rhs = simplify(conj(phi, qe(exists(x, psi))));
        CHECK(equivalent(lhs, rhs));
    }
}

TEST_CASE("entailment is a preorder") {
    Rng rng(41);
    std::vector<Var> vars{x, y};
    std::vector<FormulaPtr> pool;
    for (int i = 0; i < 12; ++i) pool.push_back(testsupport::gen_formula(rng, vars, 2));
    for (const auto& f : pool) CHECK(entails(f, f));
    for (int i = 0; i < 60; ++i) {
        const auto& a = rng.pick(pool);
        const auto& b = rng.pick(pool);
        const auto& c = rng.pick(pool);
        if (entails(a, b) && entails(b, c)) CHECK(entails(a, c));
    }
}

TEST_CASE("resource cap surfaces as a distinct error") {
    std::vector<FormulaPtr> parts;
    for (int i = 0; i < 10; ++i) {
        std::string v = "v" + std::to_string(i);
        parts.push_back(F(v + " != 0"));
    }
    FormulaPtr blowup = exists(make_var("v0"), conjunction(parts));
    CHECK_THROWS_AS(qe(blowup, QeOptions{16}), ResourceLimitError);
    CHECK_NOTHROW(qe(blowup, QeOptions{4096}));
}
