#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace nego;
using testsupport::F;
using testsupport::Rng;

TEST_CASE("formula grammar") {
    CHECK(equal(F("x<5&&x>0"), F("x < 5 && x > 0")));
    CHECK(equal(F("1.1 * (a + b) = c"), atom(scale(Rational(11, 10),
                                                   sum(variable(make_var("a")),
                                                       variable(make_var("b")))),
                                             Rel::eq, variable(make_var("c")))));
    // quantifier scope extends to the end; parenthesized forms nest
    CHECK(equal(F("exists x. x > 0 && x < 1"), exists(make_var("x"), F("x > 0 && x < 1"))));
    CHECK(equal(F("exists x, y. (x > y)"),
                exists(make_var("x"), exists(make_var("y"), F("x > y")))));
    CHECK(equal(F("s1.capacity + s2.capacity = capacity"),
                F(" s1.capacity + s2.capacity = capacity ")));
}

TEST_CASE("parse errors carry positions") {
    try {
        parse_formula("x <\n  5 &&");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line >= 1);
        CHECK(e.column >= 1);
    }
    CHECK_THROWS_AS(parse_formula("x * y = 1"), ParseError);   // nonlinear product
    CHECK_THROWS_AS(parse_formula("x < 5 &&"), ParseError);
    CHECK_THROWS_AS(parse_formula("exists . x > 0"), ParseError);
    CHECK_THROWS_AS(parse_formula("true = 1"), ParseError);    // reserved word
    CHECK_THROWS_AS(parse_formula(""), ParseError);
    CHECK_THROWS_AS(parse_formula("x < 5 garbage"), ParseError);
}

TEST_CASE("print/parse round trip on generated formulas") {
    Rng rng(17);
    std::vector<Var> vars{make_var("x"), make_var("y"), make_var("s1", "p"), make_var("s2", "q")};
    for (int i = 0; i < 300; ++i) {
        FormulaPtr f = testsupport::gen_formula(rng, vars, 4);
        CHECK(equal(parse_formula(to_text(f)), f));
    }
    // and with quantifiers on top
    for (int i = 0; i < 100; ++i) {
        FormulaPtr f = exists(make_var("x"), testsupport::gen_formula(rng, vars, 3));
        if (rng.chance(0.5)) f = neg(f);
        CHECK(equal(parse_formula(to_text(f)), f));
    }
}

TEST_CASE("config type grammar") {
    ConfigType storage = parse_config_type(
        "{capacity: decimal, price: decimal; capacity >= 0 && price >= 0}");
    CHECK(storage.params.size() == 2);
    CHECK(lang(storage) == std::set<Var>{make_var("capacity"), make_var("price")});
    CHECK(equal(storage.constraint, F("capacity >= 0 && price >= 0")));

    ConfigType trivial = parse_config_type("{x: decimal; true}");
    CHECK(trivial.params.size() == 1);

    // empty parameter list is grammatical
    ConfigType empty = parse_config_type("{; true}");
    CHECK(empty.params.empty());

    CHECK_THROWS_AS(parse_config_type("{x: decimal; y > 0}"), ParseError);
    CHECK_THROWS_AS(parse_config_type("{x: decimal, x: decimal; true}"), ParseError);
    CHECK_THROWS_AS(parse_config_type("{x: int; true}"), ParseError);

    // round trip
    CHECK(to_text(parse_config_type(to_text(storage))) == to_text(storage));
}

TEST_CASE("registry") {
    std::vector<std::string> warnings;
    Registry reg = parse_registry(
        "storage = {capacity: decimal, price: decimal; capacity >= 0 && price >= 0}\n"
        "compute = {cores: decimal; cores >= 1}\n",
        &warnings);
    CHECK(reg.types.size() == 2);
    CHECK(reg.find("storage") != nullptr);
    CHECK(reg.find("storage")->name == "storage");
    CHECK(reg.find("missing") == nullptr);
    CHECK(warnings.empty());

    // unsatisfiable constraint is a load error
    CHECK_THROWS_AS(parse_registry("bad = {x: decimal; x < 0 && x > 1}"), ValidationError);
    // a parameterless type loads with a warning
    parse_registry("unit = {; true}", &warnings);
    CHECK(warnings.size() == 1);
}

TEST_CASE("policy grammar accepts the brokering example verbatim") {
    Policy p = parse_policy(R"(
policy storage-brokering {
  serves: storage
  rules: [
   { trigger: true,
     uses: [s1:storage, s2:storage],
     offer: { capacity := s1.capacity + s2.capacity,
              price := 1.1*(s1.price + s2.price) },
     constraint:true},
  ]
}
)");
    CHECK(p.name == "storage-brokering");
    CHECK(p.serves.id == "storage");
    REQUIRE(p.rules.size() == 1);
    const Rule& r = p.rules[0];
    CHECK(equal(r.trigger, true_formula()));
    REQUIRE(r.uses.size() == 2);
    CHECK(r.uses[0].server_id == "s1");
    CHECK(r.uses[1].type.id == "storage");
    REQUIRE(r.offer.size() == 2);
    CHECK(r.offer[0].param == "capacity");
    CHECK(equal(r.offer[1].value, testsupport::T("1.1*(s1.price + s2.price)")));
    CHECK(equal(r.constraint, true_formula()));
}

TEST_CASE("policy clauses and errors") {
    Policy p = parse_policy(R"(
policy cheap {
  serves: storage
  minimize: [price]
  rules: [ { trigger: true, uses: [], offer: {}, constraint: price <= 10 } ]
}
)");
    CHECK(p.minimize == std::vector<std::string>{"price"});
    CHECK(p.rules[0].uses.empty());

    // a policy must declare at least one rule
    CHECK_THROWS_AS(parse_policy("policy p { serves: storage rules: [] }"), ParseError);
    // inline config types are allowed as type expressions
    Policy inl = parse_policy(
        "policy q { serves: {x: decimal; x >= 0} "
        "rules: [ { trigger: true, uses: [], offer: {}, constraint: true } ] }");
    CHECK(inl.serves.inline_type.has_value());
}

TEST_CASE("policy print/parse round trip") {
    const char* text = R"(
policy storage-brokering {
  serves: storage
  minimize: [price]
  maximize: [capacity]
  rules: [
   { trigger: capacity <= 200,
     uses: [s1:storage, s2:storage],
     offer: { capacity := s1.capacity + s2.capacity,
              price := 1.1*(s1.price + s2.price) },
     constraint: s1.capacity = s2.capacity },
   { trigger: true, uses: [], offer: {}, constraint: capacity = 0 && price = 0 },
  ]
}
)";
    Policy p = parse_policy(text);
    Policy re = parse_policy(to_text(p));
    CHECK(to_text(re) == to_text(p));
    CHECK(re.name == p.name);
    CHECK(re.rules.size() == p.rules.size());
    CHECK(re.minimize == p.minimize);
    CHECK(equal(re.rules[0].trigger, p.rules[0].trigger));
    CHECK(equal(re.rules[0].constraint, p.rules[0].constraint));
    CHECK(equal(re.rules[0].offer[1].value, p.rules[0].offer[1].value));
}
