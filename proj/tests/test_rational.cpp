#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace nego;
using testsupport::Rng;

TEST_CASE("construction is canonical") {
    Rational r(6, 4);
    CHECK(r.numerator() == 3);
    CHECK(r.denominator() == 2);

    Rational neg(3, -6);
    CHECK(neg.numerator() == -1);
    CHECK(neg.denominator() == 2);

    CHECK(Rational(0, 7) == Rational(0));
    CHECK_THROWS_AS(Rational(1, 0), std::invalid_argument);
}

TEST_CASE("text forms") {
    CHECK(Rational::from_text("11/10") == Rational(11, 10));
    CHECK(Rational::from_text("1.1") == Rational(11, 10));
    CHECK(Rational::from_text("0.25") == Rational(1, 4));
    CHECK(Rational::from_text("-3") == Rational(-3));
    CHECK(Rational::from_text("17").text() == "17");
    CHECK(Rational(17, 11).text() == "17/11");
    CHECK(Rational(-1, 2).text() == "-1/2");
    CHECK_THROWS(Rational::from_text("1."));
    CHECK_THROWS(Rational::from_text("x"));
}

TEST_CASE("exact arithmetic") {
    Rational a(1, 3), b(1, 6);
    CHECK(a + b == Rational(1, 2));
    CHECK(a - b == Rational(1, 6));
    CHECK(a * b == Rational(1, 18));
    CHECK(a / b == Rational(2));
    CHECK(Rational(11, 10) * (Rational(3) + Rational(17, 11)) == Rational(5));
    CHECK(Rational(1, 3) < Rational(34, 100) + Rational(1, 300));
    CHECK_THROWS_AS(a / Rational(0), std::invalid_argument);
}

TEST_CASE("reciprocal round trip over random values") {
    Rng rng(7);
    for (int i = 0; i < 500; ++i) {
        Rational r = rng.rational(50);
        if (r.is_zero()) continue;
        CHECK(r * r.reciprocal() == Rational(1));
        // canonical form is stable under re-parsing
        CHECK(Rational::from_text(r.text()) == r);
    }
}
