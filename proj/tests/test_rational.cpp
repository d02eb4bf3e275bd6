#include <doctest.h>

#include <limits>

#include "distscale/error.hpp"
#include "distscale/random.hpp"
#include "distscale/rational.hpp"

using distscale::Error;
using distscale::ErrorCode;
using distscale::Rational;

TEST_CASE("rational normal form") {
    CHECK(Rational(6, -4) == Rational(-3, 2));
    CHECK(Rational(6, -4).den() == 2);
    CHECK(Rational(0, 7) == Rational(0));
    CHECK(Rational(0, -7).den() == 1);
    CHECK_THROWS_AS(Rational(1, 0), Error);
}

TEST_CASE("rational parse and print") {
    CHECK(Rational::parse("3/6") == Rational(1, 2));
    CHECK(Rational::parse("-2") == Rational(-2));
    CHECK(Rational::parse("+5/10") == Rational(1, 2));
    CHECK(Rational(-3, 4).str() == "-3/4");
    CHECK(Rational(4).str() == "4");
    for (const char* bad : {"", "1/", "/2", "a", "1.5", "1/0", "2/3/4"}) {
        CHECK_THROWS_AS(Rational::parse(bad), Error);
    }
}

TEST_CASE("rational arithmetic is exact") {
    const Rational a(1, 3), b(1, 6);
    CHECK(a + b == Rational(1, 2));
    CHECK(a - b == Rational(1, 6));
    CHECK(a * b == Rational(1, 18));
    CHECK(a / b == Rational(2));
    CHECK(-a == Rational(-1, 3));
    CHECK(a > b);
    CHECK_THROWS_AS(a / Rational(0), Error);

    distscale::Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        const Rational x(static_cast<std::int64_t>(rng.below(2001)) - 1000, 1 + static_cast<std::int64_t>(rng.below(97)));
        const Rational y(static_cast<std::int64_t>(rng.below(2001)) - 1000, 1 + static_cast<std::int64_t>(rng.below(97)));
        CHECK((x + y) - y == x);
        if (!y.is_zero()) CHECK((x / y) * y == x);
    }
}

TEST_CASE("rational overflow is reported") {
    const Rational big(std::numeric_limits<std::int64_t>::max());
    try {
        (void)(big + big);
        FAIL("expected overflow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Overflow);
    }
}
