#include <doctest.h>

#include <algorithm>

#include "distscale/dimensions.hpp"
#include "distscale/error.hpp"
#include "distscale/random.hpp"
#include "fixtures.hpp"

using namespace distscale;

using fixtures::code_of;

TEST_CASE("fundamental unit count is the size of the union") {
    const std::vector<EnergyDomain> two{{"mech", {"M", "L", "T"}}, {"hyd", {"M", "L", "T"}}};
    CHECK(fundamental_unit_count(two) == 3);
    const std::vector<EnergyDomain> one{{"mech", {"M", "L", "T"}}};
    CHECK(fundamental_unit_count(one) == 3);
    const std::vector<EnergyDomain> thermal{{"mech", {"M", "L", "T"}}, {"thermal", {"M", "L", "T", "K"}}};
    CHECK(fundamental_unit_count(thermal) == 4);
    CHECK(code_of([] { fundamental_unit_count(std::vector<EnergyDomain>{}); }) == ErrorCode::InvalidInput);
}

TEST_CASE("three domains sharing units only among themselves") {
    // Overlap between domains 2 and 3 is not seen by a count that only
    // subtracts overlaps with domain 1; the union gets it right.
    const std::vector<EnergyDomain> d{{"a", {"M"}}, {"b", {"L", "T"}}, {"c", {"L", "T", "K"}}};
    CHECK(fundamental_unit_count(d) == 4);
}

TEST_CASE("fundamental unit count rejects unknown symbols") {
    const std::vector<EnergyDomain> d{{"mech", {"M", "L", "X"}}};
    CHECK(code_of([&] { fundamental_unit_count(d, UnitRegistry::mechanical()); }) == ErrorCode::InvalidInput);
}

TEST_CASE("unit count is order independent and idempotent under duplication") {
    Rng rng(5);
    const std::vector<std::string> symbols{"M", "L", "T", "K", "A", "N", "J"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<EnergyDomain> domains;
        const auto n = 1 + rng.below(5);
        for (std::size_t i = 0; i < n; ++i) {
            EnergyDomain d{"d" + std::to_string(i), {}};
            for (const auto& s : symbols) {
                if (rng.uniform() < 0.4) d.units.insert(s);
            }
            domains.push_back(d);
        }
        if (std::all_of(domains.begin(), domains.end(), [](const auto& d) { return d.units.empty(); })) continue;
        const auto f = fundamental_unit_count(domains);
        auto shuffled = domains;
        rng.shuffle(shuffled);
        CHECK(fundamental_unit_count(shuffled) == f);
        auto doubled = domains;
        doubled.insert(doubled.end(), domains.begin(), domains.end());
        CHECK(fundamental_unit_count(doubled) == f);
    }
}

TEST_CASE("pi count") {
    CHECK(pi_count(9, 3) == 6);
    CHECK(pi_count(4, 3) == 1);
    CHECK(code_of([] { pi_count(2, 3); }) == ErrorCode::DegenerateSystem);
    CHECK(code_of([] { pi_count(3, 3); }) == ErrorCode::DegenerateSystem);
    CHECK(code_of([] { pi_count(3, 0); }) == ErrorCode::InvalidInput);
    for (std::size_t f = 1; f < 6; ++f) {
        for (std::size_t p = f + 1; p < 15; ++p) CHECK(pi_count(p, f) + f == p);
    }
}

TEST_CASE("dimensionless check") {
    CHECK(check_dimensionless(DimVector(std::vector<Rational>{0, 0, 0})));
    const DimVector force(std::vector<Rational>{1, 1, -2});
    CHECK_FALSE(check_dimensionless(force));
    CHECK(check_dimensionless(force + DimVector(std::vector<Rational>{-1, -1, 2})));
    CHECK(check_dimensionless(force - force));
    CHECK(Rational(1, 2) * force == DimVector(std::vector<Rational>{Rational(1, 2), Rational(1, 2), -1}));
}

TEST_CASE("DimVector arithmetic round trips exactly") {
    Rng rng(9);
    auto random_vec = [&] {
        std::vector<Rational> e;
        for (int i = 0; i < 4; ++i) {
            e.emplace_back(static_cast<std::int64_t>(rng.below(41)) - 20, 1 + static_cast<std::int64_t>(rng.below(12)));
        }
        return DimVector(e);
    };
    for (int i = 0; i < 300; ++i) {
        const auto a = random_vec(), b = random_vec();
        CHECK((a + b) - b == a);
    }
}

TEST_CASE("registry validation") {
    using fixtures::Q;
    CHECK_NOTHROW(fixtures::bucket());
    CHECK(fixtures::bucket().size() == 9);
    CHECK(fixtures::bucket().target_index() == 0);
    CHECK(code_of([] { fixtures::registry({{"a", {1, 0, 0}}, {"a", {0, 1, 0}}}); }) == ErrorCode::InvalidInput);
    CHECK(code_of([] { fixtures::registry({{"a", {1, 0}}}); }) == ErrorCode::InvalidInput);

    std::vector<Quantity> none{{"a", DimVector(std::vector<Rational>{1, 0, 0}), QuantityRole::Input, ""}};
    CHECK(code_of([&] { QuantityRegistry(UnitRegistry::mechanical(), none); }) == ErrorCode::InvalidInput);
    std::vector<Quantity> two{{"a", DimVector(std::vector<Rational>{1, 0, 0}), QuantityRole::Target, ""},
                              {"b", DimVector(std::vector<Rational>{1, 0, 0}), QuantityRole::Target, ""}};
    CHECK(code_of([&] { QuantityRegistry(UnitRegistry::mechanical(), two); }) == ErrorCode::InvalidInput);

    const auto moved = fixtures::bucket().with_target("F31");
    CHECK(moved.target_index() == 1);
    CHECK(moved[0].role == QuantityRole::Input);
    CHECK(code_of([] { fixtures::bucket().with_target("nope"); }) == ErrorCode::InvalidInput);
}

TEST_CASE("unit registry rejects duplicates") {
    CHECK(code_of([] { UnitRegistry({{"M", ""}, {"M", ""}}); }) == ErrorCode::InvalidInput);
    CHECK(UnitRegistry::mechanical().index_of("T") == std::optional<std::size_t>(2));
    CHECK_FALSE(UnitRegistry::mechanical().index_of("K").has_value());
}
