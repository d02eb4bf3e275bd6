#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "distscale/pi_engine.hpp"
#include "distscale/random.hpp"
#include "fixtures.hpp"

using namespace distscale;
using fixtures::code_of;

namespace {

// Independent rank by fraction-exact elimination on a copy.
std::size_t rank_of(std::vector<std::vector<Rational>> a) {
    std::size_t rank = 0;
    const std::size_t cols = a.empty() ? 0 : a[0].size();
    for (std::size_t c = 0; c < cols && rank < a.size(); ++c) {
        std::size_t p = rank;
        while (p < a.size() && a[p][c].is_zero()) ++p;
        if (p == a.size()) continue;
        std::swap(a[p], a[rank]);
        for (std::size_t r = 0; r < a.size(); ++r) {
            if (r == rank || a[r][c].is_zero()) continue;
            const Rational f = a[r][c] / a[rank][c];
            for (std::size_t k = c; k < cols; ++k) a[r][k] -= f * a[rank][k];
        }
        ++rank;
    }
    return rank;
}

std::vector<Rational> to_rational(const Exponents& e) { return {e.begin(), e.end()}; }

bool is_zero_product(const QuantityRegistry& reg, const Exponents& e) {
    for (std::size_t u = 0; u < reg.units().size(); ++u) {
        Rational s(0);
        for (std::size_t q = 0; q < reg.size(); ++q) s += reg[q].dim[u] * Rational(e[q]);
        if (!s.is_zero()) return false;
    }
    return true;
}

Exponents canonical(Exponents e) {
    std::vector<Rational> r(e.begin(), e.end());
    return canonical_exponents(r);
}

std::multiset<Exponents> tail_canonical(const PiSet& s) {
    std::multiset<Exponents> out;
    for (std::size_t g = 0; g < s.size(); ++g) {
        if (g != s.target_index) out.insert(canonical(s.groups[g].exponents));
    }
    return out;
}

void check_set_invariants(const QuantityRegistry& reg, const PiSet& s, std::size_t expected_n) {
    REQUIRE(s.size() == expected_n);
    std::vector<std::vector<Rational>> rows;
    for (std::size_t g = 0; g < s.size(); ++g) {
        const auto& e = s.groups[g].exponents;
        CHECK(is_zero_product(reg, e));
        CHECK(e[s.target_quantity] == (g == s.target_index ? 1 : 0));
        rows.push_back(to_rational(e));
        if (g != s.target_index) {
            int gcd = 0;
            for (int x : e) gcd = std::gcd(gcd, std::abs(x));
            CHECK(gcd == 1);
            const auto first = std::find_if(e.begin(), e.end(), [](int x) { return x != 0; });
            REQUIRE(first != e.end());
            CHECK(*first > 0);
        }
    }
    CHECK(rank_of(rows) == expected_n);
}

}  // namespace

TEST_CASE("dimensional matrix of the bucket registry") {
    const auto m = build_dimensional_matrix(fixtures::bucket());
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 9);
    CHECK(m.at(0, 0) == Rational(1));
    CHECK(m.at(1, 0) == Rational(1));
    CHECK(m.at(2, 0) == Rational(-2));
    CHECK(m.at(2, 8) == Rational(-2));
    CHECK(matrix_rank(m) == 3);
}

TEST_CASE("dimensionless quantity gives a zero column") {
    const auto reg = fixtures::registry({{"f", {1, 1, -2}}, {"ratio", {0, 0, 0}}});
    const auto m = build_dimensional_matrix(reg);
    for (std::size_t u = 0; u < 3; ++u) CHECK(m.at(u, 1).is_zero());
}

TEST_CASE("small registry: rank and nullspace") {
    const auto reg = fixtures::registry({{"F21", {1, 1, -2}}, {"F31", {1, 1, -2}}, {"m_b", {1, 0, 0}}, {"a1", {0, 1, -2}}});
    const auto m = build_dimensional_matrix(reg);
    CHECK(matrix_rank(m) == 2);
    const auto basis = nullspace_basis(m);
    REQUIRE(basis.size() == 2);
    for (const auto& v : basis) CHECK(m.apply(v).is_dimensionless());
    // Span equality with {F21/F31, F31/(m_b a1)}: adding them never raises the rank.
    std::vector<std::vector<Rational>> rows(basis.begin(), basis.end());
    CHECK(rank_of(rows) == 2);
    rows.push_back({1, -1, 0, 0});
    rows.push_back({0, 1, -1, -1});
    CHECK(rank_of(rows) == 2);
}

TEST_CASE("nullspace of the bucket registry has six vectors") {
    const auto m = build_dimensional_matrix(fixtures::bucket());
    const auto basis = nullspace_basis(m);
    CHECK(basis.size() == 6);
    CHECK(pi_count(9, matrix_rank(m)) == 6);
    for (const auto& v : basis) CHECK(m.apply(v).is_dimensionless());
    std::vector<std::vector<Rational>> rows(basis.begin(), basis.end());
    CHECK(rank_of(rows) == 6);
}

TEST_CASE("full column rank has an empty nullspace") {
    const auto reg = fixtures::registry({{"m", {1, 0, 0}}, {"l", {0, 1, 0}}, {"t", {0, 0, 1}}});
    CHECK(nullspace_basis(build_dimensional_matrix(reg)).empty());
    CHECK(code_of([&] { enumerate_pi_sets(reg, 0); }) == ErrorCode::DegenerateSystem);
}

TEST_CASE("enumeration on the bucket registry") {
    const auto reg = fixtures::bucket();
    const auto sets = enumerate_pi_sets(reg, 0);
    REQUIRE_FALSE(sets.empty());
    CHECK(sets.size() <= EnumerationLimits{}.max_sets);

    const auto f21_f31 = fixtures::bucket_group({{"F21", 1}, {"F31", -1}});
    bool has_ratio = false;
    for (const auto& s : sets) {
        check_set_invariants(reg, s, 6);
        has_ratio = has_ratio || s.groups[s.target_index].exponents == f21_f31;
    }
    CHECK(has_ratio);

    const auto listed = fixtures::bucket_set();
    const auto want = tail_canonical(listed);
    const bool has_listed = std::any_of(sets.begin(), sets.end(), [&](const PiSet& s) {
        return s.groups[s.target_index].exponents == f21_f31 && tail_canonical(s) == want;
    });
    CHECK(has_listed);
    // The listed set is dimensionless group by group.
    for (const auto& g : listed.groups) CHECK(is_zero_product(reg, g.exponents));
}

TEST_CASE("enumeration output is sorted and deterministic") {
    const auto reg = fixtures::bucket();
    const auto a = enumerate_pi_sets(reg, 0);
    const auto b = enumerate_pi_sets(reg, 0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(exponent_matrix(a[i]) == exponent_matrix(b[i]));
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(exponent_matrix(a[i - 1]) < exponent_matrix(a[i]));
}

TEST_CASE("enumeration limits") {
    const auto reg = fixtures::bucket();
    EnumerationLimits tiny;
    tiny.max_sets = 1;
    CHECK(enumerate_pi_sets(reg, 0, tiny).size() == 1);
    EnumerationLimits flat;
    flat.max_depth = 0;
    CHECK(enumerate_pi_sets(reg, 0, flat).size() == 1);
    EnumerationLimits tight;
    tight.max_abs_exponent = 1;
    for (const auto& s : enumerate_pi_sets(reg, 0, tight)) {
        for (std::size_t g = 1; g < s.size(); ++g) {
            for (int e : s.groups[g].exponents) CHECK(std::abs(e) <= 1);
        }
    }
}

TEST_CASE("two quantities of the same dimension give one set") {
    const auto reg = fixtures::registry({{"q1", {1, 1, -2}}, {"q2", {1, 1, -2}}});
    const auto sets = enumerate_pi_sets(reg, 0);
    REQUIRE(sets.size() == 1);
    REQUIRE(sets[0].size() == 1);
    CHECK(sets[0].groups[0].exponents == Exponents{1, -1});
    CHECK(sets[0].groups[0].display == "q1·q2^-1");
}

TEST_CASE("target that cannot be isolated") {
    const auto reg = fixtures::registry({{"m", {1, 0, 0}}, {"l1", {0, 1, 0}}, {"l2", {0, 1, 0}}});
    CHECK(code_of([&] { enumerate_pi_sets(reg, 0); }) == ErrorCode::InfeasibleTarget);
}

TEST_CASE("target reachable only with a fractional exponent") {
    // v ~ sqrt(l g): the only group is v^2/(l g).
    const auto reg = fixtures::registry({{"v", {0, 1, -1}}, {"l", {0, 1, 0}}, {"g", {0, 1, -2}}});
    CHECK(code_of([&] { enumerate_pi_sets(reg, 0); }) == ErrorCode::InfeasibleTarget);
}

TEST_CASE("fuzz: every enumerated group is dimensionless") {
    Rng rng(2024);
    int registries = 0, groups = 0;
    for (int attempt = 0; registries < 60 && attempt < 2000; ++attempt) {
        const auto p = 3 + rng.below(8);
        std::vector<fixtures::Q> qs;
        for (std::size_t i = 0; i < p; ++i) {
            qs.push_back({"q" + std::to_string(i),
                          {static_cast<int>(rng.below(5)) - 2, static_cast<int>(rng.below(5)) - 2,
                           static_cast<int>(rng.below(5)) - 2}});
        }
        const auto reg = fixtures::registry(qs, rng.below(p));
        std::vector<PiSet> sets;
        try {
            EnumerationLimits lim;
            lim.max_sets = 40;
            sets = enumerate_pi_sets(reg, reg.target_index(), lim);
        } catch (const Error& e) {
            CHECK((e.code() == ErrorCode::DegenerateSystem || e.code() == ErrorCode::InfeasibleTarget));
            continue;
        }
        ++registries;
        const auto n = p - matrix_rank(build_dimensional_matrix(reg));
        for (const auto& s : sets) {
            CHECK(s.size() == n);
            for (const auto& g : s.groups) {
                CHECK(is_zero_product(reg, g.exponents));
                ++groups;
            }
        }
    }
    CHECK(registries >= 50);
    CHECK(groups > 0);
}

TEST_CASE("evaluate_pi examples") {
    const auto names = fixtures::bucket().names();
    std::vector<double> v(9, 1.0);
    const auto ratio = make_group(fixtures::bucket_group({{"F21", 1}, {"F31", -1}}), names);
    v[0] = 800.0;
    v[1] = 1000.0;
    CHECK(evaluate_pi(ratio, v, names) == doctest::Approx(0.8).epsilon(1e-15));

    const std::vector<double> ones(9, 1.0);
    for (const auto& g : fixtures::bucket_set().groups) CHECK(evaluate_pi(g, ones, names) == 1.0);

    const auto accel = make_group(fixtures::bucket_group({{"a1", 1}, {"x_b", -1}, {"alpha1", -1}}), names);
    std::vector<double> w(9, 1.0);
    w[7] = 2.0;
    w[4] = 0.5;
    w[8] = 4.0;
    CHECK(evaluate_pi(accel, w, names) == 1.0);
}

TEST_CASE("evaluate_pi errors name the quantity") {
    const auto names = fixtures::bucket().names();
    const auto accel = make_group(fixtures::bucket_group({{"a1", 1}, {"x_b", -1}, {"alpha1", -1}}), names);
    std::vector<double> v(9, 1.0);
    v[8] = 0.0;
    try {
        evaluate_pi(accel, v, names);
        FAIL("expected pi-evaluation error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PiEvaluation);
        CHECK(std::string(e.what()).find("alpha1") != std::string::npos);
    }
    v[8] = std::nan("");
    CHECK(code_of([&] { evaluate_pi(accel, v, names); }) == ErrorCode::PiEvaluation);
    v[8] = 1e-300;
    v[4] = 1e-300;
    CHECK(code_of([&] { evaluate_pi(accel, v, names); }) == ErrorCode::PiEvaluation);
}

TEST_CASE("pi values are invariant under consistent unit rescaling") {
    const auto reg = fixtures::bucket();
    const auto names = reg.names();
    const auto sets = enumerate_pi_sets(reg, 0);
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(9);
        for (auto& x : v) x = rng.uniform(0.1, 10.0);
        // Power-of-two unit factors keep every rescaled value exact.
        const double lm = std::ldexp(1.0, static_cast<int>(rng.below(9)) - 4);
        const double ll = std::ldexp(1.0, static_cast<int>(rng.below(9)) - 4);
        const double lt = std::ldexp(1.0, static_cast<int>(rng.below(9)) - 4);
        // General factors: rounding of each rescaled value is allowed for.
        const double gm = rng.uniform(0.01, 100.0), gl = rng.uniform(0.01, 100.0), gt = rng.uniform(0.01, 100.0);
        std::vector<double> exact(9), general(9);
        for (std::size_t q = 0; q < 9; ++q) {
            const auto& d = reg[q].dim;
            exact[q] = v[q] * std::pow(lm, d[0].to_double()) * std::pow(ll, d[1].to_double()) *
                       std::pow(lt, d[2].to_double());
            general[q] = v[q] * std::pow(gm, d[0].to_double()) * std::pow(gl, d[1].to_double()) *
                         std::pow(gt, d[2].to_double());
        }
        for (const auto& s : sets) {
            for (const auto& g : s.groups) {
                const double base = evaluate_pi(g, v, names);
                CHECK(fixtures::ulps(evaluate_pi(g, exact, names), base) <= 8);
                CHECK(fixtures::rel(evaluate_pi(g, general, names), base) < 1e-13);
            }
        }
    }
}
