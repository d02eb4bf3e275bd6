#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <doctest.h>

#include "distscale/dimensions.hpp"
#include "distscale/error.hpp"
#include "distscale/pi_engine.hpp"
#include "distscale/testbench.hpp"

namespace fixtures {

using namespace distscale;

struct Q {
    std::string name;
    std::vector<int> dims;
};

/// Registry over M, L, T with the first entry as target unless told otherwise.
inline QuantityRegistry registry(const std::vector<Q>& qs, std::size_t target = 0) {
    std::vector<Quantity> out;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        std::vector<Rational> d;
        for (int e : qs[i].dims) d.emplace_back(e);
        out.push_back({qs[i].name, DimVector(d), i == target ? QuantityRole::Target : QuantityRole::Input, ""});
    }
    return QuantityRegistry(UnitRegistry::mechanical(), out);
}

inline QuantityRegistry bucket() {
    return registry({{"F21", {1, 1, -2}},
                     {"F31", {1, 1, -2}},
                     {"P_f_tilt", {1, 1, -2}},
                     {"P_f_lift", {1, 1, -2}},
                     {"x_b", {0, 1, 0}},
                     {"y_b", {0, 1, 0}},
                     {"m_b", {1, 0, 0}},
                     {"a1", {0, 1, -2}},
                     {"alpha1", {0, 0, -2}}});
}

/// Exponent vector over the bucket registry from (name, exponent) pairs.
inline Exponents bucket_group(const std::vector<std::pair<std::string, int>>& terms) {
    const auto names = bucket().names();
    Exponents e(names.size(), 0);
    for (const auto& [n, k] : terms) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == n) e[i] = k;
        }
    }
    return e;
}

inline PiSet make_set(const QuantityRegistry& reg, const std::vector<Exponents>& rows) {
    PiSet s;
    s.target_quantity = reg.target_index();
    s.target_index = 0;
    const auto names = reg.names();
    for (const auto& r : rows) s.groups.push_back(make_group(r, names));
    return s;
}

/// The set listed for the bucket problem: {F21/F31, P_f_tilt/F31, P_f_lift/F31,
/// y_b/x_b, F31/(m_b x_b alpha1), a1/(x_b alpha1)}.
inline PiSet bucket_set() {
    return make_set(bucket(), {bucket_group({{"F21", 1}, {"F31", -1}}),
                               bucket_group({{"P_f_tilt", 1}, {"F31", -1}}),
                               bucket_group({{"P_f_lift", 1}, {"F31", -1}}),
                               bucket_group({{"y_b", 1}, {"x_b", -1}}),
                               bucket_group({{"F31", 1}, {"m_b", -1}, {"x_b", -1}, {"alpha1", -1}}),
                               bucket_group({{"a1", 1}, {"x_b", -1}, {"alpha1", -1}})});
}

template <typename F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a distscale::Error");
    return ErrorCode::Internal;
}

inline std::string config_path(const std::string& name) { return std::string(DS_CONFIG_DIR) + "/" + name; }

/// Base geometry of the shipped fleet specs.
inline FleetSpec small_fleet() {
    FleetSpec spec = load_fleet_spec(config_path("fleet_similar.toml"));
    return spec;
}

/// Units in the last place between two doubles of the same sign.
inline std::int64_t ulps(double a, double b) {
    if (a == b) return 0;
    std::int64_t ia, ib;
    std::memcpy(&ia, &a, sizeof a);
    std::memcpy(&ib, &b, sizeof b);
    if ((ia < 0) != (ib < 0)) return INT64_MAX;
    return ia > ib ? ia - ib : ib - ia;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("distscale_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace fixtures
