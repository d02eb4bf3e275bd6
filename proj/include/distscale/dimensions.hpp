#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "distscale/rational.hpp"

namespace distscale {

struct FundamentalUnit {
    std::string symbol;
    std::string description;
};

/// Ordered set of base units. The order fixes the row order of every
/// dimensional matrix and the component order of every DimVector.
class UnitRegistry {
public:
    UnitRegistry() = default;
    explicit UnitRegistry(std::vector<FundamentalUnit> units);

    /// M, L, T (kg, m, s).
    static UnitRegistry mechanical();

    std::size_t size() const noexcept { return units_.size(); }
    const FundamentalUnit& operator[](std::size_t i) const { return units_[i]; }
    const std::vector<FundamentalUnit>& units() const noexcept { return units_; }
    std::optional<std::size_t> index_of(const std::string& symbol) const;

private:
    std::vector<FundamentalUnit> units_;
};

struct EnergyDomain {
    std::string name;
    std::set<std::string> units;
};

/// Exponent signature of a quantity over a UnitRegistry.
class DimVector {
public:
    DimVector() = default;
    explicit DimVector(std::size_t size) : exponents_(size) {}
    explicit DimVector(std::vector<Rational> exponents) : exponents_(std::move(exponents)) {}

    std::size_t size() const noexcept { return exponents_.size(); }
    const Rational& operator[](std::size_t i) const { return exponents_[i]; }
    Rational& operator[](std::size_t i) { return exponents_[i]; }
    const std::vector<Rational>& exponents() const noexcept { return exponents_; }

    bool is_dimensionless() const noexcept;

    friend DimVector operator+(const DimVector& a, const DimVector& b);
    friend DimVector operator-(const DimVector& a, const DimVector& b);
    friend DimVector operator*(const Rational& s, const DimVector& v);
    friend bool operator==(const DimVector&, const DimVector&) = default;

private:
    std::vector<Rational> exponents_;
};

enum class QuantityRole { Target, Input };

struct Quantity {
    std::string name;
    DimVector dim;
    QuantityRole role = QuantityRole::Input;
    std::string unit_label;
};

/// Validated collection of quantities: unique names, exactly one target,
/// every DimVector sized to the unit registry.
class QuantityRegistry {
public:
    QuantityRegistry() = default;
    QuantityRegistry(UnitRegistry units, std::vector<Quantity> quantities, std::vector<EnergyDomain> domains = {});

    const UnitRegistry& units() const noexcept { return units_; }
    const std::vector<Quantity>& quantities() const noexcept { return quantities_; }
    const std::vector<EnergyDomain>& domains() const noexcept { return domains_; }
    std::size_t size() const noexcept { return quantities_.size(); }
    const Quantity& operator[](std::size_t i) const { return quantities_[i]; }

    std::size_t target_index() const noexcept { return target_; }
    std::optional<std::size_t> index_of(const std::string& name) const;
    std::vector<std::string> names() const;

    /// Same registry with the target role moved to `name`.
    QuantityRegistry with_target(const std::string& name) const;

private:
    UnitRegistry units_;
    std::vector<Quantity> quantities_;
    std::vector<EnergyDomain> domains_;
    std::size_t target_ = 0;
};

/// Number of distinct fundamental units across the given energy domains
/// (cardinality of the union of their unit sets).
std::size_t fundamental_unit_count(std::span<const EnergyDomain> domains);

/// As above, additionally rejecting unit symbols missing from `units`.
std::size_t fundamental_unit_count(std::span<const EnergyDomain> domains, const UnitRegistry& units);

/// Dimensionless parameter count n = p - f. Requires p > f >= 1.
std::size_t pi_count(std::size_t p, std::size_t f);

bool check_dimensionless(const DimVector& dim) noexcept;

}  // namespace distscale
