#include "distscale/dimensions.hpp"

#include <algorithm>

#include "distscale/error.hpp"

namespace distscale {

UnitRegistry::UnitRegistry(std::vector<FundamentalUnit> units) : units_(std::move(units)) {
    std::set<std::string> seen;
    for (const auto& u : units_) {
        if (u.symbol.empty()) throw Error(ErrorCode::InvalidInput, "fundamental unit with empty symbol");
        if (!seen.insert(u.symbol).second) {
            throw Error(ErrorCode::InvalidInput, "duplicate fundamental unit '" + u.symbol + "'");
        }
    }
}

UnitRegistry UnitRegistry::mechanical() {
    return UnitRegistry({{"M", "mass (kg)"}, {"L", "length (m)"}, {"T", "time (s)"}});
}

std::optional<std::size_t> UnitRegistry::index_of(const std::string& symbol) const {
    for (std::size_t i = 0; i < units_.size(); ++i) {
        if (units_[i].symbol == symbol) return i;
    }
    return std::nullopt;
}

bool DimVector::is_dimensionless() const noexcept {
    return std::all_of(exponents_.begin(), exponents_.end(), [](const Rational& r) { return r.is_zero(); });
}

DimVector operator+(const DimVector& a, const DimVector& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::InvalidInput, "DimVector size mismatch");
    DimVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

DimVector operator-(const DimVector& a, const DimVector& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::InvalidInput, "DimVector size mismatch");
    DimVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

DimVector operator*(const Rational& s, const DimVector& v) {
    DimVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = s * v[i];
    return out;
}

QuantityRegistry::QuantityRegistry(UnitRegistry units, std::vector<Quantity> quantities,
                                   std::vector<EnergyDomain> domains)
    : units_(std::move(units)), quantities_(std::move(quantities)), domains_(std::move(domains)) {
    if (quantities_.empty()) throw Error(ErrorCode::InvalidInput, "quantity registry is empty");
    std::set<std::string> names;
    std::size_t targets = 0;
    for (std::size_t i = 0; i < quantities_.size(); ++i) {
        const auto& q = quantities_[i];
        if (q.name.empty()) throw Error(ErrorCode::InvalidInput, "quantity with empty name");
        if (!names.insert(q.name).second) throw Error(ErrorCode::InvalidInput, "duplicate quantity '" + q.name + "'");
        if (q.dim.size() != units_.size()) {
            throw Error(ErrorCode::InvalidInput, "quantity '" + q.name + "' has " + std::to_string(q.dim.size()) +
                                                     " exponents, registry declares " +
                                                     std::to_string(units_.size()) + " units");
        }
        if (q.role == QuantityRole::Target) {
            ++targets;
            target_ = i;
        }
    }
    if (targets != 1) {
        throw Error(ErrorCode::InvalidInput,
                    "registry must declare exactly one target quantity, found " + std::to_string(targets));
    }
    for (const auto& d : domains_) {
        for (const auto& s : d.units) {
            if (!units_.index_of(s)) {
                throw Error(ErrorCode::InvalidInput, "domain '" + d.name + "' references unknown unit '" + s + "'");
            }
        }
    }
}

std::optional<std::size_t> QuantityRegistry::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < quantities_.size(); ++i) {
        if (quantities_[i].name == name) return i;
    }
    return std::nullopt;
}

std::vector<std::string> QuantityRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(quantities_.size());
    for (const auto& q : quantities_) out.push_back(q.name);
    return out;
}

QuantityRegistry QuantityRegistry::with_target(const std::string& name) const {
    if (!index_of(name)) throw Error(ErrorCode::InvalidInput, "target '" + name + "' is not a registered quantity");
    auto qs = quantities_;
    for (auto& q : qs) q.role = q.name == name ? QuantityRole::Target : QuantityRole::Input;
    return QuantityRegistry(units_, std::move(qs), domains_);
}

std::size_t fundamental_unit_count(std::span<const EnergyDomain> domains) {
    if (domains.empty()) throw Error(ErrorCode::InvalidInput, "at least one energy domain is required");
    std::set<std::string> all;
    for (const auto& d : domains) all.insert(d.units.begin(), d.units.end());
    return all.size();
}

std::size_t fundamental_unit_count(std::span<const EnergyDomain> domains, const UnitRegistry& units) {
    for (const auto& d : domains) {
        for (const auto& s : d.units) {
            if (!units.index_of(s)) {
                throw Error(ErrorCode::InvalidInput, "domain '" + d.name + "' references unknown unit '" + s + "'");
            }
        }
    }
    return fundamental_unit_count(domains);
}

std::size_t pi_count(std::size_t p, std::size_t f) {
    if (f < 1) throw Error(ErrorCode::InvalidInput, "fundamental unit count must be at least 1");
    if (p <= f) {
        throw Error(ErrorCode::DegenerateSystem, "p = " + std::to_string(p) + " <= f = " + std::to_string(f) +
                                                     ": no free dimensionless groups");
    }
    return p - f;
}

bool check_dimensionless(const DimVector& dim) noexcept { return dim.is_dimensionless(); }

}  // namespace distscale
