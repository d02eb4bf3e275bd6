#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "distscale/dimensions.hpp"
#include "distscale/rational.hpp"

namespace distscale {

/// Units x quantities exponent matrix; entry (u, q) is quantity q's
/// exponent on unit u.
class DimensionalMatrix {
public:
    DimensionalMatrix() = default;
    DimensionalMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), entries_(rows * cols) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    const Rational& at(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
    Rational& at(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }

    /// Induced unit signature of a power product with the given exponents.
    DimVector apply(std::span<const int> exponents) const;
    DimVector apply(std::span<const Rational> exponents) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Rational> entries_;
};

using RationalVector = std::vector<Rational>;
using Exponents = std::vector<int>;

DimensionalMatrix build_dimensional_matrix(const QuantityRegistry& registry);

std::size_t matrix_rank(const DimensionalMatrix& m);

/// Exact Gauss-Jordan nullspace. Free variables are taken left to right in
/// `column_order` (default: natural order); vector components are always
/// indexed by the original column.
std::vector<RationalVector> nullspace_basis(const DimensionalMatrix& m);
std::vector<RationalVector> nullspace_basis(const DimensionalMatrix& m, std::span<const std::size_t> column_order);

struct PiGroup {
    Exponents exponents;
    std::string display;
};

struct PiSet {
    std::vector<PiGroup> groups;
    std::size_t target_index = 0;     ///< position of the group holding the target
    std::size_t target_quantity = 0;  ///< registry index of the target quantity

    std::size_t size() const noexcept { return groups.size(); }
};

struct EnumerationLimits {
    std::size_t max_sets = 200;
    int max_abs_exponent = 3;
    int max_depth = 2;  ///< recombination steps away from the echelon basis
};

/// Scales a rational vector to coprime integers with the first nonzero
/// component positive.
Exponents canonical_exponents(std::span<const Rational> v);

std::string render_group(std::span<const int> exponents, std::span<const std::string> names);
PiGroup make_group(Exponents exponents, std::span<const std::string> names);

/// Candidate Pi sets with the target isolated in the first group at
/// exponent +1 and absent from every other group. The echelon basis is
/// always emitted; further sets come from breadth-first unimodular row
/// recombinations (row_i += row_j or row_i -= row_j) that keep every
/// exponent within max_abs_exponent. Sets are kept in discovery order until
/// max_sets is reached, then returned sorted lexicographically by their
/// exponent matrices.
std::vector<PiSet> enumerate_pi_sets(const QuantityRegistry& registry, std::size_t target,
                                     const EnumerationLimits& limits = {});

/// Flattened exponent matrix in group order; the comparison key used for
/// every lexicographic ordering of sets.
std::vector<int> exponent_matrix(const PiSet& set);

/// Product of value_i ^ exponent_i over the nonzero exponents.
double evaluate_pi(const PiGroup& group, std::span<const double> values, std::span<const std::string> names = {});

}  // namespace distscale
