#include "distscale/pi_engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

#include "distscale/error.hpp"

namespace distscale {

namespace {

struct Echelon {
    std::vector<std::vector<Rational>> rows;  // reduced rows, columns in permuted order
    std::vector<std::size_t> pivot_cols;      // permuted column index per pivot row
};

Echelon reduce(const DimensionalMatrix& m, std::span<const std::size_t> order) {
    Echelon e;
    e.rows.assign(m.rows(), std::vector<Rational>(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) e.rows[r][c] = m.at(r, order[c]);
    }
    std::size_t lead = 0;
    for (std::size_t c = 0; c < m.cols() && lead < m.rows(); ++c) {
        std::size_t pivot = lead;
        while (pivot < m.rows() && e.rows[pivot][c].is_zero()) ++pivot;
        if (pivot == m.rows()) continue;
        std::swap(e.rows[pivot], e.rows[lead]);
        const Rational inv = Rational(1) / e.rows[lead][c];
        for (auto& x : e.rows[lead]) x *= inv;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            if (r == lead || e.rows[r][c].is_zero()) continue;
            const Rational f = e.rows[r][c];
            for (std::size_t k = 0; k < m.cols(); ++k) e.rows[r][k] -= f * e.rows[lead][k];
        }
        e.pivot_cols.push_back(c);
        ++lead;
    }
    return e;
}

std::vector<std::size_t> natural_order(std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    return order;
}

int checked_int(std::int64_t v) {
    if (v > 1'000'000 || v < -1'000'000) throw Error(ErrorCode::Overflow, "pi exponent out of range");
    return static_cast<int>(v);
}

int max_abs(const Exponents& e) {
    int m = 0;
    for (int x : e) m = std::max(m, std::abs(x));
    return m;
}

Exponents normalize_integer(Exponents v) {
    int g = 0;
    for (int x : v) g = std::gcd(g, std::abs(x));
    if (g > 1) {
        for (auto& x : v) x /= g;
    }
    for (int x : v) {
        if (x == 0) continue;
        if (x < 0) {
            for (auto& y : v) y = -y;
        }
        break;
    }
    return v;
}

bool is_integral(const RationalVector& v) {
    return std::all_of(v.begin(), v.end(), [](const Rational& r) { return r.is_integer(); });
}

Exponents to_int(const RationalVector& v) {
    Exponents out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = checked_int(v[i].num());
    return out;
}

// Rows of a candidate set: row 0 is pi_1, rows 1.. are sorted.
using SetRows = std::vector<Exponents>;

std::vector<int> flatten(const SetRows& rows) {
    std::vector<int> flat;
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    return flat;
}

void sort_tail(SetRows& rows) { std::sort(rows.begin() + 1, rows.end()); }

// Integer pi_1 with target exponent exactly +1, searching small integer
// combinations of the target-free basis when the echelon vector has
// fractional entries.
Exponents integral_target_group(const RationalVector& base, const std::vector<Exponents>& rest, std::size_t target) {
    if (is_integral(base)) return to_int(base);
    const std::size_t k = rest.size();
    if (k == 0 || k > 6) {
        throw Error(ErrorCode::InfeasibleTarget, "target cannot be isolated with an integer exponent of +1");
    }
    constexpr int kRange = 3;
    std::vector<int> coeff(k, -kRange);
    while (true) {
        RationalVector v = base;
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t q = 0; q < v.size(); ++q) v[q] += Rational(coeff[j]) * Rational(rest[j][q]);
        }
        if (is_integral(v) && v[target] == Rational(1)) return to_int(v);
        std::size_t j = 0;
        while (j < k && coeff[j] == kRange) coeff[j++] = -kRange;
        if (j == k) break;
        ++coeff[j];
    }
    throw Error(ErrorCode::InfeasibleTarget, "target cannot be isolated with an integer exponent of +1");
}

}  // namespace

DimVector DimensionalMatrix::apply(std::span<const int> exponents) const {
    DimVector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        Rational acc;
        for (std::size_t c = 0; c < cols_; ++c) acc += at(r, c) * Rational(exponents[c]);
        out[r] = acc;
    }
    return out;
}

DimVector DimensionalMatrix::apply(std::span<const Rational> exponents) const {
    DimVector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        Rational acc;
        for (std::size_t c = 0; c < cols_; ++c) acc += at(r, c) * exponents[c];
        out[r] = acc;
    }
    return out;
}

DimensionalMatrix build_dimensional_matrix(const QuantityRegistry& registry) {
    DimensionalMatrix m(registry.units().size(), registry.size());
    for (std::size_t q = 0; q < registry.size(); ++q) {
        for (std::size_t u = 0; u < registry.units().size(); ++u) m.at(u, q) = registry[q].dim[u];
    }
    return m;
}

std::size_t matrix_rank(const DimensionalMatrix& m) {
    const auto order = natural_order(m.cols());
    return reduce(m, order).pivot_cols.size();
}

std::vector<RationalVector> nullspace_basis(const DimensionalMatrix& m) {
    const auto order = natural_order(m.cols());
    return nullspace_basis(m, order);
}

std::vector<RationalVector> nullspace_basis(const DimensionalMatrix& m, std::span<const std::size_t> column_order) {
    if (column_order.size() != m.cols()) throw Error(ErrorCode::InvalidInput, "column order size mismatch");
    const Echelon e = reduce(m, column_order);
    std::vector<bool> is_pivot(m.cols(), false);
    for (auto c : e.pivot_cols) is_pivot[c] = true;

    std::vector<RationalVector> basis;
    for (std::size_t free = 0; free < m.cols(); ++free) {
        if (is_pivot[free]) continue;
        RationalVector v(m.cols());
        v[column_order[free]] = Rational(1);
        for (std::size_t r = 0; r < e.pivot_cols.size(); ++r) {
            v[column_order[e.pivot_cols[r]]] = -e.rows[r][free];
        }
        basis.push_back(std::move(v));
    }
    return basis;
}

Exponents canonical_exponents(std::span<const Rational> v) {
    std::int64_t l = 1;
    for (const auto& r : v) l = lcm64(l, r.den());
    Exponents out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = checked_int((v[i] * Rational(l)).num());
    return normalize_integer(std::move(out));
}

std::string render_group(std::span<const int> exponents, std::span<const std::string> names) {
    std::string out;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
        if (exponents[i] == 0) continue;
        if (!out.empty()) out += "·";
        out += i < names.size() ? names[i] : "q" + std::to_string(i);
        if (exponents[i] != 1) out += "^" + std::to_string(exponents[i]);
    }
    return out.empty() ? "1" : out;
}

PiGroup make_group(Exponents exponents, std::span<const std::string> names) {
    PiGroup g;
    g.display = render_group(exponents, names);
    g.exponents = std::move(exponents);
    return g;
}

std::vector<int> exponent_matrix(const PiSet& set) {
    std::vector<int> flat;
    for (const auto& g : set.groups) flat.insert(flat.end(), g.exponents.begin(), g.exponents.end());
    return flat;
}

std::vector<PiSet> enumerate_pi_sets(const QuantityRegistry& registry, std::size_t target,
                                     const EnumerationLimits& limits) {
    if (target >= registry.size()) throw Error(ErrorCode::InvalidInput, "target index out of range");
    if (limits.max_sets == 0) throw Error(ErrorCode::InvalidInput, "max_sets must be positive");
    const auto m = build_dimensional_matrix(registry);
    const auto names = registry.names();

    // Target last: it becomes a free column exactly when it lies in the span
    // of the other columns, which isolates it in a single basis vector.
    std::vector<std::size_t> order;
    for (std::size_t q = 0; q < registry.size(); ++q) {
        if (q != target) order.push_back(q);
    }
    order.push_back(target);
    const auto basis = nullspace_basis(m, order);
    if (basis.empty()) {
        throw Error(ErrorCode::DegenerateSystem, "dimensional matrix has full column rank: no dimensionless groups");
    }

    const RationalVector* target_vec = nullptr;
    std::vector<Exponents> rest;
    for (const auto& v : basis) {
        if (!v[target].is_zero()) {
            target_vec = &v;
        } else {
            rest.push_back(canonical_exponents(v));
        }
    }
    if (target_vec == nullptr) {
        throw Error(ErrorCode::InfeasibleTarget,
                    "target '" + names[target] + "' is dimensionally independent of the other quantities");
    }
    std::sort(rest.begin(), rest.end());

    SetRows start;
    start.push_back(integral_target_group(*target_vec, rest, target));
    start.insert(start.end(), rest.begin(), rest.end());
    const std::size_t n = start.size();

    std::set<std::vector<int>> seen{flatten(start)};
    std::vector<SetRows> found{start};
    std::deque<std::pair<SetRows, int>> queue{{start, 0}};
    while (!queue.empty() && found.size() < limits.max_sets) {
        auto [rows, depth] = queue.front();
        queue.pop_front();
        if (depth >= limits.max_depth) continue;
        for (std::size_t i = 0; i < n && found.size() < limits.max_sets; ++i) {
            for (std::size_t j = 1; j < n && found.size() < limits.max_sets; ++j) {
                if (i == j) continue;
                for (int sign : {1, -1}) {
                    Exponents row = rows[i];
                    for (std::size_t q = 0; q < row.size(); ++q) row[q] += sign * rows[j][q];
                    if (i != 0) row = normalize_integer(std::move(row));
                    if (max_abs(row) > limits.max_abs_exponent) continue;
                    SetRows next = rows;
                    next[i] = std::move(row);
                    sort_tail(next);
                    if (!seen.insert(flatten(next)).second) continue;
                    found.push_back(next);
                    queue.emplace_back(std::move(next), depth + 1);
                    if (found.size() >= limits.max_sets) break;
                }
            }
        }
    }

    std::sort(found.begin(), found.end(), [](const SetRows& a, const SetRows& b) { return flatten(a) < flatten(b); });

    std::vector<PiSet> sets;
    sets.reserve(found.size());
    for (auto& rows : found) {
        PiSet s;
        s.target_index = 0;
        s.target_quantity = target;
        for (auto& r : rows) {
            if (!m.apply(r).is_dimensionless()) {
                throw Error(ErrorCode::Internal, "enumerated group " + render_group(r, names) + " is not dimensionless");
            }
            s.groups.push_back(make_group(std::move(r), names));
        }
        sets.push_back(std::move(s));
    }
    return sets;
}

double evaluate_pi(const PiGroup& group, std::span<const double> values, std::span<const std::string> names) {
    auto name_of = [&](std::size_t i) { return i < names.size() ? names[i] : "q" + std::to_string(i); };
    if (values.size() < group.exponents.size()) {
        throw Error(ErrorCode::PiEvaluation, "record supplies fewer values than the group's quantities");
    }
    double num = 1.0;
    double den = 1.0;
    for (std::size_t i = 0; i < group.exponents.size(); ++i) {
        const int e = group.exponents[i];
        if (e == 0) continue;
        const double v = values[i];
        if (!std::isfinite(v)) throw Error(ErrorCode::PiEvaluation, "non-finite value for '" + name_of(i) + "'");
        if (v == 0.0 && e < 0) {
            throw Error(ErrorCode::PiEvaluation, "zero value for '" + name_of(i) + "' raised to a negative power");
        }
        double& acc = e > 0 ? num : den;
        for (int k = 0; k < std::abs(e); ++k) acc *= v;
    }
    const double result = num / den;
    if (!std::isfinite(result) || den == 0.0) {
        throw Error(ErrorCode::PiEvaluation, "group " + group.display + " evaluates to a non-finite value");
    }
    return result;
}

}  // namespace distscale
