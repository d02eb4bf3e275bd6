#include "distscale/rational.hpp"

#include <charconv>
#include <limits>
#include <numeric>

#include "distscale/error.hpp"

namespace distscale {

namespace {

__int128 abs128(__int128 v) { return v < 0 ? -v : v; }

__int128 gcd128(__int128 a, __int128 b) {
    a = abs128(a);
    b = abs128(b);
    while (b != 0) {
        const __int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

bool fits64(__int128 v) {
    return v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max();
}

std::int64_t parse_int(std::string_view text, std::string_view whole) {
    std::int64_t value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && text.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || first == last) {
        throw Error(ErrorCode::Parse, "invalid rational literal '" + std::string(whole) + "'");
    }
    return value;
}

}  // namespace

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidInput: return "invalid-input";
        case ErrorCode::DegenerateSystem: return "degenerate-system";
        case ErrorCode::InfeasibleTarget: return "infeasible-target";
        case ErrorCode::PiEvaluation: return "pi-evaluation";
        case ErrorCode::UndefinedCorrelation: return "undefined-correlation";
        case ErrorCode::UndefinedR2: return "undefined-r2";
        case ErrorCode::DistortionUndefined: return "distortion-undefined";
        case ErrorCode::ReferenceSelection: return "reference-selection";
        case ErrorCode::SingularMechanism: return "singular-mechanism";
        case ErrorCode::TrainingDiverged: return "training-diverged";
        case ErrorCode::DegenerateSplit: return "degenerate-split";
        case ErrorCode::InvalidFeature: return "invalid-feature";
        case ErrorCode::SchemaMismatch: return "schema-mismatch";
        case ErrorCode::NoValidSet: return "no-valid-set";
        case ErrorCode::Overflow: return "overflow";
        case ErrorCode::Io: return "io";
        case ErrorCode::Parse: return "parse";
        case ErrorCode::Internal: return "internal";
    }
    return "unknown";
}

std::int64_t gcd64(std::int64_t a, std::int64_t b) { return static_cast<std::int64_t>(gcd128(a, b)); }

std::int64_t lcm64(std::int64_t a, std::int64_t b) {
    if (a == 0 || b == 0) return 0;
    const __int128 l = abs128(static_cast<__int128>(a) / gcd128(a, b) * b);
    if (!fits64(l)) throw Error(ErrorCode::Overflow, "lcm overflows int64");
    return static_cast<std::int64_t>(l);
}

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw Error(ErrorCode::InvalidInput, "rational with zero denominator");
    *this = from_wide(num, den);
}

Rational Rational::from_wide(__int128 num, __int128 den) {
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const __int128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    if (num == 0) den = 1;
    if (!fits64(num) || !fits64(den)) throw Error(ErrorCode::Overflow, "rational arithmetic overflows int64");
    Rational r;
    r.num_ = static_cast<std::int64_t>(num);
    r.den_ = static_cast<std::int64_t>(den);
    return r;
}

Rational Rational::parse(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return Rational(parse_int(text, text));
    const auto num = parse_int(text.substr(0, slash), text);
    const auto den = parse_int(text.substr(slash + 1), text);
    if (den == 0) throw Error(ErrorCode::Parse, "rational literal '" + std::string(text) + "' has zero denominator");
    return Rational(num, den);
}

std::string Rational::str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::operator-() const { return from_wide(-static_cast<__int128>(num_), den_); }

Rational operator+(const Rational& a, const Rational& b) {
    return Rational::from_wide(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                               static_cast<__int128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
    return Rational::from_wide(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
                               static_cast<__int128>(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
    return Rational::from_wide(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw Error(ErrorCode::InvalidInput, "rational division by zero");
    return Rational::from_wide(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

}  // namespace distscale
