#include "distscale/selection.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "distscale/error.hpp"

namespace distscale {

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::InvalidInput, "pearson: series lengths differ");
    if (x.size() < 2) throw Error(ErrorCode::InvalidInput, "pearson: need at least two samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::UndefinedCorrelation, "pearson: zero-variance series");
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

CorrelationReport score_pi_set(const PiSet& set, const Dataset& data, const SelectionOptions& options) {
    CorrelationReport report;
    const std::size_t groups = set.size();
    std::vector<std::vector<double>> series(groups);
    std::vector<double> target;
    std::vector<double> pis(groups);
    for (const auto& rec : data.records) {
        bool ok = std::isfinite(rec.values[set.target_quantity]);
        for (std::size_t g = 0; ok && g < groups; ++g) {
            try {
                pis[g] = evaluate_pi(set.groups[g], rec.values, data.quantity_names);
            } catch (const Error&) {
                ok = false;
            }
        }
        if (!ok) continue;
        for (std::size_t g = 0; g < groups; ++g) series[g].push_back(pis[g]);
        target.push_back(rec.values[set.target_quantity]);
    }
    report.valid_fraction =
        data.records.empty() ? 0.0 : static_cast<double>(target.size()) / static_cast<double>(data.records.size());

    std::size_t defined = 0;
    double sum_sq = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
        if (g == set.target_index) continue;
        double r = 0.0;
        bool undefined = true;
        if (target.size() >= 2) {
            try {
                r = pearson(series[g], target);
                undefined = false;
                ++defined;
            } catch (const Error&) {
                r = 0.0;
            }
        }
        report.per_group_r.push_back(r);
        report.undefined.push_back(undefined);
        sum_sq += r * r;
    }
    if (!report.per_group_r.empty()) {
        report.rms_score = std::sqrt(sum_sq / static_cast<double>(report.per_group_r.size()));
    }

    if (report.valid_fraction < options.valid_fraction_floor) {
        report.reason = "valid fraction " + format_double(report.valid_fraction) + " below floor " +
                        format_double(options.valid_fraction_floor);
    } else if (target.size() < 2) {
        report.reason = "fewer than two evaluable records";
    } else if (!report.per_group_r.empty() && defined == 0) {
        report.reason = "undefined correlation: every group series or the target series is constant";
    } else {
        report.valid = true;
    }
    return report;
}

RankingResult rank_pi_sets(std::span<const PiSet> sets, const Dataset& data, std::size_t top_k,
                           const SelectionOptions& options, unsigned threads) {
    if (sets.empty()) throw Error(ErrorCode::InvalidInput, "no candidate pi sets to rank");
    std::vector<CorrelationReport> reports(sets.size());
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(sets.size())));
    if (threads == 1) {
        for (std::size_t i = 0; i < sets.size(); ++i) reports[i] = score_pi_set(sets[i], data, options);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < sets.size(); i += threads) reports[i] = score_pi_set(sets[i], data, options);
            });
        }
        for (auto& t : pool) t.join();
    }

    RankingResult result;
    result.scored = sets.size();
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (reports[i].valid) {
            valid.push_back(i);
        } else {
            result.diagnostics.push_back("set " + std::to_string(i) + ": " + reports[i].reason);
        }
    }
    std::vector<std::vector<int>> keys(sets.size());
    for (auto i : valid) keys[i] = exponent_matrix(sets[i]);
    std::sort(valid.begin(), valid.end(), [&](std::size_t a, std::size_t b) {
        if (reports[a].rms_score != reports[b].rms_score) return reports[a].rms_score > reports[b].rms_score;
        if (keys[a] != keys[b]) return keys[a] < keys[b];
        return a < b;
    });
    if (valid.size() > top_k) valid.resize(top_k);
    for (auto i : valid) result.ranked.push_back({i, std::move(reports[i])});
    return result;
}

}  // namespace distscale
