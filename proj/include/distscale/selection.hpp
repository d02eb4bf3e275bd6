#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "distscale/dataset.hpp"
#include "distscale/pi_engine.hpp"

namespace distscale {

/// Sample Pearson correlation. Throws UndefinedCorrelation when either
/// series has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationReport {
    std::vector<double> per_group_r;     ///< one per non-target group, in set order
    std::vector<bool> undefined;         ///< zero-variance group series, scored 0
    double rms_score = 0.0;
    double valid_fraction = 0.0;
    bool valid = false;
    std::string reason;                  ///< why the set is invalid, empty otherwise
};

struct SelectionOptions {
    double valid_fraction_floor = 0.95;
};

/// Correlates every non-target group against the raw target series over the
/// records on which all groups evaluate; aggregates by RMS.
CorrelationReport score_pi_set(const PiSet& set, const Dataset& data, const SelectionOptions& options = {});

struct RankedSet {
    std::size_t index;  ///< position in the input list
    CorrelationReport report;
};

struct RankingResult {
    std::vector<RankedSet> ranked;        ///< valid sets, best first, at most top_k
    std::vector<std::string> diagnostics; ///< one line per rejected set
    std::size_t scored = 0;
};

/// Ranks valid sets by rms_score descending, ties by exponent matrix.
/// Scoring may run on `threads` workers; the sort is serial.
RankingResult rank_pi_sets(std::span<const PiSet> sets, const Dataset& data, std::size_t top_k,
                           const SelectionOptions& options = {}, unsigned threads = 1);

}  // namespace distscale
