#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "distscale/dataset.hpp"
#include "distscale/pi_engine.hpp"

namespace distscale {

/// The fixed model-side row every prototype record is compared against.
struct ReferenceRow {
    RecordKey key;
    std::vector<double> values;
    std::vector<double> pi_values;  ///< one per group of the active set
};

ReferenceRow make_reference_row(const PiSet& set, const Record& record, std::span<const std::string> names = {});

/// d_k = pi_k(model) / pi_k(prototype) for every non-target group, in set order.
struct DistortionVector {
    std::vector<double> d;
};

DistortionVector compute_distortions(const PiSet& set, const ReferenceRow& ref, const Record& proto,
                                     std::span<const std::string> names = {});

/// delta_1 = pi_1(model) / pi_1(prototype).
double prediction_factor(const PiSet& set, const ReferenceRow& ref, const Record& proto,
                         std::span<const std::string> names = {});

struct ScalingPair {
    DistortionVector distortions;
    std::vector<double> proto_pi;  ///< raw prototype values of the non-target groups
    double delta1 = 1.0;
    RecordKey proto_key;
};

struct ReferenceSelector {
    std::string machine_id;
    std::uint64_t seed = 0;
    std::optional<RecordKey> key;  ///< explicit row; overrides the seeded choice
};

struct PairOptions {
    double lower_bound = 1e-6;  ///< |delta1| and every |d_k| must lie in [lower, upper]
    double upper_bound = 1e6;
    std::vector<std::string> exclude_machines;
};

struct PairSet {
    ReferenceRow reference;
    std::vector<ScalingPair> pairs;
    std::size_t dropped_out_of_range = 0;
    std::size_t skipped_invalid = 0;
    std::size_t excluded = 0;
};

/// Explicit key, else a seeded uniform pick among the rows of
/// selector.machine_id on which every group evaluates.
ReferenceRow select_reference(const PiSet& set, const Dataset& data, const ReferenceSelector& selector);

/// Pairs the reference against every other valid record, in dataset order.
PairSet build_training_pairs(const PiSet& set, const Dataset& data, const ReferenceSelector& selector,
                             const PairOptions& options = {});
PairSet build_pairs_for_reference(const PiSet& set, const Dataset& data, const ReferenceRow& reference,
                                  const PairOptions& options = {});

/// Target value that makes pi_1(prototype) = pi_1(model) / delta1, using the
/// prototype's other quantities in pi_1. `proto_values` is indexed like the
/// registry; the target entry is ignored.
double apply_scaling(const PiSet& set, const ReferenceRow& ref, std::span<const double> proto_values, double delta1,
                     std::span<const std::string> names = {});

/// Classical similitude prediction: apply_scaling with delta1 = 1.
double baseline_pi_scaling(const PiSet& set, const ReferenceRow& ref, std::span<const double> proto_values,
                           std::span<const std::string> names = {});

}  // namespace distscale
