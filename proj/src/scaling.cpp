#include "distscale/scaling.hpp"

#include <cmath>

#include "distscale/error.hpp"
#include "distscale/random.hpp"

namespace distscale {

namespace {

bool evaluates(const PiSet& set, const Record& rec, std::span<const std::string> names) {
    try {
        for (const auto& g : set.groups) evaluate_pi(g, rec.values, names);
        return true;
    } catch (const Error&) {
        return false;
    }
}

bool in_range(double v, const PairOptions& o) {
    const double a = std::abs(v);
    return std::isfinite(v) && a >= o.lower_bound && a <= o.upper_bound;
}

// Product of every pi_1 factor except the target.
double target_cofactor(const PiSet& set, std::span<const double> values, std::span<const std::string> names) {
    PiGroup rest = set.groups[set.target_index];
    if (rest.exponents[set.target_quantity] != 1) {
        throw Error(ErrorCode::Internal, "pi_1 does not carry the target with exponent +1");
    }
    rest.exponents[set.target_quantity] = 0;
    rest.display = "pi_1 without target";
    return evaluate_pi(rest, values, names);
}

}  // namespace

ReferenceRow make_reference_row(const PiSet& set, const Record& record, std::span<const std::string> names) {
    ReferenceRow ref;
    ref.key = record.key;
    ref.values = record.values;
    for (const auto& g : set.groups) {
        try {
            ref.pi_values.push_back(evaluate_pi(g, record.values, names));
        } catch (const Error& e) {
            throw Error(ErrorCode::ReferenceSelection,
                        "reference row " + to_string(record.key) + " is invalid: " + e.what());
        }
    }
    return ref;
}

DistortionVector compute_distortions(const PiSet& set, const ReferenceRow& ref, const Record& proto,
                                     std::span<const std::string> names) {
    DistortionVector out;
    for (std::size_t k = 0; k < set.size(); ++k) {
        if (k == set.target_index) continue;
        const double pp = evaluate_pi(set.groups[k], proto.values, names);
        if (pp == 0.0 || !std::isfinite(pp)) {
            throw Error(ErrorCode::DistortionUndefined, "distortion undefined for group " + std::to_string(k + 1) +
                                                            " (" + set.groups[k].display + "): prototype value is " +
                                                            format_double(pp));
        }
        const double d = ref.pi_values[k] / pp;
        if (!std::isfinite(d)) {
            throw Error(ErrorCode::DistortionUndefined,
                        "distortion undefined for group " + std::to_string(k + 1) + " (" + set.groups[k].display + ")");
        }
        out.d.push_back(d);
    }
    return out;
}

double prediction_factor(const PiSet& set, const ReferenceRow& ref, const Record& proto,
                         std::span<const std::string> names) {
    const double p1 = evaluate_pi(set.groups[set.target_index], proto.values, names);
    if (p1 == 0.0) throw Error(ErrorCode::DistortionUndefined, "prototype pi_1 is zero");
    return ref.pi_values[set.target_index] / p1;
}

ReferenceRow select_reference(const PiSet& set, const Dataset& data, const ReferenceSelector& selector) {
    const auto& names = data.quantity_names;
    if (selector.key) {
        for (const auto& rec : data.records) {
            if (rec.key == *selector.key) return make_reference_row(set, rec, names);
        }
        throw Error(ErrorCode::ReferenceSelection, "reference key " + to_string(*selector.key) + " not in dataset");
    }
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const auto& rec = data.records[i];
        if (rec.key.machine_id == selector.machine_id && evaluates(set, rec, names)) candidates.push_back(i);
    }
    if (candidates.empty()) {
        throw Error(ErrorCode::ReferenceSelection,
                    "no valid reference row for machine '" + selector.machine_id + "'");
    }
    Rng rng(selector.seed);
    return make_reference_row(set, data.records[candidates[rng.below(candidates.size())]], names);
}

PairSet build_pairs_for_reference(const PiSet& set, const Dataset& data, const ReferenceRow& reference,
                                  const PairOptions& options) {
    const auto& names = data.quantity_names;
    PairSet out;
    out.reference = reference;
    for (const auto& rec : data.records) {
        if (rec.key == reference.key) continue;
        bool excluded = false;
        for (const auto& m : options.exclude_machines) excluded = excluded || rec.key.machine_id == m;
        if (excluded) {
            ++out.excluded;
            continue;
        }
        ScalingPair pair;
        try {
            pair.distortions = compute_distortions(set, reference, rec, names);
            pair.delta1 = prediction_factor(set, reference, rec, names);
            for (std::size_t k = 0; k < set.size(); ++k) {
                if (k != set.target_index) pair.proto_pi.push_back(evaluate_pi(set.groups[k], rec.values, names));
            }
        } catch (const Error&) {
            ++out.skipped_invalid;
            continue;
        }
        bool ok = in_range(pair.delta1, options);
        for (double d : pair.distortions.d) ok = ok && in_range(d, options);
        if (!ok) {
            ++out.dropped_out_of_range;
            continue;
        }
        pair.proto_key = rec.key;
        out.pairs.push_back(std::move(pair));
    }
    return out;
}

PairSet build_training_pairs(const PiSet& set, const Dataset& data, const ReferenceSelector& selector,
                             const PairOptions& options) {
    const auto reference = select_reference(set, data, selector);
    auto out = build_pairs_for_reference(set, data, reference, options);
    if (out.pairs.empty()) throw Error(ErrorCode::ReferenceSelection, "no valid prototype records to pair with");
    return out;
}

double apply_scaling(const PiSet& set, const ReferenceRow& ref, std::span<const double> proto_values, double delta1,
                     std::span<const std::string> names) {
    if (delta1 == 0.0 || !std::isfinite(delta1)) {
        throw Error(ErrorCode::InvalidInput, "prediction factor must be finite and nonzero");
    }
    const double rest = target_cofactor(set, proto_values, names);
    return ref.pi_values[set.target_index] / (delta1 * rest);
}

double baseline_pi_scaling(const PiSet& set, const ReferenceRow& ref, std::span<const double> proto_values,
                           std::span<const std::string> names) {
    return apply_scaling(set, ref, proto_values, 1.0, names);
}

}  // namespace distscale
