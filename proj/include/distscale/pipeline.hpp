#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "distscale/io.hpp"

namespace distscale {

struct AnalyzeOptions {
    std::optional<std::string> target;  ///< overrides the registry's target role
    std::size_t top_k = 10;
    EnumerationLimits limits;
    SelectionOptions selection;
    unsigned threads = 1;
};

AnalyzeOptions analyze_options_from_json(const nlohmann::json& j);

struct AnalyzeResult {
    PiSetFile ranked;  ///< best first
    RankingResult ranking;
    std::size_t candidates = 0;
};

/// Enumerate, score and rank. Throws NoValidSet with every rejection reason
/// when nothing survives.
AnalyzeResult run_analyze(const QuantityRegistry& registry, const Dataset& data, const AnalyzeOptions& options);
void write_analysis(const AnalyzeResult& result, const std::filesystem::path& dir);

struct TrainOptions {
    std::size_t set_index = 0;  ///< which set of the pi-set file to use
    ReferenceSelector reference;
    PairOptions pairs;
    SplitSpec split;
    bool include_raw_pi = false;
    MLPConfig mlp;
    HyperGrid grid;
    int repeats = 1;
};

/// Every seed in the result derives from `seed`.
TrainOptions train_options_from_json(const nlohmann::json& j, std::uint64_t seed);

/// Picks the set, resolves a default reference machine (the first one not
/// excluded) and builds the pairs.
PairSet build_pairs(const PiSetFile& pisets, const Dataset& data, const TrainOptions& options);

struct TrainResult {
    ModelArtifact artifact;
    PairSet pairs;
};

TrainResult run_train(const PiSetFile& pisets, const Dataset& data, const TrainOptions& options);

struct GridResult {
    GridSearchResult grid;
    PairSet pairs;
};

GridResult run_gridsearch(const PiSetFile& pisets, const Dataset& data, const TrainOptions& options,
                          unsigned threads);
void write_grid(const GridResult& result, const std::filesystem::path& dir);

struct ScaledRecord {
    RecordKey key;
    double delta_pred = 0.0;
    double learned = 0.0;   ///< target recovered with the predicted delta_1
    double baseline = 0.0;  ///< target recovered with delta_1 = 1
};

/// Records whose non-target groups fail to evaluate yield NaN entries.
std::vector<ScaledRecord> run_scale(const ModelArtifact& model, const Dataset& data);
std::string scaled_to_csv(const std::vector<ScaledRecord>& rows, const std::string& target);

struct ValidationOptions {
    std::vector<std::string> machines;  ///< empty = every machine
    bool skip_reference = true;
    double error_floor = 1e-12;
};

ValidationOptions validation_options_from_json(const nlohmann::json& j);

struct ValidationRow {
    RecordKey key;
    double truth = 0.0;
    double learned = 0.0;
    double baseline = 0.0;
    double delta_true = 0.0;
    double delta_pred = 0.0;
};

struct ValidationReport {
    std::vector<ValidationRow> rows;
    ErrorCurve learned;
    ErrorCurve baseline;
    double r2_delta = 0.0;  ///< NaN when the true delta_1 is constant
    std::size_t skipped = 0;
};

ValidationReport run_validate(const ModelArtifact& model, const Dataset& data, const ValidationOptions& options);
/// summary.csv, error_curve.csv, error_vs_load.svg, delta_scatter.svg
void write_validation(const ValidationReport& report, const std::string& target, const std::filesystem::path& dir);

}  // namespace distscale
