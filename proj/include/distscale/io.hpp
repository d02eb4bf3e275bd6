#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "distscale/dimensions.hpp"
#include "distscale/pi_engine.hpp"
#include "distscale/regressor.hpp"
#include "distscale/scaling.hpp"
#include "distscale/selection.hpp"

namespace distscale {

using ordered_json = nlohmann::ordered_json;

/// Quantity registry file. Exponents are integers or "num/den" strings;
/// fundamental units are symbols or {"symbol", "description"} objects.
QuantityRegistry registry_from_json(const nlohmann::json& j);
ordered_json registry_to_json(const QuantityRegistry& registry);
QuantityRegistry load_registry(const std::filesystem::path& path);

/// A ranked list of Pi sets together with the registry they were built on.
struct PiSetFile {
    QuantityRegistry registry;
    std::vector<PiSet> sets;
    std::vector<CorrelationReport> reports;  ///< parallel to sets; may be empty
};

ordered_json pi_set_to_json(const PiSet& set);
/// Validates shape, dimensionlessness and target isolation against `registry`.
PiSet pi_set_from_json(const nlohmann::json& j, const QuantityRegistry& registry);

std::string pisets_to_json(const PiSetFile& file);
PiSetFile parse_pisets(const std::string& text, const QuantityRegistry* registry = nullptr);
PiSetFile load_pisets(const std::filesystem::path& path, const QuantityRegistry* registry = nullptr);

/// set_index,rms_score,valid_fraction,r_group_2..r_group_n
std::string ranking_to_csv(const std::vector<CorrelationReport>& reports);

/// Model artifact; embeds the registry so it is self-contained.
struct ModelArtifact {
    TrainedModel model;
    QuantityRegistry registry;
};

std::string model_to_json(const ModelArtifact& artifact);
ModelArtifact parse_model(const std::string& text);
ModelArtifact load_model(const std::filesystem::path& path);

/// proto_machine,proto_run,proto_t,d_2..d_n,delta1
std::string pairs_to_csv(const PairSet& pairs, std::size_t group_count);

std::string grid_to_csv(const GridSearchResult& result);
std::string grid_pivot_to_csv(const GridSearchResult& result);
std::string grid_marginal_to_csv(const GridSearchResult& result);

}  // namespace distscale
