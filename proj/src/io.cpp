#include "distscale/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "distscale/error.hpp"

namespace distscale {

namespace {

using nlohmann::json;

template <typename F>
auto guarded(const std::string& what, F&& body) {
    try {
        return body();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, what + ": " + e.what());
    }
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, what + ": " + e.what());
    }
}

Rational exponent_from_json(const json& e) {
    if (e.is_number_integer()) return Rational(e.get<std::int64_t>());
    if (e.is_string()) return Rational::parse(e.get<std::string>());
    throw Error(ErrorCode::Parse, "exponent must be an integer or a \"num/den\" string");
}

ordered_json exponent_to_json(const Rational& r) {
    if (r.is_integer()) return r.num();
    return r.str();
}

// NaN and infinities have no JSON literal; they travel as null.
ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

double number_from(const json& v) {
    if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return v.get<double>();
}

std::vector<double> numbers_from(const json& a) {
    std::vector<double> out;
    for (const auto& v : a) out.push_back(number_from(v));
    return out;
}

ordered_json numbers(std::span<const double> v) {
    ordered_json a = ordered_json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

ordered_json key_to_json(const RecordKey& k) {
    return {{"machine_id", k.machine_id}, {"run_id", k.run_id}, {"t", number(k.t)}};
}

RecordKey key_from_json(const json& j) {
    return {j.at("machine_id").get<std::string>(), j.at("run_id").get<std::string>(), number_from(j.at("t"))};
}

ordered_json mlp_to_json(const MLPConfig& c) {
    return {{"hidden_layers", c.hidden_layers}, {"units_per_layer", c.units_per_layer},
            {"dropout_rate", c.dropout_rate},   {"learning_rate", c.learning_rate},
            {"epochs", c.epochs},               {"batch_size", c.batch_size},
            {"seed", c.seed},                   {"activation", to_string(c.activation)},
            {"patience", c.patience}};
}

MLPConfig mlp_from_json(const json& j) {
    MLPConfig c;
    c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
    c.units_per_layer = j.value("units_per_layer", c.units_per_layer);
    c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.activation = parse_activation(j.value("activation", std::string(to_string(c.activation))));
    c.patience = j.value("patience", c.patience);
    c.validate();
    return c;
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    out += '\n';
    return out;
}

}  // namespace

QuantityRegistry registry_from_json(const json& j) {
    return guarded("registry", [&] {
        if (!j.is_object()) throw Error(ErrorCode::Parse, "registry must be a JSON object");
        std::vector<FundamentalUnit> units;
        if (j.contains("fundamental_units")) {
            for (const auto& u : j.at("fundamental_units")) {
                if (u.is_string()) {
                    units.push_back({u.get<std::string>(), ""});
                } else {
                    units.push_back({u.at("symbol").get<std::string>(), u.value("description", "")});
                }
            }
        }
        const UnitRegistry unit_registry = units.empty() ? UnitRegistry::mechanical() : UnitRegistry(units);

        std::vector<Quantity> quantities;
        for (const auto& q : j.at("quantities")) {
            Quantity quantity;
            quantity.name = q.at("name").get<std::string>();
            const auto& ex = q.at("exponents");
            if (!ex.is_array() || ex.size() != unit_registry.size()) {
                throw Error(ErrorCode::Parse, "quantity '" + quantity.name + "' needs " +
                                                  std::to_string(unit_registry.size()) + " exponents");
            }
            std::vector<Rational> dims;
            for (const auto& e : ex) dims.push_back(exponent_from_json(e));
            quantity.dim = DimVector(std::move(dims));
            const auto role = q.value("role", std::string("input"));
            if (role == "target") {
                quantity.role = QuantityRole::Target;
            } else if (role == "input") {
                quantity.role = QuantityRole::Input;
            } else {
                throw Error(ErrorCode::Parse, "quantity '" + quantity.name + "': role must be target or input");
            }
            quantity.unit_label = q.value("unit", "");
            quantities.push_back(std::move(quantity));
        }

        std::vector<EnergyDomain> domains;
        if (j.contains("domains")) {
            for (const auto& d : j.at("domains")) {
                EnergyDomain domain{d.at("name").get<std::string>(), {}};
                for (const auto& u : d.at("units")) domain.units.insert(u.get<std::string>());
                domains.push_back(std::move(domain));
            }
        }
        return QuantityRegistry(unit_registry, std::move(quantities), std::move(domains));
    });
}

ordered_json registry_to_json(const QuantityRegistry& registry) {
    ordered_json units = ordered_json::array();
    for (const auto& u : registry.units().units()) {
        if (u.description.empty()) {
            units.push_back(u.symbol);
        } else {
            units.push_back({{"symbol", u.symbol}, {"description", u.description}});
        }
    }
    ordered_json quantities = ordered_json::array();
    for (const auto& q : registry.quantities()) {
        ordered_json ex = ordered_json::array();
        for (const auto& e : q.dim.exponents()) ex.push_back(exponent_to_json(e));
        ordered_json item{{"name", q.name},
                          {"exponents", ex},
                          {"role", q.role == QuantityRole::Target ? "target" : "input"}};
        if (!q.unit_label.empty()) item["unit"] = q.unit_label;
        quantities.push_back(std::move(item));
    }
    ordered_json out{{"fundamental_units", units}, {"quantities", quantities}};
    if (!registry.domains().empty()) {
        ordered_json domains = ordered_json::array();
        for (const auto& d : registry.domains()) {
            domains.push_back({{"name", d.name}, {"units", d.units}});
        }
        out["domains"] = domains;
    }
    return out;
}

QuantityRegistry load_registry(const std::filesystem::path& path) {
    return registry_from_json(parse_json(read_text_file(path), path.string()));
}

ordered_json pi_set_to_json(const PiSet& set) {
    ordered_json ex = ordered_json::array();
    ordered_json display = ordered_json::array();
    for (const auto& g : set.groups) {
        ex.push_back(g.exponents);
        display.push_back(g.display);
    }
    return {{"target_index", set.target_index}, {"exponents", ex}, {"display", display}};
}

PiSet pi_set_from_json(const json& j, const QuantityRegistry& registry) {
    return guarded("pi set", [&] {
        const auto names = registry.names();
        const auto matrix = build_dimensional_matrix(registry);
        PiSet set;
        set.target_quantity = registry.target_index();
        set.target_index = j.value("target_index", std::size_t{0});
        for (const auto& row : j.at("exponents")) {
            auto ex = row.get<Exponents>();
            if (ex.size() != registry.size()) {
                throw Error(ErrorCode::SchemaMismatch, "pi group has " + std::to_string(ex.size()) +
                                                           " exponents, registry has " +
                                                           std::to_string(registry.size()) + " quantities");
            }
            if (!matrix.apply(ex).is_dimensionless()) {
                throw Error(ErrorCode::InvalidInput, "pi group " + render_group(ex, names) + " is not dimensionless");
            }
            set.groups.push_back(make_group(std::move(ex), names));
        }
        if (set.groups.empty() || set.target_index >= set.groups.size()) {
            throw Error(ErrorCode::InvalidInput, "pi set has no group at target_index");
        }
        for (std::size_t g = 0; g < set.groups.size(); ++g) {
            const int e = set.groups[g].exponents[set.target_quantity];
            if ((g == set.target_index && e != 1) || (g != set.target_index && e != 0)) {
                throw Error(ErrorCode::InvalidInput, "pi set does not isolate target '" + names[set.target_quantity] +
                                                         "' with exponent +1 in the target group");
            }
        }
        return set;
    });
}

std::string pisets_to_json(const PiSetFile& file) {
    ordered_json sets = ordered_json::array();
    for (std::size_t i = 0; i < file.sets.size(); ++i) {
        auto s = pi_set_to_json(file.sets[i]);
        if (i < file.reports.size()) {
            s["rms_score"] = number(file.reports[i].rms_score);
            s["valid_fraction"] = number(file.reports[i].valid_fraction);
            s["per_group_r"] = numbers(file.reports[i].per_group_r);
        }
        sets.push_back(std::move(s));
    }
    const auto names = file.registry.names();
    ordered_json out{{"quantities", names},
                     {"target", names.at(file.registry.target_index())},
                     {"sets", sets},
                     {"registry", registry_to_json(file.registry)}};
    return out.dump(2) + "\n";
}

PiSetFile parse_pisets(const std::string& text, const QuantityRegistry* registry) {
    const json j = parse_json(text, "pi-set file");
    return guarded("pi-set file", [&] {
        PiSetFile file;
        if (registry) {
            file.registry = *registry;
        } else if (j.contains("registry")) {
            file.registry = registry_from_json(j.at("registry"));
        } else {
            throw Error(ErrorCode::InvalidInput, "pi-set file carries no registry; supply one");
        }
        if (j.contains("quantities") &&
            j.at("quantities").get<std::vector<std::string>>() != file.registry.names()) {
            throw Error(ErrorCode::SchemaMismatch, "pi-set quantities do not match the registry");
        }
        if (j.contains("target")) file.registry = file.registry.with_target(j.at("target").get<std::string>());
        for (const auto& s : j.at("sets")) file.sets.push_back(pi_set_from_json(s, file.registry));
        if (file.sets.empty()) throw Error(ErrorCode::InvalidInput, "pi-set file contains no sets");
        return file;
    });
}

PiSetFile load_pisets(const std::filesystem::path& path, const QuantityRegistry* registry) {
    return parse_pisets(read_text_file(path), registry);
}

std::string ranking_to_csv(const std::vector<CorrelationReport>& reports) {
    std::size_t groups = 0;
    for (const auto& r : reports) groups = std::max(groups, r.per_group_r.size());
    std::vector<std::string> header{"set_index", "rms_score", "valid_fraction"};
    for (std::size_t g = 0; g < groups; ++g) header.push_back("r_group_" + std::to_string(g + 2));
    std::string out = csv_row(header);
    for (std::size_t i = 0; i < reports.size(); ++i) {
        std::vector<std::string> row{std::to_string(i), format_double(reports[i].rms_score),
                                     format_double(reports[i].valid_fraction)};
        for (double r : reports[i].per_group_r) row.push_back(format_double(r));
        out += csv_row(row);
    }
    return out;
}

std::string model_to_json(const ModelArtifact& artifact) {
    const auto& m = artifact.model;
    const auto names = artifact.registry.names();
    ordered_json layers = ordered_json::array();
    for (const auto& l : m.network.layers()) {
        layers.push_back({{"rows", l.rows},
                          {"cols", l.cols},
                          {"weights", numbers(l.weights)},
                          {"bias", numbers(l.bias)},
                          {"activation", to_string(l.activation)}});
    }
    auto pi = pi_set_to_json(m.pi_set);
    pi["target"] = names.at(m.pi_set.target_quantity);
    ordered_json out{
        {"schema_version", 1},
        {"feature_schema", {{"distortion_count", m.schema.distortion_count}, {"include_raw_pi", m.schema.include_raw_pi}}},
        {"normalization",
         {{"mean", numbers(m.input.mean)},
          {"std", numbers(m.input.std)},
          {"target_mean", number(m.target_mean)},
          {"target_std", number(m.target_std)}}},
        {"layers", layers},
        {"pi_set", pi},
        {"reference_row",
         {{"key", key_to_json(m.reference.key)},
          {"values", numbers(m.reference.values)},
          {"pi_values", numbers(m.reference.pi_values)}}},
        {"metrics",
         {{"r2_train", number(m.r2_train)},
          {"r2_val", number(m.r2_val)},
          {"train_count", m.train_count},
          {"validation_count", m.validation_count},
          {"epochs_run", m.epochs_run}}},
        {"config", mlp_to_json(m.config)},
        {"seed", m.config.seed},
        {"registry", registry_to_json(artifact.registry)}};
    return out.dump(2) + "\n";
}

ModelArtifact parse_model(const std::string& text) {
    const json j = parse_json(text, "model artifact");
    return guarded("model artifact", [&] {
        if (j.value("schema_version", 0) != 1) {
            throw Error(ErrorCode::SchemaMismatch, "unsupported model schema_version");
        }
        ModelArtifact a;
        a.registry = registry_from_json(j.at("registry"));
        const auto& pi = j.at("pi_set");
        if (pi.contains("target")) a.registry = a.registry.with_target(pi.at("target").get<std::string>());
        auto& m = a.model;
        m.pi_set = pi_set_from_json(pi, a.registry);
        m.schema.distortion_count = j.at("feature_schema").at("distortion_count").get<std::size_t>();
        m.schema.include_raw_pi = j.at("feature_schema").at("include_raw_pi").get<bool>();
        if (m.schema.distortion_count + 1 != m.pi_set.size()) {
            throw Error(ErrorCode::SchemaMismatch, "feature schema does not match the pi set");
        }
        const auto& norm = j.at("normalization");
        m.input.mean = numbers_from(norm.at("mean"));
        m.input.std = numbers_from(norm.at("std"));
        m.target_mean = norm.value("target_mean", 0.0);
        m.target_std = norm.value("target_std", 1.0);
        if (m.input.mean.size() != m.schema.feature_count() || m.input.std.size() != m.schema.feature_count()) {
            throw Error(ErrorCode::SchemaMismatch, "normalization width does not match the feature schema");
        }
        for (double s : m.input.std) {
            if (!(s > 0.0)) throw Error(ErrorCode::SchemaMismatch, "normalization std must be > 0");
        }
        if (!(m.target_std > 0.0)) throw Error(ErrorCode::SchemaMismatch, "target std must be > 0");
        std::vector<DenseLayer> layers;
        for (const auto& l : j.at("layers")) {
            DenseLayer layer;
            layer.rows = l.at("rows").get<std::size_t>();
            layer.cols = l.at("cols").get<std::size_t>();
            layer.weights = numbers_from(l.at("weights"));
            layer.bias = numbers_from(l.at("bias"));
            layer.activation = parse_activation(l.at("activation").get<std::string>());
            layers.push_back(std::move(layer));
        }
        m.network = Network(std::move(layers));
        if (m.network.input_size() != m.schema.feature_count()) {
            throw Error(ErrorCode::SchemaMismatch, "network input width does not match the feature schema");
        }
        const auto& ref = j.at("reference_row");
        m.reference.key = key_from_json(ref.at("key"));
        m.reference.values = numbers_from(ref.at("values"));
        m.reference.pi_values = numbers_from(ref.at("pi_values"));
        if (m.reference.values.size() != a.registry.size() || m.reference.pi_values.size() != m.pi_set.size()) {
            throw Error(ErrorCode::SchemaMismatch, "reference row does not match the registry");
        }
        const auto& metrics = j.at("metrics");
        m.r2_train = number_from(metrics.at("r2_train"));
        m.r2_val = number_from(metrics.at("r2_val"));
        m.train_count = metrics.value("train_count", std::size_t{0});
        m.validation_count = metrics.value("validation_count", std::size_t{0});
        m.epochs_run = metrics.value("epochs_run", 0);
        if (j.contains("config")) m.config = mlp_from_json(j.at("config"));
        m.config.seed = j.value("seed", m.config.seed);
        return a;
    });
}

ModelArtifact load_model(const std::filesystem::path& path) { return parse_model(read_text_file(path)); }

std::string pairs_to_csv(const PairSet& pairs, std::size_t group_count) {
    std::vector<std::string> header{"proto_machine", "proto_run", "proto_t"};
    for (std::size_t k = 2; k <= group_count; ++k) header.push_back("d_" + std::to_string(k));
    header.push_back("delta1");
    std::string out = csv_row(header);
    for (const auto& p : pairs.pairs) {
        std::vector<std::string> row{p.proto_key.machine_id, p.proto_key.run_id, format_double(p.proto_key.t)};
        for (double d : p.distortions.d) row.push_back(format_double(d));
        row.push_back(format_double(p.delta1));
        out += csv_row(row);
    }
    return out;
}

std::string grid_to_csv(const GridSearchResult& result) {
    std::size_t repeats = 0;
    for (const auto& r : result.rows) repeats = std::max(repeats, r.repeat_r2.size());
    std::vector<std::string> header{"hidden_layers", "units_per_layer", "dropout_rate", "learning_rate", "mean_r2"};
    for (std::size_t i = 0; i < repeats; ++i) header.push_back("r2_repeat_" + std::to_string(i));
    std::string out = csv_row(header);
    for (const auto& r : result.rows) {
        std::vector<std::string> row{std::to_string(r.config.hidden_layers), std::to_string(r.config.units_per_layer),
                                     format_double(r.config.dropout_rate), format_double(r.config.learning_rate),
                                     format_double(r.mean_r2)};
        for (double v : r.repeat_r2) row.push_back(format_double(v));
        out += csv_row(row);
    }
    return out;
}

std::string grid_pivot_to_csv(const GridSearchResult& result) {
    std::vector<int> units;
    std::vector<double> dropouts;
    const auto table = result.pivot(units, dropouts);
    std::vector<std::string> header{"units_per_layer"};
    for (double d : dropouts) {
        char label[32];
        std::snprintf(label, sizeof label, "dropout_%g", d);
        header.push_back(label);
    }
    std::string out = csv_row(header);
    for (std::size_t i = 0; i < units.size(); ++i) {
        std::vector<std::string> row{std::to_string(units[i])};
        for (double v : table[i]) row.push_back(format_double(v));
        out += csv_row(row);
    }
    return out;
}

std::string grid_marginal_to_csv(const GridSearchResult& result) {
    std::string out = csv_row({"units_per_layer", "mean_r2"});
    for (const auto& [u, r2] : result.marginal_units()) out += csv_row({std::to_string(u), format_double(r2)});
    return out;
}

}  // namespace distscale
