#include "distscale/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "distscale/error.hpp"
#include "distscale/random.hpp"
#include "distscale/report.hpp"

namespace distscale {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename F>
auto guarded(F&& body) {
    try {
        return body();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("config: ") + e.what());
    }
}

template <typename T>
std::vector<T> axis(const json& grid, const char* key, T fallback) {
    if (!grid.contains(key)) return {fallback};
    auto v = grid.at(key).get<std::vector<T>>();
    if (v.empty()) throw Error(ErrorCode::InvalidInput, std::string("grid axis '") + key + "' is empty");
    return v;
}

std::string csv_line(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    return out + "\n";
}

const PiSet& chosen_set(const PiSetFile& pisets, std::size_t index) {
    if (index >= pisets.sets.size()) {
        throw Error(ErrorCode::InvalidInput, "set_index " + std::to_string(index) + " out of range (file has " +
                                                 std::to_string(pisets.sets.size()) + " sets)");
    }
    return pisets.sets[index];
}

void require_schema(const Dataset& data, const QuantityRegistry& registry) {
    if (data.quantity_names != registry.names()) {
        throw Error(ErrorCode::SchemaMismatch, "dataset columns do not match the registry");
    }
}

}  // namespace

AnalyzeOptions analyze_options_from_json(const json& j) {
    return guarded([&] {
        AnalyzeOptions o;
        if (j.contains("target")) o.target = j.at("target").get<std::string>();
        o.top_k = j.value("top_k", o.top_k);
        o.limits.max_sets = j.value("max_sets", o.limits.max_sets);
        o.limits.max_abs_exponent = j.value("max_abs_exponent", o.limits.max_abs_exponent);
        o.limits.max_depth = j.value("max_depth", o.limits.max_depth);
        o.selection.valid_fraction_floor = j.value("valid_fraction_floor", o.selection.valid_fraction_floor);
        if (o.top_k == 0) throw Error(ErrorCode::InvalidInput, "top_k must be >= 1");
        return o;
    });
}

AnalyzeResult run_analyze(const QuantityRegistry& registry, const Dataset& data, const AnalyzeOptions& options) {
    const QuantityRegistry reg = options.target ? registry.with_target(*options.target) : registry;
    require_schema(data, reg);
    if (data.empty()) throw Error(ErrorCode::InvalidInput, "dataset has no records");
    const auto sets = enumerate_pi_sets(reg, reg.target_index(), options.limits);
    AnalyzeResult result;
    result.candidates = sets.size();
    result.ranking = rank_pi_sets(sets, data, options.top_k, options.selection, options.threads);
    if (result.ranking.ranked.empty()) {
        std::string msg = "no valid Pi set among " + std::to_string(sets.size()) + " candidates";
        const std::size_t shown = std::min<std::size_t>(result.ranking.diagnostics.size(), 10);
        for (std::size_t i = 0; i < shown; ++i) msg += "\n  " + result.ranking.diagnostics[i];
        if (shown < result.ranking.diagnostics.size()) msg += "\n  ...";
        throw Error(ErrorCode::NoValidSet, msg);
    }
    result.ranked.registry = reg;
    for (const auto& r : result.ranking.ranked) {
        result.ranked.sets.push_back(sets[r.index]);
        result.ranked.reports.push_back(r.report);
    }
    return result;
}

void write_analysis(const AnalyzeResult& result, const std::filesystem::path& dir) {
    write_text_file(dir / "pisets.json", pisets_to_json(result.ranked));
    write_text_file(dir / "ranking.csv", ranking_to_csv(result.ranked.reports));
}

TrainOptions train_options_from_json(const json& j, std::uint64_t seed) {
    return guarded([&] {
        TrainOptions o;
        o.set_index = j.value("set_index", o.set_index);
        o.reference.seed = mix_seed(seed, 0x7265ULL);
        if (j.contains("reference")) {
            const auto& r = j.at("reference");
            o.reference.machine_id = r.value("machine_id", "");
            if (r.contains("key")) {
                const auto& k = r.at("key");
                o.reference.key = RecordKey{k.at("machine_id").get<std::string>(), k.at("run_id").get<std::string>(),
                                            k.at("t").get<double>()};
            }
        }
        o.pairs.exclude_machines = j.value("exclude_machines", std::vector<std::string>{});
        if (j.contains("pair_bounds")) {
            const auto b = j.at("pair_bounds").get<std::vector<double>>();
            if (b.size() != 2 || !(b[0] > 0.0) || !(b[1] > b[0])) {
                throw Error(ErrorCode::InvalidInput, "pair_bounds must be [lower, upper] with 0 < lower < upper");
            }
            o.pairs.lower_bound = b[0];
            o.pairs.upper_bound = b[1];
        }
        if (j.contains("split")) {
            const auto& s = j.at("split");
            const auto mode = s.value("mode", std::string("by_run"));
            if (mode == "by_run") {
                o.split.mode = SplitMode::ByRun;
            } else if (mode == "by_fraction") {
                o.split.mode = SplitMode::ByFraction;
            } else {
                throw Error(ErrorCode::InvalidInput, "split mode must be by_run or by_fraction");
            }
            o.split.validation_fraction = s.value("validation_fraction", o.split.validation_fraction);
        }
        o.include_raw_pi = j.value("include_raw_pi", false);
        const json mlp = j.value("mlp", json::object());
        MLPConfig& c = o.mlp;
        c.hidden_layers = mlp.value("hidden_layers", c.hidden_layers);
        c.units_per_layer = mlp.value("units_per_layer", c.units_per_layer);
        c.dropout_rate = mlp.value("dropout_rate", c.dropout_rate);
        c.learning_rate = mlp.value("learning_rate", c.learning_rate);
        c.epochs = mlp.value("epochs", c.epochs);
        c.batch_size = mlp.value("batch_size", c.batch_size);
        c.activation = parse_activation(mlp.value("activation", std::string(to_string(c.activation))));
        c.patience = mlp.value("patience", c.patience);
        c.seed = seed;
        c.validate();
        const json grid = j.value("grid", json::object());
        o.grid.hidden_layers = axis<int>(grid, "hidden_layers", c.hidden_layers);
        o.grid.units_per_layer = axis<int>(grid, "units_per_layer", c.units_per_layer);
        o.grid.dropout_rate = axis<double>(grid, "dropout_rate", c.dropout_rate);
        o.grid.learning_rate = axis<double>(grid, "learning_rate", c.learning_rate);
        o.repeats = grid.value("repeats", 1);
        if (o.repeats < 1) throw Error(ErrorCode::InvalidInput, "grid repeats must be >= 1");
        return o;
    });
}

PairSet build_pairs(const PiSetFile& pisets, const Dataset& data, const TrainOptions& options) {
    require_schema(data, pisets.registry);
    const PiSet& set = chosen_set(pisets, options.set_index);
    ReferenceSelector selector = options.reference;
    if (selector.machine_id.empty() && !selector.key) {
        for (const auto& m : data.machines()) {
            const auto& ex = options.pairs.exclude_machines;
            if (std::find(ex.begin(), ex.end(), m) == ex.end()) {
                selector.machine_id = m;
                break;
            }
        }
        if (selector.machine_id.empty()) throw Error(ErrorCode::ReferenceSelection, "no machine left to reference");
    }
    return build_training_pairs(set, data, selector, options.pairs);
}

TrainResult run_train(const PiSetFile& pisets, const Dataset& data, const TrainOptions& options) {
    TrainResult out;
    out.pairs = build_pairs(pisets, data, options);
    out.artifact.registry = pisets.registry;
    out.artifact.model =
        train(out.pairs, chosen_set(pisets, options.set_index), options.mlp, options.split, options.include_raw_pi);
    return out;
}

GridResult run_gridsearch(const PiSetFile& pisets, const Dataset& data, const TrainOptions& options,
                          unsigned threads) {
    GridResult out;
    out.pairs = build_pairs(pisets, data, options);
    out.grid = grid_search(out.pairs, chosen_set(pisets, options.set_index), options.mlp, options.grid,
                           options.repeats, options.mlp.seed, options.split, options.include_raw_pi, threads);
    return out;
}

void write_grid(const GridResult& result, const std::filesystem::path& dir) {
    write_text_file(dir / "grid.csv", grid_to_csv(result.grid));
    write_text_file(dir / "grid_pivot.csv", grid_pivot_to_csv(result.grid));
    write_text_file(dir / "grid_marginal.csv", grid_marginal_to_csv(result.grid));
    write_text_file(dir / "grid_heatmap.svg", grid_heatmap_svg(result.grid));
    write_text_file(dir / "grid_marginal.svg", grid_marginal_svg(result.grid));
}

std::vector<ScaledRecord> run_scale(const ModelArtifact& artifact, const Dataset& data) {
    require_schema(data, artifact.registry);
    const auto& m = artifact.model;
    std::vector<ScaledRecord> out;
    for (const auto& rec : data.records) {
        ScaledRecord row{rec.key, kNaN, kNaN, kNaN};
        try {
            const auto d = compute_distortions(m.pi_set, m.reference, rec, data.quantity_names);
            std::vector<double> raw;
            if (m.schema.include_raw_pi) {
                for (std::size_t k = 0; k < m.pi_set.size(); ++k) {
                    if (k != m.pi_set.target_index) {
                        raw.push_back(evaluate_pi(m.pi_set.groups[k], rec.values, data.quantity_names));
                    }
                }
            }
            row.delta_pred = predict_delta(m, d, raw);
            row.learned = apply_scaling(m.pi_set, m.reference, rec.values, row.delta_pred, data.quantity_names);
            row.baseline = baseline_pi_scaling(m.pi_set, m.reference, rec.values, data.quantity_names);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::SchemaMismatch) throw;
        }
        out.push_back(row);
    }
    return out;
}

std::string scaled_to_csv(const std::vector<ScaledRecord>& rows, const std::string& target) {
    std::string out = csv_line({"machine_id", "run_id", "t", "delta1_pred", target + "_learned", target + "_baseline"});
    for (const auto& r : rows) {
        out += csv_line({r.key.machine_id, r.key.run_id, format_double(r.key.t), format_double(r.delta_pred),
                         format_double(r.learned), format_double(r.baseline)});
    }
    return out;
}

ValidationOptions validation_options_from_json(const json& j) {
    return guarded([&] {
        ValidationOptions o;
        o.machines = j.value("machines", std::vector<std::string>{});
        o.skip_reference = j.value("skip_reference", o.skip_reference);
        o.error_floor = j.value("error_floor", o.error_floor);
        return o;
    });
}

ValidationReport run_validate(const ModelArtifact& artifact, const Dataset& data, const ValidationOptions& options) {
    require_schema(data, artifact.registry);
    const auto& m = artifact.model;
    const std::size_t target = m.pi_set.target_quantity;
    const auto scaled = run_scale(artifact, data);
    ValidationReport report;
    std::vector<double> truth, learned, baseline, loads;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const auto& rec = data.records[i];
        if (!options.machines.empty() &&
            std::find(options.machines.begin(), options.machines.end(), rec.key.machine_id) == options.machines.end()) {
            continue;
        }
        if (options.skip_reference && rec.key == m.reference.key) continue;
        const auto& s = scaled[i];
        double delta_true = kNaN;
        try {
            delta_true = prediction_factor(m.pi_set, m.reference, rec, data.quantity_names);
        } catch (const Error&) {
        }
        if (!std::isfinite(s.learned) || !std::isfinite(s.baseline) || !std::isfinite(delta_true) ||
            !std::isfinite(rec.values[target])) {
            ++report.skipped;
            continue;
        }
        report.rows.push_back({rec.key, rec.values[target], s.learned, s.baseline, delta_true, s.delta_pred});
        truth.push_back(rec.values[target]);
        learned.push_back(s.learned);
        baseline.push_back(s.baseline);
        loads.push_back(rec.key.t);
    }
    if (report.rows.empty()) throw Error(ErrorCode::InvalidInput, "no record could be validated");
    report.learned = percentage_error_curve(truth, learned, loads, options.error_floor);
    report.baseline = percentage_error_curve(truth, baseline, loads, options.error_floor);
    std::vector<double> dt, dp;
    for (const auto& r : report.rows) {
        dt.push_back(r.delta_true);
        dp.push_back(r.delta_pred);
    }
    report.r2_delta = kNaN;
    // A delta_1 series that only varies by rounding has no meaningful R^2.
    const auto [lo, hi] = std::minmax_element(dt.begin(), dt.end());
    const bool flat = *hi - *lo <= 1e-12 * std::max(1.0, std::abs(*hi));
    if (dt.size() >= 2 && !flat) {
        try {
            report.r2_delta = r_squared(dt, dp);
        } catch (const Error&) {
        }
    }
    return report;
}

void write_validation(const ValidationReport& report, const std::string& target, const std::filesystem::path& dir) {
    std::string summary = csv_line({"metric", "value"});
    summary += csv_line({"records", std::to_string(report.rows.size())});
    summary += csv_line({"skipped", std::to_string(report.skipped)});
    summary += csv_line({"excluded_near_zero", std::to_string(report.learned.excluded)});
    summary += csv_line({"mean_error_learned_pct", format_double(report.learned.mean)});
    summary += csv_line({"mean_error_baseline_pct", format_double(report.baseline.mean)});
    summary += csv_line({"r2_delta1", format_double(report.r2_delta)});
    write_text_file(dir / "summary.csv", summary);

    std::string curve = csv_line({"machine_id", "run_id", "t", target + "_true", target + "_learned",
                                  target + "_baseline", "error_learned_pct", "error_baseline_pct", "delta1_true",
                                  "delta1_pred"});
    for (const auto& r : report.rows) {
        auto pct = [&](double v) { return format_double(100.0 * std::abs(v - r.truth) / std::abs(r.truth)); };
        curve += csv_line({r.key.machine_id, r.key.run_id, format_double(r.key.t), format_double(r.truth),
                           format_double(r.learned), format_double(r.baseline), pct(r.learned), pct(r.baseline),
                           format_double(r.delta_true), format_double(r.delta_pred)});
    }
    write_text_file(dir / "error_curve.csv", curve);
    write_text_file(dir / "error_vs_load.svg", error_vs_load_svg(report.learned, report.baseline));
    std::vector<double> dt, dp;
    for (const auto& r : report.rows) {
        dt.push_back(r.delta_true);
        dp.push_back(r.delta_pred);
    }
    write_text_file(dir / "delta_scatter.svg", delta_scatter_svg(dt, dp, report.r2_delta));
}

}  // namespace distscale
