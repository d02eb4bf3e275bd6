#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "distscale/distscale.h"

namespace fs = std::filesystem;

namespace {

struct Common {
    std::uint64_t seed = 0;
    std::string out;
    bool serial = false;
    std::string config;

    unsigned threads() const {
        if (serial) return 1;
        const unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : hw;
    }
};

struct UsageError {
    std::string message;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
    cmd->add_option("--seed", c.seed, "Seed for every random choice")->default_val(0);
    auto* out = cmd->add_option("--out", c.out, "Output path");
    if (out_required) out->required();
    cmd->add_flag("--serial", c.serial, "Single-threaded, bit-reproducible execution");
    cmd->add_option("--config", c.config, "Configuration file");
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError{"cannot read " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json config_json(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    try {
        return nlohmann::json::parse(slurp(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError{path + ": " + e.what()};
    }
}

// Resources are released by the process exit on error paths.
int check(ds_status status, const char* what) {
    if (status == DS_OK) return 0;
    std::cerr << "distscale: " << what << ": " << ds_last_error() << " [" << ds_status_name(status) << "]\n";
    return ds_status_exit_code(status);
}

#define DS_TRY(call, what)                      \
    do {                                        \
        if (int rc_ = check((call), (what))) {  \
            return rc_;                         \
        }                                       \
    } while (0)

int cmd_analyze(const Common& c, const std::string& registry_path, const std::string& data_path,
                const std::string& target, std::size_t top_k) {
    auto opts = config_json(c.config);
    if (!target.empty()) opts["target"] = target;
    if (top_k > 0) opts["top_k"] = top_k;
    ds_registry* reg = nullptr;
    DS_TRY(ds_registry_load(registry_path.c_str(), &reg), "registry");
    ds_dataset* data = nullptr;
    DS_TRY(ds_dataset_load(reg, data_path.c_str(), 1, &data), "data");
    ds_analysis* analysis = nullptr;
    DS_TRY(ds_analyze(reg, data, opts.dump().c_str(), c.threads(), &analysis), "analyze");
    DS_TRY(ds_analysis_save(analysis, c.out.c_str()), "write");
    const std::size_t n = ds_analysis_size(analysis);
    std::cout << n << " ranked pi set(s) written to " << (fs::path(c.out) / "pisets.json").string() << "\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(n, 3); ++i) {
        std::printf("  #%zu rms=%.4f %s\n", i, ds_analysis_score(analysis, i), ds_analysis_describe(analysis, i));
    }
    ds_analysis_free(analysis);
    ds_dataset_free(data);
    ds_registry_free(reg);
    return 0;
}

int cmd_generate(const Common& c, const std::string& spec) {
    const std::string path = spec.empty() ? c.config : spec;
    if (path.empty()) throw UsageError{"generate needs --spec"};
    ds_dataset* data = nullptr;
    DS_TRY(ds_fleet_generate(path.c_str(), c.seed, c.threads(), &data), "generate");
    DS_TRY(ds_dataset_save(data, c.out.c_str()), "write");
    std::cout << ds_dataset_size(data) << " records written to " << c.out << "\n";
    ds_dataset_free(data);
    return 0;
}

struct TrainInputs {
    std::string data;
    std::string pisets;
    std::string registry;
};

int load_training_inputs(const TrainInputs& in, ds_pisets** pisets, ds_dataset** data) {
    ds_registry* reg = nullptr;
    if (!in.registry.empty()) DS_TRY(ds_registry_load(in.registry.c_str(), &reg), "registry");
    const ds_status s = ds_pisets_load(in.pisets.c_str(), reg, pisets);
    ds_registry_free(reg);
    DS_TRY(s, "pisets");
    DS_TRY(ds_dataset_load(ds_pisets_registry(*pisets), in.data.c_str(), 1, data), "data");
    return 0;
}

int cmd_train(const Common& c, const TrainInputs& in) {
    const auto cfg = config_json(c.config).dump();
    ds_pisets* pisets = nullptr;
    ds_dataset* data = nullptr;
    if (int rc = load_training_inputs(in, &pisets, &data)) return rc;
    ds_model* model = nullptr;
    DS_TRY(ds_train(pisets, data, cfg.c_str(), c.seed, &model), "train");
    const fs::path dir(c.out);
    DS_TRY(ds_model_save(model, (dir / "model.json").string().c_str()), "write");
    DS_TRY(ds_model_save_pairs(model, (dir / "pairs.csv").string().c_str()), "write");
    double r2_train = 0.0, r2_val = 0.0;
    ds_model_metrics(model, &r2_train, &r2_val);
    std::printf("model written to %s (R2 train %.4f, validation %.4f)\n", (dir / "model.json").string().c_str(),
                r2_train, r2_val);
    ds_model_free(model);
    ds_dataset_free(data);
    ds_pisets_free(pisets);
    return 0;
}

int cmd_gridsearch(const Common& c, const TrainInputs& in) {
    const auto cfg = config_json(c.config).dump();
    ds_pisets* pisets = nullptr;
    ds_dataset* data = nullptr;
    if (int rc = load_training_inputs(in, &pisets, &data)) return rc;
    ds_grid* grid = nullptr;
    DS_TRY(ds_gridsearch(pisets, data, cfg.c_str(), c.seed, c.threads(), &grid), "gridsearch");
    DS_TRY(ds_grid_save(grid, c.out.c_str()), "write");
    std::cout << ds_grid_size(grid) << " grid points written to " << c.out << "\n";
    for (std::size_t i = 0; i < ds_grid_marginal_size(grid); ++i) {
        int units = 0;
        double r2 = 0.0;
        DS_TRY(ds_grid_marginal(grid, i, &units, &r2), "gridsearch");
        std::printf("  units %4d  mean R2 %.4f\n", units, r2);
    }
    ds_grid_free(grid);
    ds_dataset_free(data);
    ds_pisets_free(pisets);
    return 0;
}

int cmd_scale(const Common& c, const std::string& model_path, const std::string& data_path) {
    ds_model* model = nullptr;
    DS_TRY(ds_model_load(model_path.c_str(), &model), "model");
    ds_dataset* data = nullptr;
    DS_TRY(ds_dataset_load(ds_model_registry(model), data_path.c_str(), 0, &data), "data");
    DS_TRY(ds_scale(model, data, c.out.c_str()), "scale");
    std::cout << ds_dataset_size(data) << " records scaled into " << c.out << "\n";
    ds_dataset_free(data);
    ds_model_free(model);
    return 0;
}

int cmd_validate(const Common& c, const std::string& model_path, const std::string& data_path,
                 const std::vector<std::string>& machines) {
    auto opts = config_json(c.config);
    if (!machines.empty()) opts["machines"] = machines;
    ds_model* model = nullptr;
    DS_TRY(ds_model_load(model_path.c_str(), &model), "model");
    ds_dataset* data = nullptr;
    DS_TRY(ds_dataset_load(ds_model_registry(model), data_path.c_str(), 1, &data), "data");
    ds_validation* report = nullptr;
    DS_TRY(ds_validate(model, data, opts.dump().c_str(), &report), "validate");
    DS_TRY(ds_validation_save(report, c.out.c_str()), "write");
    double learned = 0.0, baseline = 0.0, r2 = 0.0;
    ds_validation_means(report, &learned, &baseline, &r2);
    std::printf("%zu records: mean error learned %.4f%%, baseline %.4f%%, R2(delta1) %.4f\n",
                ds_validation_size(report), learned, baseline, r2);
    ds_validation_free(report);
    ds_dataset_free(data);
    ds_model_free(model);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distortion-aware similitude scaling toolkit"};
    app.require_subcommand(1);

    Common analyze_c, generate_c, train_c, grid_c, scale_c, validate_c;
    std::string registry, data, target, spec, model;
    std::size_t top_k = 0;
    TrainInputs train_in, grid_in;
    std::vector<std::string> machines;

    auto* analyze = app.add_subcommand("analyze", "Enumerate and rank candidate Pi sets");
    add_common(analyze, analyze_c);
    analyze->add_option("--registry", registry, "Quantity registry (JSON)")->required();
    analyze->add_option("--data", data, "Dataset CSV")->required();
    analyze->add_option("--target", target, "Target quantity (overrides the registry)");
    analyze->add_option("--top-k", top_k, "Number of ranked sets to keep");

    auto* generate = app.add_subcommand("generate", "Generate a synthetic multi-scale fleet");
    add_common(generate, generate_c);
    generate->add_option("--spec", spec, "Fleet spec (TOML)");

    auto* train = app.add_subcommand("train", "Train the prediction-factor regressor");
    add_common(train, train_c);
    train->add_option("--data", train_in.data, "Dataset CSV")->required();
    train->add_option("--pisets", train_in.pisets, "Pi-set file from analyze")->required();
    train->add_option("--registry", train_in.registry, "Registry overriding the one in the pi-set file");

    auto* grid = app.add_subcommand("gridsearch", "Grid search over regressor hyperparameters");
    add_common(grid, grid_c);
    grid->add_option("--data", grid_in.data, "Dataset CSV")->required();
    grid->add_option("--pisets", grid_in.pisets, "Pi-set file from analyze")->required();
    grid->add_option("--registry", grid_in.registry, "Registry overriding the one in the pi-set file");

    auto* scale = app.add_subcommand("scale", "Predict the target on new data");
    add_common(scale, scale_c);
    scale->add_option("--model", model, "Model artifact (JSON)")->required();
    scale->add_option("--data", data, "Dataset CSV; the target column may be absent")->required();

    auto* validate = app.add_subcommand("validate", "Compare learned and baseline scaling against truth");
    add_common(validate, validate_c);
    validate->add_option("--model", model, "Model artifact (JSON)")->required();
    validate->add_option("--data", data, "Dataset CSV with true target values")->required();
    validate->add_option("--machines", machines, "Restrict validation to these machines")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*analyze) return cmd_analyze(analyze_c, registry, data, target, top_k);
        if (*generate) return cmd_generate(generate_c, spec);
        if (*train) return cmd_train(train_c, train_in);
        if (*grid) return cmd_gridsearch(grid_c, grid_in);
        if (*scale) return cmd_scale(scale_c, model, data);
        if (*validate) return cmd_validate(validate_c, model, data, machines);
    } catch (const UsageError& e) {
        std::cerr << "distscale: " << e.message << "\n";
        return 1;
    }
    return 1;
}
