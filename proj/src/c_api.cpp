#include "distscale/distscale.h"

#include <optional>
#include <string>

#include "distscale/error.hpp"
#include "distscale/pipeline.hpp"
#include "distscale/testbench.hpp"

struct ds_registry {
    distscale::QuantityRegistry value;
};

struct ds_dataset {
    distscale::Dataset value;
};

struct ds_analysis {
    distscale::AnalyzeResult value;
    std::vector<std::string> displays;
};

struct ds_pisets {
    distscale::PiSetFile value;
    ds_registry registry;
};

struct ds_model {
    distscale::ModelArtifact value;
    ds_registry registry;
    std::optional<distscale::PairSet> pairs;
};

struct ds_grid {
    distscale::GridResult value;
    std::vector<std::pair<int, double>> marginal;
};

struct ds_validation {
    distscale::ValidationReport value;
    std::string target;
};

namespace {

thread_local std::string last_error;

static_assert(static_cast<int>(distscale::ErrorCode::Internal) + 1 == DS_ERR_INTERNAL);
static_assert(static_cast<int>(distscale::ErrorCode::InvalidInput) + 1 == DS_ERR_INVALID_INPUT);

ds_status fail(ds_status status, const std::string& message) {
    last_error = message;
    return status;
}

template <typename F>
ds_status guard(F&& body) {
    try {
        last_error.clear();
        body();
        return DS_OK;
    } catch (const distscale::Error& e) {
        return fail(static_cast<ds_status>(static_cast<int>(e.code()) + 1), e.what());
    } catch (const std::bad_alloc&) {
        return fail(DS_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(DS_ERR_INTERNAL, e.what());
    }
}

nlohmann::json options(const char* text) {
    if (text == nullptr || *text == '\0') return nlohmann::json::object();
    try {
        auto j = nlohmann::json::parse(text);
        if (!j.is_object()) throw distscale::Error(distscale::ErrorCode::Parse, "options must be a JSON object");
        return j;
    } catch (const nlohmann::json::parse_error& e) {
        throw distscale::Error(distscale::ErrorCode::Parse, std::string("options: ") + e.what());
    }
}

void require(const void* p, const char* what) {
    if (p == nullptr) throw distscale::Error(distscale::ErrorCode::InvalidInput, std::string(what) + " is null");
}

}  // namespace

extern "C" {

const char* ds_last_error(void) { return last_error.c_str(); }

const char* ds_status_name(ds_status status) {
    if (status == DS_OK) return "ok";
    if (status < DS_OK || status > DS_ERR_INTERNAL) return "unknown";
    return distscale::to_string(static_cast<distscale::ErrorCode>(static_cast<int>(status) - 1));
}

int ds_status_exit_code(ds_status status) {
    switch (status) {
        case DS_OK: return 0;
        case DS_ERR_IO:
        case DS_ERR_PARSE: return 1;
        default: return 2;
    }
}

ds_status ds_registry_load(const char* path, ds_registry** out) {
    return guard([&] {
        require(path, "path");
        require(out, "out");
        *out = new ds_registry{distscale::load_registry(path)};
    });
}

void ds_registry_free(ds_registry* registry) { delete registry; }

size_t ds_registry_size(const ds_registry* registry) { return registry ? registry->value.size() : 0; }

ds_status ds_registry_pi_count(const ds_registry* registry, size_t* out) {
    return guard([&] {
        require(registry, "registry");
        require(out, "out");
        const auto m = distscale::build_dimensional_matrix(registry->value);
        *out = distscale::pi_count(registry->value.size(), distscale::matrix_rank(m));
    });
}

ds_status ds_dataset_load(const ds_registry* registry, const char* path, int require_target, ds_dataset** out) {
    return guard([&] {
        require(registry, "registry");
        require(path, "path");
        require(out, "out");
        *out = new ds_dataset{distscale::read_dataset_csv(path, registry->value, require_target != 0)};
    });
}

ds_status ds_dataset_save(const ds_dataset* data, const char* path) {
    return guard([&] {
        require(data, "data");
        require(path, "path");
        distscale::write_dataset_csv(path, data->value);
    });
}

size_t ds_dataset_size(const ds_dataset* data) { return data ? data->value.size() : 0; }

void ds_dataset_free(ds_dataset* data) { delete data; }

ds_status ds_fleet_generate(const char* spec_path, uint64_t seed, unsigned threads, ds_dataset** out) {
    return guard([&] {
        require(spec_path, "spec_path");
        require(out, "out");
        const auto spec = distscale::load_fleet_spec(spec_path);
        *out = new ds_dataset{distscale::generate_fleet(spec, seed, threads)};
    });
}

ds_status ds_analyze(const ds_registry* registry, const ds_dataset* data, const char* options_json, unsigned threads,
                     ds_analysis** out) {
    return guard([&] {
        require(registry, "registry");
        require(data, "data");
        require(out, "out");
        auto opts = distscale::analyze_options_from_json(options(options_json));
        opts.threads = threads;
        auto result = distscale::run_analyze(registry->value, data->value, opts);
        std::vector<std::string> displays;
        for (const auto& s : result.ranked.sets) {
            std::string d;
            for (const auto& g : s.groups) d += (d.empty() ? "" : ", ") + g.display;
            displays.push_back("{" + d + "}");
        }
        *out = new ds_analysis{std::move(result), std::move(displays)};
    });
}

size_t ds_analysis_size(const ds_analysis* analysis) { return analysis ? analysis->displays.size() : 0; }

const char* ds_analysis_describe(const ds_analysis* analysis, size_t index) {
    if (!analysis || index >= analysis->displays.size()) return nullptr;
    return analysis->displays[index].c_str();
}

double ds_analysis_score(const ds_analysis* analysis, size_t index) {
    if (!analysis || index >= analysis->value.ranked.reports.size()) return 0.0;
    return analysis->value.ranked.reports[index].rms_score;
}

ds_status ds_analysis_save(const ds_analysis* analysis, const char* dir) {
    return guard([&] {
        require(analysis, "analysis");
        require(dir, "dir");
        distscale::write_analysis(analysis->value, dir);
    });
}

void ds_analysis_free(ds_analysis* analysis) { delete analysis; }

ds_status ds_pisets_load(const char* path, const ds_registry* registry, ds_pisets** out) {
    return guard([&] {
        require(path, "path");
        require(out, "out");
        auto file = distscale::load_pisets(path, registry ? &registry->value : nullptr);
        auto* p = new ds_pisets{std::move(file), {}};
        p->registry.value = p->value.registry;
        *out = p;
    });
}

const ds_registry* ds_pisets_registry(const ds_pisets* pisets) { return pisets ? &pisets->registry : nullptr; }

void ds_pisets_free(ds_pisets* pisets) { delete pisets; }

ds_status ds_train(const ds_pisets* pisets, const ds_dataset* data, const char* config_json, uint64_t seed,
                   ds_model** out) {
    return guard([&] {
        require(pisets, "pisets");
        require(data, "data");
        require(out, "out");
        const auto opts = distscale::train_options_from_json(options(config_json), seed);
        auto result = distscale::run_train(pisets->value, data->value, opts);
        auto* m = new ds_model{std::move(result.artifact), {}, std::move(result.pairs)};
        m->registry.value = m->value.registry;
        *out = m;
    });
}

ds_status ds_model_save(const ds_model* model, const char* path) {
    return guard([&] {
        require(model, "model");
        require(path, "path");
        distscale::write_text_file(path, distscale::model_to_json(model->value));
    });
}

ds_status ds_model_save_pairs(const ds_model* model, const char* path) {
    return guard([&] {
        require(model, "model");
        require(path, "path");
        if (!model->pairs) {
            throw distscale::Error(distscale::ErrorCode::InvalidInput, "model carries no training pairs");
        }
        distscale::write_text_file(path, distscale::pairs_to_csv(*model->pairs, model->value.model.pi_set.size()));
    });
}

ds_status ds_model_load(const char* path, ds_model** out) {
    return guard([&] {
        require(path, "path");
        require(out, "out");
        auto* m = new ds_model{distscale::load_model(path), {}, std::nullopt};
        m->registry.value = m->value.registry;
        *out = m;
    });
}

void ds_model_metrics(const ds_model* model, double* r2_train, double* r2_val) {
    if (!model) return;
    if (r2_train) *r2_train = model->value.model.r2_train;
    if (r2_val) *r2_val = model->value.model.r2_val;
}

const ds_registry* ds_model_registry(const ds_model* model) { return model ? &model->registry : nullptr; }

void ds_model_free(ds_model* model) { delete model; }

ds_status ds_gridsearch(const ds_pisets* pisets, const ds_dataset* data, const char* config_json, uint64_t seed,
                        unsigned threads, ds_grid** out) {
    return guard([&] {
        require(pisets, "pisets");
        require(data, "data");
        require(out, "out");
        const auto opts = distscale::train_options_from_json(options(config_json), seed);
        auto result = distscale::run_gridsearch(pisets->value, data->value, opts, threads);
        auto marginal = result.grid.marginal_units();
        *out = new ds_grid{std::move(result), std::move(marginal)};
    });
}

size_t ds_grid_size(const ds_grid* grid) { return grid ? grid->value.grid.rows.size() : 0; }

size_t ds_grid_marginal_size(const ds_grid* grid) { return grid ? grid->marginal.size() : 0; }

ds_status ds_grid_marginal(const ds_grid* grid, size_t index, int* units, double* mean_r2) {
    return guard([&] {
        require(grid, "grid");
        if (index >= grid->marginal.size()) {
            throw distscale::Error(distscale::ErrorCode::InvalidInput, "marginal index out of range");
        }
        if (units) *units = grid->marginal[index].first;
        if (mean_r2) *mean_r2 = grid->marginal[index].second;
    });
}

ds_status ds_grid_save(const ds_grid* grid, const char* dir) {
    return guard([&] {
        require(grid, "grid");
        require(dir, "dir");
        distscale::write_grid(grid->value, dir);
    });
}

void ds_grid_free(ds_grid* grid) { delete grid; }

ds_status ds_scale(const ds_model* model, const ds_dataset* data, const char* out_path) {
    return guard([&] {
        require(model, "model");
        require(data, "data");
        require(out_path, "out_path");
        const auto rows = distscale::run_scale(model->value, data->value);
        const auto& reg = model->value.registry;
        distscale::write_text_file(out_path, distscale::scaled_to_csv(rows, reg[reg.target_index()].name));
    });
}

ds_status ds_validate(const ds_model* model, const ds_dataset* data, const char* options_json, ds_validation** out) {
    return guard([&] {
        require(model, "model");
        require(data, "data");
        require(out, "out");
        const auto opts = distscale::validation_options_from_json(options(options_json));
        auto report = distscale::run_validate(model->value, data->value, opts);
        const auto& reg = model->value.registry;
        *out = new ds_validation{std::move(report), reg[reg.target_index()].name};
    });
}

void ds_validation_means(const ds_validation* report, double* learned_pct, double* baseline_pct, double* r2_delta) {
    if (!report) return;
    if (learned_pct) *learned_pct = report->value.learned.mean;
    if (baseline_pct) *baseline_pct = report->value.baseline.mean;
    if (r2_delta) *r2_delta = report->value.r2_delta;
}

size_t ds_validation_size(const ds_validation* report) { return report ? report->value.rows.size() : 0; }

ds_status ds_validation_save(const ds_validation* report, const char* dir) {
    return guard([&] {
        require(report, "report");
        require(dir, "dir");
        distscale::write_validation(report->value, report->target, dir);
    });
}

void ds_validation_free(ds_validation* report) { delete report; }

}  // extern "C"
