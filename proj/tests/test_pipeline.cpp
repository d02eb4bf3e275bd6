#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "distscale/pipeline.hpp"
#include "fixtures.hpp"

using namespace distscale;
using fixtures::code_of;
namespace fs = std::filesystem;

namespace {

PiSetFile spec_pisets() { return load_pisets(fixtures::config_path("bucket_pisets.json")); }

TrainOptions quick_options(std::uint64_t seed) {
    auto o = train_options_from_json(nlohmann::json::parse(R"({
        "reference": {"machine_id": "mini"},
        "split": {"mode": "by_fraction", "validation_fraction": 0.25},
        "mlp": {"hidden_layers": 1, "units_per_layer": 8, "epochs": 20, "batch_size": 8,
                "learning_rate": 0.01, "activation": "relu"},
        "grid": {"units_per_layer": [2, 4], "dropout_rate": [0.0], "repeats": 1}
    })"),
                                     seed);
    return o;
}

FleetSpec steady_fleet() {
    auto spec = fixtures::small_fleet();
    spec.gyration_radius = 0.0;
    spec.base.arm_mass = 0.0;  // arm weight would not grow with the load
    spec.distortions.clear();
    spec.sweep = {0.5, 4.0, 0.25};
    RunSpec run;
    run.id = "steady";
    run.load_com = spec.base.com;
    run.accel = 1.0;
    run.angular_accel = 3.0;
    spec.runs = {run};
    return spec;
}

}  // namespace

TEST_CASE("analyze ranks candidate sets on bench data") {
    const auto reg = load_registry(fixtures::config_path("bucket_registry.json"));
    const auto data = generate_fleet(fixtures::small_fleet(), 1);
    AnalyzeOptions o;
    o.top_k = 5;
    const auto r = run_analyze(reg, data, o);
    CHECK(r.candidates > 1);
    REQUIRE(r.ranked.sets.size() == 5);
    CHECK(r.ranked.reports.size() == 5);
    for (std::size_t i = 1; i < 5; ++i) CHECK(r.ranked.reports[i - 1].rms_score >= r.ranked.reports[i].rms_score);
    for (const auto& s : r.ranked.sets) CHECK(s.groups[0].exponents[0] == 1);

    const auto dir = fixtures::scratch("pipeline_analyze");
    write_analysis(r, dir);
    CHECK(fs::exists(dir / "pisets.json"));
    CHECK(fs::exists(dir / "ranking.csv"));
    const auto back = load_pisets(dir / "pisets.json");
    CHECK(back.sets.size() == 5);
    CHECK(exponent_matrix(back.sets[0]) == exponent_matrix(r.ranked.sets[0]));
}

TEST_CASE("analyze options") {
    const auto o = analyze_options_from_json(
        nlohmann::json::parse(R"({"target": "F31", "top_k": 3, "max_sets": 7, "valid_fraction_floor": 0.5})"));
    CHECK(o.target == std::string("F31"));
    CHECK(o.top_k == 3);
    CHECK(o.limits.max_sets == 7);
    CHECK(o.selection.valid_fraction_floor == 0.5);
    CHECK(code_of([] { analyze_options_from_json(nlohmann::json::parse(R"({"top_k": 0})")); }) ==
          ErrorCode::InvalidInput);
    CHECK(code_of([] { analyze_options_from_json(nlohmann::json::parse(R"({"top_k": "x"})")); }) == ErrorCode::Parse);

    const auto reg = load_registry(fixtures::config_path("bucket_registry.json"));
    const auto data = generate_fleet(fixtures::small_fleet(), 1);
    const auto r = run_analyze(reg, data, o);
    CHECK(r.ranked.registry[r.ranked.registry.target_index()].name == "F31");
    CHECK(r.ranked.sets.size() <= 3);
}

TEST_CASE("analyze with a constant target has no valid set") {
    const auto reg = load_registry(fixtures::config_path("bucket_registry.json"));
    auto data = generate_fleet(fixtures::small_fleet(), 1);
    for (auto& r : data.records) r.values[0] = 5.0;
    try {
        run_analyze(reg, data, {});
        FAIL("expected NoValidSet");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoValidSet);
        CHECK(std::string(e.what()).find("set 0") != std::string::npos);
    }
    data.records.clear();
    CHECK(code_of([&] { run_analyze(reg, data, {}); }) == ErrorCode::InvalidInput);
}

TEST_CASE("train, scale and validate end to end") {
    const auto data = generate_fleet(fixtures::small_fleet(), 2);
    const auto opts = quick_options(2);
    const auto trained = run_train(spec_pisets(), data, opts);
    CHECK(trained.pairs.pairs.size() == data.size() - 1);
    CHECK(trained.artifact.model.reference.key.machine_id == "mini");

    const auto scaled = run_scale(trained.artifact, data);
    REQUIRE(scaled.size() == data.size());
    for (const auto& s : scaled) {
        CHECK(std::isfinite(s.learned));
        CHECK(std::isfinite(s.baseline));
    }
    CHECK(scaled_to_csv(scaled, "F21").rfind("machine_id,run_id,t,delta1_pred,F21_learned,F21_baseline\n", 0) == 0);

    ValidationOptions v;
    v.machines = {"full"};
    const auto report = run_validate(trained.artifact, data, v);
    CHECK(report.rows.size() == data.size() / 2);
    CHECK(report.learned.errors.size() == report.rows.size());
    for (const auto& r : report.rows) CHECK(r.key.machine_id == "full");

    const auto dir = fixtures::scratch("pipeline_validate");
    write_validation(report, "F21", dir);
    for (const char* f : {"summary.csv", "error_curve.csv", "error_vs_load.svg", "delta_scatter.svg"}) {
        CHECK(fs::exists(dir / f));
    }
}

TEST_CASE("training through the pipeline is reproducible") {
    const auto data = generate_fleet(fixtures::small_fleet(), 3);
    const auto a = run_train(spec_pisets(), data, quick_options(9));
    const auto b = run_train(spec_pisets(), data, quick_options(9));
    CHECK(model_to_json(a.artifact) == model_to_json(b.artifact));
}

TEST_CASE("undistorted similar fleet: baseline is exact") {
    const auto data = generate_fleet(steady_fleet(), 1);
    auto opts = quick_options(1);
    opts.split = {SplitMode::ByRun, 0.2};
    const auto trained = run_train(spec_pisets(), data, opts);
    const auto report = run_validate(trained.artifact, data, {});
    CHECK(report.rows.size() == data.size() - 1);
    CHECK(report.baseline.mean < 1e-7);
    for (double e : report.baseline.errors) CHECK(e < 1e-7);
    CHECK(std::isnan(report.r2_delta));
}

TEST_CASE("pipeline errors") {
    const auto data = generate_fleet(fixtures::small_fleet(), 1);
    auto opts = quick_options(1);
    SUBCASE("set index out of range") {
        opts.set_index = 4;
        CHECK(code_of([&] { run_train(spec_pisets(), data, opts); }) == ErrorCode::InvalidInput);
    }
    SUBCASE("unknown reference machine") {
        opts.reference.machine_id = "nowhere";
        CHECK(code_of([&] { run_train(spec_pisets(), data, opts); }) == ErrorCode::ReferenceSelection);
    }
    SUBCASE("everything excluded") {
        opts.reference.machine_id.clear();
        opts.pairs.exclude_machines = {"mini", "full"};
        CHECK(code_of([&] { run_train(spec_pisets(), data, opts); }) == ErrorCode::ReferenceSelection);
    }
    SUBCASE("dataset against another registry") {
        Dataset other = data;
        std::swap(other.quantity_names[0], other.quantity_names[1]);
        CHECK(code_of([&] { run_train(spec_pisets(), other, opts); }) == ErrorCode::SchemaMismatch);
    }
    SUBCASE("config errors") {
        CHECK(code_of([] {
                  train_options_from_json(nlohmann::json::parse(R"({"split": {"mode": "random"}})"), 1);
              }) == ErrorCode::InvalidInput);
        CHECK(code_of([] { train_options_from_json(nlohmann::json::parse(R"({"pair_bounds": [2, 1]})"), 1); }) ==
              ErrorCode::InvalidInput);
        CHECK(code_of([] {
                  train_options_from_json(nlohmann::json::parse(R"({"mlp": {"activation": "swish"}})"), 1);
              }) == ErrorCode::InvalidInput);
        CHECK(code_of([] {
                  train_options_from_json(nlohmann::json::parse(R"({"grid": {"units_per_layer": []}})"), 1);
              }) == ErrorCode::InvalidInput);
    }
}

TEST_CASE("shipped configs load") {
    const auto t = train_options_from_json(
        nlohmann::json::parse(read_text_file(fixtures::config_path("train.json"))), 7);
    CHECK(t.reference.machine_id == "medium");
    CHECK(t.pairs.exclude_machines == std::vector<std::string>{"mini"});
    CHECK(t.mlp.activation == Activation::Relu);
    CHECK(t.mlp.seed == 7);
    const auto g = train_options_from_json(
        nlohmann::json::parse(read_text_file(fixtures::config_path("grid.json"))), 7);
    CHECK(g.grid.units_per_layer == std::vector<int>{1, 4, 16, 64});
    CHECK(g.grid.size() == 12);
    CHECK(g.repeats == 2);
}

TEST_CASE("grid search through the pipeline") {
    const auto data = generate_fleet(fixtures::small_fleet(), 4);
    const auto opts = quick_options(4);
    const auto a = run_gridsearch(spec_pisets(), data, opts, 1);
    const auto b = run_gridsearch(spec_pisets(), data, opts, 2);
    REQUIRE(a.grid.rows.size() == 2);
    CHECK(grid_to_csv(a.grid) == grid_to_csv(b.grid));
    const auto dir = fixtures::scratch("pipeline_grid");
    write_grid(a, dir);
    for (const char* f : {"grid.csv", "grid_pivot.csv", "grid_marginal.csv", "grid_heatmap.svg", "grid_marginal.svg"}) {
        CHECK(fs::exists(dir / f));
    }
}
