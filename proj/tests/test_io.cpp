#include <doctest.h>

#include <cmath>
#include <algorithm>

#include "distscale/io.hpp"
#include "distscale/random.hpp"
#include "fixtures.hpp"

using namespace distscale;
using fixtures::code_of;

namespace {

nlohmann::json registry_json() {
    return nlohmann::json::parse(read_text_file(fixtures::config_path("bucket_registry.json")));
}

TrainedModel tiny_model(std::uint64_t seed) {
    const auto set = fixtures::bucket_set();
    const auto data = generate_fleet(fixtures::small_fleet(), seed);
    const auto pairs = build_training_pairs(set, data, {"mini", seed, std::nullopt});
    MLPConfig cfg;
    cfg.hidden_layers = 1;
    cfg.units_per_layer = 4;
    cfg.epochs = 3;
    cfg.seed = seed;
    return train(pairs, set, cfg);
}

}  // namespace

TEST_CASE("registry file round trip") {
    const auto reg = load_registry(fixtures::config_path("bucket_registry.json"));
    CHECK(reg.size() == 9);
    CHECK(reg.target_index() == 0);
    CHECK(reg[8].name == "alpha1");
    CHECK(reg[8].unit_label == "rad/s^2");
    CHECK(reg.domains().size() == 2);
    CHECK(fundamental_unit_count(reg.domains()) == 3);
    const auto again = registry_from_json(nlohmann::json::parse(registry_to_json(reg).dump()));
    CHECK(again.names() == reg.names());
    for (std::size_t q = 0; q < reg.size(); ++q) CHECK(again[q].dim == reg[q].dim);
    CHECK(registry_to_json(again).dump() == registry_to_json(reg).dump());
}

TEST_CASE("registry accepts fractional exponents and bare unit symbols") {
    const auto j = nlohmann::json::parse(R"({
      "fundamental_units": ["M", "L", "T", "K"],
      "quantities": [
        {"name": "q", "exponents": ["1/2", 0, -1, 0], "role": "target"},
        {"name": "p", "exponents": [1, "-3/2", 0, 1]}
      ]})");
    const auto reg = registry_from_json(j);
    CHECK(reg.units().size() == 4);
    CHECK(reg[0].dim[0] == Rational(1, 2));
    CHECK(reg[1].dim[1] == Rational(-3, 2));
    CHECK(reg[1].role == QuantityRole::Input);
    const auto back = registry_to_json(reg);
    CHECK(back["quantities"][0]["exponents"][0] == "1/2");
}

TEST_CASE("registry errors") {
    auto j = registry_json();
    j["quantities"][1]["exponents"] = {1, 1};
    CHECK(code_of([&] { registry_from_json(j); }) == ErrorCode::Parse);
    j = registry_json();
    j["quantities"][1]["role"] = "output";
    CHECK(code_of([&] { registry_from_json(j); }) == ErrorCode::Parse);
    j = registry_json();
    j["quantities"][1]["exponents"][0] = "x/y";
    CHECK(code_of([&] { registry_from_json(j); }) == ErrorCode::Parse);
    j = registry_json();
    j["quantities"][1]["role"] = "target";
    CHECK(code_of([&] { registry_from_json(j); }) == ErrorCode::InvalidInput);
    j = registry_json();
    j["quantities"][2]["name"] = "F21";
    CHECK(code_of([&] { registry_from_json(j); }) == ErrorCode::InvalidInput);
    CHECK(code_of([] { registry_from_json(nlohmann::json::array()); }) == ErrorCode::Parse);
    CHECK(code_of([] { load_registry("/nonexistent.json"); }) == ErrorCode::Io);
    const auto path = fixtures::scratch("io_registry") / "broken.json";
    write_text_file(path, "{ not json");
    CHECK(code_of([&] { load_registry(path); }) == ErrorCode::Parse);
}

TEST_CASE("dataset CSV round trip is exact") {
    Rng rng(21);
    const auto data = generate_fleet(load_fleet_spec(fixtures::config_path("fleet_acceptance.toml")), 3);
    const auto reg = fixtures::bucket();
    const auto text = dataset_to_csv(data);
    const auto back = parse_dataset_csv(text, reg);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back.records[i].key == data.records[i].key);
        CHECK(back.records[i].values == data.records[i].values);
    }
    CHECK(dataset_to_csv(back) == text);
    for (int i = 0; i < 1000; ++i) {
        const double v = std::ldexp(rng.uniform(-1, 1), static_cast<int>(rng.below(200)) - 100);
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("dataset columns are matched by name") {
    const auto reg = fixtures::registry({{"f", {1, 1, -2}}, {"g", {1, 1, -2}}});
    const auto d = parse_dataset_csv("machine_id,run_id,t,g,extra,f\nm,r,0,2,9,1\nm,r,1,4,9,3\n", reg);
    REQUIRE(d.size() == 2);
    CHECK(d.quantity_names == std::vector<std::string>{"f", "g"});
    CHECK(d.records[1].values == std::vector<double>{3, 4});

    const auto no_target = parse_dataset_csv("machine_id,run_id,t,g\nm,r,0,2\n", reg, false);
    CHECK(std::isnan(no_target.records[0].values[0]));
    CHECK(code_of([&] { parse_dataset_csv("machine_id,run_id,t,g\nm,r,0,2\n", reg); }) == ErrorCode::Parse);
    CHECK(code_of([&] { parse_dataset_csv("", reg); }) == ErrorCode::Parse);
    CHECK(code_of([&] { parse_dataset_csv("machine_id,run_id,t,f,g\n", reg); }) == ErrorCode::Parse);
    CHECK(code_of([&] { parse_dataset_csv("machine_id,run_id,t,f,g\nm,r,0,1\n", reg); }) == ErrorCode::Parse);
    CHECK(code_of([&] { parse_dataset_csv("machine_id,run_id,t,f,g\nm,r,0,1,abc\n", reg); }) == ErrorCode::Parse);
    CHECK(code_of([&] { parse_dataset_csv("machine_id,run_id,t,f,f,g\nm,r,0,1,1,2\n", reg); }) == ErrorCode::Parse);
    CHECK(code_of([&] { read_dataset_csv("/nonexistent.csv", reg); }) == ErrorCode::Io);
}

TEST_CASE("pi-set file round trip") {
    const auto file = load_pisets(fixtures::config_path("bucket_pisets.json"));
    REQUIRE(file.sets.size() == 1);
    // Same groups up to sign of the non-target rows.
    const auto listed = fixtures::bucket_set();
    for (std::size_t g = 0; g < 6; ++g) {
        auto a = file.sets[0].groups[g].exponents;
        const auto& b = listed.groups[g].exponents;
        if (a != b) {
            for (auto& x : a) x = -x;
        }
        CHECK(a == b);
    }
    const auto text = pisets_to_json(file);
    const auto again = parse_pisets(text);
    CHECK(pisets_to_json(again) == text);
    CHECK(exponent_matrix(again.sets[0]) == exponent_matrix(file.sets[0]));
}

TEST_CASE("pi-set file validation") {
    const auto reg = fixtures::bucket();
    auto j = nlohmann::json::parse(read_text_file(fixtures::config_path("bucket_pisets.json")));

    auto wide = j;
    wide["sets"][0]["exponents"][1].push_back(0);
    CHECK(code_of([&] { parse_pisets(wide.dump()); }) == ErrorCode::SchemaMismatch);

    auto dimensional = j;
    dimensional["sets"][0]["exponents"][3] = {0, 0, 0, 0, 0, 1, 0, 0, 0};
    CHECK(code_of([&] { parse_pisets(dimensional.dump()); }) == ErrorCode::InvalidInput);

    auto leaked = j;
    leaked["sets"][0]["exponents"][1] = {1, 0, -1, 0, 0, 0, 0, 0, 0};
    CHECK(code_of([&] { parse_pisets(leaked.dump()); }) == ErrorCode::InvalidInput);

    auto bare = j;
    bare.erase("registry");
    CHECK(code_of([&] { parse_pisets(bare.dump()); }) == ErrorCode::InvalidInput);
    CHECK(parse_pisets(bare.dump(), &reg).sets.size() == 1);

    const auto other = fixtures::registry({{"a", {1, 0, 0}}, {"b", {1, 0, 0}}});
    CHECK(code_of([&] { parse_pisets(bare.dump(), &other); }) == ErrorCode::SchemaMismatch);

    auto empty = j;
    empty["sets"] = nlohmann::json::array();
    CHECK(code_of([&] { parse_pisets(empty.dump()); }) == ErrorCode::InvalidInput);
    CHECK(code_of([] { parse_pisets("[1,"); }) == ErrorCode::Parse);
}

TEST_CASE("ranking CSV") {
    CorrelationReport a;
    a.per_group_r = {1.0, 0.5};
    a.rms_score = std::sqrt(0.625);
    a.valid_fraction = 1.0;
    const auto csv = ranking_to_csv({a});
    CHECK(csv.rfind("set_index,rms_score,valid_fraction,r_group_2,r_group_3\n", 0) == 0);
    CHECK(csv.find("\n0,") != std::string::npos);
}

TEST_CASE("model artifact round trip") {
    const auto model = tiny_model(5);
    const ModelArtifact art{model, fixtures::bucket()};
    const auto text = model_to_json(art);
    const auto back = parse_model(text);
    CHECK(model_to_json(back) == text);
    CHECK(back.model.network.parameters() == model.network.parameters());
    CHECK(back.model.reference.key == model.reference.key);
    CHECK(back.model.config.describe() == model.config.describe());
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        DistortionVector d;
        for (int k = 0; k < 5; ++k) d.d.push_back(rng.uniform(0.5, 2));
        CHECK(predict_delta(back.model, d) == predict_delta(model, d));
    }
    const auto j = nlohmann::json::parse(text);
    CHECK(j.at("schema_version") == 1);
    for (const char* key : {"feature_schema", "normalization", "layers", "pi_set", "reference_row", "metrics", "seed"}) {
        CHECK(j.contains(key));
    }
    CHECK(j.at("metrics").contains("r2_train"));
    CHECK(j.at("metrics").contains("r2_val"));

    CHECK(model_to_json({tiny_model(5), fixtures::bucket()}) == text);
}

TEST_CASE("model artifact validation") {
    const auto text = model_to_json({tiny_model(6), fixtures::bucket()});
    const auto base = nlohmann::json::parse(text);

    auto version = base;
    version["schema_version"] = 2;
    CHECK(code_of([&] { parse_model(version.dump()); }) == ErrorCode::SchemaMismatch);

    auto weights = base;
    weights["layers"][0]["weights"].erase(0);
    CHECK(code_of([&] { parse_model(weights.dump()); }) == ErrorCode::SchemaMismatch);

    auto norm = base;
    norm["normalization"]["std"].erase(0);
    CHECK(code_of([&] { parse_model(norm.dump()); }) == ErrorCode::SchemaMismatch);

    auto zero_std = base;
    zero_std["normalization"]["std"][0] = 0.0;
    CHECK(code_of([&] { parse_model(zero_std.dump()); }) == ErrorCode::SchemaMismatch);

    auto ref = base;
    ref["reference_row"]["values"].erase(0);
    CHECK(code_of([&] { parse_model(ref.dump()); }) == ErrorCode::SchemaMismatch);

    CHECK(code_of([] { parse_model("{}"); }) == ErrorCode::SchemaMismatch);
    CHECK(code_of([] { parse_model("{\"schema_version\": 1"); }) == ErrorCode::Parse);
    CHECK(code_of([] { load_model("/nonexistent/model.json"); }) == ErrorCode::Io);
}

TEST_CASE("pair dump") {
    const auto set = fixtures::bucket_set();
    const auto data = generate_fleet(fixtures::small_fleet(), 1);
    const auto pairs = build_training_pairs(set, data, {"mini", 0, std::nullopt});
    const auto csv = pairs_to_csv(pairs, set.size());
    CHECK(csv.rfind("proto_machine,proto_run,proto_t,d_2,d_3,d_4,d_5,d_6,delta1\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == pairs.pairs.size() + 1);
}
