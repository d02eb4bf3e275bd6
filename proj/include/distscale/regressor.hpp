#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "distscale/pi_engine.hpp"
#include "distscale/random.hpp"
#include "distscale/scaling.hpp"

namespace distscale {

enum class Activation { Relu, Tanh, Identity };

const char* to_string(Activation a) noexcept;
Activation parse_activation(const std::string& name);

struct MLPConfig {
    int hidden_layers = 2;
    int units_per_layer = 32;
    double dropout_rate = 0.0;
    double learning_rate = 0.01;
    int epochs = 200;
    int batch_size = 32;
    std::uint64_t seed = 1;
    Activation activation = Activation::Tanh;
    int patience = 0;  ///< 0 disables early stopping

    /// Throws InvalidInput on out-of-range hyperparameters.
    void validate() const;
    /// Stable text form, used for seed derivation and reports.
    std::string describe() const;
};

/// Fully connected layer; `weights` is rows x cols row-major with
/// rows = outputs and cols = inputs.
struct DenseLayer {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> weights;
    std::vector<double> bias;
    Activation activation = Activation::Identity;
};

class Network {
public:
    Network() = default;
    explicit Network(std::vector<DenseLayer> layers);
    /// Glorot-uniform weights, zero biases, scalar linear output.
    Network(std::size_t inputs, const MLPConfig& config, Rng& rng);

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::size_t input_size() const noexcept { return layers_.empty() ? 0 : layers_.front().cols; }

    /// Inference pass; dropout is never applied here.
    double predict(std::span<const double> x) const;

    std::size_t parameter_count() const noexcept;
    std::vector<double> parameters() const;  ///< per layer: weights then bias
    void set_parameters(std::span<const double> flat);

    /// Mean squared error over the rows of X (row-major, input_size wide).
    double loss(std::span<const double> X, std::span<const double> y) const;
    /// Analytic gradient of loss() in parameters() order.
    std::vector<double> gradient(std::span<const double> X, std::span<const double> y) const;

    /// One SGD step on the given rows with inverted dropout; returns the
    /// batch loss measured on the dropped-out forward pass.
    double sgd_step(std::span<const double> X, std::span<const double> y, std::span<const std::size_t> rows,
                    double learning_rate, double dropout, Rng& rng);

private:
    double backprop(std::span<const double> X, std::span<const double> y, std::span<const std::size_t> rows,
                    double dropout, Rng* rng, std::vector<DenseLayer>& grad) const;

    std::vector<DenseLayer> layers_;
};

/// Per-feature standardization with training-split statistics.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> std;

    static Normalization fit(std::span<const double> X, std::size_t width);
    std::vector<double> standardize(std::span<const double> x) const;
    std::vector<double> destandardize(std::span<const double> z) const;
};

enum class SplitMode { ByRun, ByFraction };

struct SplitSpec {
    SplitMode mode = SplitMode::ByRun;
    double validation_fraction = 0.2;
};

struct FeatureSchema {
    std::size_t distortion_count = 0;
    bool include_raw_pi = false;

    std::size_t feature_count() const noexcept { return include_raw_pi ? 2 * distortion_count : distortion_count; }
};

std::vector<double> pair_features(const ScalingPair& pair, const FeatureSchema& schema);

struct TrainedModel {
    Network network;
    Normalization input;
    double target_mean = 0.0;
    double target_std = 1.0;
    FeatureSchema schema;
    PiSet pi_set;
    ReferenceRow reference;
    MLPConfig config;
    double r2_train = 0.0;
    double r2_val = 0.0;
    std::size_t train_count = 0;
    std::size_t validation_count = 0;
    int epochs_run = 0;
};

/// Mini-batch SGD on MSE of delta_1. Deterministic for a fixed seed.
TrainedModel train(const PairSet& pairs, const PiSet& set, const MLPConfig& config, const SplitSpec& split = {},
                   bool include_raw_pi = false);

double predict_delta(const TrainedModel& model, const DistortionVector& d, std::span<const double> proto_pi = {});

/// 1 - SS_res / SS_tot. Throws UndefinedR2 for constant truth.
double r_squared(std::span<const double> truth, std::span<const double> pred);

struct ErrorCurve {
    std::vector<double> loads;
    std::vector<double> errors;  ///< percent
    double mean = 0.0;
    std::size_t excluded = 0;
};

/// Pointwise 100 |pred - truth| / |truth|, skipping |truth| <= floor.
ErrorCurve percentage_error_curve(std::span<const double> truth, std::span<const double> pred,
                                  std::span<const double> loads, double floor = 1e-12);

struct HyperGrid {
    std::vector<int> hidden_layers;
    std::vector<int> units_per_layer;
    std::vector<double> dropout_rate;
    std::vector<double> learning_rate;

    std::size_t size() const noexcept {
        return hidden_layers.size() * units_per_layer.size() * dropout_rate.size() * learning_rate.size();
    }
};

struct GridRow {
    MLPConfig config;
    std::vector<double> repeat_r2;  ///< -inf marks a diverged repeat
    double mean_r2 = 0.0;
};

struct GridSearchResult {
    std::vector<GridRow> rows;  ///< grid order: layers, units, dropout, learning rate

    /// Mean R2 per (units, dropout), averaged over the other axes.
    std::vector<std::vector<double>> pivot(std::vector<int>& units, std::vector<double>& dropouts) const;
    /// Mean R2 per units value, averaged over everything else.
    std::vector<std::pair<int, double>> marginal_units() const;
};

std::uint64_t grid_point_seed(std::uint64_t seed, const MLPConfig& config, int repeat);

GridSearchResult grid_search(const PairSet& pairs, const PiSet& set, const MLPConfig& base, const HyperGrid& grid,
                             int repeats, std::uint64_t seed, const SplitSpec& split = {},
                             bool include_raw_pi = false, unsigned threads = 1);

}  // namespace distscale
