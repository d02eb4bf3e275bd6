#include "distscale/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <mutex>
#include <sstream>
#include <thread>

#include "distscale/error.hpp"

namespace distscale {

namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::Tanh: return std::tanh(z);
        case Activation::Identity: return z;
    }
    return z;
}

// Derivative expressed through the pre-activation z and activation value.
double activate_grad(Activation a, double z, double value) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: return 1.0 - value * value;
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

std::vector<DenseLayer> zero_like(const std::vector<DenseLayer>& layers) {
    std::vector<DenseLayer> out = layers;
    for (auto& l : out) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    return out;
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

const char* to_string(Activation a) noexcept {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Identity: return "identity";
    }
    return "identity";
}

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    if (name == "identity" || name == "linear") return Activation::Identity;
    throw Error(ErrorCode::InvalidInput, "unknown activation '" + name + "'");
}

void MLPConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidInput, "MLP config: " + what); };
    if (hidden_layers < 0) fail("hidden_layers must be >= 0");
    if (units_per_layer < 1) fail("units_per_layer must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must lie in [0, 1)");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be > 0");
    if (epochs < 0) fail("epochs must be >= 0");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (patience < 0) fail("patience must be >= 0");
}

std::string MLPConfig::describe() const {
    std::ostringstream s;
    s << "layers=" << hidden_layers << ";units=" << units_per_layer << ";dropout=" << dropout_rate
      << ";lr=" << learning_rate << ";epochs=" << epochs << ";batch=" << batch_size
      << ";activation=" << to_string(activation) << ";patience=" << patience;
    return s.str();
}

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        if (l.weights.size() != l.rows * l.cols || l.bias.size() != l.rows) {
            throw Error(ErrorCode::SchemaMismatch, "layer " + std::to_string(i) + " has inconsistent shapes");
        }
        if (i > 0 && l.cols != layers_[i - 1].rows) {
            throw Error(ErrorCode::SchemaMismatch, "layer " + std::to_string(i) + " does not chain to its predecessor");
        }
    }
    if (layers_.empty() || layers_.back().rows != 1) {
        throw Error(ErrorCode::SchemaMismatch, "network must end in a scalar output");
    }
}

Network::Network(std::size_t inputs, const MLPConfig& config, Rng& rng) {
    config.validate();
    std::size_t fan_in = inputs;
    for (int h = 0; h <= config.hidden_layers; ++h) {
        const bool output = h == config.hidden_layers;
        DenseLayer l;
        l.rows = output ? 1 : static_cast<std::size_t>(config.units_per_layer);
        l.cols = fan_in;
        l.activation = output ? Activation::Identity : config.activation;
        const double limit = std::sqrt(6.0 / static_cast<double>(l.rows + l.cols));
        l.weights.resize(l.rows * l.cols);
        for (auto& w : l.weights) w = rng.uniform(-limit, limit);
        l.bias.assign(l.rows, 0.0);
        fan_in = l.rows;
        layers_.push_back(std::move(l));
    }
}

double Network::predict(std::span<const double> x) const {
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> next;
    for (const auto& l : layers_) {
        next.assign(l.rows, 0.0);
        for (std::size_t r = 0; r < l.rows; ++r) {
            double z = l.bias[r];
            const double* w = &l.weights[r * l.cols];
            for (std::size_t c = 0; c < l.cols; ++c) z += w[c] * a[c];
            next[r] = activate(l.activation, z);
        }
        a.swap(next);
    }
    return a[0];
}

std::size_t Network::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
}

std::vector<double> Network::parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& l : layers_) {
        flat.insert(flat.end(), l.weights.begin(), l.weights.end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

void Network::set_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw Error(ErrorCode::InvalidInput, "parameter vector size mismatch");
    std::size_t k = 0;
    for (auto& l : layers_) {
        for (auto& w : l.weights) w = flat[k++];
        for (auto& b : l.bias) b = flat[k++];
    }
}

double Network::backprop(std::span<const double> X, std::span<const double> y, std::span<const std::size_t> rows,
                         double dropout, Rng* rng, std::vector<DenseLayer>& grad) const {
    const std::size_t width = input_size();
    const std::size_t depth = layers_.size();
    const double keep_scale = dropout > 0.0 ? 1.0 / (1.0 - dropout) : 1.0;
    const double inv_batch = 1.0 / static_cast<double>(rows.size());

    std::vector<std::vector<double>> z(depth), act(depth + 1), mask(depth);
    std::vector<double> delta, prev_delta;
    double loss = 0.0;
    for (std::size_t row : rows) {
        act[0].assign(X.begin() + static_cast<std::ptrdiff_t>(row * width),
                      X.begin() + static_cast<std::ptrdiff_t>((row + 1) * width));
        for (std::size_t li = 0; li < depth; ++li) {
            const auto& l = layers_[li];
            z[li].assign(l.rows, 0.0);
            act[li + 1].assign(l.rows, 0.0);
            mask[li].assign(l.rows, 1.0);
            const bool hidden = li + 1 < depth;
            for (std::size_t r = 0; r < l.rows; ++r) {
                double s = l.bias[r];
                const double* w = &l.weights[r * l.cols];
                for (std::size_t c = 0; c < l.cols; ++c) s += w[c] * act[li][c];
                z[li][r] = s;
                double a = activate(l.activation, s);
                if (hidden && dropout > 0.0 && rng != nullptr) {
                    mask[li][r] = rng->uniform() < dropout ? 0.0 : keep_scale;
                    a *= mask[li][r];
                }
                act[li + 1][r] = a;
            }
        }
        const double err = act[depth][0] - y[row];
        loss += err * err;

        delta.assign(1, 2.0 * err * inv_batch);
        for (std::size_t li = depth; li-- > 0;) {
            const auto& l = layers_[li];
            auto& g = grad[li];
            // delta currently holds dL/d(output of layer li) after masking.
            for (std::size_t r = 0; r < l.rows; ++r) {
                const double pre = mask[li][r] == 0.0 ? 0.0 : act[li + 1][r] / mask[li][r];
                delta[r] *= mask[li][r] * activate_grad(l.activation, z[li][r], pre);
            }
            for (std::size_t r = 0; r < l.rows; ++r) {
                g.bias[r] += delta[r];
                double* gw = &g.weights[r * l.cols];
                for (std::size_t c = 0; c < l.cols; ++c) gw[c] += delta[r] * act[li][c];
            }
            if (li == 0) break;
            prev_delta.assign(l.cols, 0.0);
            for (std::size_t r = 0; r < l.rows; ++r) {
                const double* w = &l.weights[r * l.cols];
                for (std::size_t c = 0; c < l.cols; ++c) prev_delta[c] += w[c] * delta[r];
            }
            delta.swap(prev_delta);
        }
    }
    return loss * inv_batch;
}

double Network::loss(std::span<const double> X, std::span<const double> y) const {
    const std::size_t width = input_size();
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = predict(X.subspan(i * width, width)) - y[i];
        s += e * e;
    }
    return s / static_cast<double>(y.size());
}

std::vector<double> Network::gradient(std::span<const double> X, std::span<const double> y) const {
    std::vector<std::size_t> rows(y.size());
    std::iota(rows.begin(), rows.end(), 0);
    auto grad = zero_like(layers_);
    backprop(X, y, rows, 0.0, nullptr, grad);
    Network g;
    g.layers_ = std::move(grad);
    return g.parameters();
}

double Network::sgd_step(std::span<const double> X, std::span<const double> y, std::span<const std::size_t> rows,
                         double learning_rate, double dropout, Rng& rng) {
    auto grad = zero_like(layers_);
    const double batch_loss = backprop(X, y, rows, dropout, &rng, grad);
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        auto& l = layers_[li];
        for (std::size_t k = 0; k < l.weights.size(); ++k) l.weights[k] -= learning_rate * grad[li].weights[k];
        for (std::size_t k = 0; k < l.bias.size(); ++k) l.bias[k] -= learning_rate * grad[li].bias[k];
    }
    return batch_loss;
}

Normalization Normalization::fit(std::span<const double> X, std::size_t width) {
    Normalization n;
    n.mean.assign(width, 0.0);
    n.std.assign(width, 0.0);
    const std::size_t rows = width == 0 ? 0 : X.size() / width;
    if (rows == 0) {
        n.std.assign(width, 1.0);
        return n;
    }
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < width; ++j) n.mean[j] += X[i * width + j];
    }
    for (auto& m : n.mean) m /= static_cast<double>(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            const double d = X[i * width + j] - n.mean[j];
            n.std[j] += d * d;
        }
    }
    for (auto& s : n.std) {
        s = std::sqrt(s / static_cast<double>(rows));
        if (!(s > 0.0) || !std::isfinite(s)) s = 1.0;
    }
    return n;
}

std::vector<double> Normalization::standardize(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / std[j];
    return out;
}

std::vector<double> Normalization::destandardize(std::span<const double> z) const {
    std::vector<double> out(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j] * std[j] + mean[j];
    return out;
}

std::vector<double> pair_features(const ScalingPair& pair, const FeatureSchema& schema) {
    std::vector<double> f = pair.distortions.d;
    if (schema.include_raw_pi) f.insert(f.end(), pair.proto_pi.begin(), pair.proto_pi.end());
    return f;
}

namespace {

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

Split make_split(const PairSet& pairs, const SplitSpec& spec, std::uint64_t seed) {
    if (!(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidInput, "validation_fraction must lie in (0, 1)");
    }
    Rng rng(mix_seed(seed, 0x5b117ULL));
    Split s;
    const std::size_t n = pairs.pairs.size();
    if (spec.mode == SplitMode::ByFraction) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        auto nval = static_cast<std::size_t>(std::llround(spec.validation_fraction * static_cast<double>(n)));
        nval = std::max<std::size_t>(1, nval);
        if (nval >= n) throw Error(ErrorCode::DegenerateSplit, "split leaves no training pairs");
        s.validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(nval));
        s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(nval), idx.end());
    } else {
        std::vector<std::string> runs;
        std::set<std::string> seen;
        for (const auto& p : pairs.pairs) {
            auto key = p.proto_key.machine_id + "\x1f" + p.proto_key.run_id;
            if (seen.insert(key).second) runs.push_back(std::move(key));
        }
        std::sort(runs.begin(), runs.end());
        if (runs.size() < 2) {
            throw Error(ErrorCode::DegenerateSplit, "by_run split needs at least 2 runs, found " +
                                                       std::to_string(runs.size()));
        }
        rng.shuffle(runs);
        auto nval = static_cast<std::size_t>(std::llround(spec.validation_fraction * static_cast<double>(runs.size())));
        nval = std::clamp<std::size_t>(nval, 1, runs.size() - 1);
        const std::set<std::string> held(runs.begin(), runs.begin() + static_cast<std::ptrdiff_t>(nval));
        for (std::size_t i = 0; i < n; ++i) {
            const auto& k = pairs.pairs[i].proto_key;
            (held.count(k.machine_id + "\x1f" + k.run_id) ? s.validation : s.train).push_back(i);
        }
    }
    if (s.validation.empty()) throw Error(ErrorCode::DegenerateSplit, "validation split is empty");
    if (s.train.empty()) throw Error(ErrorCode::DegenerateSplit, "training split is empty");
    return s;
}

double r2_or_nan(std::span<const double> truth, std::span<const double> pred) {
    try {
        return r_squared(truth, pred);
    } catch (const Error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace

TrainedModel train(const PairSet& pairs, const PiSet& set, const MLPConfig& config, const SplitSpec& split,
                   bool include_raw_pi) {
    config.validate();
    if (pairs.pairs.size() < 20) {
        throw Error(ErrorCode::InvalidInput,
                    "training needs at least 20 pairs, got " + std::to_string(pairs.pairs.size()));
    }
    TrainedModel model;
    model.config = config;
    model.pi_set = set;
    model.reference = pairs.reference;
    model.schema.distortion_count = pairs.pairs.front().distortions.d.size();
    model.schema.include_raw_pi = include_raw_pi;
    const std::size_t width = model.schema.feature_count();

    const Split s = make_split(pairs, split, config.seed);
    model.train_count = s.train.size();
    model.validation_count = s.validation.size();

    auto gather = [&](const std::vector<std::size_t>& idx, std::vector<double>& X, std::vector<double>& y) {
        for (auto i : idx) {
            const auto f = pair_features(pairs.pairs[i], model.schema);
            if (f.size() != width) throw Error(ErrorCode::InvalidFeature, "inconsistent feature width across pairs");
            X.insert(X.end(), f.begin(), f.end());
            y.push_back(pairs.pairs[i].delta1);
        }
    };
    std::vector<double> Xtr, ytr, Xva, yva;
    gather(s.train, Xtr, ytr);
    gather(s.validation, Xva, yva);

    model.input = Normalization::fit(Xtr, width);
    const Normalization target = Normalization::fit(ytr, 1);
    model.target_mean = target.mean[0];
    model.target_std = target.std[0];

    auto standardize_rows = [&](std::vector<double>& X, std::vector<double>& y) {
        for (std::size_t i = 0; i < y.size(); ++i) {
            auto z = model.input.standardize(std::span<const double>(X).subspan(i * width, width));
            std::copy(z.begin(), z.end(), X.begin() + static_cast<std::ptrdiff_t>(i * width));
            y[i] = (y[i] - model.target_mean) / model.target_std;
        }
    };
    std::vector<double> Ztr = Xtr, ztr = ytr, Zva = Xva, zva = yva;
    standardize_rows(Ztr, ztr);
    standardize_rows(Zva, zva);

    Rng rng(config.seed);
    model.network = Network(width, config, rng);

    std::vector<std::size_t> order(ztr.size());
    std::iota(order.begin(), order.end(), 0);
    const auto batch = static_cast<std::size_t>(config.batch_size);
    double best_val = std::numeric_limits<double>::infinity();
    Network best = model.network;
    int since_best = 0;
    int epoch = 0;
    for (; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            const double l = model.network.sgd_step(
                Ztr, ztr, std::span<const std::size_t>(order).subspan(start, end - start), config.learning_rate,
                config.dropout_rate, rng);
            if (!std::isfinite(l)) {
                throw Error(ErrorCode::TrainingDiverged, "training diverged at epoch " + std::to_string(epoch));
            }
        }
        if (config.patience > 0) {
            const double v = model.network.loss(Zva, zva);
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::TrainingDiverged, "training diverged at epoch " + std::to_string(epoch));
            }
            if (v < best_val) {
                best_val = v;
                best = model.network;
                since_best = 0;
            } else if (++since_best >= config.patience) {
                ++epoch;
                break;
            }
        }
    }
    if (config.patience > 0 && std::isfinite(best_val)) model.network = best;
    model.epochs_run = epoch;

    auto predict_rows = [&](const std::vector<double>& Z, std::size_t n) {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = model.network.predict(std::span<const double>(Z).subspan(i * width, width)) * model.target_std +
                     model.target_mean;
            if (!std::isfinite(out[i])) throw Error(ErrorCode::TrainingDiverged, "non-finite prediction after training");
        }
        return out;
    };
    model.r2_train = r2_or_nan(ytr, predict_rows(Ztr, ytr.size()));
    model.r2_val = r2_or_nan(yva, predict_rows(Zva, yva.size()));
    return model;
}

double predict_delta(const TrainedModel& model, const DistortionVector& d, std::span<const double> proto_pi) {
    if (d.d.size() != model.schema.distortion_count) {
        throw Error(ErrorCode::SchemaMismatch, "model expects " + std::to_string(model.schema.distortion_count) +
                                                   " distortions, got " + std::to_string(d.d.size()));
    }
    std::vector<double> f = d.d;
    if (model.schema.include_raw_pi) {
        if (proto_pi.size() != model.schema.distortion_count) {
            throw Error(ErrorCode::SchemaMismatch, "model expects raw prototype pi values");
        }
        f.insert(f.end(), proto_pi.begin(), proto_pi.end());
    }
    for (double v : f) {
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidFeature, "non-finite feature value");
    }
    const double out = model.network.predict(model.input.standardize(f)) * model.target_std + model.target_mean;
    if (!std::isfinite(out)) throw Error(ErrorCode::InvalidFeature, "non-finite prediction");
    return out;
}

double r_squared(std::span<const double> truth, std::span<const double> pred) {
    if (truth.size() != pred.size()) throw Error(ErrorCode::InvalidInput, "r_squared: series lengths differ");
    if (truth.size() < 2) throw Error(ErrorCode::InvalidInput, "r_squared: need at least two samples");
    const double m = mean_of(truth);
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double r = truth[i] - pred[i];
        const double t = truth[i] - m;
        ss_res += r * r;
        ss_tot += t * t;
    }
    if (ss_tot == 0.0) throw Error(ErrorCode::UndefinedR2, "r_squared: truth series is constant");
    return 1.0 - ss_res / ss_tot;
}

ErrorCurve percentage_error_curve(std::span<const double> truth, std::span<const double> pred,
                                  std::span<const double> loads, double floor) {
    if (truth.size() != pred.size() || truth.size() != loads.size()) {
        throw Error(ErrorCode::InvalidInput, "percentage_error_curve: series lengths differ");
    }
    ErrorCurve c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!(std::abs(truth[i]) > floor)) {
            ++c.excluded;
            continue;
        }
        c.loads.push_back(loads[i]);
        c.errors.push_back(100.0 * std::abs(pred[i] - truth[i]) / std::abs(truth[i]));
    }
    c.mean = c.errors.empty() ? 0.0 : mean_of(c.errors);
    return c;
}

std::vector<std::vector<double>> GridSearchResult::pivot(std::vector<int>& units, std::vector<double>& dropouts) const {
    std::set<int> us;
    std::set<double> ds;
    for (const auto& r : rows) {
        us.insert(r.config.units_per_layer);
        ds.insert(r.config.dropout_rate);
    }
    units.assign(us.begin(), us.end());
    dropouts.assign(ds.begin(), ds.end());
    std::vector<std::vector<double>> sum(units.size(), std::vector<double>(dropouts.size(), 0.0));
    std::vector<std::vector<int>> count(units.size(), std::vector<int>(dropouts.size(), 0));
    for (const auto& r : rows) {
        const auto ui = static_cast<std::size_t>(std::find(units.begin(), units.end(), r.config.units_per_layer) - units.begin());
        const auto di = static_cast<std::size_t>(std::find(dropouts.begin(), dropouts.end(), r.config.dropout_rate) - dropouts.begin());
        sum[ui][di] += r.mean_r2;
        ++count[ui][di];
    }
    for (std::size_t i = 0; i < units.size(); ++i) {
        for (std::size_t j = 0; j < dropouts.size(); ++j) sum[i][j] /= count[i][j];
    }
    return sum;
}

std::vector<std::pair<int, double>> GridSearchResult::marginal_units() const {
    std::map<int, std::pair<double, int>> acc;
    for (const auto& r : rows) {
        auto& a = acc[r.config.units_per_layer];
        a.first += r.mean_r2;
        ++a.second;
    }
    std::vector<std::pair<int, double>> out;
    for (const auto& [u, a] : acc) out.emplace_back(u, a.first / a.second);
    return out;
}

std::uint64_t grid_point_seed(std::uint64_t seed, const MLPConfig& config, int repeat) {
    return mix_seed(mix_seed(seed, fnv1a(config.describe())), static_cast<std::uint64_t>(repeat));
}

GridSearchResult grid_search(const PairSet& pairs, const PiSet& set, const MLPConfig& base, const HyperGrid& grid,
                             int repeats, std::uint64_t seed, const SplitSpec& split, bool include_raw_pi,
                             unsigned threads) {
    if (grid.size() == 0) throw Error(ErrorCode::InvalidInput, "hyperparameter grid is empty");
    if (repeats < 1) throw Error(ErrorCode::InvalidInput, "repeats must be >= 1");
    GridSearchResult result;
    for (int layers : grid.hidden_layers) {
        for (int units : grid.units_per_layer) {
            for (double dropout : grid.dropout_rate) {
                for (double lr : grid.learning_rate) {
                    GridRow row;
                    row.config = base;
                    row.config.hidden_layers = layers;
                    row.config.units_per_layer = units;
                    row.config.dropout_rate = dropout;
                    row.config.learning_rate = lr;
                    row.config.validate();
                    row.repeat_r2.assign(static_cast<std::size_t>(repeats), 0.0);
                    result.rows.push_back(std::move(row));
                }
            }
        }
    }

    const std::size_t jobs = result.rows.size() * static_cast<std::size_t>(repeats);
    auto run_job = [&](std::size_t job) {
        auto& row = result.rows[job / static_cast<std::size_t>(repeats)];
        const int rep = static_cast<int>(job % static_cast<std::size_t>(repeats));
        MLPConfig cfg = row.config;
        cfg.seed = grid_point_seed(seed, row.config, rep);
        double r2 = -std::numeric_limits<double>::infinity();
        try {
            r2 = train(pairs, set, cfg, split, include_raw_pi).r2_val;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::TrainingDiverged) throw;
        }
        if (std::isnan(r2)) r2 = -std::numeric_limits<double>::infinity();
        row.repeat_r2[static_cast<std::size_t>(rep)] = r2;
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs)));
    if (threads == 1) {
        for (std::size_t j = 0; j < jobs; ++j) run_job(j);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t j = w; j < jobs; j += threads) run_job(j);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }
    for (auto& row : result.rows) row.mean_r2 = mean_of(row.repeat_r2);
    return result;
}

}  // namespace distscale
