#include "distscale/testbench.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <cmath>
#include <thread>

#include "distscale/error.hpp"
#include "distscale/random.hpp"
#include "distscale/toml_lite.hpp"

namespace distscale {

namespace {

constexpr double kUnitTolerance = 1e-12;

void require_unit(Vec2 v, const char* what) {
    if (std::abs(v.norm() - 1.0) > kUnitTolerance) {
        throw Error(ErrorCode::InvalidInput, std::string(what) + " must be a unit vector");
    }
}

// Gaussian elimination with partial pivoting on a 3x3 system.
std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b) {
    double scale = 0.0;
    for (const auto& row : a) {
        for (double v : row) scale = std::max(scale, std::abs(v));
    }
    for (int c = 0; c < 3; ++c) {
        int p = c;
        for (int r = c + 1; r < 3; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        }
        if (std::abs(a[p][c]) <= 1e-12 * scale) {
            throw Error(ErrorCode::SingularMechanism, "bucket statics system is singular (Link B line passes through O)");
        }
        std::swap(a[p], a[c]);
        std::swap(b[p], b[c]);
        for (int r = 0; r < 3; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < 3; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    return {b[0] / a[0][0], b[1] / a[1][1], b[2] / a[2][2]};
}

double total_mass(const LinkageGeometry& g, const LoadCase& l) { return g.bucket_mass + l.carried_mass; }

Vec2 weight_of(double mass, double gravity) { return {0.0, -mass * gravity}; }

double length_scale(const LinkageGeometry& g) {
    double s = 0.0;
    for (Vec2 p : {g.link_attachment, g.com, g.tip, g.arm_base, g.arm_com, g.lift_attachment, g.lever_pivot,
                   g.lever_link_point, g.lever_cylinder_point}) {
        s = std::max(s, p.norm());
    }
    return s > 0.0 ? s : 1.0;
}

Vec2 read_vec(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw Error(ErrorCode::Parse, std::string("fleet spec: missing '") + key + "'");
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
        throw Error(ErrorCode::Parse, std::string("fleet spec: '") + key + "' must be a 2-element numeric array");
    }
    return {a[0].get<double>(), a[1].get<double>()};
}

Vec2 read_unit(const nlohmann::json& j, const char* key) {
    const Vec2 v = read_vec(j, key);
    const double n = v.norm();
    if (!(n > 0.0)) throw Error(ErrorCode::InvalidInput, std::string("fleet spec: '") + key + "' has zero length");
    return (1.0 / n) * v;
}

double read_num(const nlohmann::json& j, const char* key, std::optional<double> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw Error(ErrorCode::Parse, std::string("fleet spec: missing '") + key + "'");
    }
    if (!j.at(key).is_number()) throw Error(ErrorCode::Parse, std::string("fleet spec: '") + key + "' must be a number");
    return j.at(key).get<double>();
}

std::string read_str(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) {
        throw Error(ErrorCode::Parse, std::string("fleet spec: '") + key + "' must be a string");
    }
    return j.at(key).get<std::string>();
}

enum Column { kF21, kF31, kTilt, kLift, kXb, kYb, kMb, kA1, kAlpha1, kColumns };

}  // namespace

void LinkageGeometry::validate() const {
    if (link_attachment.norm() == 0.0) throw Error(ErrorCode::InvalidInput, "Link B attachment coincides with O");
    require_unit(link_direction, "link_direction");
    require_unit(accel_direction, "accel_direction");
    require_unit(lift_direction, "lift_direction");
    require_unit(tilt_direction, "tilt_direction");
    if (bucket_mass < 0.0 || arm_mass < 0.0) throw Error(ErrorCode::InvalidInput, "masses must be >= 0");
}

BucketSolution solve_quasi_static(const LinkageGeometry& geom, const LoadCase& load) {
    geom.validate();
    if (load.carried_mass < 0.0 || load.inertia_o < 0.0) {
        throw Error(ErrorCode::InvalidInput, "carried mass and inertia must be >= 0");
    }
    const double m = total_mass(geom, load);
    const Vec2 w = weight_of(m, geom.gravity);
    const Vec2 u = geom.link_direction;
    const Vec2 inertial = (m * load.a1) * geom.accel_direction;
    const double moment_rhs = load.inertia_o * load.alpha1 - cross(geom.com, w) - cross(geom.tip, load.reaction);
    const auto x = solve3({{{u.x, 1.0, 0.0}, {u.y, 0.0, 1.0}, {cross(geom.link_attachment, u), 0.0, 0.0}}},
                          {inertial.x - w.x - load.reaction.x, inertial.y - w.y - load.reaction.y, moment_rhs});
    BucketSolution s;
    s.link_force = x[0];
    s.f21 = x[0] * u;
    s.f31 = {x[1], x[2]};
    return s;
}

BucketSolution solve_bucket_statics(const LinkageGeometry& geom, const LoadCase& load) {
    LoadCase still = load;
    still.a1 = 0.0;
    still.alpha1 = 0.0;
    return solve_quasi_static(geom, still);
}

CylinderSolution solve_cylinder_forces(const LinkageGeometry& geom, const LoadCase& load, const BucketSolution& bucket) {
    (void)load;
    const double scale = length_scale(geom);
    CylinderSolution c;

    const Vec2 crank_link = geom.lever_link_point - geom.lever_pivot;
    const Vec2 crank_cyl = geom.lever_cylinder_point - geom.lever_pivot;
    const double tilt_arm = cross(crank_cyl, geom.tilt_direction);
    if (std::abs(tilt_arm) <= 1e-12 * scale) {
        throw Error(ErrorCode::SingularMechanism, "tilt cylinder line of action passes through the crank pivot");
    }
    c.tilt = cross(crank_link, bucket.f21) / tilt_arm;
    c.crank_reaction = bucket.f21 - c.tilt * geom.tilt_direction;

    const Vec2 lift_lever = geom.lift_attachment - geom.arm_base;
    const double lift_arm = cross(lift_lever, geom.lift_direction);
    if (std::abs(lift_arm) <= 1e-12 * scale) {
        throw Error(ErrorCode::SingularMechanism, "lift cylinder line of action passes through the arm base pivot");
    }
    const Vec2 w_arm = weight_of(geom.arm_mass, geom.gravity);
    const double known = cross(Vec2{} - geom.arm_base, -bucket.f31) +
                         cross(geom.lever_pivot - geom.arm_base, -c.crank_reaction) +
                         cross(geom.arm_com - geom.arm_base, w_arm);
    c.lift = -known / lift_arm;
    c.f43 = bucket.f31 + c.crank_reaction - c.lift * geom.lift_direction - w_arm;
    return c;
}

double BenchResiduals::max_relative() const {
    return std::max({bucket_force / scale, bucket_moment / scale, mechanism_force / scale, crank_moment / scale,
                     arm_moment / scale});
}

BenchResiduals bench_residuals(const LinkageGeometry& geom, const LoadCase& load, const BucketSolution& b,
                               const CylinderSolution& c) {
    const double m = total_mass(geom, load);
    const Vec2 w = weight_of(m, geom.gravity);
    const Vec2 w_arm = weight_of(geom.arm_mass, geom.gravity);
    const Vec2 inertial = (m * load.a1) * geom.accel_direction;
    const double len = length_scale(geom);

    BenchResiduals r;
    r.bucket_force = (b.f21 + b.f31 + w + load.reaction - inertial).norm();
    r.bucket_moment = std::abs(cross(geom.link_attachment, b.f21) + cross(geom.com, w) +
                               cross(geom.tip, load.reaction) - load.inertia_o * load.alpha1) /
                      len;
    r.mechanism_force = (c.f43 + load.reaction + c.tilt * geom.tilt_direction + c.lift * geom.lift_direction + w +
                         w_arm - inertial)
                            .norm();
    r.crank_moment = std::abs(cross(geom.lever_link_point - geom.lever_pivot, -b.f21) +
                              cross(geom.lever_cylinder_point - geom.lever_pivot, c.tilt * geom.tilt_direction)) /
                     len;
    r.arm_moment = std::abs(cross(Vec2{} - geom.arm_base, -b.f31) +
                            cross(geom.lever_pivot - geom.arm_base, -c.crank_reaction) +
                            cross(geom.lift_attachment - geom.arm_base, c.lift * geom.lift_direction) +
                            cross(geom.arm_com - geom.arm_base, w_arm)) /
                   len;
    r.scale = w.norm() + w_arm.norm() + load.reaction.norm() + inertial.norm() +
              std::abs(load.inertia_o * load.alpha1) / len + 1.0;
    return r;
}

const std::vector<std::string>& bench_quantity_names() {
    static const std::vector<std::string> names{"F21", "F31", "P_f_tilt", "P_f_lift", "x_b",
                                                "y_b", "m_b", "a1",       "alpha1"};
    return names;
}

std::vector<double> LoadSweep::values() const {
    if (!(step > 0.0) || max < min || min < 0.0) throw Error(ErrorCode::InvalidInput, "invalid load sweep");
    const auto n = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = min + static_cast<double>(i) * step;
    return out;
}

void FleetSpec::validate() const {
    base.validate();
    if (machines.empty()) throw Error(ErrorCode::InvalidInput, "fleet spec declares no machines");
    if (runs.empty()) throw Error(ErrorCode::InvalidInput, "fleet spec declares no runs");
    for (const auto& m : machines) {
        if (!(m.scale > 0.0)) throw Error(ErrorCode::InvalidInput, "machine '" + m.id + "' needs scale > 0");
    }
    const auto& names = bench_quantity_names();
    for (const auto& d : distortions) {
        if (std::find(names.begin(), names.end(), d.quantity) == names.end()) {
            throw Error(ErrorCode::InvalidInput, "distortion rule targets unknown quantity '" + d.quantity + "'");
        }
        if (d.noise < 0.0 || !std::isfinite(d.exponent_offset)) {
            throw Error(ErrorCode::InvalidInput, "invalid distortion rule for '" + d.quantity + "'");
        }
    }
    sweep.values();
}

LinkageGeometry scale_geometry(const LinkageGeometry& g, double lambda) {
    LinkageGeometry s = g;
    const double mass = lambda * lambda * lambda;
    for (Vec2* p : {&s.link_attachment, &s.com, &s.tip, &s.arm_base, &s.arm_com, &s.lift_attachment, &s.lever_pivot,
                    &s.lever_link_point, &s.lever_cylinder_point}) {
        *p = lambda * *p;
    }
    s.bucket_mass *= mass;
    s.arm_mass *= mass;
    return s;
}

BenchState similar_state(const FleetSpec& spec, double lambda, const RunSpec& run, double base_load) {
    BenchState st;
    st.geometry = scale_geometry(spec.base, lambda);
    const double mass = lambda * lambda * lambda;
    const double bucket = st.geometry.bucket_mass;
    const double carried = base_load * mass;
    const Vec2 bucket_com = st.geometry.com;
    const Vec2 load_com = lambda * run.load_com;
    const double total = bucket + carried;
    if (total > 0.0) st.geometry.com = (1.0 / total) * (bucket * bucket_com + carried * load_com);
    const double k = spec.gyration_radius * lambda;
    st.load.carried_mass = carried;
    st.load.inertia_o = bucket * (k * k + bucket_com.x * bucket_com.x + bucket_com.y * bucket_com.y) +
                        carried * (load_com.x * load_com.x + load_com.y * load_com.y);
    st.load.reaction = carried * run.reaction;
    if (spec.mode == BenchMode::QuasiStatic) {
        st.load.a1 = run.accel;
        st.load.alpha1 = run.angular_accel / lambda;
    }
    return st;
}

Dataset generate_fleet(const FleetSpec& spec, std::uint64_t seed, unsigned threads) {
    spec.validate();
    const auto loads = spec.sweep.values();
    const auto& names = bench_quantity_names();
    auto column_of = [&](const std::string& q) {
        return static_cast<std::size_t>(std::find(names.begin(), names.end(), q) - names.begin());
    };

    std::vector<std::vector<Record>> per_machine(spec.machines.size());
    auto build_machine = [&](std::size_t mi) {
        const auto& machine = spec.machines[mi];
        const double lambda = machine.scale;
        std::vector<const DistortionRule*> rules;
        for (const auto& d : spec.distortions) {
            if (d.machines.empty() || std::find(d.machines.begin(), d.machines.end(), machine.id) != d.machines.end()) {
                rules.push_back(&d);
            }
        }
        auto& out = per_machine[mi];
        for (std::size_t ri = 0; ri < spec.runs.size(); ++ri) {
            for (std::size_t li = 0; li < loads.size(); ++li) {
                BenchState st = similar_state(spec, lambda, spec.runs[ri], loads[li]);
                Rng rng(mix_seed(mix_seed(seed, mi), mix_seed(ri, li)));
                std::array<double, kColumns> factor;
                factor.fill(1.0);
                for (const auto* rule : rules) {
                    double f = std::pow(lambda, rule->exponent_offset);
                    const double z = rng.normal();
                    if (rule->noise > 0.0) f *= std::max(1e-3, 1.0 + rule->noise * z);
                    factor[column_of(rule->quantity)] *= f;
                }
                // Inputs are distorted before solving, outputs after.
                st.geometry.com.x *= factor[kXb];
                st.geometry.com.y *= factor[kYb];
                st.geometry.bucket_mass *= factor[kMb];
                st.load.carried_mass *= factor[kMb];
                st.load.inertia_o *= factor[kMb];
                st.load.reaction = factor[kMb] * st.load.reaction;
                st.load.a1 *= factor[kA1];
                st.load.alpha1 *= factor[kAlpha1];

                BucketSolution bucket;
                CylinderSolution cyl;
                try {
                    bucket = solve_quasi_static(st.geometry, st.load);
                    cyl = solve_cylinder_forces(st.geometry, st.load, bucket);
                } catch (const Error& e) {
                    throw Error(e.code(), "machine '" + machine.id + "', run '" + spec.runs[ri].id + "', load " +
                                              format_double(loads[li]) + ": " + e.what());
                }
                Record rec;
                rec.key = {machine.id, spec.runs[ri].id, st.load.carried_mass};
                rec.values.resize(kColumns);
                rec.values[kF21] = std::abs(bucket.link_force) * factor[kF21];
                rec.values[kF31] = bucket.f31.norm() * factor[kF31];
                rec.values[kTilt] = std::abs(cyl.tilt) * factor[kTilt];
                rec.values[kLift] = std::abs(cyl.lift) * factor[kLift];
                rec.values[kXb] = st.geometry.com.x;
                rec.values[kYb] = st.geometry.com.y;
                rec.values[kMb] = st.geometry.bucket_mass + st.load.carried_mass;
                rec.values[kA1] = st.load.a1;
                rec.values[kAlpha1] = st.load.alpha1;
                out.push_back(std::move(rec));
            }
        }
    };

    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(spec.machines.size())));
    if (threads == 1) {
        for (std::size_t mi = 0; mi < spec.machines.size(); ++mi) build_machine(mi);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t mi = w; mi < spec.machines.size(); mi += threads) build_machine(mi);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    Dataset data;
    data.quantity_names = names;
    for (auto& recs : per_machine) {
        for (auto& r : recs) data.records.push_back(std::move(r));
    }
    return data;
}

FleetSpec parse_fleet_spec(const std::string& toml_text) {
    const auto doc = parse_toml(toml_text);
    FleetSpec spec;
    if (doc.contains("mode")) {
        const auto mode = read_str(doc, "mode");
        if (mode == "static") {
            spec.mode = BenchMode::Static;
        } else if (mode == "quasi_static") {
            spec.mode = BenchMode::QuasiStatic;
        } else {
            throw Error(ErrorCode::Parse, "fleet spec: mode must be 'static' or 'quasi_static'");
        }
    }
    if (doc.contains("seed")) spec.seed = doc.at("seed").get<std::uint64_t>();
    if (!doc.contains("geometry")) throw Error(ErrorCode::Parse, "fleet spec: missing [geometry]");
    const auto& g = doc.at("geometry");
    auto& b = spec.base;
    b.link_attachment = read_vec(g, "link_attachment");
    b.link_direction = read_unit(g, "link_direction");
    b.com = read_vec(g, "bucket_com");
    b.bucket_mass = read_num(g, "bucket_mass");
    spec.gyration_radius = read_num(g, "gyration_radius", 0.0);
    b.tip = read_vec(g, "tip");
    b.accel_direction = g.contains("accel_direction") ? read_unit(g, "accel_direction") : Vec2{1.0, 0.0};
    b.gravity = read_num(g, "gravity", 9.81);
    b.arm_base = read_vec(g, "arm_base");
    b.arm_com = read_vec(g, "arm_com");
    b.arm_mass = read_num(g, "arm_mass");
    b.lift_attachment = read_vec(g, "lift_attachment");
    b.lift_direction = read_unit(g, "lift_direction");
    b.lever_pivot = read_vec(g, "lever_pivot");
    b.lever_link_point = read_vec(g, "lever_link_point");
    b.lever_cylinder_point = read_vec(g, "lever_cylinder_point");
    b.tilt_direction = read_unit(g, "tilt_direction");

    if (doc.contains("load_sweep")) {
        const auto& s = doc.at("load_sweep");
        spec.sweep.min = read_num(s, "min");
        spec.sweep.max = read_num(s, "max");
        spec.sweep.step = read_num(s, "step");
    }
    for (const auto& m : doc.value("machines", nlohmann::json::array())) {
        spec.machines.push_back({read_str(m, "id"), read_num(m, "scale")});
    }
    for (const auto& r : doc.value("runs", nlohmann::json::array())) {
        RunSpec run;
        run.id = read_str(r, "id");
        run.load_com = read_vec(r, "load_com");
        run.accel = read_num(r, "accel", 0.0);
        run.angular_accel = read_num(r, "angular_accel", 0.0);
        if (r.contains("reaction")) run.reaction = read_vec(r, "reaction");
        spec.runs.push_back(run);
    }
    for (const auto& d : doc.value("distortions", nlohmann::json::array())) {
        DistortionRule rule;
        rule.quantity = read_str(d, "quantity");
        rule.exponent_offset = read_num(d, "exponent_offset", 0.0);
        rule.noise = read_num(d, "noise", 0.0);
        for (const auto& m : d.value("machines", nlohmann::json::array())) rule.machines.push_back(m.get<std::string>());
        spec.distortions.push_back(rule);
    }
    spec.validate();
    return spec;
}

FleetSpec load_fleet_spec(const std::string& path) { return parse_fleet_spec(read_text_file(path)); }

}  // namespace distscale
