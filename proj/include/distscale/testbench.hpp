#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "distscale/dataset.hpp"

namespace distscale {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
    friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
    friend bool operator==(Vec2, Vec2) = default;
    double norm() const { return std::hypot(x, y); }
};

/// z component of a x b.
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

/// Planar bucket-lift linkage; the bucket pivot O on the main arm is the
/// origin. Link B is a two-force member acting on the bucket at
/// `link_attachment` along `link_direction`. Its other end drives a
/// massless bell crank pivoted on the arm, which the tilt cylinder turns;
/// the lift cylinder acts on the arm, which pivots on the base.
struct LinkageGeometry {
    Vec2 link_attachment;   ///< A
    Vec2 link_direction;    ///< unit u along Link B
    Vec2 com;               ///< (x_b, y_b) of the combined bucket + load body
    double bucket_mass = 0.0;
    Vec2 tip;               ///< where the reaction R acts
    Vec2 accel_direction{1.0, 0.0};  ///< unit direction of a1
    double gravity = 9.81;

    Vec2 arm_base;          ///< arm-to-base pivot, where F43 acts
    Vec2 arm_com;
    double arm_mass = 0.0;
    Vec2 lift_attachment;   ///< lift cylinder rod eye on the arm
    Vec2 lift_direction;    ///< unit line of action of the lift cylinder on the arm
    Vec2 lever_pivot;       ///< bell crank pivot on the arm
    Vec2 lever_link_point;  ///< Link B eye on the bell crank
    Vec2 lever_cylinder_point;
    Vec2 tilt_direction;    ///< unit line of action of the tilt cylinder on the crank

    /// Throws InvalidInput if A is at O or a direction is not unit length.
    void validate() const;
};

struct LoadCase {
    double carried_mass = 0.0;  ///< added to bucket_mass
    Vec2 reaction;              ///< R at the tip
    double a1 = 0.0;            ///< COM acceleration along accel_direction
    double alpha1 = 0.0;        ///< angular acceleration about O
    double inertia_o = 0.0;     ///< I_o of the combined body about O
};

struct BucketSolution {
    Vec2 f21;                 ///< force of Link B on the bucket
    Vec2 f31;                 ///< force of the arm on the bucket at O
    double link_force = 0.0;  ///< signed magnitude of f21 along link_direction
};

struct CylinderSolution {
    double tilt = 0.0;  ///< signed along tilt_direction
    double lift = 0.0;  ///< signed along lift_direction
    Vec2 f43;           ///< base on arm
    Vec2 crank_reaction;  ///< arm on bell crank at its pivot
};

/// Static equilibrium (a1 = alpha1 = 0).
BucketSolution solve_bucket_statics(const LinkageGeometry& geom, const LoadCase& load);
/// Force balance = m1 a1, moment balance about O = I_o alpha1.
BucketSolution solve_quasi_static(const LinkageGeometry& geom, const LoadCase& load);
CylinderSolution solve_cylinder_forces(const LinkageGeometry& geom, const LoadCase& load, const BucketSolution& bucket);

struct BenchResiduals {
    double bucket_force = 0.0;   ///< |sum F - m1 a1| on the bucket
    double bucket_moment = 0.0;  ///< |sum M_O - I_o alpha1|
    double mechanism_force = 0.0;  ///< |F43 + R + P_tilt + P_lift + weights - m1 a1|
    double crank_moment = 0.0;
    double arm_moment = 0.0;
    double scale = 1.0;  ///< |W| + |R| + inertial magnitude + 1, for relative checks
    double max_relative() const;
};

BenchResiduals bench_residuals(const LinkageGeometry& geom, const LoadCase& load, const BucketSolution& bucket,
                               const CylinderSolution& cylinders);

/// Quantity columns emitted by the bench, in order.
const std::vector<std::string>& bench_quantity_names();

struct DistortionRule {
    std::string quantity;
    double exponent_offset = 0.0;  ///< value *= lambda ^ offset
    double noise = 0.0;            ///< relative std of seeded multiplicative noise
    std::vector<std::string> machines;  ///< empty = every machine
};

struct MachineSpec {
    std::string id;
    double scale = 1.0;  ///< length ratio to the base geometry
};

struct RunSpec {
    std::string id;
    Vec2 load_com;             ///< carried load COM at base scale
    double accel = 0.0;        ///< a1 at base scale (scale-invariant)
    double angular_accel = 0.0;  ///< alpha1 at base scale (scales as 1/lambda)
    Vec2 reaction;             ///< R at base scale per kg of carried load
};

struct LoadSweep {
    double min = 0.5;
    double max = 4.0;
    double step = 0.5;

    std::vector<double> values() const;
};

enum class BenchMode { Static, QuasiStatic };

struct FleetSpec {
    LinkageGeometry base;      ///< base machine (lambda = 1); `com` is the empty bucket COM
    double gyration_radius = 0.0;  ///< empty bucket radius of gyration about its COM
    BenchMode mode = BenchMode::QuasiStatic;
    std::vector<MachineSpec> machines;
    std::vector<RunSpec> runs;
    std::vector<DistortionRule> distortions;
    LoadSweep sweep;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Geometry and load of one record before distortions: lengths x lambda,
/// masses x lambda^3, I_o x lambda^5, a1 unchanged, alpha1 / lambda.
struct BenchState {
    LinkageGeometry geometry;
    LoadCase load;
};

BenchState similar_state(const FleetSpec& spec, double lambda, const RunSpec& run, double base_load);

/// Similitude transform of a single geometry (lengths x lambda, masses x lambda^3).
LinkageGeometry scale_geometry(const LinkageGeometry& g, double lambda);

/// One record per (machine, run, load step) in that order; t is the carried
/// load in the machine's own kilograms.
Dataset generate_fleet(const FleetSpec& spec, std::uint64_t seed, unsigned threads = 1);

FleetSpec parse_fleet_spec(const std::string& toml_text);
FleetSpec load_fleet_spec(const std::string& path);

}  // namespace distscale
