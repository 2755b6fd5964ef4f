#pragma once

#include "flownav/bspline.hpp"
#include "flownav/env.hpp"
#include "flownav/evaluate.hpp"
#include "flownav/geometry.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

namespace flownav::zermelo {

/// Time-frozen flow used for planning.
using FrozenFlow = std::function<Vec3(const Vec3&)>;

/// B-spline path over normalized time, flown in T_f time units.
struct SplineTrajectory {
    BSpline curve;
    double final_time = 1.0;

    Vec3 position(double t) const { return curve.evaluate(t / final_time); }
    Vec3 velocity(double t) const { return curve.derivative(t / final_time) * (1.0 / final_time); }
};

struct ZermeloConfig {
    Eigen::Matrix3d R = 0.1 * Eigen::Matrix3d::Identity();  ///< weight on (yaw rate, pitch rate, thrust)
    double kappa = 50.0;
    double alpha = 5.0;              ///< obstacle penalty strength, used for every obstacle...
    double beta = 8.0;               ///< ...and sharpness, unless the per-obstacle lists are set
    std::vector<double> alphas;
    std::vector<double> betas;
    double u_max = dynamics::kMaxThrust;
    double max_yaw_rate = dynamics::kMaxAngleStep / dynamics::kDefaultDt;
    double max_pitch_rate = dynamics::kMaxAngleStep / dynamics::kDefaultDt;
    double bound_weight = 1e3;       ///< quadratic penalty on control-bound and domain violations
    int control_points = 12;
    int degree = 3;
    int quadrature_points = 200;     ///< Simpson intervals; rounded up to even
    int max_iterations = 400;
    double gradient_tolerance = 1e-6;
    double perturbation = 0.02;      ///< seeded jitter of the interior control points at start
    std::uint64_t seed = 0;

    double alpha_for(std::size_t i) const { return i < alphas.size() ? alphas[i] : alpha; }
    double beta_for(std::size_t i) const { return i < betas.size() ? betas[i] : beta; }
    void validate() const;
};

struct CostBreakdown {
    double time = 0.0;
    double control = 0.0;
    double obstacle = 0.0;
    double terminal = 0.0;
    double bounds = 0.0;  ///< control-bound and domain penalties
    double total = 0.0;
};

/// Planned controls along the path: thrust = airspeed |dx/dt - flow|, heading of the airspeed vector.
struct PlannedControl {
    double thrust = 0.0;
    double psi = 0.0;
    double theta = 0.0;
};

/// Sum of alpha_i exp(-beta_i d_i(x)); d_i is negative inside obstacle i.
/// Euclidean distance outside the box; inside, minus a smooth depth that is zero on the faces.
double obstacle_distance(const Box& box, const Vec3& x);
double obstacle_potential(const Vec3& x, const Scene& scene, const ZermeloConfig& config);

PlannedControl planned_control(const SplineTrajectory& traj, const FrozenFlow& flow, double t);

/// J = T_f + integral(1/2 chi^T R chi + phi_obs) dt + kappa |x(T_f) - target|^2 + penalties,
/// by composite Simpson over the configured number of intervals.
CostBreakdown trajectory_cost(const SplineTrajectory& traj, const FrozenFlow& flow, const Scene& scene,
                              const Vec3& target, const ZermeloConfig& config);

/// Straight-line initial guess with control points at the Greville abscissae.
SplineTrajectory straight_line(const Vec3& start, const Vec3& target, double final_time, const ZermeloConfig& config);

struct OptimizeResult {
    SplineTrajectory trajectory;
    CostBreakdown cost;
    CostBreakdown straight_cost;   ///< unperturbed straight line at the initial T_f
    std::vector<double> history;   ///< accepted costs, non-increasing
    int iterations = 0;
    bool converged = false;
};

/// Quasi-Newton (BFGS, central-difference gradients) over interior control points, the end
/// point and T_f >= |target - start| / u_max. The start point stays fixed.
OptimizeResult optimize(const Vec3& start, const Vec3& target, const FrozenFlow& flow, const Scene& scene,
                        const ZermeloConfig& config = {});

/// Minimum distance from the sampled path to obstacle `i`.
double path_clearance(const SplineTrajectory& traj, const Box& obstacle, int samples = 400);
double path_length(const SplineTrajectory& traj, int samples = 2000);

/// Open-loop policy that tracks the plan step by step, then hovers after T_f.
env::Policy open_loop_policy(SplineTrajectory traj, FrozenFlow flow, double start_time);

/// Executes the plan in `environment` from its start, with the initial heading taken from the plan.
env::EpisodeResult replay(const SplineTrajectory& traj, const FrozenFlow& plan_flow, env::Environment& environment,
                          const Vec3& target, std::size_t snapshot);

/// Frozen-snapshot lookup from a full grid (trilinear, clamped to the grid).
class GridFlow {
public:
    GridFlow(const store::MeshMeta& mesh, store::GridSnapshot snapshot);
    Vec3 operator()(const Vec3& p) const;

private:
    store::MeshMeta mesh_;
    Vec3 spacing_;
    store::GridSnapshot snap_;
};

nlohmann::json to_json(const SplineTrajectory& traj, int samples = 50);
nlohmann::json to_json(const CostBreakdown& c);

}  // namespace flownav::zermelo
