#pragma once

#include "flownav/vec3.hpp"

#include <functional>
#include <numbers>

namespace flownav::dynamics {

inline constexpr double kMaxThrust = 2.0;
inline constexpr double kMaxAngleStep = std::numbers::pi / 4.0;
inline constexpr double kDefaultDt = 0.08750;

/// Point-mass UAV state. Ground velocity is thrust plus local flow.
struct UavState {
    Vec3 position;
    Vec3 ground_velocity;
    double psi = 0.0;    ///< yaw, rotates the heading in the x-y plane
    double theta = 0.0;  ///< pitch, tilts the heading toward z
    double t = 0.0;

    bool finite() const;
    friend bool operator==(const UavState&, const UavState&) = default;
};

/// Thrust and per-step heading changes. Use clamped() before applying.
struct ControlInput {
    double thrust = 0.0;
    double dpsi = 0.0;
    double dtheta = 0.0;

    ControlInput clamped() const;
    friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

struct IntegratorConfig {
    double dt = kDefaultDt;
    int substeps = 40;
    double cfl_fraction = 0.5;  ///< max substep displacement as a fraction of block_extent
    double block_extent = 0.0;  ///< smallest block edge length; 0 disables the guard

    void validate() const;
};

/// Flow velocity at (position, t).
using FlowLookup = std::function<Vec3(const Vec3&, double)>;

/// Returns true to stop integration at this substep (e.g. collision).
using SubstepMonitor = std::function<bool(const Vec3& position, double t)>;

/// Wraps into (-pi, pi].
double wrap_angle(double a);

/// Unit heading for yaw psi and pitch theta.
Vec3 heading(double psi, double theta);

struct StateRate {
    Vec3 position;
    double psi = 0.0;
    double theta = 0.0;
};

/// Kinematic rates at a state: heading thrust plus flow, constant angular rates over the step.
StateRate derivative(const Vec3& position, double psi, double theta, double t, const ControlInput& control,
                     double dt, const FlowLookup& flow);

struct StepResult {
    UavState state;
    bool fault = false;         ///< non-finite intermediate state; `state` is the last finite one
    int cfl_violations = 0;
    int substeps_taken = 0;
    bool stopped = false;       ///< monitor requested a stop
};

/// Advances one environment step with `substeps` classical RK4 stages of dt/substeps.
StepResult rk4_step(const UavState& state, const ControlInput& control, const FlowLookup& flow,
                    const IntegratorConfig& config, const SubstepMonitor& monitor = {});

}  // namespace flownav::dynamics
