#include "flownav/dynamics.hpp"

#include "flownav/error.hpp"

#include <algorithm>
#include <cmath>

namespace flownav::dynamics {

bool UavState::finite() const {
    return position.finite() && ground_velocity.finite() && std::isfinite(psi) && std::isfinite(theta) &&
           std::isfinite(t);
}

ControlInput ControlInput::clamped() const {
    auto clamp_or_zero = [](double v, double lim) { return std::isfinite(v) ? std::clamp(v, -lim, lim) : 0.0; };
    return {clamp_or_zero(thrust, kMaxThrust), clamp_or_zero(dpsi, kMaxAngleStep),
            clamp_or_zero(dtheta, kMaxAngleStep)};
}

void IntegratorConfig::validate() const {
    if (!(dt > 0.0)) throw Error("invalid_config", "dt must be positive");
    if (substeps < 1) throw Error("invalid_config", "substeps must be at least 1");
}

double wrap_angle(double a) {
    constexpr double pi = std::numbers::pi;
    if (a > -pi && a <= pi) return a;
    double r = std::fmod(a + pi, 2.0 * pi);
    if (r <= 0.0) r += 2.0 * pi;
    return r - pi;
}

Vec3 heading(double psi, double theta) {
    return {std::cos(theta) * std::cos(psi), std::cos(theta) * std::sin(psi), std::sin(theta)};
}

StateRate derivative(const Vec3& position, double psi, double theta, double t, const ControlInput& control,
                     double dt, const FlowLookup& flow) {
    const Vec3 uf = flow ? flow(position, t) : Vec3{};
    return {heading(psi, theta) * control.thrust + uf, control.dpsi / dt, control.dtheta / dt};
}

StepResult rk4_step(const UavState& state, const ControlInput& control_in, const FlowLookup& flow,
                    const IntegratorConfig& config, const SubstepMonitor& monitor) {
    config.validate();
    const ControlInput control = control_in.clamped();
    const double h = config.dt / double(config.substeps);

    StepResult out;
    Vec3 x = state.position;
    double psi = state.psi;  // unwrapped during the step
    double theta = state.theta;
    double t = state.t;

    for (int n = 0; n < config.substeps; ++n) {
        const StateRate k1 = derivative(x, psi, theta, t, control, config.dt, flow);
        const StateRate k2 = derivative(x + k1.position * (h / 2), psi + k1.psi * h / 2, theta + k1.theta * h / 2,
                                        t + h / 2, control, config.dt, flow);
        const StateRate k3 = derivative(x + k2.position * (h / 2), psi + k2.psi * h / 2, theta + k2.theta * h / 2,
                                        t + h / 2, control, config.dt, flow);
        const StateRate k4 = derivative(x + k3.position * h, psi + k3.psi * h, theta + k3.theta * h, t + h, control,
                                        config.dt, flow);
        const Vec3 dx = (k1.position + k2.position * 2.0 + k3.position * 2.0 + k4.position) * (h / 6.0);
        const Vec3 x_next = x + dx;
        const int done = n + 1;
        // Angles ramp linearly; taken from the closed form to avoid accumulated rounding.
        const double frac = double(done) / double(config.substeps);
        const double psi_next = state.psi + control.dpsi * frac;
        const double theta_next = state.theta + control.dtheta * frac;
        const double t_next = done == config.substeps ? state.t + config.dt : state.t + h * double(done);

        if (!x_next.finite()) {
            out.fault = true;
            break;
        }
        if (config.block_extent > 0.0 && dx.norm() > config.cfl_fraction * config.block_extent) ++out.cfl_violations;
        x = x_next;
        psi = psi_next;
        theta = theta_next;
        t = t_next;
        out.substeps_taken = done;
        if (monitor && monitor(x, t)) {
            out.stopped = true;
            break;
        }
    }

    out.state.position = x;
    out.state.psi = wrap_angle(psi);
    out.state.theta = wrap_angle(theta);
    out.state.t = t;
    const Vec3 uf = flow ? flow(x, t) : Vec3{};
    out.state.ground_velocity = heading(psi, theta) * control.thrust + uf;
    if (!out.state.finite()) {
        out.fault = true;
        out.state.ground_velocity = state.ground_velocity;
    }
    return out;
}

}  // namespace flownav::dynamics
