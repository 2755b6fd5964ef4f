#pragma once

#include "flownav/dynamics.hpp"
#include "flownav/flow_field.hpp"
#include "flownav/geometry.hpp"
#include "flownav/sensors.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace flownav::env {

/// Agent-visible observation: pose, target geometry, position and the 45 ray distances.
struct Observation {
    static constexpr std::size_t kSize = 8 + sensors::kRays;

    double psi = 0.0;
    double theta = 0.0;
    double psi_target = 0.0;    ///< target yaw relative to the heading, wrapped
    double theta_target = 0.0;  ///< target pitch relative to the heading, wrapped
    double d_target = 0.0;
    Vec3 position;
    std::array<double, sensors::kRays> rays{};

    std::vector<double> to_vector() const;
};

struct RewardConfig {
    double sigma = 1.0;
    double xi = 1.0;
    double beta = 5.0;
    double r_free = 0.05;
    double step_penalty = 0.05;
    double target_radius = 0.25;
    double bonus_target = 10.0;
    double penalty_collision = -10.0;
    double penalty_oob = -5.0;
    double bonus_near = 1.0;
    double near_band = 0.5;       ///< near-target bonus when | d - target_radius | < near_band
    double prox_radius = 1.0;     ///< proximity-velocity penalty inside this distance
    static constexpr double kProxCoeff = 0.2;
    static constexpr double kEnergyCoeff = 0.2;
    static constexpr double kBestCoeff = 0.06;

    void validate() const;
};

struct RewardBreakdown {
    double trans = 0.0;
    double obs = 0.0;
    double free = 0.0;
    double best = 0.0;
    double step = 0.0;
    double prox = 0.0;
    double energy = 0.0;
    double terminal = 0.0;
    double total = 0.0;

    /// Component sum in the fixed order used for `total`.
    double sum() const { return trans + obs + free + best + step + prox + energy + terminal; }
};

enum class Event { none, target, collision, out_of_bounds, timeout };
std::string to_string(Event e);

struct EpisodeConfig {
    int max_steps = 100;
    double margin = 0.1;
    std::optional<Box> start_region;   ///< default: upstream of the first obstacle
    std::optional<Box> target_region;  ///< default: downstream of the last obstacle
    std::size_t snapshot_lo = 0;
    std::optional<std::size_t> snapshot_hi;  ///< inclusive; default the last snapshot
    double initial_theta_range = dynamics::kMaxAngleStep;
    dynamics::IntegratorConfig integrator;
    sensors::RayFan fan;
    RewardConfig reward;

    void validate() const;
};

struct StepInfo {
    Vec3 flow;               ///< flow at the new position and time
    bool flow_ok = true;     ///< false when the store failed and the last valid velocity was used
    bool fault = false;      ///< integrator hit a non-finite state
    int cfl_violations = 0;
};

struct StepOutcome {
    Observation observation;
    RewardBreakdown reward;
    bool done = false;
    Event event = Event::none;
    StepInfo info;
};

struct StepRecord {
    dynamics::UavState state;  ///< state after the step
    dynamics::ControlInput action;
    RewardBreakdown reward;
    Event event = Event::none;
};

struct EpisodeResult {
    Event outcome = Event::none;
    int steps = 0;
    double total_reward = 0.0;
    std::uint64_t seed = 0;
    std::size_t snapshot = 0;
    dynamics::UavState start;
    Vec3 target;
    std::vector<StepRecord> trajectory;
};

/// Relative yaw and pitch from a pose to a point, wrapped.
std::pair<double, double> relative_angles(const Vec3& from, double psi, double theta, const Vec3& to);

/// POMDP navigation environment over a shared read-only flow source.
class Environment {
public:
    Environment(std::shared_ptr<const interp::FlowSource> flow, Scene scene, EpisodeConfig config = {});

    Observation reset(std::uint64_t seed, std::optional<std::size_t> snapshot = std::nullopt);
    Observation reset_to(const Vec3& start, const Vec3& target, double psi, double theta, std::size_t snapshot);
    StepOutcome step(const dynamics::ControlInput& action);

    const dynamics::UavState& state() const { return state_; }
    const Vec3& target() const { return target_; }
    bool done() const { return done_; }
    Event event() const { return event_; }
    int steps() const { return steps_; }
    std::size_t snapshot() const { return snapshot_; }
    std::uint64_t seed() const { return seed_; }
    const Observation& observation() const { return observation_; }
    const sensors::SensorReading& sensor_reading() const { return reading_; }
    const Scene& scene() const { return scene_; }
    const EpisodeConfig& config() const { return config_; }
    const interp::FlowSource& flow() const { return *flow_; }

    Box start_region() const;
    Box target_region() const;

    /// Step reward from its ingredients; exposed for direct testing.
    static RewardBreakdown shaped_reward(const RewardConfig& rc, double d_prev, double d_new, double d_min,
                                         const sensors::SensorReading& reading, const Vec3& ground_velocity,
                                         const Vec3& flow_velocity);
    static double terminal_reward(const RewardConfig& rc, Event event, double d_target);

    /// P x P flow samples on the x-z plane at the UAV height, spaced by the grid spacing;
    /// row-major over (x offset, z offset).
    std::vector<Vec3> flow_patch(int size) const;
    Vec3 flow_at(const Vec3& p, double t) const { return flow_->sample(p, t).velocity; }

private:
    Observation observe() const;
    Event classify(const Vec3& position, double d_target) const;

    std::shared_ptr<const interp::FlowSource> flow_;
    Scene scene_;
    EpisodeConfig config_;
    dynamics::UavState state_;
    Vec3 target_;
    std::size_t snapshot_ = 0;
    std::uint64_t seed_ = 0;
    int steps_ = 0;
    bool done_ = true;
    bool started_ = false;
    Event event_ = Event::none;
    sensors::SensorReading reading_;
    Observation observation_;
};

/// R_norm = (R - min) / (max - min) over the pooled returns of all policies.
std::vector<double> normalize_returns(const std::vector<double>& returns);

nlohmann::json to_json(const Observation& o);
nlohmann::json to_json(const RewardBreakdown& r);
nlohmann::json to_json(const dynamics::UavState& s);
nlohmann::json to_json(const dynamics::ControlInput& c);

}  // namespace flownav::env
