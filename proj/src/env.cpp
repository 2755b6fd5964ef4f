#include "flownav/env.hpp"

#include "flownav/error.hpp"
#include "flownav/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace flownav::env {

using dynamics::ControlInput;
using dynamics::UavState;

std::vector<double> Observation::to_vector() const {
    std::vector<double> v{psi, theta, psi_target, theta_target, d_target, position.x, position.y, position.z};
    v.insert(v.end(), rays.begin(), rays.end());
    return v;
}

void RewardConfig::validate() const {
    const bool ok = sigma > 0 && xi > 0 && beta > 0 && r_free > 0 && step_penalty > 0 && target_radius > 0 &&
                    bonus_target > 0 && penalty_collision < 0 && penalty_oob < 0 && bonus_near > 0 &&
                    near_band > 0 && prox_radius > 0;
    if (!ok) throw Error("invalid_config", "reward constants must be positive (penalties negative)");
}

std::string to_string(Event e) {
    switch (e) {
    case Event::none: return "none";
    case Event::target: return "target";
    case Event::collision: return "collision";
    case Event::out_of_bounds: return "out_of_bounds";
    case Event::timeout: return "timeout";
    }
    return "none";
}

void EpisodeConfig::validate() const {
    if (max_steps < 1) throw Error("invalid_config", "max_steps must be at least 1");
    if (margin < 0) throw Error("invalid_config", "margin must be non-negative");
    if (!(fan.max_range > 0)) throw Error("invalid_config", "sensor max_range must be positive");
    integrator.validate();
    reward.validate();
}

std::pair<double, double> relative_angles(const Vec3& from, double psi, double theta, const Vec3& to) {
    const Vec3 d = to - from;
    const double yaw = std::atan2(d.y, d.x);
    const double pitch = std::atan2(d.z, std::hypot(d.x, d.y));
    return {dynamics::wrap_angle(yaw - psi), dynamics::wrap_angle(pitch - theta)};
}

Environment::Environment(std::shared_ptr<const interp::FlowSource> flow, Scene scene, EpisodeConfig config)
    : flow_(std::move(flow)), scene_(std::move(scene)), config_(std::move(config)) {
    if (!flow_) throw Error("invalid_argument", "environment needs a flow source");
    if (flow_->snapshot_times().empty()) throw Error("invalid_argument", "flow source has no snapshots");
    config_.validate();
    const std::size_t hi = config_.snapshot_hi.value_or(flow_->snapshot_times().size() - 1);
    if (hi >= flow_->snapshot_times().size() || config_.snapshot_lo > hi)
        throw Error("invalid_config", "snapshot range outside the available snapshots");
    config_.snapshot_hi = hi;
}

Box Environment::start_region() const {
    if (config_.start_region) return *config_.start_region;
    const Box& d = scene_.domain;
    const double m = config_.margin;
    double x_hi = d.min.x + (d.max.x - d.min.x) / 3.0;
    if (!scene_.obstacles.empty()) {
        x_hi = scene_.obstacles.front().min.x;
        for (const auto& o : scene_.obstacles) x_hi = std::min(x_hi, o.min.x);
    }
    return {{d.min.x + m, d.min.y + m, d.min.z + m}, {x_hi - m, d.max.y - m, d.max.z - m}};
}

Box Environment::target_region() const {
    if (config_.target_region) return *config_.target_region;
    const Box& d = scene_.domain;
    const double m = config_.margin;
    double x_lo = d.max.x - (d.max.x - d.min.x) / 3.0;
    if (!scene_.obstacles.empty()) {
        x_lo = scene_.obstacles.front().max.x;
        for (const auto& o : scene_.obstacles) x_lo = std::max(x_lo, o.max.x);
    }
    return {{x_lo + m, d.min.y + m, d.min.z + m}, {d.max.x - m, d.max.y - m, d.max.z - m}};
}

namespace {

Vec3 sample_in(Rng& rng, const Box& region, const Scene& scene, const char* what) {
    if (!region.valid()) throw Error("infeasible_sampling", std::string(what) + " region is empty");
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const Vec3 p{rng.uniform(region.min.x, region.max.x), rng.uniform(region.min.y, region.max.y),
                     rng.uniform(region.min.z, region.max.z)};
        if (!scene.collides(p) && scene.in_bounds(p)) return p;
    }
    throw Error("infeasible_sampling", std::string("could not sample a free ") + what + " point");
}

}  // namespace

Observation Environment::reset(std::uint64_t seed, std::optional<std::size_t> snapshot) {
    Rng rng(seed);
    const Vec3 start = sample_in(rng, start_region(), scene_, "start");
    const Vec3 target = sample_in(rng, target_region(), scene_, "target");
    const double psi = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double theta = rng.uniform(-config_.initial_theta_range, config_.initial_theta_range);
    const std::size_t lo = config_.snapshot_lo, hi = *config_.snapshot_hi;
    const std::size_t drawn = lo + std::size_t(rng.below(hi - lo + 1));
    const std::size_t snap = snapshot.value_or(drawn);
    reset_to(start, target, psi, theta, snap);
    seed_ = seed;
    return observation_;
}

Observation Environment::reset_to(const Vec3& start, const Vec3& target, double psi, double theta,
                                  std::size_t snapshot) {
    const auto& times = flow_->snapshot_times();
    if (snapshot >= times.size()) throw Error("invalid_snapshot", "snapshot index out of range");
    if (!scene_.in_bounds(start) || scene_.collides(start))
        throw Error("infeasible_sampling", "start must be inside the domain and outside obstacles");
    state_ = {};
    state_.position = start;
    state_.psi = dynamics::wrap_angle(psi);
    state_.theta = dynamics::wrap_angle(theta);
    state_.t = times[snapshot];
    state_.ground_velocity = flow_->sample(start, state_.t).velocity;
    target_ = target;
    snapshot_ = snapshot;
    seed_ = 0;
    steps_ = 0;
    done_ = false;
    started_ = true;
    event_ = Event::none;
    reading_ = sensors::scan(state_, scene_, config_.fan);
    observation_ = observe();
    return observation_;
}

Observation Environment::observe() const {
    Observation o;
    o.psi = state_.psi;
    o.theta = state_.theta;
    std::tie(o.psi_target, o.theta_target) = relative_angles(state_.position, state_.psi, state_.theta, target_);
    o.d_target = distance(state_.position, target_);
    o.position = state_.position;
    o.rays = reading_.distances;
    return o;
}

Event Environment::classify(const Vec3& p, double d_target) const {
    if (scene_.collides(p)) return Event::collision;
    if (!scene_.in_bounds(p)) return Event::out_of_bounds;
    if (d_target <= config_.reward.target_radius) return Event::target;
    if (steps_ >= config_.max_steps) return Event::timeout;
    return Event::none;
}

RewardBreakdown Environment::shaped_reward(const RewardConfig& rc, double d_prev, double d_new, double d_min,
                                           const sensors::SensorReading& reading, const Vec3& ground_velocity,
                                           const Vec3& flow_velocity) {
    RewardBreakdown r;
    r.trans = rc.sigma * (d_prev - d_new);
    r.obs = std::isfinite(d_min) ? -rc.xi * std::exp(-rc.beta * d_min) : 0.0;
    r.free = reading.forward_free ? rc.r_free : 0.0;
    if (!reading.forward_free && reading.best_direction)
        r.best = -RewardConfig::kBestCoeff *
                 (std::abs(reading.best_direction->dpsi) + std::abs(reading.best_direction->dtheta));
    r.step = -rc.step_penalty;
    r.prox = d_new <= rc.prox_radius ? -RewardConfig::kProxCoeff * ground_velocity.norm() : 0.0;
    r.energy = -RewardConfig::kEnergyCoeff * (ground_velocity - flow_velocity).norm();
    r.total = r.sum();
    return r;
}

double Environment::terminal_reward(const RewardConfig& rc, Event event, double d_target) {
    double r = 0.0;
    switch (event) {
    case Event::target: r += rc.bonus_target; break;
    case Event::collision: r += rc.penalty_collision; break;
    case Event::out_of_bounds: r += rc.penalty_oob; break;
    case Event::timeout:
    case Event::none: break;
    }
    if (event != Event::none && std::abs(d_target - rc.target_radius) < rc.near_band) r += rc.bonus_near;
    return r;
}

StepOutcome Environment::step(const ControlInput& action_in) {
    if (!started_) throw Error("not_reset", "reset must be called before step");
    if (done_) throw Error("episode_done", "episode already finished; call reset");
    const ControlInput action = action_in.clamped();
    const double d_prev = distance(state_.position, target_);

    const auto lookup = [this](const Vec3& p, double t) { return flow_->sample(p, t).velocity; };
    const auto monitor = [this](const Vec3& p, double) { return scene_.collides(p) || !scene_.in_bounds(p); };
    const dynamics::StepResult sr = dynamics::rk4_step(state_, action, lookup, config_.integrator, monitor);

    StepOutcome out;
    state_ = sr.state;
    ++steps_;
    const interp::FlowQuery fq = flow_->sample(state_.position, state_.t);
    out.info.flow = fq.velocity;
    out.info.flow_ok = fq.ok;
    out.info.fault = sr.fault;
    out.info.cfl_violations = sr.cfl_violations;

    reading_ = sensors::scan(state_, scene_, config_.fan);
    observation_ = observe();
    const double d_new = observation_.d_target;

    out.reward = shaped_reward(config_.reward, d_prev, d_new, scene_.min_obstacle_distance(state_.position), reading_,
                               state_.ground_velocity, fq.velocity);
    event_ = classify(state_.position, d_new);
    out.reward.terminal = terminal_reward(config_.reward, event_, d_new);
    out.reward.total = out.reward.sum();

    done_ = event_ != Event::none;
    out.done = done_;
    out.event = event_;
    out.observation = observation_;
    return out;
}

std::vector<Vec3> Environment::flow_patch(int size) const {
    if (size < 1) throw Error("invalid_argument", "patch size must be positive");
    const Vec3 h = flow_->grid_spacing();
    std::vector<Vec3> patch;
    patch.reserve(std::size_t(size * size));
    const double c = double(size - 1) / 2.0;
    for (int a = 0; a < size; ++a)
        for (int b = 0; b < size; ++b) {
            Vec3 p = state_.position;
            p.x += (double(a) - c) * h.x;
            p.z += (double(b) - c) * h.z;
            patch.push_back(flow_->sample(scene_.domain.clamp(p), state_.t).velocity);
        }
    return patch;
}

std::vector<double> normalize_returns(const std::vector<double>& returns) {
    if (returns.empty()) throw Error("degenerate", "no returns to normalize");
    const auto [mn, mx] = std::minmax_element(returns.begin(), returns.end());
    const double lo = *mn, hi = *mx;
    if (!(hi > lo)) throw Error("degenerate", "normalization needs max > min");
    std::vector<double> out;
    out.reserve(returns.size());
    for (double r : returns) out.push_back((r - lo) / (hi - lo));
    return out;
}

nlohmann::json to_json(const Observation& o) { return o.to_vector(); }

nlohmann::json to_json(const RewardBreakdown& r) {
    return {{"trans", r.trans}, {"obs", r.obs},       {"free", r.free},         {"best", r.best}, {"step", r.step},
            {"prox", r.prox},   {"energy", r.energy}, {"terminal", r.terminal}, {"total", r.total}};
}

nlohmann::json to_json(const UavState& s) {
    return {{"position", s.position.to_array()},
            {"ground_velocity", s.ground_velocity.to_array()},
            {"psi", s.psi},
            {"theta", s.theta},
            {"t", s.t}};
}

nlohmann::json to_json(const ControlInput& c) { return nlohmann::json::array({c.thrust, c.dpsi, c.dtheta}); }

}  // namespace flownav::env
