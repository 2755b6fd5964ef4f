#include "flownav/evaluate.hpp"

#include "flownav/error.hpp"
#include "flownav/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace flownav::env {

using dynamics::ControlInput;

Policy greedy_policy() {
    return [](const Observation& o, const Environment& env) {
        double yaw_err = o.psi_target;
        double pitch_err = o.theta_target;
        const double forward_hit = o.rays[sensors::RayFan::forward_index()];
        if (forward_hit < env.config().fan.max_range && forward_hit < o.d_target) {
            int best = sensors::RayFan::forward_index();
            double best_turn = 0.0;
            for (int i = 0; i < sensors::kElevations; ++i)
                for (int j = 0; j < sensors::kAzimuths; ++j) {
                    const int n = sensors::RayFan::index(i, j);
                    const double turn =
                        std::abs(sensors::RayFan::azimuth(j)) + std::abs(sensors::RayFan::elevation(i));
                    if (o.rays[n] > o.rays[best] || (o.rays[n] == o.rays[best] && turn < best_turn)) {
                        best = n;
                        best_turn = turn;
                    }
                }
            yaw_err = sensors::RayFan::azimuth(best % sensors::kAzimuths);
            pitch_err = sensors::RayFan::elevation(best / sensors::kAzimuths);
        }
        const double dt = env.config().integrator.dt;
        double thrust = dynamics::kMaxThrust * std::max(0.0, std::cos(yaw_err)) * std::max(0.0, std::cos(pitch_err));
        thrust = std::min(thrust, 0.9 * o.d_target / dt);
        return ControlInput{thrust, yaw_err, pitch_err}.clamped();
    };
}

Policy random_policy(std::uint64_t seed) {
    auto rng = std::make_shared<Rng>(seed);
    return [rng](const Observation&, const Environment&) {
        return ControlInput{rng->uniform(-dynamics::kMaxThrust, dynamics::kMaxThrust),
                            rng->uniform(-dynamics::kMaxAngleStep, dynamics::kMaxAngleStep),
                            rng->uniform(-dynamics::kMaxAngleStep, dynamics::kMaxAngleStep)};
    };
}

Policy hover_policy() {
    return [](const Observation&, const Environment&) { return ControlInput{}; };
}

PolicyFactory policy_by_name(const std::string& name) {
    if (name == "greedy") return [](std::uint64_t) { return greedy_policy(); };
    if (name == "random") return [](std::uint64_t s) { return random_policy(mix_seed(s ^ 0x5eedull)); };
    if (name == "hover") return [](std::uint64_t) { return hover_policy(); };
    throw Error("unknown_policy", "unknown policy '" + name + "' (expected greedy, random or hover)");
}

EpisodeResult run_from_current(Environment& env, const Policy& policy) {
    EpisodeResult r;
    r.seed = env.seed();
    r.snapshot = env.snapshot();
    r.start = env.state();
    r.target = env.target();
    Observation obs = env.observation();
    while (!env.done()) {
        const ControlInput action = policy(obs, env).clamped();
        const StepOutcome out = env.step(action);
        r.trajectory.push_back({env.state(), action, out.reward, out.event});
        r.total_reward += out.reward.total;
        obs = out.observation;
    }
    r.steps = env.steps();
    r.outcome = env.event();
    return r;
}

EpisodeResult run_episode(Environment& env, const Policy& policy, std::uint64_t seed,
                          std::optional<std::size_t> snapshot) {
    env.reset(seed, snapshot);
    return run_from_current(env, policy);
}

std::uint64_t episode_seed(std::uint64_t seed, std::size_t i) { return mix_seed(seed * 1000003ull + i); }

EvalSummary evaluate(Environment& env, const PolicyFactory& policy, std::size_t episodes, std::uint64_t seed) {
    if (episodes == 0) throw Error("invalid_argument", "need at least one episode");
    EvalSummary s;
    s.episodes = episodes;
    std::size_t target = 0, crash = 0, oob = 0, timeout = 0;
    double ret = 0.0, len = 0.0;
    s.min_length = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < episodes; ++i) {
        const std::uint64_t es = episode_seed(seed, i);
        EpisodeResult r = run_episode(env, policy(es), es);
        target += r.outcome == Event::target;
        crash += r.outcome == Event::collision;
        oob += r.outcome == Event::out_of_bounds;
        timeout += r.outcome == Event::timeout;
        ret += r.total_reward;
        len += r.steps;
        s.min_length = std::min(s.min_length, r.steps);
        s.max_length = std::max(s.max_length, r.steps);
        s.results.push_back(std::move(r));
    }
    const double n = double(episodes);
    s.success_rate = double(target) / n;
    s.crash_rate = double(crash) / n;
    s.out_of_bounds_rate = double(oob) / n;
    s.timeout_rate = double(timeout) / n;
    s.mean_return = ret / n;
    s.mean_length = len / n;
    return s;
}

nlohmann::json summary_json(const EvalSummary& s) {
    return {{"episodes", s.episodes},
            {"SR", s.success_rate},
            {"CR", s.crash_rate},
            {"out_of_bounds_rate", s.out_of_bounds_rate},
            {"timeout_rate", s.timeout_rate},
            {"mean_return", s.mean_return},
            {"episode_length", {{"mean", s.mean_length}, {"min", s.min_length}, {"max", s.max_length}}}};
}

nlohmann::json step_record_json(const StepRecord& r, int step) {
    return {{"step", step},
            {"state", to_json(r.state)},
            {"action", to_json(r.action)},
            {"reward", to_json(r.reward)},
            {"event", to_string(r.event)}};
}

void write_trajectory_jsonl(std::ostream& out, const EpisodeResult& result) {
    for (std::size_t i = 0; i < result.trajectory.size(); ++i)
        out << step_record_json(result.trajectory[i], int(i) + 1).dump() << '\n';
}

}  // namespace flownav::env
