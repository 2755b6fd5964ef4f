#pragma once

#include "flownav/env.hpp"

#include <functional>
#include <ostream>
#include <string>

namespace flownav::env {

/// Maps the current observation (and read-only environment) to an action.
using Policy = std::function<dynamics::ControlInput(const Observation&, const Environment&)>;

/// Builds a fresh policy for one episode; the seed feeds stochastic policies.
using PolicyFactory = std::function<Policy(std::uint64_t episode_seed)>;

/// Turns toward the target at full thrust, easing off near it; steers to the clearest ray
/// when something blocks the forward ray short of the target.
Policy greedy_policy();
/// Uniform actions over the full action bounds.
Policy random_policy(std::uint64_t seed);
/// Zero thrust, no turns.
Policy hover_policy();

PolicyFactory policy_by_name(const std::string& name);

EpisodeResult run_episode(Environment& env, const Policy& policy, std::uint64_t seed,
                          std::optional<std::size_t> snapshot = std::nullopt);

/// Runs an already-reset environment to termination.
EpisodeResult run_from_current(Environment& env, const Policy& policy);

struct EvalSummary {
    std::size_t episodes = 0;
    double success_rate = 0.0;
    double crash_rate = 0.0;
    double out_of_bounds_rate = 0.0;
    double timeout_rate = 0.0;
    double mean_return = 0.0;
    double mean_length = 0.0;
    int min_length = 0;
    int max_length = 0;
    std::vector<EpisodeResult> results;
};

/// Seed for episode `i` of an evaluation started with `seed`.
std::uint64_t episode_seed(std::uint64_t seed, std::size_t i);

EvalSummary evaluate(Environment& env, const PolicyFactory& policy, std::size_t episodes, std::uint64_t seed);

nlohmann::json summary_json(const EvalSummary& s);
nlohmann::json step_record_json(const StepRecord& r, int step);
void write_trajectory_jsonl(std::ostream& out, const EpisodeResult& result);

}  // namespace flownav::env
