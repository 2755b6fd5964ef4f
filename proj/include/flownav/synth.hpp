#pragma once

#include "flownav/block_store.hpp"
#include "flownav/geometry.hpp"

#include <cstdint>
#include <filesystem>

#include <json.hpp>

namespace flownav::synth {

/// Analytic stand-in for a bluff-body wake dataset.
struct SyntheticFlowConfig {
    store::Index3 grid_dims{64, 32, 24};
    std::size_t snapshots = 20;
    double dt = 0.5;
    Scene scene = reference_scene();
    Vec3 freestream{1.0, 0.0, 0.0};
    double wake_deficit = 0.6;     ///< fraction of the freestream removed on the wake axis
    double wake_length = 2.5;      ///< downstream reach of each wake, in h
    double wake_spread = 1.5;      ///< lateral half-width, as a multiple of the obstacle half-width
    double shedding_amplitude = 0.3;
    double shedding_frequency = 1.2;  ///< angular frequency, rad per time unit
    double shedding_wavenumber = 3.0;
    double perturbation = 0.05;    ///< amplitude of the divergence-free background
    double max_speed = 2.0;
    std::uint64_t seed = 0;

    void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticFlowConfig& s);
void from_json(const nlohmann::json& j, SyntheticFlowConfig& s);

/// Mesh description of the dataset these parameters produce.
store::MeshMeta synthetic_mesh(const SyntheticFlowConfig& params);

/// Closed-form velocity before float storage.
class SyntheticFlow {
public:
    explicit SyntheticFlow(const SyntheticFlowConfig& params);
    Vec3 operator()(const Vec3& p, double t) const;
    /// True where some wake (obstacle interior included) has support.
    bool in_wake(const Vec3& p) const;

private:
    SyntheticFlowConfig params_;
    std::array<double, 6> phase_{};
};

store::SnapshotSource synthetic_source(const SyntheticFlowConfig& params);

/// Writes a block dataset (plus mesh.json) to `out_dir`; returns its mesh.
store::MeshMeta synthesize(const SyntheticFlowConfig& params, const std::filesystem::path& out_dir);

}  // namespace flownav::synth
