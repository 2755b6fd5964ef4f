#include "flownav/synth.hpp"

#include "flownav/error.hpp"
#include "flownav/rng.hpp"

#include <cmath>
#include <numbers>
#include <optional>

namespace flownav::synth {

void SyntheticFlowConfig::validate() const {
    for (auto n : grid_dims)
        if (n < 2) throw Error("invalid_synth_config", "grid_dims must be >= 2 on every axis");
    if (snapshots < 1) throw Error("invalid_synth_config", "need at least one snapshot");
    if (!(dt > 0)) throw Error("invalid_synth_config", "dt must be positive");
    if (!scene.domain.valid()) throw Error("invalid_synth_config", "empty domain");
    if (!(max_speed > 0)) throw Error("invalid_synth_config", "max_speed must be positive");
    if (!(wake_length > 0) || !(wake_spread > 0)) throw Error("invalid_synth_config", "wake extents must be positive");
    if (!freestream.finite() || !std::isfinite(perturbation) || !std::isfinite(wake_deficit) ||
        !std::isfinite(shedding_amplitude))
        throw Error("invalid_synth_config", "non-finite amplitude");
}

void to_json(nlohmann::json& j, const SyntheticFlowConfig& s) {
    nlohmann::json obstacles = nlohmann::json::array();
    for (const auto& b : s.scene.obstacles) obstacles.push_back({{"min", b.min.to_array()}, {"max", b.max.to_array()}});
    j = {{"grid_dims", s.grid_dims},
         {"snapshots", s.snapshots},
         {"dt", s.dt},
         {"domain_min", s.scene.domain.min.to_array()},
         {"domain_max", s.scene.domain.max.to_array()},
         {"obstacles", obstacles},
         {"freestream", s.freestream.to_array()},
         {"wake_deficit", s.wake_deficit},
         {"wake_length", s.wake_length},
         {"wake_spread", s.wake_spread},
         {"shedding_amplitude", s.shedding_amplitude},
         {"shedding_frequency", s.shedding_frequency},
         {"shedding_wavenumber", s.shedding_wavenumber},
         {"perturbation", s.perturbation},
         {"max_speed", s.max_speed},
         {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SyntheticFlowConfig& s) {
    auto vec = [](const nlohmann::json& a) { return Vec3{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()}; };
    s = SyntheticFlowConfig{};
    if (j.contains("grid_dims")) s.grid_dims = j.at("grid_dims").get<store::Index3>();
    if (j.contains("snapshots")) s.snapshots = j.at("snapshots").get<std::size_t>();
    if (j.contains("dt")) s.dt = j.at("dt").get<double>();
    if (j.contains("domain_min")) s.scene.domain.min = vec(j.at("domain_min"));
    if (j.contains("domain_max")) s.scene.domain.max = vec(j.at("domain_max"));
    if (j.contains("obstacles")) {
        s.scene.obstacles.clear();
        for (const auto& b : j.at("obstacles")) s.scene.obstacles.push_back({vec(b.at("min")), vec(b.at("max"))});
    }
    if (j.contains("freestream")) s.freestream = vec(j.at("freestream"));
    auto get = [&](const char* key, double& out) {
        if (j.contains(key)) out = j.at(key).get<double>();
    };
    get("wake_deficit", s.wake_deficit);
    get("wake_length", s.wake_length);
    get("wake_spread", s.wake_spread);
    get("shedding_amplitude", s.shedding_amplitude);
    get("shedding_frequency", s.shedding_frequency);
    get("shedding_wavenumber", s.shedding_wavenumber);
    get("perturbation", s.perturbation);
    get("max_speed", s.max_speed);
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
}

store::MeshMeta synthetic_mesh(const SyntheticFlowConfig& params) {
    params.validate();
    store::MeshMeta m;
    m.domain_min = params.scene.domain.min;
    m.domain_max = params.scene.domain.max;
    m.grid_dims = params.grid_dims;
    for (std::size_t i = 0; i < params.snapshots; ++i) m.snapshot_times.push_back(double(i) * params.dt);
    m.obstacles = params.scene.obstacles;
    m.u_inf = params.freestream.norm() > 0 ? params.freestream.norm() : 1.0;
    m.validate();
    return m;
}

namespace {

/// Smooth bump with compact support on |r| < 1.
double bump(double r) {
    const double a = 1.0 - r * r;
    return a > 0 ? a * a : 0.0;
}

struct WakeFrame {
    double xi;      ///< downstream distance from the obstacle front, normalized by the wake reach
    double lateral; ///< combined lateral envelope
    double sz;      ///< signed spanwise coordinate, normalized
};

std::optional<WakeFrame> wake_frame(const SyntheticFlowConfig& s, const Box& b, const Vec3& p) {
    const Vec3 c = b.center();
    const Vec3 half = b.extent() * 0.5;
    const double reach = (b.max.x - b.min.x) + s.wake_length;
    const double xi = (p.x - b.min.x) / reach;
    if (xi < 0.0 || xi > 1.0) return std::nullopt;
    // Vertical support spans from the ground up to the spread top of the obstacle.
    const double hy = std::max(half.y * s.wake_spread, 1e-9);
    const double hz = std::max(half.z * s.wake_spread, 1e-9);
    const double ry = (p.y - c.y) / hy;
    const double rz = (p.z - c.z) / hz;
    const double lat = bump(ry) * bump(rz);
    if (lat <= 0.0) return std::nullopt;
    return WakeFrame{xi, lat, rz};
}

}  // namespace

SyntheticFlow::SyntheticFlow(const SyntheticFlowConfig& params) : params_(params) {
    params_.validate();
    Rng rng(mix_seed(params.seed));
    for (auto& ph : phase_) ph = rng.uniform(0.0, 2 * std::numbers::pi);
}

bool SyntheticFlow::in_wake(const Vec3& p) const {
    for (const auto& b : params_.scene.obstacles) {
        if (b.contains(p)) return true;
        if (wake_frame(params_, b, p)) return true;
    }
    return false;
}

Vec3 SyntheticFlow::operator()(const Vec3& p, double t) const {
    for (const auto& b : params_.scene.obstacles)
        if (b.contains(p)) return {};

    const double U = params_.freestream.norm();
    Vec3 v = params_.freestream;
    for (const auto& b : params_.scene.obstacles) {
        const auto f = wake_frame(params_, b, p);
        if (!f) continue;
        // Deficit grows over the obstacle and decays downstream; shedding sways spanwise.
        const double streak = std::sin(std::numbers::pi * f->xi);
        const double env = f->lateral * streak;
        const double phase = params_.shedding_frequency * t - params_.shedding_wavenumber * (p.x - b.max.x);
        v.x -= params_.wake_deficit * U * env * (1.0 + 0.25 * std::cos(phase));
        v.z += params_.shedding_amplitude * U * env * std::sin(phase);
    }

    if (params_.perturbation != 0.0) {
        // ABC-type field: each component depends only on the other two coordinates.
        const Box& d = params_.scene.domain;
        const double k = 2 * std::numbers::pi;
        const double X = k * (p.x - d.min.x) / std::max(d.max.x - d.min.x, 1e-12);
        const double Y = k * (p.y - d.min.y) / std::max(d.max.y - d.min.y, 1e-12);
        const double Z = k * (p.z - d.min.z) / std::max(d.max.z - d.min.z, 1e-12);
        const double w = params_.shedding_frequency * t;
        const double a = params_.perturbation;
        v.x += a * (std::sin(Z + phase_[0] + w) + std::cos(Y + phase_[1]));
        v.y += a * (std::sin(X + phase_[2]) + std::cos(Z + phase_[3] - w));
        v.z += a * (std::sin(Y + phase_[4] + w) + std::cos(X + phase_[5]));
    }

    const double n = v.norm();
    if (n > params_.max_speed) v = v * (params_.max_speed / n);
    return v;
}

store::SnapshotSource synthetic_source(const SyntheticFlowConfig& params) {
    const store::MeshMeta mesh = synthetic_mesh(params);
    const SyntheticFlow flow(params);
    return [mesh, flow, max_speed = params.max_speed](std::size_t index) {
        const auto& g = mesh.grid_dims;
        const Vec3 h = mesh.spacing();
        const double t = mesh.snapshot_times.at(index);
        store::GridSnapshot snap;
        snap.u.resize(mesh.point_count());
        snap.v.resize(mesh.point_count());
        snap.w.resize(mesh.point_count());
        std::size_t n = 0;
        for (std::size_t k = 0; k < g[2]; ++k)
            for (std::size_t j = 0; j < g[1]; ++j)
                for (std::size_t i = 0; i < g[0]; ++i, ++n) {
                    const Vec3 p{mesh.domain_min.x + double(i) * h.x, mesh.domain_min.y + double(j) * h.y,
                                 mesh.domain_min.z + double(k) * h.z};
                    const Vec3 v = flow(p, t);
                    float fu = float(v.x), fv = float(v.y), fw = float(v.z);
                    // Rounding to float may push a clipped vector just past the bound.
                    while (std::sqrt(double(fu) * fu + double(fv) * fv + double(fw) * fw) > max_speed) {
                        fu *= 1.0f - 1e-6f;
                        fv *= 1.0f - 1e-6f;
                        fw *= 1.0f - 1e-6f;
                    }
                    snap.u[n] = fu;
                    snap.v[n] = fv;
                    snap.w[n] = fw;
                }
        return snap;
    };
}

store::MeshMeta synthesize(const SyntheticFlowConfig& params, const std::filesystem::path& out_dir) {
    const store::MeshMeta mesh = synthetic_mesh(params);
    store::ingest(synthetic_source(params), mesh, out_dir);
    return mesh;
}

}  // namespace flownav::synth
