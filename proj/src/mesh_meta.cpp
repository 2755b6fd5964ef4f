#include "flownav/mesh_meta.hpp"

#include "flownav/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace flownav::store {

namespace {

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

Vec3 json_vec(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw Error("invalid_mesh", "expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void require(bool cond, const std::string& what) {
    if (!cond) throw Error("invalid_mesh", what);
}

}  // namespace

Vec3 MeshMeta::spacing() const {
    Vec3 s;
    for (int a = 0; a < 3; ++a)
        s[a] = grid_dims[a] > 1 ? (domain_max[a] - domain_min[a]) / double(grid_dims[a] - 1) : 0.0;
    return s;
}

double MeshMeta::min_block_extent() const {
    const Vec3 s = spacing();
    return std::min({double(block_size[0] - 1) * s.x, double(block_size[1] - 1) * s.y, double(block_size[2] - 1) * s.z});
}

void MeshMeta::validate() const {
    for (int a = 0; a < 3; ++a) {
        require(std::isfinite(domain_min[a]) && std::isfinite(domain_max[a]),
                "domain bounds must be finite");
        require(domain_max[a] > domain_min[a], "domain_max must exceed domain_min on every axis");
        require(grid_dims[a] >= 2, "grid_dims must be at least 2 on every axis");
        require(block_size[a] >= 2, "block_size must be at least 2 on every axis");
        require(block_stride[a] >= 1, "block_stride must be positive");
        require(block_stride[a] <= block_size[a], "block_stride must not exceed block_size");
    }
    require(!snapshot_times.empty(), "snapshot_times must not be empty");
    for (std::size_t i = 1; i < snapshot_times.size(); ++i)
        require(snapshot_times[i] > snapshot_times[i - 1], "snapshot_times must be strictly increasing");
    require(h > 0.0 && u_inf > 0.0, "h and u_inf must be positive");
    for (const auto& b : obstacles) {
        require(b.valid(), "obstacle box has min > max");
        require(domain().contains(b), "obstacle box lies outside the domain");
    }
}

void to_json(nlohmann::json& j, const MeshMeta& m) {
    nlohmann::json obstacles = nlohmann::json::array();
    for (const auto& b : m.obstacles) obstacles.push_back({{"min", vec_json(b.min)}, {"max", vec_json(b.max)}});
    j = {
        {"domain_min", vec_json(m.domain_min)},
        {"domain_max", vec_json(m.domain_max)},
        {"grid_dims", m.grid_dims},
        {"snapshot_times", m.snapshot_times},
        {"block_size", m.block_size},
        {"block_stride", m.block_stride},
        {"obstacles", obstacles},
        {"h", m.h},
        {"u_inf", m.u_inf},
    };
}

void from_json(const nlohmann::json& j, MeshMeta& m) {
    try {
        m.domain_min = json_vec(j.at("domain_min"));
        m.domain_max = json_vec(j.at("domain_max"));
        m.grid_dims = j.at("grid_dims").get<Index3>();
        m.snapshot_times = j.at("snapshot_times").get<std::vector<double>>();
        m.block_size = j.at("block_size").get<Index3>();
        m.block_stride = j.at("block_stride").get<Index3>();
        m.obstacles.clear();
        for (const auto& o : j.at("obstacles")) m.obstacles.push_back({json_vec(o.at("min")), json_vec(o.at("max"))});
        m.h = j.value("h", 1.0);
        m.u_inf = j.value("u_inf", 1.0);
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid_mesh", std::string("mesh.json: ") + e.what());
    }
}

MeshMeta read_mesh_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("missing_dataset", "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid_mesh", path.string() + ": " + e.what());
    }
    MeshMeta m = j.get<MeshMeta>();
    m.validate();
    return m;
}

void write_mesh_json(const std::filesystem::path& path, const MeshMeta& mesh) {
    std::ofstream out(path);
    if (!out) throw Error("io_error", "cannot write " + path.string());
    out << nlohmann::json(mesh).dump(2) << '\n';
    if (!out) throw Error("io_error", "write failed for " + path.string());
}

}  // namespace flownav::store
