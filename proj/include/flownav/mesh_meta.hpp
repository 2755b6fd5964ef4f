#pragma once

#include "flownav/geometry.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include <json.hpp>

namespace flownav::store {

using Index3 = std::array<std::size_t, 3>;

/// Global description of a block-decomposed dataset. Lengths in h, times in h/U_inf.
struct MeshMeta {
    Vec3 domain_min;
    Vec3 domain_max;
    Index3 grid_dims{0, 0, 0};
    std::vector<double> snapshot_times;
    Index3 block_size{10, 10, 10};
    Index3 block_stride{8, 8, 8};
    std::vector<Box> obstacles;
    double h = 1.0;
    double u_inf = 1.0;

    Box domain() const { return {domain_min, domain_max}; }
    Vec3 spacing() const;
    /// Shortest block edge in physical units.
    double min_block_extent() const;
    std::size_t point_count() const { return grid_dims[0] * grid_dims[1] * grid_dims[2]; }
    std::size_t snapshot_count() const { return snapshot_times.size(); }
    Scene scene() const { return {domain(), obstacles, true}; }

    /// Throws Error("invalid_mesh") on any broken invariant.
    void validate() const;
};

void to_json(nlohmann::json& j, const MeshMeta& m);
void from_json(const nlohmann::json& j, MeshMeta& m);

MeshMeta read_mesh_json(const std::filesystem::path& path);
void write_mesh_json(const std::filesystem::path& path, const MeshMeta& mesh);

}  // namespace flownav::store
