#pragma once

#include "flownav/block_store.hpp"
#include "flownav/flow_field.hpp"

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>

namespace flownav::testing {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "flownav") {
        std::string tmpl = (std::filesystem::temp_directory_path() / (tag + "-XXXXXX")).string();
        if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

using Field = std::function<Vec3(const Vec3&, double)>;

/// Grid node position.
inline Vec3 node(const store::MeshMeta& m, std::size_t i, std::size_t j, std::size_t k) {
    const Vec3 h = m.spacing();
    return {m.domain_min.x + double(i) * h.x, m.domain_min.y + double(j) * h.y, m.domain_min.z + double(k) * h.z};
}

/// Samples `f` on the mesh grid, one snapshot per time.
inline store::SnapshotSource field_source(const store::MeshMeta& m, Field f) {
    return [m, f](std::size_t s) {
        store::GridSnapshot g;
        const auto n = m.point_count();
        g.u.resize(n);
        g.v.resize(n);
        g.w.resize(n);
        std::size_t idx = 0;
        for (std::size_t k = 0; k < m.grid_dims[2]; ++k)
            for (std::size_t j = 0; j < m.grid_dims[1]; ++j)
                for (std::size_t i = 0; i < m.grid_dims[0]; ++i, ++idx) {
                    const Vec3 v = f(node(m, i, j, k), m.snapshot_times[s]);
                    g.u[idx] = float(v.x);
                    g.v[idx] = float(v.y);
                    g.w[idx] = float(v.z);
                }
        return g;
    };
}

/// Mesh with n points per axis, spacing h from `origin`, and the given snapshot times.
inline store::MeshMeta cube_mesh(store::Index3 n, Vec3 origin, Vec3 h, std::vector<double> times) {
    store::MeshMeta m;
    m.domain_min = origin;
    m.domain_max = {origin.x + h.x * double(n[0] - 1), origin.y + h.y * double(n[1] - 1),
                    origin.z + h.z * double(n[2] - 1)};
    m.grid_dims = n;
    m.snapshot_times = std::move(times);
    return m;
}

inline std::shared_ptr<store::BlockStore> build_store(const store::MeshMeta& m, Field f,
                                                      const std::filesystem::path& dir, std::size_t cache = 512) {
    store::ingest(field_source(m, std::move(f)), m, dir);
    return std::make_shared<store::BlockStore>(dir, cache);
}

inline double rel_err(double got, double want) {
    const double scale = std::max(1.0, std::abs(want));
    return std::abs(got - want) / scale;
}

}  // namespace flownav::testing
