#pragma once

#include "flownav/vec3.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <queue>
#include <span>
#include <vector>

namespace flownav::store {

struct Neighbor {
    std::size_t id = 0;
    double distance = 0.0;
};

/// Static 3-d tree over a point set. k-NN results are ordered by (distance, id), so equal
/// distances break toward the smaller id.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        nodes_.reserve(points_.size());
        if (!points_.empty()) root_ = build(0, order_.size(), 0);
    }

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const Vec3& point(std::size_t id) const { return points_[id]; }

    std::vector<Neighbor> nearest(const Vec3& q, std::size_t k) const {
        std::vector<Neighbor> out;
        if (points_.empty() || k == 0) return out;
        k = std::min(k, points_.size());
        Heap heap;
        search(root_, q, k, heap);
        out.resize(heap.size());
        for (std::size_t i = out.size(); i-- > 0;) {
            out[i] = {heap.top().id, heap.top().dist};
            heap.pop();
        }
        return out;
    }

private:
    struct Node {
        std::size_t id;
        int axis;
        std::int64_t left = -1;
        std::int64_t right = -1;
    };
    struct Candidate {
        double dist;  ///< ranked on the reported distance so equal outputs always order by id
        std::size_t id;
        bool operator<(const Candidate& o) const { return dist < o.dist || (dist == o.dist && id < o.id); }
    };
    using Heap = std::priority_queue<Candidate>;

    static double sq_dist(const Vec3& a, const Vec3& b) {
        const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
        return dx * dx + dy * dy + dz * dz;
    }

    std::int64_t build(std::size_t lo, std::size_t hi, int depth) {
        if (lo >= hi) return -1;
        const int axis = depth % 3;
        const std::size_t mid = lo + (hi - lo) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](std::size_t a, std::size_t b) {
                             const double pa = points_[a][axis], pb = points_[b][axis];
                             return pa < pb || (pa == pb && a < b);
                         });
        const auto self = std::int64_t(nodes_.size());
        nodes_.push_back({order_[mid], axis});
        const auto l = build(lo, mid, depth + 1);
        const auto r = build(mid + 1, hi, depth + 1);
        nodes_[self].left = l;
        nodes_[self].right = r;
        return self;
    }

    void search(std::int64_t n, const Vec3& q, std::size_t k, Heap& heap) const {
        if (n < 0) return;
        const Node& node = nodes_[std::size_t(n)];
        const Candidate c{std::sqrt(sq_dist(points_[node.id], q)), node.id};
        if (heap.size() < k) {
            heap.push(c);
        } else if (c < heap.top()) {
            heap.pop();
            heap.push(c);
        }
        const double diff = q[node.axis] - points_[node.id][node.axis];
        const auto near = diff <= 0.0 ? node.left : node.right;
        const auto far = diff <= 0.0 ? node.right : node.left;
        search(near, q, k, heap);
        // <= keeps subtrees that may hold an equal-distance point with a smaller id.
        if (heap.size() < k || std::abs(diff) <= heap.top().dist * (1.0 + 1e-12)) search(far, q, k, heap);
    }

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    std::int64_t root_ = -1;
};

}  // namespace flownav::store
