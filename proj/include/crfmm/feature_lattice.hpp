#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace crfmm {

/// Numeric view of a lattice: what the CRF sees. Point layer t holds one
/// feature row per candidate; path layer t holds, for every candidate pair
/// (i, j), a block of feature rows, one per feasible path.
struct FeatureLattice {
    std::size_t point_dim = 0;
    std::size_t path_dim = 0;

    struct PointLayer {
        std::size_t count = 0;
        std::vector<double> features;  // [count * point_dim]
    };
    struct PathLayer {
        std::size_t from_count = 0;
        std::size_t to_count = 0;
        std::vector<std::size_t> pair_offset;  // [from*to + 1], path rows of pair k: [off[k], off[k+1])
        std::vector<double> features;          // [total paths * path_dim]

        std::size_t pair(std::size_t i, std::size_t j) const { return i * to_count + j; }
        std::size_t first_path(std::size_t i, std::size_t j) const { return pair_offset[pair(i, j)]; }
        std::size_t path_count(std::size_t i, std::size_t j) const {
            return pair_offset[pair(i, j) + 1] - pair_offset[pair(i, j)];
        }
    };

    std::vector<PointLayer> points;
    std::vector<PathLayer> paths;  // points.size() - 1 entries

    std::size_t size() const { return points.size(); }
    std::size_t dim() const { return point_dim + path_dim; }

    std::span<const double> point_row(std::size_t t, std::size_t c) const {
        return {points[t].features.data() + c * point_dim, point_dim};
    }
    /// Row of the p-th path of pair (i, j) at gap t.
    std::span<const double> path_row(std::size_t t, std::size_t i, std::size_t j, std::size_t p) const {
        const auto& layer = paths[t];
        return {layer.features.data() + (layer.first_path(i, j) + p) * path_dim, path_dim};
    }
};

} // namespace crfmm
