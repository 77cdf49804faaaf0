#pragma once

/**
 * @file cluster.hpp
 * @brief Granularity-controlled seed clustering.
 *
 * A cluster is the set of pixels reachable from a seed through 4-neighbors
 * whose intensity stays within `granularity * contrast` of the seed's, where
 * contrast is the max-min intensity range of the roi. Seeds on opposite
 * sides of an intensity edge therefore produce near-disjoint clusters.
 */

#include <algorithm>
#include <cmath>
#include <vector>

#include "langseg/grid.hpp"

namespace langseg {

struct ClusterParams {
    double granularity = 0.1;
    /// Cluster growth stops once it holds this fraction of the roi area.
    double maxRegionFraction = 0.5;

    void validate() const {
        if (!(granularity > 0.0 && granularity < 1.0)) throw InvalidArgument("granularity must be in (0,1)");
        if (!(maxRegionFraction > 0.0 && maxRegionFraction <= 1.0))
            throw InvalidArgument("maxRegionFraction must be in (0,1]");
    }
};

/// Roi-local cluster bitmap: `bits(x - roi.x, y - roi.y)`.
using RoiBits = Grid<std::uint8_t>;

/// Pluggable clustering backend.
class Clusterer {
public:
    virtual ~Clusterer() = default;
    virtual RoiBits grow(const GridImage& img, const Roi& roi, Point seed, const ClusterParams& params) const = 0;
};

namespace detail {

inline std::pair<double, double> roiRange(const GridImage& img, const Roi& roi) {
    double lo = img(roi.x, roi.y), hi = lo;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x) {
            lo = std::min(lo, img(x, y));
            hi = std::max(hi, img(x, y));
        }
    return {lo, hi};
}

} // namespace detail

/// Breadth-first intensity flood fill.
class IntensityClusterer : public Clusterer {
public:
    RoiBits grow(const GridImage& img, const Roi& roi, Point seed, const ClusterParams& params) const override {
        requireRoi(roi, img);
        params.validate();
        if (!roi.contains(seed)) throw InvalidArgument("cluster seed lies outside the roi");
        auto [lo, hi] = detail::roiRange(img, roi);
        const double tol = params.granularity * (hi - lo);
        const double ref = img(seed);
        const auto cap = std::max<long long>(
            1, static_cast<long long>(std::floor(params.maxRegionFraction * static_cast<double>(roi.area()))));

        RoiBits bits(roi.w, roi.h, 0);
        std::vector<Point> queue{seed};
        bits(seed.x - roi.x, seed.y - roi.y) = 1;
        long long count = 1;
        for (std::size_t head = 0; head < queue.size() && count < cap; ++head) {
            Point p = queue[head];
            for (Point d : kNeighbors4) {
                Point q{p.x + d.x, p.y + d.y};
                if (!roi.contains(q) || bits(q.x - roi.x, q.y - roi.y)) continue;
                if (std::abs(img(q) - ref) > tol) continue;
                bits(q.x - roi.x, q.y - roi.y) = 1;
                queue.push_back(q);
                if (++count >= cap) break;
            }
        }
        return bits;
    }
};

/// Full-image mask of the intensity cluster grown from `seed`.
inline BinaryMask growCluster(const GridImage& img, const Roi& roi, Point seed, const ClusterParams& params) {
    RoiBits bits = IntensityClusterer{}.grow(img, roi, seed, params);
    BinaryMask m(img.width(), img.height(), 0);
    for (int y = 0; y < roi.h; ++y)
        for (int x = 0; x < roi.w; ++x) m(roi.x + x, roi.y + y) = bits(x, y);
    return m;
}

} // namespace langseg
