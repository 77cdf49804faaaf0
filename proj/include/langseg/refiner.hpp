#pragma once

/**
 * @file refiner.hpp
 * @brief Iterative directional EXPAND / SHRINK of a predicted mask.
 *
 * Each iteration highlights the part of the predicted boundary facing the
 * requested direction, samples point pairs just inside and just outside it,
 * grows a cluster from every point and forms
 *
 *     A_in  = union of clusters grown from inner points
 *     A_out = union of clusters grown from outer points
 *
 * EXPAND adds A_in ∩ A_out to the mask, SHRINK removes it. The overlap ratio
 * eta = |A_in ∩ A_out| / |A_in ∪ A_out| is small when the boundary separates
 * two intensity regions, so the iterate with the smallest eta is returned.
 */

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "langseg/cluster.hpp"
#include "langseg/grid.hpp"

namespace langseg {

enum class RefineOp { Expand, Shrink };

struct RefineParams {
    double samplePercent = 20.0;  // s: percent of highlighted boundary pixels sampled
    int offset = 2;               // d: normal displacement of inner/outer points
    int maxIters = 15;            // T_max
    ClusterParams cluster{};

    void validate() const {
        if (!(samplePercent > 0.0 && samplePercent <= 100.0)) throw InvalidArgument("samplePercent must be in (0,100]");
        if (offset < 1) throw InvalidArgument("offset must be >= 1");
        if (maxIters < 1) throw InvalidArgument("maxIters must be >= 1");
        cluster.validate();
    }
};

struct PointPair {
    Point inner;
    Point outer;
    friend bool operator==(const PointPair&, const PointPair&) = default;
};

struct EtaEntry {
    int iteration = 0;     // t, 1-based
    double eta = 1.0;
    std::size_t snapshot = 0;  // index into RefinementResult::snapshots
};

using EtaTrace = std::vector<EtaEntry>;

struct RefinementResult {
    BinaryMask mask;                    // snapshot with minimum eta
    EtaTrace trace;
    std::vector<BinaryMask> snapshots;  // snapshots[k] is the mask evaluated at trace[k]
    int bestIter = 1;
    std::vector<std::string> warnings;
};

struct StepOutcome {
    BinaryMask mask;
    double eta = 1.0;
    std::size_t pairCount = 0;
    long long intersection = 0;
    long long unionSize = 0;
};

/// Boundary pixels of the roi-restricted foreground whose angle from the
/// foreground centroid falls in `dir`'s sector. Sorted by angle relative to
/// the sector center so the arc is contiguous (Overall: by absolute angle).
inline std::vector<Point> highlightBoundary(const BinaryMask& m, const Roi& roi, Direction dir) {
    auto centroid = foregroundCentroid(m, roi);
    if (!centroid) return {};
    auto [cx, cy] = *centroid;
    const double center = dir == Direction::Overall ? 0.0 : sectorCenterDeg(dir);
    struct Keyed {
        double key;
        Point p;
    };
    std::vector<Keyed> keyed;
    for (Point p : extractBoundary(m, roi)) {
        double a = angleFromDeg(cx, cy, p.x, p.y);
        if (!inSector(dir, a)) continue;
        double rel = a - center;
        if (rel > 180.0) rel -= 360.0;
        if (rel <= -180.0) rel += 360.0;
        keyed.push_back({rel, p});
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        if (a.key != b.key) return a.key < b.key;
        return a.p < b.p;
    });
    std::vector<Point> out;
    out.reserve(keyed.size());
    for (const auto& k : keyed) out.push_back(k.p);
    return out;
}

/// Number of pixels sampled from a highlighted list of the given size.
inline std::size_t sampleCount(std::size_t highlighted, double samplePercent) {
    if (highlighted == 0) return 0;
    auto n = static_cast<std::size_t>(std::llround(samplePercent / 100.0 * static_cast<double>(highlighted)));
    return std::clamp<std::size_t>(n, 1, highlighted);
}

/// Inner/outer point pairs along the centroid-to-pixel ray. Pairs whose
/// inner point is not foreground, whose outer point is not background, or
/// that leave the roi are discarded (never relocated).
inline std::vector<PointPair> samplePointPairs(const BinaryMask& m, const GridImage& img, const Roi& roi,
                                               const std::vector<Point>& highlighted, const RefineParams& params) {
    requireSameShape(m, img, "samplePointPairs");
    std::vector<PointPair> pairs;
    if (highlighted.empty()) return pairs;
    auto centroid = foregroundCentroid(m, roi);
    if (!centroid) return pairs;
    auto [cx, cy] = *centroid;
    const std::size_t total = highlighted.size();
    const std::size_t n = sampleCount(total, params.samplePercent);
    for (std::size_t i = 0; i < n; ++i) {
        Point p = highlighted[(2 * i + 1) * total / (2 * n)];
        double ux = p.x - cx, uy = p.y - cy;
        double len = std::hypot(ux, uy);
        if (len < 1e-9) continue;
        ux /= len;
        uy /= len;
        auto ox = static_cast<int>(std::lround(params.offset * ux));
        auto oy = static_cast<int>(std::lround(params.offset * uy));
        Point outer{p.x + ox, p.y + oy};
        Point inner{p.x - ox, p.y - oy};
        if (!roi.contains(inner) || !roi.contains(outer)) continue;
        if (!m.fg(inner) || m.fg(outer)) continue;
        pairs.push_back({inner, outer});
    }
    return pairs;
}

/// One EXPAND/SHRINK update. With no valid point pairs the mask is returned
/// unchanged with eta = 1.
inline StepOutcome refineStep(const BinaryMask& m, const GridImage& img, const Roi& roi, Direction dir, RefineOp op,
                              const RefineParams& params, const Clusterer& clusterer = IntensityClusterer{}) {
    requireSameShape(m, img, "refineStep");
    requireRoi(roi, m);
    params.validate();
    StepOutcome out{m, 1.0, 0, 0, 0};
    auto pairs = samplePointPairs(m, img, roi, highlightBoundary(m, roi, dir), params);
    out.pairCount = pairs.size();
    if (pairs.empty()) return out;

    RoiBits inner(roi.w, roi.h, 0), outer(roi.w, roi.h, 0);
    auto accumulate = [](RoiBits& acc, const RoiBits& c) {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] |= c[i];
    };
    for (const auto& pr : pairs) {
        accumulate(inner, clusterer.grow(img, roi, pr.inner, params.cluster));
        accumulate(outer, clusterer.grow(img, roi, pr.outer, params.cluster));
    }
    for (int y = 0; y < roi.h; ++y)
        for (int x = 0; x < roi.w; ++x) {
            bool a = inner(x, y), b = outer(x, y);
            out.unionSize += a || b;
            if (!(a && b)) continue;
            ++out.intersection;
            out.mask(roi.x + x, roi.y + y) = op == RefineOp::Expand ? 1 : 0;
        }
    out.eta = out.unionSize == 0 ? 1.0 : static_cast<double>(out.intersection) / static_cast<double>(out.unionSize);
    return out;
}

/// Iterates refineStep up to maxIters times, recomputing the highlighted
/// boundary from the updated mask each time. eta_t is measured on the mask
/// P_t that iteration t starts from; the P_t with the smallest eta wins, ties
/// going to the earliest t. Stops early at a fixed point or when no point
/// pair survives.
inline RefinementResult refine(const BinaryMask& m, const GridImage& img, const Roi& roi, Direction dir, RefineOp op,
                               const RefineParams& params, const Clusterer& clusterer = IntensityClusterer{}) {
    requireSameShape(m, img, "refine");
    requireRoi(roi, m);
    params.validate();
    RefinementResult res;
    BinaryMask current = m;
    for (int t = 1; t <= params.maxIters; ++t) {
        StepOutcome step = refineStep(current, img, roi, dir, op, params, clusterer);
        res.snapshots.push_back(current);
        res.trace.push_back({t, step.eta, res.snapshots.size() - 1});
        if (step.pairCount == 0) {
            res.warnings.push_back("iteration " + std::to_string(t) + ": no valid inner/outer point pairs");
            break;
        }
        if (step.mask == current) break;
        current = std::move(step.mask);
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < res.trace.size(); ++k)
        if (res.trace[k].eta < res.trace[best].eta) best = k;
    res.bestIter = res.trace[best].iteration;
    res.mask = res.snapshots[res.trace[best].snapshot];
    return res;
}

/// `t,eta` CSV with a header row.
inline std::string etaTraceCsv(const EtaTrace& trace) {
    std::ostringstream os;
    os.precision(17);
    os << "t,eta\n";
    for (const auto& e : trace) os << e.iteration << ',' << e.eta << '\n';
    return os.str();
}

} // namespace langseg
