#pragma once

/**
 * @file acquisition.hpp
 * @brief Budgeted roi selection: entropy scoring, greedy disjoint windows,
 *        and the seeded random baseline.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "langseg/grid.hpp"
#include "langseg/rng.hpp"

namespace langseg {

struct BudgetPlan {
    double budgetPercent = 5.0;  // B: percent of image area over all rounds
    int rounds = 3;              // R
    int roiW = 21;
    int roiH = 21;

    void validate() const {
        if (!(budgetPercent > 0.0 && budgetPercent <= 100.0)) throw InvalidArgument("budget must be in (0,100]");
        if (rounds < 1) throw InvalidArgument("rounds must be >= 1");
        if (roiW < 1 || roiH < 1) throw InvalidArgument("roi size must be >= 1");
    }

    /// Windows per image per round: floor((B/R)% of the image / roi area),
    /// but at least one.
    int roisPerRound(int width, int height) const {
        validate();
        double area = budgetPercent / 100.0 / rounds * static_cast<double>(width) * height;
        auto b = static_cast<int>(std::floor(area / (static_cast<double>(roiW) * roiH)));
        return std::max(1, b);
    }
};

struct ScoredRoi {
    Roi roi;
    double score = 0.0;
};

/// Per-pixel Shannon entropy -sum p ln p (0 ln 0 = 0).
inline Grid<double> entropyMap(const ProbMap& p) {
    Grid<double> h(p.width(), p.height(), 0.0);
    for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < p.width(); ++x) {
            double s = 0.0;
            for (double v : p.pixel(x, y))
                if (v > 0.0) s -= v * std::log(v);
            h(x, y) = std::max(0.0, s);
        }
    return h;
}

/// Scoring interface for acquisition functions.
class AcquisitionScorer {
public:
    virtual ~AcquisitionScorer() = default;
    virtual Grid<double> score(const ProbMap& p) const = 0;
};

class EntropyScorer : public AcquisitionScorer {
public:
    Grid<double> score(const ProbMap& p) const override { return entropyMap(p); }
};

/// Mean score of every roiW x roiH window, indexed by the window's top-left.
/// Sums are formed in a fixed order so equal inputs give bit-equal means.
inline Grid<double> windowMeans(const Grid<double>& score, int roiW, int roiH) {
    const int nx = score.width() - roiW + 1, ny = score.height() - roiH + 1;
    if (nx < 1 || ny < 1) throw InvalidArgument("roi does not fit in the score map");
    Grid<double> rows(nx, score.height(), 0.0);
    for (int y = 0; y < score.height(); ++y)
        for (int x = 0; x < nx; ++x) {
            double s = 0.0;
            for (int i = 0; i < roiW; ++i) s += score(x + i, y);
            rows(x, y) = s;
        }
    Grid<double> means(nx, ny, 0.0);
    const double inv = 1.0 / (static_cast<double>(roiW) * roiH);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            double s = 0.0;
            for (int j = 0; j < roiH; ++j) s += rows(x, y + j);
            means(x, y) = s * inv;
        }
    return means;
}

inline bool overlapsAny(const Roi& r, const std::vector<Roi>& others) {
    return std::any_of(others.begin(), others.end(), [&](const Roi& o) { return r.overlaps(o); });
}

/// Greedy selection of the highest-mean windows that overlap neither each
/// other nor `excluded`. Ties go to the smaller (y, x).
inline std::vector<ScoredRoi> selectRois(const Grid<double>& score, const BudgetPlan& plan,
                                         const std::vector<Roi>& excluded) {
    const int budget = plan.roisPerRound(score.width(), score.height());
    Grid<double> means = windowMeans(score, plan.roiW, plan.roiH);
    std::vector<std::size_t> order(means.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return means[a] > means[b]; });

    std::vector<ScoredRoi> picked;
    std::vector<Roi> blocked = excluded;
    for (std::size_t idx : order) {
        if (static_cast<int>(picked.size()) >= budget) break;
        Roi r{static_cast<int>(idx % static_cast<std::size_t>(means.width())),
              static_cast<int>(idx / static_cast<std::size_t>(means.width())), plan.roiW, plan.roiH};
        if (overlapsAny(r, blocked)) continue;
        picked.push_back({r, means[idx]});
        blocked.push_back(r);
    }
    return picked;
}

/// Uniformly random disjoint windows from a seeded generator. Gives up on a
/// slot after a bounded number of rejected draws.
inline std::vector<ScoredRoi> randomRois(int width, int height, const BudgetPlan& plan,
                                         const std::vector<Roi>& excluded, std::uint64_t seed) {
    const int budget = plan.roisPerRound(width, height);
    if (plan.roiW > width || plan.roiH > height) throw InvalidArgument("roi does not fit in the image");
    Rng rng(seed);
    std::vector<ScoredRoi> picked;
    std::vector<Roi> blocked = excluded;
    constexpr int kAttempts = 1000;
    for (int slot = 0; slot < budget; ++slot) {
        bool found = false;
        for (int a = 0; a < kAttempts && !found; ++a) {
            Roi r{rng.uniformInt(0, width - plan.roiW), rng.uniformInt(0, height - plan.roiH), plan.roiW, plan.roiH};
            if (overlapsAny(r, blocked)) continue;
            picked.push_back({r, 0.0});
            blocked.push_back(r);
            found = true;
        }
        if (!found) break;
    }
    return picked;
}

} // namespace langseg
