#include <gtest/gtest.h>

#include <deque>

#include "fixtures.hpp"
#include "langseg/refiner.hpp"

using namespace langseg;

namespace {

GridImage twoTone(const BinaryMask& gt, double lo = 0.2, double hi = 0.8) {
    GridImage img(gt.width(), gt.height(), lo);
    for (std::size_t i = 0; i < gt.size(); ++i) img[i] = gt[i] ? hi : lo;
    return img;
}

// Independent flood fill: no cap, plain 4-neighbour BFS.
BinaryMask bruteCluster(const GridImage& img, const Roi& roi, Point seed, double g) {
    double lo = 1e9, hi = -1e9;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x) {
            lo = std::min(lo, img(x, y));
            hi = std::max(hi, img(x, y));
        }
    BinaryMask out(img.width(), img.height());
    std::deque<Point> q{seed};
    out(seed) = 1;
    while (!q.empty()) {
        Point p = q.front();
        q.pop_front();
        for (Point d : kNeighbors4) {
            Point n{p.x + d.x, p.y + d.y};
            if (!roi.contains(n) || out(n)) continue;
            if (std::abs(img(n) - img(seed)) > g * (hi - lo)) continue;
            out(n) = 1;
            q.push_back(n);
        }
    }
    return out;
}

RefineOp toRefineOp(OpKind k) { return k == OpKind::Expand ? RefineOp::Expand : RefineOp::Shrink; }

} // namespace

TEST(Cluster, TwoToneHalvesAreSeparated) {
    BinaryMask right(20, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 10; x < 20; ++x) right(x, y) = 1;
    GridImage img = twoTone(right);
    Roi roi = fullRoi(img);
    RoiBits left = IntensityClusterer{}.grow(img, roi, Point{3, 3}, ClusterParams{0.1, 1.0});
    long long n = 0;
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) {
            EXPECT_EQ(left(x, y) != 0, x < 10);
            n += left(x, y);
        }
    EXPECT_EQ(n, 200);
}

TEST(Cluster, CapLimitsSizeAndKeepsSeed) {
    GridImage flat(30, 30, 0.5);
    Roi roi{5, 5, 20, 20};
    RoiBits b = IntensityClusterer{}.grow(flat, roi, Point{10, 10}, ClusterParams{0.1, 0.25});
    long long n = 0;
    for (auto v : b.values()) n += v;
    EXPECT_EQ(n, 100);
    EXPECT_EQ(b(5, 5), 1);
}

TEST(Cluster, MonotoneInGranularity) {
    for (std::uint64_t s = 0; s < 30; ++s) {
        BinaryMask gt = fixtures::ellipseMask(40, 40, 20, 19, 11, 8, 0.3 * static_cast<double>(s));
        GridImage img = fixtures::renderImage(gt, s, 0.05);
        Roi roi{4, 4, 32, 32};
        Point seed{20, 19};
        RoiBits prev = IntensityClusterer{}.grow(img, roi, seed, ClusterParams{0.02, 1.0});
        for (double g : {0.05, 0.1, 0.2, 0.4}) {
            RoiBits cur = IntensityClusterer{}.grow(img, roi, seed, ClusterParams{g, 1.0});
            for (std::size_t i = 0; i < cur.size(); ++i)
                if (prev[i]) ASSERT_TRUE(cur[i]) << "seed " << s << " g " << g;
            prev = cur;
        }
    }
}

TEST(Cluster, MatchesBruteForceFloodFill) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        BinaryMask gt = fixtures::ellipseMask(36, 36, 18, 18, 10, 7, 0.2 * static_cast<double>(s));
        GridImage img = fixtures::renderImage(gt, s + 50, 0.03);
        Roi roi{2, 3, 30, 29};
        Point seed{static_cast<int>(4 + s), 17};
        RoiBits got = IntensityClusterer{}.grow(img, roi, seed, ClusterParams{0.15, 1.0});
        BinaryMask want = bruteCluster(img, roi, seed, 0.15);
        for (int y = roi.y; y < roi.bottom(); ++y)
            for (int x = roi.x; x < roi.right(); ++x) ASSERT_EQ(got(x - roi.x, y - roi.y) != 0, want.fg(x, y));
    }
}

TEST(Cluster, RejectsSeedOutsideRoi) {
    GridImage img(10, 10, 0.5);
    EXPECT_THROW(IntensityClusterer{}.grow(img, Roi{0, 0, 5, 5}, Point{7, 7}, {}), InvalidArgument);
}

TEST(Refiner, SampleCountRounding) {
    EXPECT_EQ(sampleCount(0, 20), 0u);
    EXPECT_EQ(sampleCount(3, 20), 1u);
    EXPECT_EQ(sampleCount(50, 20), 10u);
    EXPECT_EQ(sampleCount(52, 20), 10u);
    EXPECT_EQ(sampleCount(53, 20), 11u);
    EXPECT_EQ(sampleCount(7, 100), 7u);
}

TEST(Refiner, HighlightedBoundaryStaysInSector) {
    BinaryMask m = fixtures::ellipseMask(50, 50, 25, 25, 12, 12, 0);
    Roi roi = fullRoi(m);
    auto c = *foregroundCentroid(m, roi);
    for (Direction d : kAllDirections) {
        auto pts = highlightBoundary(m, roi, d);
        EXPECT_FALSE(pts.empty());
        for (Point p : pts) EXPECT_TRUE(inSector(d, angleFromDeg(c.first, c.second, p.x, p.y)));
    }
}

TEST(Refiner, StepMatchesBruteForceIntersection) {
    BinaryMask gt = fixtures::ellipseMask(48, 48, 24, 24, 13, 13, 0);
    GridImage img = twoTone(gt);
    PerturbSpec sp;
    sp.lobes.push_back({0.0, 40.0, 4, true});
    BinaryMask pred = perturbMask(gt, sp);
    Roi roi = fullRoi(gt);
    RefineParams params;
    params.cluster.maxRegionFraction = 1.0;
    auto pairs = samplePointPairs(pred, img, roi, highlightBoundary(pred, roi, Direction::Right), params);
    ASSERT_FALSE(pairs.empty());
    BinaryMask ain(48, 48), aout(48, 48);
    for (const auto& pr : pairs) {
        BinaryMask ci = bruteCluster(img, roi, pr.inner, params.cluster.granularity);
        BinaryMask co = bruteCluster(img, roi, pr.outer, params.cluster.granularity);
        for (std::size_t i = 0; i < ain.size(); ++i) {
            ain[i] |= ci[i];
            aout[i] |= co[i];
        }
    }
    BinaryMask want = pred;
    long long inter = 0, uni = 0;
    for (std::size_t i = 0; i < want.size(); ++i) {
        inter += ain[i] && aout[i];
        uni += ain[i] || aout[i];
        if (ain[i] && aout[i]) want[i] = 1;
    }
    StepOutcome got = refineStep(pred, img, roi, Direction::Right, RefineOp::Expand, params);
    EXPECT_EQ(got.mask, want);
    EXPECT_EQ(got.intersection, inter);
    EXPECT_EQ(got.unionSize, uni);
    EXPECT_DOUBLE_EQ(got.eta, static_cast<double>(inter) / static_cast<double>(uni));
}

TEST(Refiner, ErodedRightDiskRejoinsOnTwoTone) {
    BinaryMask gt = fixtures::ellipseMask(64, 64, 32, 32, 16, 16, 0);
    GridImage img = twoTone(gt);
    PerturbSpec sp;
    sp.lobes.push_back({0.0, 40.0, 5, true});
    BinaryMask pred = perturbMask(gt, sp);
    Roi roi{8, 8, 48, 48};
    auto res = refine(pred, img, roi, Direction::Right, RefineOp::Expand, RefineParams{});
    EXPECT_GT(diceInRoi(res.mask, gt, roi), diceInRoi(pred, gt, roi));
    // clusters respect the true edge: nothing is added outside the object
    for (std::size_t i = 0; i < gt.size(); ++i)
        if (res.mask[i] && !pred[i]) EXPECT_TRUE(gt[i]);
}

TEST(Refiner, DilatedTopDiskShrinksOnTwoTone) {
    BinaryMask gt = fixtures::ellipseMask(64, 64, 32, 32, 15, 12, 0.3);
    GridImage img = twoTone(gt);
    PerturbSpec sp;
    sp.lobes.push_back({90.0, 40.0, 5, false});
    BinaryMask pred = perturbMask(gt, sp);
    Roi roi{6, 6, 52, 52};
    auto res = refine(pred, img, roi, Direction::Top, RefineOp::Shrink, RefineParams{});
    EXPECT_GT(diceInRoi(res.mask, gt, roi), diceInRoi(pred, gt, roi));
    for (std::size_t i = 0; i < gt.size(); ++i)
        if (!res.mask[i] && pred[i]) EXPECT_FALSE(gt[i]);
}

TEST(Refiner, TinyGranularityReturnsInput) {
    auto c = fixtures::makeRefinerCase(3);
    RefineParams p;
    p.cluster.granularity = 1e-9;
    auto res = refine(c.pred, c.image, c.roi, c.direction, toRefineOp(c.op), p);
    EXPECT_EQ(res.mask, c.pred);
}

TEST(Refiner, EmptyMaskWarnsAndPassesThrough) {
    BinaryMask empty(20, 20);
    GridImage img(20, 20, 0.5);
    auto res = refine(empty, img, fullRoi(img), Direction::Top, RefineOp::Expand, RefineParams{});
    EXPECT_EQ(res.mask, empty);
    EXPECT_FALSE(res.warnings.empty());
    EXPECT_EQ(res.bestIter, 1);
}

TEST(Refiner, EtaTraceCsv) {
    EtaTrace t{{1, 0.5, 0}, {2, 0.25, 1}};
    EXPECT_EQ(etaTraceCsv(t), "t,eta\n1,0.5\n2,0.25\n");
}

TEST(Refiner, RejectsBadParams) {
    RefineParams p;
    p.samplePercent = 0;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = {};
    p.offset = 0;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = {};
    p.cluster.granularity = 1.0;
    EXPECT_THROW(p.validate(), InvalidArgument);
}

// Property sweep: monotone snapshots, eta range, earliest-argmin selection,
// locality. 1200 seeded cases over both operations and all directions.
TEST(RefinerProperties, MonotoneEtaAndArgmin) {
    int cases = 0;
    for (std::uint64_t s = 0; s < 150; ++s) {
        auto c = fixtures::makeRefinerCase(s, s % 3 == 0 ? 0.0 : 0.03);
        for (Direction d : {Direction::Top, Direction::Right, Direction::BottomLeft, Direction::Overall})
            for (RefineOp op : {RefineOp::Expand, RefineOp::Shrink}) {
                ++cases;
                auto res = refine(c.pred, c.image, c.roi, d, op, RefineParams{});
                ASSERT_EQ(res.trace.size(), res.snapshots.size());
                ASSERT_FALSE(res.trace.empty());
                for (std::size_t k = 0; k + 1 < res.snapshots.size(); ++k) {
                    const auto& a = res.snapshots[k];
                    const auto& b = res.snapshots[k + 1];
                    for (std::size_t i = 0; i < a.size(); ++i) {
                        if (op == RefineOp::Expand && a[i]) ASSERT_TRUE(b[i]);
                        if (op == RefineOp::Shrink && b[i]) ASSERT_TRUE(a[i]);
                    }
                }
                double best = 2.0;
                int firstBest = 0;
                for (const auto& e : res.trace) {
                    ASSERT_GE(e.eta, 0.0);
                    ASSERT_LE(e.eta, 1.0);
                    if (e.eta < best) {
                        best = e.eta;
                        firstBest = e.iteration;
                    }
                }
                ASSERT_EQ(res.bestIter, firstBest);
                ASSERT_EQ(res.mask, res.snapshots[res.trace[static_cast<std::size_t>(firstBest - 1)].snapshot]);
                ASSERT_TRUE(identicalOutside(res.mask, c.pred, c.roi));
            }
    }
    EXPECT_GE(cases, 1000);
}

TEST(RefinerProperties, Deterministic) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto c = fixtures::makeRefinerCase(s);
        auto a = refine(c.pred, c.image, c.roi, c.direction, toRefineOp(c.op), RefineParams{});
        auto b = refine(c.pred, c.image, c.roi, c.direction, toRefineOp(c.op), RefineParams{});
        EXPECT_EQ(a.mask, b.mask);
        ASSERT_EQ(a.trace.size(), b.trace.size());
        for (std::size_t k = 0; k < a.trace.size(); ++k) EXPECT_EQ(a.trace[k].eta, b.trace[k].eta);
    }
}

TEST(RefinerOracle, MostFixturesImprove) {
    int improved = 0;
    for (std::uint64_t s = 0; s < 40; ++s) {
        auto c = fixtures::makeRefinerCase(s);
        auto res = refine(c.pred, c.image, c.roi, c.direction, toRefineOp(c.op), RefineParams{});
        improved += diceInRoi(res.mask, c.gt, c.roi) > diceInRoi(c.pred, c.gt, c.roi);
        EXPECT_TRUE(identicalOutside(res.mask, c.pred, c.roi));
    }
    EXPECT_GE(improved, 36);
}
