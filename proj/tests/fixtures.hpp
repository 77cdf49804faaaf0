#pragma once

// Seeded fixtures shared by the unit tests and the acceptance binary.

#include <cmath>
#include <numbers>
#include <string>

#include "langseg/adapt.hpp"
#include "langseg/refiner.hpp"
#include "langseg/simulator.hpp"

namespace fixtures {

using namespace langseg;

inline BinaryMask ellipseMask(int w, int h, double cx, double cy, double ra, double rb, double theta) {
    BinaryMask m(w, h);
    const double c = std::cos(theta), s = std::sin(theta);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double dx = x - cx, dy = y - cy;
            double u = (dx * c + dy * s) / ra, v = (-dx * s + dy * c) / rb;
            m(x, y) = u * u + v * v <= 1.0 ? 1 : 0;
        }
    return m;
}

/// Object at 0.65, background at 0.30, soft edge, mild noise.
inline GridImage renderImage(const BinaryMask& gt, std::uint64_t seed, double noise = 0.02) {
    Grid<double> f(gt.width(), gt.height(), 0.0);
    for (std::size_t i = 0; i < gt.size(); ++i) f[i] = gt[i] ? 0.65 : 0.30;
    f = gaussianBlur(f, fullRoi(f), 1.0);
    Rng rng(seed);
    GridImage img(gt.width(), gt.height(), 0.0);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = std::clamp(f[i] + noise * rng.normal(), 0.0, 1.0);
    return img;
}

/// Sector center in the math-convention degrees used by the lobe model.
inline double directionAngle(Direction d) { return sectorCenterDeg(d); }

struct RefinerCase {
    GridImage image;
    BinaryMask gt;
    BinaryMask pred;
    Roi roi;
    OpKind op = OpKind::Expand;
    Direction direction = Direction::Top;
    std::string command;
};

/// Disk or ellipse with one directional erosion (-> EXPAND) or dilation
/// (-> SHRINK) lobe 4..7 px deep; the roi covers object and error with a
/// margin.
inline RefinerCase makeRefinerCase(std::uint64_t seed, double noise = 0.02) {
    Rng rng(mixSeed(seed, 0x4ef));
    const int w = 96, h = 96;
    RefinerCase c;
    double ra = rng.uniform(14.0, 24.0);
    double rb = rng.uniform() < 0.5 ? ra : ra * rng.uniform(0.6, 0.95);
    double cx = rng.uniform(40.0, 56.0), cy = rng.uniform(40.0, 56.0);
    c.gt = ellipseMask(w, h, cx, cy, ra, rb, rng.uniform(0.0, std::numbers::pi));
    c.image = renderImage(c.gt, mixSeed(seed, 0x11a), noise);

    static constexpr std::array<Direction, 8> kDirs = {Direction::Top,     Direction::Bottom,   Direction::Left,
                                                       Direction::Right,   Direction::TopLeft,  Direction::TopRight,
                                                       Direction::BottomLeft, Direction::BottomRight};
    c.direction = kDirs[static_cast<std::size_t>(rng.uniformInt(0, 7))];
    bool erodeLobe = rng.uniform() < 0.5;
    c.op = erodeLobe ? OpKind::Expand : OpKind::Shrink;
    PerturbSpec sp;
    sp.lobes.push_back({directionAngle(c.direction), 40.0, rng.uniformInt(4, 7), erodeLobe});
    sp.seed = mixSeed(seed, 0x9b);
    c.pred = perturbMask(c.gt, sp);

    int x0 = w, y0 = h, x1 = -1, y1 = -1;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (c.gt.fg(x, y) || c.pred.fg(x, y)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    const int margin = 6;
    x0 = std::max(0, x0 - margin);
    y0 = std::max(0, y0 - margin);
    x1 = std::min(w - 1, x1 + margin);
    y1 = std::min(h - 1, y1 + margin);
    c.roi = Roi{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    c.command = std::string(c.op == OpKind::Expand ? "expand" : "shrink") + " the boundary at the " +
                detail::directionPhrases(c.direction).front();
    return c;
}

/// Feedback closure case: phantom GT, mixed perturbation, roi of 21..40 px
/// placed on the GT boundary (one in five placed anywhere).
struct ClosureCase {
    GridImage image;
    BinaryMask gt;
    BinaryMask pred;
    Roi roi;
    FeedbackConfig feedback;
};

inline std::vector<ClosureCase> makeClosureCases(int count, std::uint64_t seed = 99) {
    PhantomSpec ps;
    ps.count = count;
    ps.seed = seed;
    Dataset ds = generatePhantoms(ps);
    std::vector<ClosureCase> out;
    for (int i = 0; i < count; ++i) {
        auto& it = ds.items[static_cast<std::size_t>(i)];
        ClosureCase c;
        c.gt = it.label.classMask(1);
        c.image = std::move(it.image);
        Rng rng(mixSeed(7, static_cast<std::uint64_t>(i)));
        PerturbSpec sp;
        sp.seed = mixSeed(8, static_cast<std::uint64_t>(i));
        int lobes = rng.uniformInt(0, 2);
        for (int l = 0; l < lobes; ++l)
            sp.lobes.push_back({rng.uniform(-180, 180), rng.uniform(20, 70), rng.uniformInt(2, 5), rng.uniform() < 0.5});
        sp.holeCount = rng.uniformInt(0, 2);
        sp.fragmentCount = rng.uniformInt(0, 3);
        sp.jitter = rng.uniform() < 0.3 ? rng.uniform(0.2, 0.8) : 0.0;
        c.pred = perturbMask(c.gt, sp);
        auto bnd = extractBoundary(c.gt, fullRoi(c.gt));
        int size = rng.uniformInt(21, 40);
        Point p = bnd.empty() ? Point{64, 64} : bnd[static_cast<std::size_t>(rng.uniformInt(0, static_cast<int>(bnd.size()) - 1))];
        if (rng.uniform() < 0.2) p = {rng.uniformInt(0, 127), rng.uniformInt(0, 127)};
        c.roi = Roi{std::clamp(p.x - size / 2, 0, 128 - size), std::clamp(p.y - size / 2, 0, 128 - size), size, size};
        c.feedback.seed = static_cast<std::uint64_t>(i);
        out.push_back(std::move(c));
    }
    return out;
}

struct ClosureOutcome {
    bool uniform = false;   // GT all background or all foreground inside the roi
    bool hadFeedback = false;
    double before = 0.0;
    double after = 0.0;
    std::string command;
};

inline ClosureOutcome runClosure(const ClosureCase& c) {
    ClosureOutcome o;
    long long g = countInRoi(c.gt, c.roi);
    o.uniform = g == 0 || g == c.roi.area();
    o.before = diceInRoi(c.pred, c.gt, c.roi);
    o.after = o.before;
    auto items = analyzeRoi(c.pred, c.gt, c.image, c.roi, c.feedback);
    if (items.empty()) return o;
    o.hadFeedback = true;
    o.command = renderFeedback(items, c.feedback);
    Program p = parseCommand(o.command);
    o.after = diceInRoi(execute(p, c.image, c.pred, c.roi).mask, c.gt, c.roi);
    return o;
}

/// Random valid program: 1..5 operations, random directions, occasional
/// numeric overrides.
inline Program randomProgram(Rng& rng) {
    static constexpr std::array<OpKind, 7> kOps = {OpKind::Expand, OpKind::Shrink,     OpKind::Remove,    OpKind::Fill,
                                                   OpKind::Smooth, OpKind::Foreground, OpKind::Background};
    std::vector<std::pair<OpKind, Direction>> ops;
    int n = rng.uniformInt(1, 5);
    for (int k = 0; k < n; ++k) {
        OpKind op = kOps[static_cast<std::size_t>(rng.uniformInt(0, 6))];
        Direction d = kAllDirections[static_cast<std::size_t>(rng.uniformInt(0, 8))];
        ops.push_back({op, d});
    }
    Program p = makeProgram(ops);
    for (auto& st : p.steps) {
        auto keys = overrideKeys(st.op);
        for (auto k : keys)
            if (rng.uniform() < 0.25) st.overrides[std::string(k)] = std::round(rng.uniform(0.01, 40.0) * 1000.0) / 1000.0;
    }
    return p;
}

/// Random feedback list whose ops/directions the renderer can phrase.
inline std::vector<FeedbackItem> randomItems(Rng& rng) {
    static constexpr std::array<OpKind, 7> kOps = {OpKind::Expand, OpKind::Shrink,     OpKind::Remove,    OpKind::Fill,
                                                   OpKind::Smooth, OpKind::Foreground, OpKind::Background};
    std::vector<FeedbackItem> items;
    int n = rng.uniformInt(1, 4);
    for (int k = 0; k < n; ++k) {
        FeedbackItem it;
        it.op = kOps[static_cast<std::size_t>(rng.uniformInt(0, 6))];
        it.direction = it.op == OpKind::Foreground || it.op == OpKind::Background
                           ? Direction::Overall
                           : kAllDirections[static_cast<std::size_t>(rng.uniformInt(0, 8))];
        items.push_back(it);
    }
    return items;
}

} // namespace fixtures
