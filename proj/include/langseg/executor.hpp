#pragma once

/**
 * @file executor.hpp
 * @brief Runs a Program against an image, an initial mask and a roi.
 */

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "langseg/command.hpp"
#include "langseg/grid.hpp"
#include "langseg/refiner.hpp"

namespace langseg {

/// Per-operation defaults; program overrides win.
struct ExecConfig {
    RefineParams refine{};
    int fillRadius = 3;
    double smoothSigma = 2.0;
    double smoothThresh = 0.5;
    double fragFraction = 0.05;  // REMOVE area threshold as a fraction of roi area
};

struct StepRecord {
    std::size_t index = 0;
    OpKind op = OpKind::Result;
    Direction direction = Direction::Overall;
    std::string inVar;
    std::string outVar;
    std::map<std::string, double> args;  // effective parameters
    std::vector<EtaEntry> etaTrace;      // EXPAND/SHRINK only
    int bestIter = 0;
    long long changedPixels = 0;
    std::vector<std::string> warnings;
};

struct ExecLog {
    std::vector<StepRecord> steps;

    bool hasWarnings() const {
        for (const auto& s : steps)
            if (!s.warnings.empty()) return true;
        return false;
    }
};

class ExecEnv {
public:
    ExecEnv(GridImage image, BinaryMask initialMask, Roi roi, ExecConfig config = {})
        : image_(std::move(image)), roi_(roi), config_(config) {
        requireSameShape(image_, initialMask, "ExecEnv");
        requireRoi(roi_, image_);
        bindings_.emplace("MASK", std::move(initialMask));
    }

    const GridImage& image() const noexcept { return image_; }
    const BinaryMask& initialMask() const { return bindings_.at("MASK"); }
    const Roi& roi() const noexcept { return roi_; }
    const ExecConfig& config() const noexcept { return config_; }
    const ExecLog& log() const noexcept { return log_; }
    ExecLog& log() noexcept { return log_; }

    const BinaryMask& lookup(const std::string& name, int line = 0) const {
        auto it = bindings_.find(name);
        if (it == bindings_.end())
            throw ParseError(ParseError::Kind::UnboundVariable, "variable '" + name + "' is not bound", line);
        return it->second;
    }
    bool bound(const std::string& name) const { return bindings_.count(name) != 0; }
    void bind(const std::string& name, BinaryMask m) { bindings_.insert_or_assign(name, std::move(m)); }

private:
    GridImage image_;
    Roi roi_;
    ExecConfig config_;
    std::map<std::string, BinaryMask> bindings_;
    ExecLog log_;
};

struct ExecResult {
    BinaryMask mask;
    ExecLog log;
};

namespace detail {

inline double overrideOr(const Step& s, const char* key, double fallback) {
    auto it = s.overrides.find(key);
    return it == s.overrides.end() ? fallback : it->second;
}

inline bool centroidInSector(Direction dir, const Roi& roi, double cx, double cy) {
    return dir == Direction::Overall || inSector(dir, angleFromDeg(roi.centerX(), roi.centerY(), cx, cy));
}

inline BinaryMask removeFragments(const BinaryMask& m, const Roi& roi, Direction dir, double areaThresh) {
    BinaryMask out = m;
    for (const auto& c : connectedComponents(m, roi, 8)) {
        if (static_cast<double>(c.area) >= areaThresh) continue;
        if (!centroidInSector(dir, roi, c.cx, c.cy)) continue;
        for (Point p : c.pixels) out(p) = 0;
    }
    return out;
}

inline BinaryMask fillHoles(const BinaryMask& m, const Roi& roi, Direction dir, int radius) {
    BinaryMask closed = morphClose(m, roi, radius);
    if (dir == Direction::Overall) return closed;
    BinaryMask added(m.width(), m.height(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) added[i] = closed[i] && !m[i];
    BinaryMask out = m;
    for (const auto& c : connectedComponents(added, roi, 8)) {
        if (!centroidInSector(dir, roi, c.cx, c.cy)) continue;
        for (Point p : c.pixels) out(p) = 1;
    }
    return out;
}

inline BinaryMask smoothSector(const BinaryMask& m, const Roi& roi, Direction dir, double sigma, double thresh) {
    BinaryMask smoothed = gaussianSmoothThreshold(m, roi, sigma, thresh);
    if (dir == Direction::Overall) return smoothed;
    BinaryMask out = m;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x)
            if (centroidInSector(dir, roi, x, y)) out(x, y) = smoothed(x, y);
    return out;
}

inline BinaryMask fillRoi(const BinaryMask& m, const Roi& roi, std::uint8_t v) {
    BinaryMask out = m;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x) out(x, y) = v;
    return out;
}

inline long long diffCount(const BinaryMask& a, const BinaryMask& b) {
    long long n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
    return n;
}

} // namespace detail

/// Runs one non-RESULT step. Failures are reported as warnings and the
/// input passes through unchanged.
inline BinaryMask executeStep(const Step& s, const BinaryMask& in, const ExecEnv& env, StepRecord& rec) {
    const Roi& roi = env.roi();
    const ExecConfig& cfg = env.config();
    try {
        switch (s.op) {
            case OpKind::Expand:
            case OpKind::Shrink: {
                RefineParams rp = cfg.refine;
                rp.samplePercent = detail::overrideOr(s, "samplePercent", rp.samplePercent);
                rp.offset = static_cast<int>(std::lround(detail::overrideOr(s, "offset", rp.offset)));
                rp.maxIters = static_cast<int>(std::lround(detail::overrideOr(s, "maxIters", rp.maxIters)));
                rp.cluster.granularity = detail::overrideOr(s, "granularity", rp.cluster.granularity);
                rec.args = {{"samplePercent", rp.samplePercent},
                            {"offset", rp.offset},
                            {"maxIters", rp.maxIters},
                            {"granularity", rp.cluster.granularity},
                            {"maxRegionFraction", rp.cluster.maxRegionFraction}};
                auto res = refine(in, env.image(), roi, s.direction,
                                  s.op == OpKind::Expand ? RefineOp::Expand : RefineOp::Shrink, rp);
                rec.etaTrace = res.trace;
                rec.bestIter = res.bestIter;
                rec.warnings.insert(rec.warnings.end(), res.warnings.begin(), res.warnings.end());
                return std::move(res.mask);
            }
            case OpKind::Remove: {
                double area = detail::overrideOr(s, "area", cfg.fragFraction * static_cast<double>(roi.area()));
                rec.args = {{"area", area}};
                return detail::removeFragments(in, roi, s.direction, area);
            }
            case OpKind::Fill: {
                int radius = static_cast<int>(std::lround(detail::overrideOr(s, "radius", cfg.fillRadius)));
                rec.args = {{"radius", radius}};
                return detail::fillHoles(in, roi, s.direction, radius);
            }
            case OpKind::Smooth: {
                double sigma = detail::overrideOr(s, "sigma", cfg.smoothSigma);
                double thresh = detail::overrideOr(s, "thresh", cfg.smoothThresh);
                rec.args = {{"sigma", sigma}, {"thresh", thresh}};
                return detail::smoothSector(in, roi, s.direction, sigma, thresh);
            }
            case OpKind::Foreground: return detail::fillRoi(in, roi, 1);
            case OpKind::Background: return detail::fillRoi(in, roi, 0);
            case OpKind::Result: return in;
        }
    } catch (const Error& e) {
        rec.warnings.push_back(std::string(opName(s.op)) + " failed: " + e.what());
    }
    return in;
}

/// Executes the program step by step. Each step's output is bound to its
/// output variable; RESULT returns the named binding. The returned mask
/// differs from the initial mask only inside the roi.
inline ExecResult execute(const Program& p, ExecEnv& env) {
    BinaryMask result = env.initialMask();
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
        const Step& s = p.steps[i];
        StepRecord rec;
        rec.index = i;
        rec.op = s.op;
        rec.direction = s.direction;
        rec.inVar = s.inVar;
        rec.outVar = s.outVar;
        const BinaryMask& in = env.lookup(s.inVar, static_cast<int>(i) + 1);
        BinaryMask out = executeStep(s, in, env, rec);
        out = spliceRoi(env.initialMask(), out, env.roi());
        rec.changedPixels = detail::diffCount(in, out);
        if (s.op == OpKind::Result) result = out;
        env.bind(s.outVar, std::move(out));
        env.log().steps.push_back(std::move(rec));
    }
    return {std::move(result), env.log()};
}

/// Convenience overload that builds the environment.
inline ExecResult execute(const Program& p, const GridImage& image, const BinaryMask& mask, const Roi& roi,
                          const ExecConfig& cfg = {}) {
    ExecEnv env(image, mask, roi, cfg);
    return execute(p, env);
}

/// Writes a refined binary patch into a label map. Inside the roi, patch
/// foreground becomes `classId` and patch background becomes label 0.
/// `patch` is either roi-sized or full-sized (read at roi coordinates).
inline LabelMask applyPatch(const LabelMask& full, const Roi& roi, const BinaryMask& patch, int classId) {
    requireRoi(roi, full);
    if (classId < 0 || classId >= full.classCount())
        throw InvalidArgument("classId " + std::to_string(classId) + " out of range");
    const bool local = patch.width() == roi.w && patch.height() == roi.h;
    if (!local && !patch.sameShape(full)) throw DimensionError("applyPatch: patch is neither roi-sized nor full-sized");
    LabelMask out = full;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x) {
            bool on = local ? patch.fg(x - roi.x, y - roi.y) : patch.fg(x, y);
            out(x, y) = on ? static_cast<std::uint8_t>(classId) : 0;
        }
    return out;
}

/// Roi-sized crop of a mask.
inline BinaryMask cropRoi(const BinaryMask& m, const Roi& roi) {
    requireRoi(roi, m);
    BinaryMask out(roi.w, roi.h);
    for (int y = 0; y < roi.h; ++y)
        for (int x = 0; x < roi.w; ++x) out(x, y) = m(roi.x + x, roi.y + y);
    return out;
}

} // namespace langseg
