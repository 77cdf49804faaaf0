#pragma once

/**
 * @file simulator.hpp
 * @brief Synthesizes expert language feedback for a roi from ground truth.
 *
 * Decision order inside the roi:
 *   1. ground truth uniformly foreground / background -> FOREGROUND / BACKGROUND
 *   2. dominant boundary error: FN -> EXPAND, FP -> SHRINK, directed from the
 *      prediction-boundary centroid to the error centroid
 *   3. small predicted components disjoint from ground truth -> REMOVE
 *   4. enclosed prediction holes that are ground-truth foreground -> FILL
 *   5. boundary much rougher than ground truth -> SMOOTH
 * Fragment and hole pixels are excluded from the FN/FP tally of step 2 since
 * steps 3 and 4 address them.
 */

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "langseg/command.hpp"
#include "langseg/grid.hpp"
#include "langseg/rng.hpp"

namespace langseg {

struct FeedbackEvidence {
    long long fnArea = 0;
    long long fpArea = 0;
    double fromX = 0.0, fromY = 0.0;  // reference point (boundary centroid or roi center)
    double toX = 0.0, toY = 0.0;      // error centroid
};

struct FeedbackItem {
    OpKind op = OpKind::Expand;
    Direction direction = Direction::Overall;
    FeedbackEvidence evidence{};
};

struct FeedbackConfig {
    double dominanceMinArea = 4.0;          // tau, pixels
    std::optional<double> fragMaxArea;      // pixels; default 5% of roi area
    double roughnessThresh = 1.5;           // ratio of isoperimetric roughness pred/gt
    std::uint64_t seed = 0;
    bool varyPhrasing = true;               // false: always the first template

    double fragLimit(const Roi& roi) const {
        return fragMaxArea ? *fragMaxArea : 0.05 * static_cast<double>(roi.area());
    }
};

namespace detail {

/// Foreground pixel edges facing background inside the roi.
inline long long boundaryEdges(const BinaryMask& m, const Roi& roi) {
    long long edges = 0;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x) {
            if (!m.fg(x, y)) continue;
            for (Point d : kNeighbors4) {
                int nx = x + d.x, ny = y + d.y;
                if (roi.contains(nx, ny) && !m.fg(nx, ny)) ++edges;
            }
        }
    return edges;
}

/// Isoperimetric roughness perimeter^2 / (4 pi area) of the roi-clipped
/// foreground, against a caller-supplied reference area.
inline double roughness(const BinaryMask& m, const Roi& roi, double area) {
    if (!(area > 0.0)) return 0.0;
    auto e = static_cast<double>(boundaryEdges(m, roi));
    return e * e / (4.0 * std::numbers::pi * area);
}

inline double roughness(const BinaryMask& m, const Roi& roi) {
    return roughness(m, roi, static_cast<double>(countInRoi(m, roi)));
}

/// Background components of `m` inside the roi that do not touch the roi edge.
inline std::vector<Component> enclosedHoles(const BinaryMask& m, const Roi& roi) {
    BinaryMask inv(m.width(), m.height(), 0);
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x) inv(x, y) = m.fg(x, y) ? 0 : 1;
    std::vector<Component> holes;
    for (auto& c : connectedComponents(inv, roi, 4)) {
        bool touches = false;
        for (Point p : c.pixels)
            if (p.x == roi.x || p.y == roi.y || p.x == roi.right() - 1 || p.y == roi.bottom() - 1) {
                touches = true;
                break;
            }
        if (!touches) holes.push_back(std::move(c));
    }
    return holes;
}

} // namespace detail

/// Compares prediction and ground truth inside the roi and lists the
/// corrective operations an expert would ask for.
inline std::vector<FeedbackItem> analyzeRoi(const BinaryMask& pred, const BinaryMask& gt, const GridImage& img,
                                            const Roi& roi, const FeedbackConfig& cfg = {}) {
    requireSameShape(pred, gt, "analyzeRoi");
    requireSameShape(pred, img, "analyzeRoi");
    requireRoi(roi, pred);
    std::vector<FeedbackItem> items;

    long long gtCount = countInRoi(gt, roi), mismatches = 0;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x) mismatches += pred.fg(x, y) != gt.fg(x, y);
    if (mismatches == 0) return items;
    if (gtCount == roi.area() || gtCount == 0) {
        FeedbackItem it{gtCount ? OpKind::Foreground : OpKind::Background, Direction::Overall, {}};
        it.evidence.fromX = it.evidence.toX = roi.centerX();
        it.evidence.fromY = it.evidence.toY = roi.centerY();
        items.push_back(it);
        return items;
    }

    const double fragLimit = cfg.fragLimit(roi);
    const double rcx = roi.centerX(), rcy = roi.centerY();

    // Small predicted components: false fragments vs. small true pieces.
    struct Fragment {
        Component comp;
        Direction sector;
    };
    std::vector<Fragment> fragments;
    std::set<Direction> unsafeSectors;
    for (auto& c : connectedComponents(pred, roi, 8)) {
        if (static_cast<double>(c.area) >= fragLimit) continue;
        bool touchesGt = false;
        for (Point p : c.pixels)
            if (gt.fg(p)) {
                touchesGt = true;
                break;
            }
        Direction sector = directionOf(angleFromDeg(rcx, rcy, c.cx, c.cy));
        if (touchesGt)
            unsafeSectors.insert(sector);
        else
            fragments.push_back({std::move(c), sector});
    }
    BinaryMask handled(pred.width(), pred.height(), 0);

    // Enclosed holes that ground truth marks as foreground.
    std::vector<Component> holes;
    for (auto& h : detail::enclosedHoles(pred, roi)) {
        long long inGt = 0;
        for (Point p : h.pixels) inGt += gt.fg(p);
        if (2 * inGt >= h.area) holes.push_back(std::move(h));
    }
    for (const auto& h : holes)
        for (Point p : h.pixels) handled(p) = 1;

    std::vector<FeedbackItem> removals;
    if (!fragments.empty()) {
        std::set<Direction> sectors;
        for (const auto& f : fragments) sectors.insert(f.sector);
        auto evidenceFor = [&](std::optional<Direction> only) {
            FeedbackEvidence ev{};
            double sx = 0, sy = 0;
            for (const auto& f : fragments) {
                if (only && f.sector != *only) continue;
                ev.fpArea += f.comp.area;
                sx += f.comp.cx * static_cast<double>(f.comp.area);
                sy += f.comp.cy * static_cast<double>(f.comp.area);
            }
            ev.fromX = rcx;
            ev.fromY = rcy;
            ev.toX = sx / static_cast<double>(ev.fpArea);
            ev.toY = sy / static_cast<double>(ev.fpArea);
            return ev;
        };
        if (sectors.size() > 1 && unsafeSectors.empty()) {
            removals.push_back({OpKind::Remove, Direction::Overall, evidenceFor(std::nullopt)});
        } else {
            for (Direction s : kAllDirections)
                if (sectors.count(s) && !unsafeSectors.count(s)) removals.push_back({OpKind::Remove, s, evidenceFor(s)});
        }
        for (const auto& f : fragments)
            for (Point p : f.comp.pixels) handled(p) = 1;
    }

    // Dominant boundary error.
    long long fn = 0, fp = 0;
    double fnx = 0, fny = 0, fpx = 0, fpy = 0;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x) {
            if (handled.fg(x, y)) continue;
            bool p = pred.fg(x, y), g = gt.fg(x, y);
            if (g && !p) {
                ++fn;
                fnx += x;
                fny += y;
            } else if (p && !g) {
                ++fp;
                fpx += x;
                fpy += y;
            }
        }
    const double tau = cfg.dominanceMinArea;
    std::optional<OpKind> boundaryOp;
    if (fn > fp && static_cast<double>(fn) >= tau) boundaryOp = OpKind::Expand;
    if (fp > fn && static_cast<double>(fp) >= tau) boundaryOp = OpKind::Shrink;
    if (boundaryOp) {
        auto boundary = extractBoundary(pred, roi);
        if (!boundary.empty()) {
            double bx = 0, by = 0;
            for (Point p : boundary) {
                bx += p.x;
                by += p.y;
            }
            bx /= static_cast<double>(boundary.size());
            by /= static_cast<double>(boundary.size());
            bool expand = *boundaryOp == OpKind::Expand;
            double tx = expand ? fnx / fn : fpx / fp, ty = expand ? fny / fn : fpy / fp;
            FeedbackItem it{*boundaryOp, Direction::Overall, {fn, fp, bx, by, tx, ty}};
            if (std::hypot(tx - bx, ty - by) > 1e-9) it.direction = directionOf(angleFromDeg(bx, by, tx, ty));
            items.push_back(it);
        }
    }

    items.insert(items.end(), removals.begin(), removals.end());

    if (!holes.empty()) {
        FeedbackItem it{OpKind::Fill, Direction::Overall, {}};
        double sx = 0, sy = 0;
        for (const auto& h : holes) {
            it.evidence.fnArea += h.area;
            sx += h.cx * static_cast<double>(h.area);
            sy += h.cy * static_cast<double>(h.area);
        }
        it.evidence.fromX = rcx;
        it.evidence.fromY = rcy;
        it.evidence.toX = sx / static_cast<double>(it.evidence.fnArea);
        it.evidence.toY = sy / static_cast<double>(it.evidence.fnArea);
        // Name the sector when every hole lies in one, so closing does not
        // also bridge concavities elsewhere in the roi.
        std::set<Direction> sectors;
        for (const auto& h : holes) sectors.insert(directionOf(angleFromDeg(rcx, rcy, h.cx, h.cy)));
        if (sectors.size() == 1) it.direction = *sectors.begin();
        items.push_back(it);
    }

    // Both quotients use the ground-truth area so that a thinner or thicker
    // prediction (a boundary error) does not read as a rough one. Fragments
    // and holes already have their own operations.
    BinaryMask body = pred;
    for (std::size_t i = 0; i < body.size(); ++i)
        if (handled[i]) body[i] = pred[i] ? 0 : 1;
    const auto gtArea = static_cast<double>(gtCount);
    double rp = detail::roughness(body, roi, gtArea), rg = detail::roughness(gt, roi, gtArea);
    if (rg > 0.0 && rp > cfg.roughnessThresh * rg) {
        FeedbackItem it{OpKind::Smooth, Direction::Overall, {}};
        it.evidence.fromX = it.evidence.toX = rcx;
        it.evidence.fromY = it.evidence.toY = rcy;
        items.push_back(it);
    }
    return items;
}

// ---------------------------------------------------------------------------
// Phrasing

namespace detail {

inline const std::vector<std::string>& directionPhrases(Direction d) {
    static const std::array<std::vector<std::string>, 9> kPhrases = {{
        {"top", "upper side", "top side"},
        {"bottom", "lower side", "bottom side"},
        {"left", "left side", "left border"},
        {"right", "right side", "right border"},
        {"top-left corner", "upper left corner", "top left"},
        {"top-right corner", "upper right corner", "top right"},
        {"bottom-left corner", "lower left corner", "bottom left"},
        {"bottom-right corner", "lower right corner", "bottom right"},
        {"overall boundary", "entire boundary", "whole boundary"},
    }};
    return kPhrases[static_cast<std::size_t>(d)];
}

struct Templates {
    std::vector<std::string> directional;  // "{}" is replaced by a direction phrase
    std::vector<std::string> overall;
};

inline const Templates& templatesFor(OpKind op) {
    static const Templates kExpand{{"expand the boundary at the {}", "grow the mask toward the {}",
                                    "enlarge the region at the {}", "extend the boundary to the {}"},
                                   {"expand the overall boundary", "grow the whole mask", "enlarge the entire region"}};
    static const Templates kShrink{{"shrink the boundary at the {}", "contract the mask from the {}",
                                    "reduce the region at the {}", "shrink it from the {}"},
                                   {"shrink the overall boundary", "contract the whole mask", "reduce the entire region"}};
    static const Templates kRemove{{"remove the fragments at the {}", "delete the small fragments at the {}",
                                    "erase the stray pieces at the {}"},
                                   {"remove the small fragments", "delete the stray fragments", "erase the small pieces"}};
    static const Templates kFill{{"fill the holes at the {}", "fill up the gaps at the {}"},
                                 {"fill up the holes", "fill the holes", "fill in the gaps"}};
    static const Templates kSmooth{{"smooth the {} border", "smoothen the boundary at the {}"},
                                   {"smooth the overall boundary", "smoothen the entire boundary", "smooth the whole outline"}};
    static const Templates kForeground{{}, {"mark the whole region as foreground", "the entire region is foreground"}};
    static const Templates kBackground{{}, {"mark the whole region as background", "the entire region is background"}};
    switch (op) {
        case OpKind::Expand: return kExpand;
        case OpKind::Shrink: return kShrink;
        case OpKind::Remove: return kRemove;
        case OpKind::Fill: return kFill;
        case OpKind::Smooth: return kSmooth;
        case OpKind::Foreground: return kForeground;
        case OpKind::Background: return kBackground;
        case OpKind::Result: break;
    }
    throw InvalidArgument("RESULT has no feedback phrasing");
}

} // namespace detail

/// Phrases a list of feedback items as one command. Clauses keep item order
/// and are joined so that parseCommand recovers exactly the same
/// (operation, direction) sequence.
inline std::string renderFeedback(const std::vector<FeedbackItem>& items, const FeedbackConfig& cfg = {}) {
    if (items.empty()) throw InvalidArgument("renderFeedback needs at least one item");
    Rng rng(cfg.seed);
    auto pick = [&](const std::vector<std::string>& options) -> const std::string& {
        if (!cfg.varyPhrasing || options.size() == 1) return options.front();
        return options[static_cast<std::size_t>(rng.uniformInt(0, static_cast<int>(options.size()) - 1))];
    };
    std::vector<std::string> clauses;
    for (const auto& it : items) {
        const auto& t = detail::templatesFor(it.op);
        bool overall = it.direction == Direction::Overall || t.directional.empty();
        std::string clause;
        if (overall) {
            clause = pick(t.overall);
        } else {
            clause = pick(t.directional);
            auto at = clause.find("{}");
            clause.replace(at, 2, pick(detail::directionPhrases(it.direction)));
        }
        clauses.push_back(std::move(clause));
    }
    std::string text;
    for (std::size_t i = 0; i < clauses.size(); ++i) {
        if (i > 0) {
            if (clauses.size() == 2)
                text += " and ";
            else
                text += i + 1 == clauses.size() ? ", and " : ", ";
        }
        text += clauses[i];
    }
    text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    return text + ".";
}

} // namespace langseg
