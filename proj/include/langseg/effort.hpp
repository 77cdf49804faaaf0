#pragma once

/**
 * @file effort.hpp
 * @brief Annotation-effort accounting: polygon vertices vs. spoken words.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "langseg/grid.hpp"

namespace langseg {

struct EffortModel {
    double secondsPerVertex = 5.55;
    double wordsPerMinute = 130.0;

    void validate() const {
        if (!(secondsPerVertex > 0.0) || !(wordsPerMinute > 0.0))
            throw InvalidArgument("effort model constants must be > 0");
    }
};

struct EffortReport {
    long long vertexCount = 0;
    double polygonHours = 0.0;
    long long wordCount = 0;
    double lingualHours = 0.0;
    double deltaPercent = 0.0;  // (polygon - lingual) / polygon * 100
};

inline EffortReport estimate(long long vertexCount, long long wordCount, const EffortModel& model = {}) {
    model.validate();
    if (vertexCount < 0 || wordCount < 0) throw InvalidArgument("counts must be >= 0");
    EffortReport r;
    r.vertexCount = vertexCount;
    r.wordCount = wordCount;
    r.polygonHours = static_cast<double>(vertexCount) * model.secondsPerVertex / 3600.0;
    r.lingualHours = static_cast<double>(wordCount) / model.wordsPerMinute / 60.0;
    if (r.polygonHours == 0.0) throw InvalidArgument("time reduction undefined: polygon time is zero");
    r.deltaPercent = (r.polygonHours - r.lingualHours) / r.polygonHours * 100.0;
    return r;
}

/// Whitespace-delimited tokens over all commands.
inline long long countWords(const std::vector<std::string>& commands) {
    long long n = 0;
    for (const auto& c : commands) {
        std::istringstream is(c);
        std::string tok;
        while (is >> tok) ++n;
    }
    return n;
}

struct EffortRow {
    std::string label;
    EffortReport report;
};

/// Aligned text table: label, #vertices, polygon hours, #words, language
/// hours, time delta.
inline std::string formatEffortTable(const std::vector<EffortRow>& rows) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s %10s %10s %10s %10s %9s\n", "Case", "#Vertices", "Poly(hr)", "#Words",
                  "Lang(hr)", "Delta");
    out += buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-16s %10lld %10.2f %10lld %10.2f %8.1f%%\n", r.label.c_str(),
                      r.report.vertexCount, r.report.polygonHours, r.report.wordCount, r.report.lingualHours,
                      -r.report.deltaPercent);
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Contours

/// Outer boundaries (Moore-neighbor tracing, clockwise in image space) of
/// the 8-connected foreground components inside `roi`.
inline std::vector<std::vector<Point>> traceContours(const BinaryMask& m, const Roi& roi) {
    static constexpr std::array<Point, 8> kRing = {Point{-1, 0}, Point{-1, -1}, Point{0, -1}, Point{1, -1},
                                                   Point{1, 0},  Point{1, 1},   Point{0, 1},  Point{-1, 1}};
    auto ringIndex = [](int dx, int dy) {
        for (int i = 0; i < 8; ++i)
            if (kRing[static_cast<std::size_t>(i)].x == dx && kRing[static_cast<std::size_t>(i)].y == dy) return i;
        return 0;
    };
    auto on = [&](int x, int y) { return roi.contains(x, y) && m.fg(x, y); };

    std::vector<std::vector<Point>> contours;
    for (const auto& comp : connectedComponents(m, roi, 8)) {
        const Point start = comp.pixels.front();  // raster-first: its west neighbor is background
        std::vector<Point> contour{start};
        Point p = start;
        int back = 0;  // direction from p to its backtrack (background) pixel
        const std::size_t limit = 4 * static_cast<std::size_t>(comp.area) + 8;
        for (std::size_t steps = 0; steps < limit; ++steps) {
            bool moved = false;
            Point next{};
            int nextBack = 0;
            for (int k = 1; k <= 8; ++k) {
                int d = (back + k) % 8;
                Point q{p.x + kRing[static_cast<std::size_t>(d)].x, p.y + kRing[static_cast<std::size_t>(d)].y};
                if (!on(q.x, q.y)) continue;
                Point prev{p.x + kRing[static_cast<std::size_t>((d + 7) % 8)].x,
                           p.y + kRing[static_cast<std::size_t>((d + 7) % 8)].y};
                next = q;
                nextBack = ringIndex(prev.x - q.x, prev.y - q.y);
                moved = true;
                break;
            }
            if (!moved) break;  // isolated pixel
            // Stop when the first move out of the start pixel is about to repeat.
            if (p == start && contour.size() > 1 && next == contour[1]) break;
            contour.push_back(next);
            p = next;
            back = nextBack;
        }
        if (contour.size() > 1 && contour.back() == start) contour.pop_back();
        contours.push_back(std::move(contour));
    }
    return contours;
}

enum class ContourKind { Open, Closed };

namespace detail {

inline double segmentDistance(Point p, Point a, Point b) {
    double vx = b.x - a.x, vy = b.y - a.y, wx = p.x - a.x, wy = p.y - a.y;
    double len2 = vx * vx + vy * vy;
    if (len2 == 0.0) return std::hypot(wx, wy);
    double t = std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0);
    return std::hypot(wx - t * vx, wy - t * vy);
}

inline std::vector<Point> douglasPeucker(const std::vector<Point>& pts, double eps) {
    if (pts.size() < 3) return pts;
    std::vector<char> keep(pts.size(), 0);
    keep[0] = 1;
    keep[pts.size() - 1] = 1;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, pts.size() - 1}};
    while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        double best = -1.0;
        std::size_t at = a;
        for (std::size_t i = a + 1; i < b; ++i) {
            double d = segmentDistance(pts[i], pts[a], pts[b]);
            if (d > best) {
                best = d;
                at = i;
            }
        }
        if (best > eps) {
            keep[at] = 1;
            stack.push_back({a, at});
            stack.push_back({at, b});
        }
    }
    std::vector<Point> out;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (keep[i]) out.push_back(pts[i]);
    return out;
}

} // namespace detail

/// Douglas-Peucker simplification. Closed contours are split at their
/// farthest-apart point pair, both halves simplified, then merged. Contours
/// with fewer than three points are returned as-is.
inline std::vector<Point> simplifyContour(const std::vector<Point>& contour, double epsilon,
                                          ContourKind kind = ContourKind::Closed) {
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
    if (contour.size() < 3) return contour;
    if (kind == ContourKind::Open) return detail::douglasPeucker(contour, epsilon);

    std::size_t bi = 0, bj = 0;
    long long best = -1;
    for (std::size_t i = 0; i < contour.size(); ++i)
        for (std::size_t j = i + 1; j < contour.size(); ++j) {
            long long dx = contour[i].x - contour[j].x, dy = contour[i].y - contour[j].y;
            if (dx * dx + dy * dy > best) {
                best = dx * dx + dy * dy;
                bi = i;
                bj = j;
            }
        }
    if (best == 0) return {contour.front()};
    std::vector<Point> first(contour.begin() + static_cast<std::ptrdiff_t>(bi),
                             contour.begin() + static_cast<std::ptrdiff_t>(bj) + 1);
    std::vector<Point> second(contour.begin() + static_cast<std::ptrdiff_t>(bj), contour.end());
    second.insert(second.end(), contour.begin(), contour.begin() + static_cast<std::ptrdiff_t>(bi) + 1);
    auto a = detail::douglasPeucker(first, epsilon);
    auto b = detail::douglasPeucker(second, epsilon);
    a.insert(a.end(), b.begin() + 1, b.end() - 1);
    return a;
}

/// Largest distance from any contour point to the simplified polyline
/// (closing edge included for closed contours).
inline double maxDeviation(const std::vector<Point>& contour, const std::vector<Point>& simplified,
                           ContourKind kind = ContourKind::Closed) {
    if (simplified.empty()) return 0.0;
    double worst = 0.0;
    for (Point p : contour) {
        double best = simplified.size() == 1 ? std::hypot(p.x - simplified[0].x, p.y - simplified[0].y) : INFINITY;
        std::size_t edges = kind == ContourKind::Closed ? simplified.size() : simplified.size() - 1;
        for (std::size_t i = 0; i < edges; ++i)
            best = std::min(best, detail::segmentDistance(p, simplified[i], simplified[(i + 1) % simplified.size()]));
        worst = std::max(worst, best);
    }
    return worst;
}

/// Polygon vertices an annotator would place to delineate the foreground
/// inside `roi`.
inline long long polygonVertexCount(const BinaryMask& m, const Roi& roi, double epsilon = 1.5) {
    long long n = 0;
    for (const auto& c : traceContours(m, roi)) n += static_cast<long long>(simplifyContour(c, epsilon).size());
    return n;
}

} // namespace langseg
