#pragma once

/**
 * @file grid.hpp
 * @brief Raster types, ROI geometry, boundary/component extraction,
 *        morphology and the Dice metric.
 *
 * Coordinates are pixel indices with the origin at the top-left corner and
 * y increasing downward. Every ROI-scoped operation leaves pixels outside
 * its ROI bit-identical.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "langseg/error.hpp"

namespace langseg {

struct Point {
    int x = 0;
    int y = 0;

    friend bool operator==(const Point&, const Point&) = default;
    /// Raster order: (y, x).
    friend bool operator<(const Point& a, const Point& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    }
};

/// Axis-aligned rectangle. Valid ROIs lie fully inside their image.
struct Roi {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    friend bool operator==(const Roi&, const Roi&) = default;

    long long area() const { return static_cast<long long>(w) * h; }
    int right() const { return x + w; }   // exclusive
    int bottom() const { return y + h; }  // exclusive
    bool contains(int px, int py) const { return px >= x && px < right() && py >= y && py < bottom(); }
    bool contains(Point p) const { return contains(p.x, p.y); }
    bool overlaps(const Roi& o) const {
        return x < o.right() && o.x < right() && y < o.bottom() && o.y < bottom();
    }
    double centerX() const { return x + (w - 1) / 2.0; }
    double centerY() const { return y + (h - 1) / 2.0; }
};

/// Dense row-major raster.
template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
        if (width < 0 || height < 0) throw InvalidArgument("grid dimensions must be non-negative");
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }
    Grid(int width, int height, std::vector<T> values) : width_(width), height_(height), data_(std::move(values)) {
        if (width < 0 || height < 0) throw InvalidArgument("grid dimensions must be non-negative");
        if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw DimensionError("grid payload length does not match width*height");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    bool inBounds(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
    T& operator()(Point p) noexcept { return (*this)(p.x, p.y); }
    const T& operator()(Point p) const noexcept { return (*this)(p.x, p.y); }
    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    template <typename U>
    bool sameShape(const Grid<U>& o) const noexcept {
        return width_ == o.width() && height_ == o.height();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// Intensities in [0,1].
class GridImage : public Grid<double> {
public:
    using Grid<double>::Grid;

    /// Throws InvalidArgument if any value lies outside [0,1] or is not finite.
    void validate() const {
        for (double v : values())
            if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("image intensity outside [0,1]");
    }
    friend bool operator==(const GridImage&, const GridImage&) = default;
};

/// Foreground indicator for one class; stored as 0/1 bytes.
class BinaryMask : public Grid<std::uint8_t> {
public:
    using Grid<std::uint8_t>::Grid;

    bool fg(int x, int y) const noexcept { return (*this)(x, y) != 0; }
    bool fg(Point p) const noexcept { return (*this)(p) != 0; }
    long long count() const {
        long long n = 0;
        for (auto v : values()) n += v != 0;
        return n;
    }
    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Per-pixel class ids in [0, classCount). Label 0 is background.
class LabelMask : public Grid<std::uint8_t> {
public:
    LabelMask() = default;
    LabelMask(int width, int height, int classCount, std::uint8_t fill = 0)
        : Grid<std::uint8_t>(width, height, fill), classCount_(classCount) {
        if (classCount < 2 || classCount > 256) throw InvalidArgument("classCount must be in [2,256]");
    }

    int classCount() const noexcept { return classCount_; }
    void setClassCount(int c) {
        if (c < 2 || c > 256) throw InvalidArgument("classCount must be in [2,256]");
        classCount_ = c;
    }

    void validate() const {
        for (auto v : values())
            if (v >= classCount_) throw InvalidArgument("label id >= classCount");
    }

    BinaryMask classMask(int classId) const {
        BinaryMask m(width(), height());
        for (std::size_t i = 0; i < size(); ++i) m[i] = (*this)[i] == classId ? 1 : 0;
        return m;
    }

    friend bool operator==(const LabelMask&, const LabelMask&) = default;

private:
    int classCount_ = 2;
};

/// Per-pixel class probabilities, pixel-major (C values per pixel).
class ProbMap {
public:
    ProbMap() = default;
    ProbMap(int width, int height, int classCount)
        : width_(width), height_(height), classCount_(classCount),
          probs_(static_cast<std::size_t>(width) * height * classCount, 0.0) {
        if (classCount < 2) throw InvalidArgument("ProbMap needs at least two classes");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int classCount() const noexcept { return classCount_; }

    std::span<double> pixel(int x, int y) {
        return {probs_.data() + (static_cast<std::size_t>(y) * width_ + x) * classCount_,
                static_cast<std::size_t>(classCount_)};
    }
    std::span<const double> pixel(int x, int y) const {
        return {probs_.data() + (static_cast<std::size_t>(y) * width_ + x) * classCount_,
                static_cast<std::size_t>(classCount_)};
    }
    double& at(int x, int y, int c) { return probs_[(static_cast<std::size_t>(y) * width_ + x) * classCount_ + c]; }
    double at(int x, int y, int c) const {
        return probs_[(static_cast<std::size_t>(y) * width_ + x) * classCount_ + c];
    }
    std::span<const double> values() const noexcept { return probs_; }

    /// Checks the per-pixel simplex constraint (sum 1 ± 1e-6, each in [0,1]).
    void validate() const {
        for (int y = 0; y < height_; ++y)
            for (int x = 0; x < width_; ++x) {
                double s = 0.0;
                for (double p : pixel(x, y)) {
                    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("probability outside [0,1]");
                    s += p;
                }
                if (std::abs(s - 1.0) > 1e-6) throw InvalidArgument("probabilities do not sum to 1");
            }
    }

    LabelMask argmax() const {
        LabelMask out(width_, height_, classCount_);
        for (int y = 0; y < height_; ++y)
            for (int x = 0; x < width_; ++x) {
                auto p = pixel(x, y);
                out(x, y) = static_cast<std::uint8_t>(std::max_element(p.begin(), p.end()) - p.begin());
            }
        return out;
    }

    friend bool operator==(const ProbMap&, const ProbMap&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    int classCount_ = 2;
    std::vector<double> probs_;
};

// ---------------------------------------------------------------------------
// Directions

enum class Direction { Top, Bottom, Left, Right, TopLeft, TopRight, BottomLeft, BottomRight, Overall };

inline constexpr std::array<Direction, 9> kAllDirections = {
    Direction::Top,     Direction::Bottom,     Direction::Left,        Direction::Right,  Direction::TopLeft,
    Direction::TopRight, Direction::BottomLeft, Direction::BottomRight, Direction::Overall};

/// Canonical upper-case spelling used in program text, e.g. "TOP-RIGHT".
inline std::string_view directionName(Direction d) {
    switch (d) {
        case Direction::Top: return "TOP";
        case Direction::Bottom: return "BOTTOM";
        case Direction::Left: return "LEFT";
        case Direction::Right: return "RIGHT";
        case Direction::TopLeft: return "TOP-LEFT";
        case Direction::TopRight: return "TOP-RIGHT";
        case Direction::BottomLeft: return "BOTTOM-LEFT";
        case Direction::BottomRight: return "BOTTOM-RIGHT";
        case Direction::Overall: return "OVERALL";
    }
    return "OVERALL";
}

inline std::optional<Direction> directionFromName(std::string_view name) {
    for (Direction d : kAllDirections)
        if (directionName(d) == name) return d;
    return std::nullopt;
}

/// Center of a direction's sector in degrees (math convention, y up).
inline double sectorCenterDeg(Direction d) {
    switch (d) {
        case Direction::Right: return 0.0;
        case Direction::TopRight: return 45.0;
        case Direction::Top: return 90.0;
        case Direction::TopLeft: return 135.0;
        case Direction::Left: return 180.0;
        case Direction::BottomLeft: return -135.0;
        case Direction::Bottom: return -90.0;
        case Direction::BottomRight: return -45.0;
        case Direction::Overall: return 0.0;
    }
    return 0.0;
}

/// Maps an angle in degrees to one of the eight compass sectors. Each sector
/// is [center-22.5, center+22.5).
inline Direction directionOf(double angleDeg) {
    static constexpr std::array<Direction, 8> kByIndex = {
        Direction::Right,  Direction::TopRight, Direction::Top,    Direction::TopLeft,
        Direction::Left,   Direction::BottomLeft, Direction::Bottom, Direction::BottomRight};
    double a = std::fmod(angleDeg, 360.0);
    if (a < 0.0) a += 360.0;
    auto idx = static_cast<long long>(std::floor((a + 22.5) / 45.0));
    return kByIndex[static_cast<std::size_t>(((idx % 8) + 8) % 8)];
}

/// Angle of the vector from (cx,cy) to (px,py) in image coordinates,
/// converted to math convention (y up), in (-180, 180].
inline double angleFromDeg(double cx, double cy, double px, double py) {
    double a = std::atan2(cy - py, px - cx) * 180.0 / std::numbers::pi;
    if (a <= -180.0) a += 360.0;
    return a;
}

inline bool inSector(Direction d, double angleDeg) {
    return d == Direction::Overall || directionOf(angleDeg) == d;
}

// ---------------------------------------------------------------------------
// Validation helpers

inline Roi fullRoi(int width, int height) { return Roi{0, 0, width, height}; }

template <typename G>
Roi fullRoi(const G& g) {
    return fullRoi(g.width(), g.height());
}

template <typename A, typename B>
void requireSameShape(const A& a, const B& b, std::string_view what) {
    if (a.width() != b.width() || a.height() != b.height())
        throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) + "x" +
                             std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                             std::to_string(b.height()) + ")");
}

inline bool roiFits(const Roi& r, int width, int height) {
    return r.w >= 1 && r.h >= 1 && r.x >= 0 && r.y >= 0 && r.right() <= width && r.bottom() <= height;
}

template <typename G>
void requireRoi(const Roi& r, const G& g) {
    if (!roiFits(r, g.width(), g.height()))
        throw InvalidArgument("roi " + std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) +
                              "," + std::to_string(r.h) + " does not fit a " + std::to_string(g.width()) + "x" +
                              std::to_string(g.height()) + " raster");
}

// ---------------------------------------------------------------------------
// Metrics

/// Dice overlap 2|a∩b|/(|a|+|b|); 1 when both masks are empty.
inline double dice(const BinaryMask& a, const BinaryMask& b) {
    requireSameShape(a, b, "dice");
    long long inter = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        bool pa = a[i] != 0, pb = b[i] != 0;
        na += pa;
        nb += pb;
        inter += pa && pb;
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

/// Dice restricted to the pixels of `roi`.
inline double diceInRoi(const BinaryMask& a, const BinaryMask& b, const Roi& roi) {
    requireSameShape(a, b, "dice");
    requireRoi(roi, a);
    long long inter = 0, na = 0, nb = 0;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x) {
            bool pa = a.fg(x, y), pb = b.fg(x, y);
            na += pa;
            nb += pb;
            inter += pa && pb;
        }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

inline long long countInRoi(const BinaryMask& m, const Roi& roi) {
    long long n = 0;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x) n += m.fg(x, y);
    return n;
}

/// True if every pixel outside `roi` is identical in a and b.
inline bool identicalOutside(const BinaryMask& a, const BinaryMask& b, const Roi& roi) {
    requireSameShape(a, b, "identicalOutside");
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            if (!roi.contains(x, y) && a(x, y) != b(x, y)) return false;
    return true;
}

/// Copies the roi pixels of `inside` over `outside`.
inline BinaryMask spliceRoi(const BinaryMask& outside, const BinaryMask& inside, const Roi& roi) {
    requireSameShape(outside, inside, "spliceRoi");
    BinaryMask out = outside;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x) out(x, y) = inside(x, y);
    return out;
}

// ---------------------------------------------------------------------------
// Boundary and components

inline constexpr std::array<Point, 4> kNeighbors4 = {Point{0, -1}, Point{-1, 0}, Point{1, 0}, Point{0, 1}};
inline constexpr std::array<Point, 8> kNeighbors8 = {Point{-1, -1}, Point{0, -1}, Point{1, -1}, Point{-1, 0},
                                                     Point{1, 0},   Point{-1, 1}, Point{0, 1},  Point{1, 1}};

/// Foreground pixels inside `roi` with at least one background 4-neighbor.
/// Out-of-image neighbors count as background; neighbors outside the roi
/// but inside the image are read from the mask. Raster order.
inline std::vector<Point> extractBoundary(const BinaryMask& m, const Roi& roi) {
    requireRoi(roi, m);
    std::vector<Point> out;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x) {
            if (!m.fg(x, y)) continue;
            for (Point d : kNeighbors4) {
                int nx = x + d.x, ny = y + d.y;
                if (!m.inBounds(nx, ny) || !m.fg(nx, ny)) {
                    out.push_back({x, y});
                    break;
                }
            }
        }
    return out;
}

struct Component {
    std::vector<Point> pixels;  // discovery (BFS) order; pixels.front() is the raster-first pixel
    long long area = 0;
    double cx = 0.0;
    double cy = 0.0;
};

/// Maximal connected sets of roi-restricted foreground, ordered by the
/// raster position of each component's first pixel.
inline std::vector<Component> connectedComponents(const BinaryMask& m, const Roi& roi, int connectivity = 8) {
    requireRoi(roi, m);
    if (connectivity != 4 && connectivity != 8) throw InvalidArgument("connectivity must be 4 or 8");
    std::span<const Point> nbrs = connectivity == 8 ? std::span<const Point>(kNeighbors8) : std::span<const Point>(kNeighbors4);
    Grid<std::uint8_t> seen(roi.w, roi.h, 0);
    std::vector<Component> comps;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x) {
            if (!m.fg(x, y) || seen(x - roi.x, y - roi.y)) continue;
            Component c;
            seen(x - roi.x, y - roi.y) = 1;
            c.pixels.push_back({x, y});
            for (std::size_t head = 0; head < c.pixels.size(); ++head) {
                Point p = c.pixels[head];
                for (Point d : nbrs) {
                    int nx = p.x + d.x, ny = p.y + d.y;
                    if (!roi.contains(nx, ny) || !m.fg(nx, ny) || seen(nx - roi.x, ny - roi.y)) continue;
                    seen(nx - roi.x, ny - roi.y) = 1;
                    c.pixels.push_back({nx, ny});
                }
            }
            c.area = static_cast<long long>(c.pixels.size());
            double sx = 0, sy = 0;
            for (Point p : c.pixels) {
                sx += p.x;
                sy += p.y;
            }
            c.cx = sx / static_cast<double>(c.area);
            c.cy = sy / static_cast<double>(c.area);
            comps.push_back(std::move(c));
        }
    return comps;
}

/// Centroid of the foreground inside `roi`, if any.
inline std::optional<std::pair<double, double>> foregroundCentroid(const BinaryMask& m, const Roi& roi) {
    double sx = 0, sy = 0;
    long long n = 0;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x)
            if (m.fg(x, y)) {
                sx += x;
                sy += y;
                ++n;
            }
    if (n == 0) return std::nullopt;
    return std::pair{sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

// ---------------------------------------------------------------------------
// Morphology

/// Offsets of the Euclidean disk dx²+dy² <= r².
inline std::vector<Point> diskElement(int radius) {
    std::vector<Point> se;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) se.push_back({dx, dy});
    return se;
}

namespace detail {

inline Roi expandRoi(const Roi& r, int margin, int width, int height) {
    int x0 = std::max(0, r.x - margin), y0 = std::max(0, r.y - margin);
    int x1 = std::min(width, r.right() + margin), y1 = std::min(height, r.bottom() + margin);
    return Roi{x0, y0, x1 - x0, y1 - y0};
}

// Out-of-image pixels are neutral: ignored by both dilation and erosion.
inline BinaryMask morph(const BinaryMask& m, const Roi& region, const std::vector<Point>& se, bool dilation) {
    BinaryMask out = m;
    for (int y = region.y; y < region.bottom(); ++y)
        for (int x = region.x; x < region.right(); ++x) {
            bool v = !dilation;
            for (Point d : se) {
                int nx = x + d.x, ny = y + d.y;
                if (!m.inBounds(nx, ny)) continue;
                if (dilation && m.fg(nx, ny)) {
                    v = true;
                    break;
                }
                if (!dilation && !m.fg(nx, ny)) {
                    v = false;
                    break;
                }
            }
            out(x, y) = v ? 1 : 0;
        }
    return out;
}

} // namespace detail

/// Disk dilation evaluated at pixels of `roi`; other pixels unchanged.
inline BinaryMask dilate(const BinaryMask& m, const Roi& roi, int radius) {
    requireRoi(roi, m);
    if (radius < 0) throw InvalidArgument("radius must be >= 0");
    return detail::morph(m, roi, diskElement(radius), true);
}

/// Disk erosion evaluated at pixels of `roi`; other pixels unchanged.
inline BinaryMask erode(const BinaryMask& m, const Roi& roi, int radius) {
    requireRoi(roi, m);
    if (radius < 0) throw InvalidArgument("radius must be >= 0");
    return detail::morph(m, roi, diskElement(radius), false);
}

/// Morphological closing with a disk, written back only inside `roi`.
///
/// The closing itself is computed on the unmodified mask around the roi, so
/// foreground just outside the roi participates and roi-local edits do not
/// see an artificial edge. The result is extensive and idempotent.
inline BinaryMask morphClose(const BinaryMask& m, const Roi& roi, int radius) {
    requireRoi(roi, m);
    if (radius < 1) throw InvalidArgument("closing radius must be >= 1");
    const auto se = diskElement(radius);
    Roi dilRegion = detail::expandRoi(roi, radius, m.width(), m.height());
    BinaryMask dil = detail::morph(m, dilRegion, se, true);
    // Erosion at roi pixels reads the dilation within `radius`, all inside dilRegion.
    BinaryMask closed = detail::morph(dil, roi, se, false);
    return spliceRoi(m, closed, roi);
}

/// Normalized 1-D Gaussian taps truncated at ceil(3 sigma).
inline std::vector<double> gaussianKernel(double sigma) {
    if (!(sigma > 0.0)) throw InvalidArgument("sigma must be > 0");
    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double s = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        s += k[static_cast<std::size_t>(i + radius)];
    }
    for (double& v : k) v /= s;
    return k;
}

/// Separable Gaussian blur of a real raster over `region`. Taps falling
/// outside the image are dropped and the remaining weights renormalized,
/// so a constant field stays constant.
inline Grid<double> gaussianBlur(const Grid<double>& src, const Roi& region, double sigma) {
    const auto k = gaussianKernel(sigma);
    const int r = static_cast<int>(k.size() / 2);
    Roi band = detail::expandRoi(region, r, src.width(), src.height());
    Grid<double> horiz(src.width(), src.height(), 0.0);
    for (int y = band.y; y < band.bottom(); ++y)
        for (int x = region.x; x < region.right(); ++x) {
            double acc = 0.0, wsum = 0.0;
            for (int i = -r; i <= r; ++i) {
                int nx = x + i;
                if (nx < 0 || nx >= src.width()) continue;
                double w = k[static_cast<std::size_t>(i + r)];
                acc += w * src(nx, y);
                wsum += w;
            }
            horiz(x, y) = acc / wsum;
        }
    Grid<double> out = src;
    for (int y = region.y; y < region.bottom(); ++y)
        for (int x = region.x; x < region.right(); ++x) {
            double acc = 0.0, wsum = 0.0;
            for (int i = -r; i <= r; ++i) {
                int ny = y + i;
                if (ny < 0 || ny >= src.height()) continue;
                double w = k[static_cast<std::size_t>(i + r)];
                acc += w * horiz(x, ny);
                wsum += w;
            }
            out(x, y) = acc / wsum;
        }
    return out;
}

/// Blurs the 0/1 mask with a Gaussian and re-binarizes at `thresh`
/// (value >= thresh is foreground). Only roi pixels change; values outside
/// the roi feed the blur from the unmodified mask.
inline BinaryMask gaussianSmoothThreshold(const BinaryMask& m, const Roi& roi, double sigma, double thresh) {
    requireRoi(roi, m);
    if (!(thresh > 0.0 && thresh < 1.0)) throw InvalidArgument("threshold must be in (0,1)");
    Grid<double> field(m.width(), m.height(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) field[i] = m[i] ? 1.0 : 0.0;
    Grid<double> blurred = gaussianBlur(field, roi, sigma);
    BinaryMask out = m;
    for (int y = roi.y; y < roi.bottom(); ++y)
        for (int x = roi.x; x < roi.right(); ++x) out(x, y) = blurred(x, y) >= thresh ? 1 : 0;
    return out;
}

} // namespace langseg
