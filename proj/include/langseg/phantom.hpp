#pragma once

/**
 * @file phantom.hpp
 * @brief Seeded synthetic datasets with soft boundaries and an optional
 *        target-domain intensity shift, plus prediction-error models.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "langseg/grid.hpp"
#include "langseg/rng.hpp"

namespace langseg {

enum class Domain { Source, TargetTrain, TargetTest };

inline std::string_view domainName(Domain d) {
    switch (d) {
        case Domain::Source: return "source";
        case Domain::TargetTrain: return "target-train";
        case Domain::TargetTest: return "target-test";
    }
    return "source";
}

inline std::optional<Domain> domainFromName(std::string_view s) {
    for (Domain d : {Domain::Source, Domain::TargetTrain, Domain::TargetTest})
        if (domainName(d) == s) return d;
    return std::nullopt;
}

struct DatasetItem {
    std::string id;
    GridImage image;
    LabelMask label;
    Domain domain = Domain::Source;
};

struct Dataset {
    std::vector<DatasetItem> items;

    std::vector<const DatasetItem*> withDomain(Domain d) const {
        std::vector<const DatasetItem*> out;
        for (const auto& it : items)
            if (it.domain == d) out.push_back(&it);
        return out;
    }
};

enum class DomainShift { None, IntensityRemap };

struct PhantomSpec {
    int width = 128;
    int height = 128;
    int classCount = 2;
    int count = 20;
    int blobCountMin = 1;
    int blobCountMax = 3;
    double blobRadiusMin = 10.0;
    double blobRadiusMax = 24.0;
    double boundaryBlurSigma = 1.2;
    std::vector<double> classLevels{0.30, 0.62};  // mean intensity per class
    double illumination = 0.06;                    // peak-to-peak linear shading
    double noiseSigma = 0.03;
    DomainShift shift = DomainShift::None;
    double remapGamma = 0.45;   // target intensity = v^gamma
    double shiftNoiseSigma = 0.02;
    /// Items at index >= count - testCount are tagged target-test (target sets only).
    int testCount = 0;
    std::uint64_t seed = 1;

    void validate() const {
        if (width < 32 || height < 32) throw InvalidArgument("phantom dimensions must be >= 32");
        if (classCount < 2 || static_cast<int>(classLevels.size()) != classCount)
            throw InvalidArgument("classLevels must list one intensity per class");
        if (blobCountMin < 1 || blobCountMax < blobCountMin) throw InvalidArgument("bad blob count range");
        if (!(blobRadiusMin > 1.0 && blobRadiusMax >= blobRadiusMin)) throw InvalidArgument("bad blob radius range");
        if (count < 0 || testCount < 0 || testCount > count) throw InvalidArgument("bad item counts");
    }
};

namespace detail {

struct Blob {
    double cx, cy, ra, rb, theta;
    double wobbleAmp, wobblePhase;
    int wobbleFreq;
    int label;

    bool contains(double x, double y) const {
        double dx = x - cx, dy = y - cy;
        double c = std::cos(theta), s = std::sin(theta);
        double u = (dx * c + dy * s) / ra, v = (-dx * s + dy * c) / rb;
        double phi = std::atan2(v, u);
        double limit = 1.0 + wobbleAmp * std::sin(wobbleFreq * phi + wobblePhase);
        return u * u + v * v <= limit * limit;
    }
};

} // namespace detail

/// Deterministic phantom set. Images are blurred class-level maps with
/// linear shading and Gaussian noise; labels are the unblurred blob masks.
inline Dataset generatePhantoms(const PhantomSpec& spec) {
    spec.validate();
    Dataset ds;
    const bool target = spec.shift != DomainShift::None;
    for (int n = 0; n < spec.count; ++n) {
        Rng rng(mixSeed(spec.seed, static_cast<std::uint64_t>(n), target ? 0x7a11 : 0x50c3));
        LabelMask label(spec.width, spec.height, spec.classCount, 0);
        int blobs = rng.uniformInt(spec.blobCountMin, spec.blobCountMax);
        std::vector<detail::Blob> shapes;
        for (int b = 0; b < blobs; ++b) {
            detail::Blob blob{};
            blob.ra = rng.uniform(spec.blobRadiusMin, spec.blobRadiusMax);
            blob.rb = blob.ra * rng.uniform(0.6, 1.0);
            double margin = blob.ra + 2.0;
            blob.cx = rng.uniform(margin, spec.width - 1 - margin);
            blob.cy = rng.uniform(margin, spec.height - 1 - margin);
            blob.theta = rng.uniform(0.0, std::numbers::pi);
            blob.wobbleAmp = rng.uniform(0.0, 0.12);
            blob.wobbleFreq = rng.uniformInt(2, 5);
            blob.wobblePhase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            blob.label = 1 + b % (spec.classCount - 1);
            shapes.push_back(blob);
        }
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x)
                for (const auto& s : shapes)
                    if (s.contains(x, y)) label(x, y) = static_cast<std::uint8_t>(s.label);

        Grid<double> field(spec.width, spec.height, 0.0);
        for (std::size_t i = 0; i < field.size(); ++i) field[i] = spec.classLevels[label[i]];
        if (spec.boundaryBlurSigma > 0.0) field = gaussianBlur(field, fullRoi(field), spec.boundaryBlurSigma);

        double shadeAngle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        double gx = std::cos(shadeAngle), gy = std::sin(shadeAngle);
        GridImage img(spec.width, spec.height, 0.0);
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                double u = (x / (spec.width - 1.0) - 0.5) * gx + (y / (spec.height - 1.0) - 0.5) * gy;
                double v = field(x, y) + spec.illumination * u + spec.noiseSigma * rng.normal();
                v = std::clamp(v, 0.0, 1.0);
                if (target) {
                    v = std::pow(v, spec.remapGamma) + spec.shiftNoiseSigma * rng.normal();
                    v = std::clamp(v, 0.0, 1.0);
                }
                img(x, y) = v;
            }

        DatasetItem item;
        char id[32];
        std::snprintf(id, sizeof id, "img_%03d", n);
        item.id = id;
        item.image = std::move(img);
        item.label = std::move(label);
        item.domain = !target ? Domain::Source
                              : (n >= spec.count - spec.testCount ? Domain::TargetTest : Domain::TargetTrain);
        ds.items.push_back(std::move(item));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Prediction-error models

struct PerturbSpec {
    struct Lobe {
        double angleDeg = 0.0;      // math convention, y up
        double halfWidthDeg = 45.0;
        int depth = 3;              // pixels of erosion/dilation
        bool erode = true;
    };
    std::vector<Lobe> lobes;
    int holeCount = 0;
    int holeRadius = 2;
    int fragmentCount = 0;
    int fragmentRadius = 1;
    double jitter = 0.0;  // boundary noise amplitude in [0,1]
    std::uint64_t seed = 0;
};

/// Corrupts a ground-truth mask with directional erosion/dilation lobes,
/// boundary jitter, punched holes and sprayed fragments (in that order).
inline BinaryMask perturbMask(const BinaryMask& gt, const PerturbSpec& spec) {
    BinaryMask m = gt;
    Rng rng(spec.seed);
    const Roi all = fullRoi(gt);

    if (!spec.lobes.empty()) {
        if (auto c = foregroundCentroid(gt, all)) {
            auto [cx, cy] = *c;
            for (const auto& lobe : spec.lobes) {
                BinaryMask changed = lobe.erode ? erode(m, all, lobe.depth) : dilate(m, all, lobe.depth);
                for (int y = 0; y < m.height(); ++y)
                    for (int x = 0; x < m.width(); ++x) {
                        double d = angleFromDeg(cx, cy, x, y) - lobe.angleDeg;
                        d = std::remainder(d, 360.0);
                        if (std::abs(d) <= lobe.halfWidthDeg) m(x, y) = changed(x, y);
                    }
            }
        }
    }

    if (spec.jitter > 0.0) {
        Grid<double> field(m.width(), m.height(), 0.0);
        for (std::size_t i = 0; i < m.size(); ++i) field[i] = m[i] ? 1.0 : 0.0;
        field = gaussianBlur(field, all, 1.0);
        for (std::size_t i = 0; i < m.size(); ++i)
            m[i] = field[i] + spec.jitter * (rng.uniform() - 0.5) >= 0.5 ? 1 : 0;
    }

    auto diskFits = [&](Point c, int r, bool wantFg) {
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                if (dx * dx + dy * dy > r * r) continue;
                int x = c.x + dx, y = c.y + dy;
                if (!m.inBounds(x, y) || m.fg(x, y) != wantFg) return false;
            }
        return true;
    };
    auto paint = [&](Point c, int r, std::uint8_t v) {
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                if (dx * dx + dy * dy <= r * r && m.inBounds(c.x + dx, c.y + dy)) m(c.x + dx, c.y + dy) = v;
    };
    constexpr int kAttempts = 2000;
    for (int h = 0; h < spec.holeCount; ++h)
        for (int a = 0; a < kAttempts; ++a) {
            Point c{rng.uniformInt(0, m.width() - 1), rng.uniformInt(0, m.height() - 1)};
            if (!diskFits(c, spec.holeRadius + 1, true)) continue;
            paint(c, spec.holeRadius, 0);
            break;
        }
    for (int f = 0; f < spec.fragmentCount; ++f)
        for (int a = 0; a < kAttempts; ++a) {
            Point c{rng.uniformInt(0, m.width() - 1), rng.uniformInt(0, m.height() - 1)};
            if (!diskFits(c, spec.fragmentRadius + 2, false)) continue;
            paint(c, spec.fragmentRadius, 1);
            break;
        }
    return m;
}

} // namespace langseg
