#pragma once

/**
 * @file classifier.hpp
 * @brief Linear-softmax pixel classifier trained by seeded mini-batch SGD.
 *
 * Features per pixel: intensity, 3x3 mean, 7x7 mean, gradient magnitude,
 * normalized x, normalized y, bias.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "langseg/grid.hpp"
#include "langseg/rng.hpp"

namespace langseg {

inline constexpr int kFeatureCount = 7;

using FeatureVec = std::array<double, kFeatureCount>;

/// Features of every pixel of one image, row-major.
struct FeatureMap {
    int width = 0;
    int height = 0;
    std::vector<FeatureVec> pixels;
};

namespace detail {

inline Grid<double> boxMean(const GridImage& img, int radius) {
    Grid<double> out(img.width(), img.height(), 0.0);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double s = 0.0;
            int n = 0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    int nx = x + dx, ny = y + dy;
                    if (!img.inBounds(nx, ny)) continue;
                    s += img(nx, ny);
                    ++n;
                }
            out(x, y) = s / n;
        }
    return out;
}

} // namespace detail

inline FeatureMap computeFeatures(const GridImage& img) {
    FeatureMap f{img.width(), img.height(), std::vector<FeatureVec>(img.size())};
    Grid<double> m3 = detail::boxMean(img, 1), m7 = detail::boxMean(img, 3);
    const double sx = img.width() > 1 ? 1.0 / (img.width() - 1) : 0.0;
    const double sy = img.height() > 1 ? 1.0 / (img.height() - 1) : 0.0;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            int xl = std::max(0, x - 1), xr = std::min(img.width() - 1, x + 1);
            int yt = std::max(0, y - 1), yb = std::min(img.height() - 1, y + 1);
            double gx = (img(xr, y) - img(xl, y)) / std::max(1, xr - xl);
            double gy = (img(x, yb) - img(x, yt)) / std::max(1, yb - yt);
            f.pixels[img.index(x, y)] = {img(x, y), m3(x, y), m7(x, y), std::hypot(gx, gy), x * sx, y * sy, 1.0};
        }
    return f;
}

class TrainingError : public Error {
public:
    using Error::Error;
};

struct TrainHyper {
    int epochs = 3;
    /// When > 0, exactly this many mini-batches are run (cycling through
    /// reshuffled passes) and `epochs` is ignored.
    long long steps = 0;
    int batchSize = 256;
    double learningRate = 0.5;
    double momentum = 0.9;
    double l2 = 1e-5;
    std::uint64_t seed = 7;
};

class PixelClassifier {
public:
    PixelClassifier() = default;
    explicit PixelClassifier(int classCount)
        : classCount_(classCount), weights_(static_cast<std::size_t>(classCount) * kFeatureCount, 0.0) {
        if (classCount < 2) throw InvalidArgument("classifier needs at least two classes");
    }

    int classCount() const noexcept { return classCount_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<double> weights() noexcept { return weights_; }
    double finalLoss() const noexcept { return finalLoss_; }
    void setFinalLoss(double v) noexcept { finalLoss_ = v; }

    /// Softmax class probabilities for one feature vector.
    void probabilities(const FeatureVec& f, std::span<double> out) const {
        double mx = -INFINITY;
        for (int c = 0; c < classCount_; ++c) {
            double s = 0.0;
            for (int k = 0; k < kFeatureCount; ++k) s += weights_[static_cast<std::size_t>(c * kFeatureCount + k)] * f[static_cast<std::size_t>(k)];
            out[static_cast<std::size_t>(c)] = s;
            mx = std::max(mx, s);
        }
        double z = 0.0;
        for (int c = 0; c < classCount_; ++c) {
            out[static_cast<std::size_t>(c)] = std::exp(out[static_cast<std::size_t>(c)] - mx);
            z += out[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < classCount_; ++c) out[static_cast<std::size_t>(c)] /= z;
    }

    friend bool operator==(const PixelClassifier&, const PixelClassifier&) = default;

private:
    int classCount_ = 2;
    std::vector<double> weights_;
    double finalLoss_ = 0.0;
};

inline ProbMap predict(const PixelClassifier& f, const FeatureMap& feats) {
    ProbMap p(feats.width, feats.height, f.classCount());
    for (int y = 0; y < feats.height; ++y)
        for (int x = 0; x < feats.width; ++x)
            f.probabilities(feats.pixels[static_cast<std::size_t>(y) * feats.width + x], p.pixel(x, y));
    return p;
}

inline ProbMap predict(const PixelClassifier& f, const GridImage& img) { return predict(f, computeFeatures(img)); }

/// One labeled training pixel: (image index, pixel index, class).
struct Sample {
    std::uint32_t image = 0;
    std::uint32_t pixel = 0;
    std::uint8_t label = 0;
};

/// Mini-batch SGD with momentum on mean cross-entropy, continuing from the
/// classifier's current weights. Sample order is reshuffled each pass from
/// `hyper.seed`. The recorded loss is the mean over the last (possibly
/// partial) pass. Throws TrainingError on a non-finite loss.
inline void trainOnSamples(PixelClassifier& f, const std::vector<FeatureMap>& feats, std::vector<Sample> samples,
                           const TrainHyper& hyper) {
    if (samples.empty() || (hyper.steps <= 0 && hyper.epochs <= 0)) return;
    const int C = f.classCount();
    Rng rng(hyper.seed);
    std::vector<double> velocity(f.weights().size(), 0.0), grad(f.weights().size(), 0.0);
    std::vector<double> prob(static_cast<std::size_t>(C));
    const auto batch = static_cast<std::size_t>(std::max(1, hyper.batchSize));
    const std::size_t batchesPerPass = (samples.size() + batch - 1) / batch;
    const long long totalSteps =
        hyper.steps > 0 ? hyper.steps : static_cast<long long>(hyper.epochs) * static_cast<long long>(batchesPerPass);
    double passLoss = 0.0, lastLoss = 0.0;
    std::size_t passCount = 0;
    std::size_t start = samples.size();  // forces a shuffle before the first batch
    for (long long step = 1; step <= totalSteps; ++step) {
        if (start >= samples.size()) {
            rng.shuffle(samples);
            start = 0;
            passLoss = 0.0;
            passCount = 0;
        }
        std::size_t end = std::min(samples.size(), start + batch);
        std::fill(grad.begin(), grad.end(), 0.0);
        double batchLoss = 0.0;
        for (std::size_t i = start; i < end; ++i) {
            const Sample& s = samples[i];
            const FeatureVec& x = feats[s.image].pixels[s.pixel];
            f.probabilities(x, prob);
            batchLoss -= std::log(std::max(prob[s.label], 1e-300));
            for (int c = 0; c < C; ++c) {
                double g = prob[static_cast<std::size_t>(c)] - (c == s.label ? 1.0 : 0.0);
                for (int k = 0; k < kFeatureCount; ++k)
                    grad[static_cast<std::size_t>(c * kFeatureCount + k)] += g * x[static_cast<std::size_t>(k)];
            }
        }
        if (!std::isfinite(batchLoss)) throw TrainingError("training diverged at step " + std::to_string(step));
        const double n = static_cast<double>(end - start);
        passLoss += batchLoss;
        passCount += end - start;
        lastLoss = passLoss / static_cast<double>(passCount);
        auto w = f.weights();
        for (std::size_t j = 0; j < w.size(); ++j) {
            double g = grad[j] / n + hyper.l2 * w[j];
            velocity[j] = hyper.momentum * velocity[j] - hyper.learningRate * g;
            w[j] += velocity[j];
            if (!std::isfinite(w[j]))
                throw TrainingError("training diverged at step " + std::to_string(step) + ": non-finite weight");
        }
        start = end;
    }
    f.setFinalLoss(lastLoss);
}

/// Every pixel of every image as a sample.
inline std::vector<Sample> allPixelSamples(const std::vector<const LabelMask*>& labels) {
    std::vector<Sample> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (std::size_t p = 0; p < labels[i]->size(); ++p)
            out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(p), (*labels[i])[p]});
    return out;
}

} // namespace langseg
