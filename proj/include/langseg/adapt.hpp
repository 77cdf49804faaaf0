#pragma once

/**
 * @file adapt.hpp
 * @brief Desk-scale active domain adaptation: source training, then rounds
 *        of predict, acquire, simulated language feedback, refine, retrain.
 */

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "langseg/acquisition.hpp"
#include "langseg/classifier.hpp"
#include "langseg/command.hpp"
#include "langseg/config.hpp"
#include "langseg/effort.hpp"
#include "langseg/executor.hpp"
#include "langseg/phantom.hpp"
#include "langseg/simulator.hpp"

namespace langseg {

enum class Acquisition { Entropy, Random };

inline std::string_view acquisitionName(Acquisition a) { return a == Acquisition::Entropy ? "entropy" : "random"; }

inline std::optional<Acquisition> acquisitionFromName(std::string_view s) {
    if (s == "entropy") return Acquisition::Entropy;
    if (s == "random") return Acquisition::Random;
    return std::nullopt;
}

struct AdaConfig {
    BudgetPlan plan{};
    Acquisition acquisition = Acquisition::Entropy;
    TrainHyper sourceHyper{};
    TrainHyper adaptHyper{3, 100, 256, 0.05, 0.9, 1e-5, 11};
    ExecConfig exec{};
    FeedbackConfig feedback{};
    bool selfTrain = false;
    std::uint64_t seed = 1;

    /// Overrides any field named in `cfg`; unknown keys are ignored.
    void apply(const FlatConfig& cfg) {
        plan.budgetPercent = cfg.getDouble("budget", plan.budgetPercent);
        plan.rounds = static_cast<int>(cfg.getInt("rounds", plan.rounds));
        plan.roiW = static_cast<int>(cfg.getInt("roi_w", cfg.getInt("roi_size", plan.roiW)));
        plan.roiH = static_cast<int>(cfg.getInt("roi_h", cfg.getInt("roi_size", plan.roiH)));
        if (cfg.has("acq")) {
            auto a = acquisitionFromName(cfg.getString("acq", ""));
            if (!a) throw InvalidArgument("config key 'acq' must be entropy or random");
            acquisition = *a;
        }
        auto hyper = [&](TrainHyper& h, const std::string& p) {
            h.epochs = static_cast<int>(cfg.getInt(p + "epochs", h.epochs));
            h.steps = cfg.getInt(p + "steps", h.steps);
            h.batchSize = static_cast<int>(cfg.getInt(p + "batch", h.batchSize));
            h.learningRate = cfg.getDouble(p + "lr", h.learningRate);
            h.momentum = cfg.getDouble(p + "momentum", h.momentum);
            h.l2 = cfg.getDouble(p + "l2", h.l2);
            h.seed = static_cast<std::uint64_t>(cfg.getInt(p + "seed", static_cast<long long>(h.seed)));
        };
        hyper(sourceHyper, "source_");
        hyper(adaptHyper, "adapt_");
        exec.refine.samplePercent = cfg.getDouble("sample_percent", exec.refine.samplePercent);
        exec.refine.offset = static_cast<int>(cfg.getInt("offset", exec.refine.offset));
        exec.refine.maxIters = static_cast<int>(cfg.getInt("max_iters", exec.refine.maxIters));
        exec.refine.cluster.granularity = cfg.getDouble("granularity", exec.refine.cluster.granularity);
        exec.refine.cluster.maxRegionFraction = cfg.getDouble("max_region_fraction", exec.refine.cluster.maxRegionFraction);
        exec.fillRadius = static_cast<int>(cfg.getInt("fill_radius", exec.fillRadius));
        exec.smoothSigma = cfg.getDouble("smooth_sigma", exec.smoothSigma);
        exec.smoothThresh = cfg.getDouble("smooth_thresh", exec.smoothThresh);
        exec.fragFraction = cfg.getDouble("frag_fraction", exec.fragFraction);
        feedback.dominanceMinArea = cfg.getDouble("tau", feedback.dominanceMinArea);
        if (cfg.has("frag_max_area")) feedback.fragMaxArea = cfg.getDouble("frag_max_area", 0.0);
        feedback.roughnessThresh = cfg.getDouble("roughness_thresh", feedback.roughnessThresh);
        feedback.varyPhrasing = cfg.getBool("vary_phrasing", feedback.varyPhrasing);
        selfTrain = cfg.getBool("self_train", selfTrain);
        seed = static_cast<std::uint64_t>(cfg.getInt("seed", static_cast<long long>(seed)));
    }

    /// Every setting as a flat config (the echo stored in reports).
    FlatConfig echo() const {
        FlatConfig c;
        c.set("budget", formatNumber(plan.budgetPercent));
        c.set("rounds", std::to_string(plan.rounds));
        c.set("roi_w", std::to_string(plan.roiW));
        c.set("roi_h", std::to_string(plan.roiH));
        c.set("acq", std::string(acquisitionName(acquisition)));
        auto hyper = [&](const TrainHyper& h, const std::string& p) {
            c.set(p + "epochs", std::to_string(h.epochs));
            c.set(p + "steps", std::to_string(h.steps));
            c.set(p + "batch", std::to_string(h.batchSize));
            c.set(p + "lr", formatNumber(h.learningRate));
            c.set(p + "momentum", formatNumber(h.momentum));
            c.set(p + "l2", formatNumber(h.l2));
            c.set(p + "seed", std::to_string(h.seed));
        };
        hyper(sourceHyper, "source_");
        hyper(adaptHyper, "adapt_");
        c.set("sample_percent", formatNumber(exec.refine.samplePercent));
        c.set("offset", std::to_string(exec.refine.offset));
        c.set("max_iters", std::to_string(exec.refine.maxIters));
        c.set("granularity", formatNumber(exec.refine.cluster.granularity));
        c.set("max_region_fraction", formatNumber(exec.refine.cluster.maxRegionFraction));
        c.set("fill_radius", std::to_string(exec.fillRadius));
        c.set("smooth_sigma", formatNumber(exec.smoothSigma));
        c.set("smooth_thresh", formatNumber(exec.smoothThresh));
        c.set("frag_fraction", formatNumber(exec.fragFraction));
        c.set("tau", formatNumber(feedback.dominanceMinArea));
        if (feedback.fragMaxArea) c.set("frag_max_area", formatNumber(*feedback.fragMaxArea));
        c.set("roughness_thresh", formatNumber(feedback.roughnessThresh));
        c.set("vary_phrasing", feedback.varyPhrasing ? "true" : "false");
        c.set("self_train", selfTrain ? "true" : "false");
        c.set("seed", std::to_string(seed));
        return c;
    }
};

struct RoiRecord {
    std::string imageId;
    int round = 0;
    Roi roi{};
    double score = 0.0;
    std::string command;      // empty when the prediction already matched
    std::string program;
    long long words = 0;
    long long gtVertices = 0;  // polygon vertices needed to delineate the GT
    double diceBefore = 0.0;   // mean over foreground classes, inside the roi
    double diceAfter = 0.0;
    std::vector<std::string> warnings;
};

struct RoundRecord {
    int round = 0;
    std::vector<RoiRecord> rois;
    long long supervisedPixels = 0;
    double trainLoss = 0.0;
    std::vector<double> testDicePerClass;  // foreground classes 1..C-1
    double testDiceMean = 0.0;
};

struct LoopReport {
    std::map<std::string, std::string> config;
    std::uint64_t seed = 0;
    int classCount = 2;
    std::vector<double> sourceOnlyPerClass;
    double sourceOnlyMean = 0.0;
    double sourceLoss = 0.0;
    std::vector<RoundRecord> rounds;
    std::vector<double> finalPerClass;
    double finalMean = 0.0;
    long long totalWords = 0;
    long long totalVertices = 0;
};

// ---------------------------------------------------------------------------

/// Per-class Dice pooled over all pixels of all images, classes 1..C-1.
inline std::vector<double> pooledDice(const std::vector<LabelMask>& pred, const std::vector<const LabelMask*>& gt,
                                      int classCount) {
    if (pred.size() != gt.size()) throw DimensionError("pooledDice: list sizes differ");
    std::vector<double> out;
    for (int c = 1; c < classCount; ++c) {
        long long inter = 0, sum = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            requireSameShape(pred[i], *gt[i], "pooledDice");
            for (std::size_t p = 0; p < pred[i].size(); ++p) {
                bool a = pred[i][p] == c, b = (*gt[i])[p] == c;
                inter += a && b;
                sum += a + b;
            }
        }
        out.push_back(sum == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(sum));
    }
    return out;
}

inline double meanOf(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Trains a fresh classifier on every pixel of the source items.
inline PixelClassifier trainSource(const Dataset& ds, const TrainHyper& hyper) {
    auto src = ds.withDomain(Domain::Source);
    if (src.empty()) throw InvalidArgument("trainSource: no source items");
    const int C = src.front()->label.classCount();
    std::vector<FeatureMap> feats;
    std::vector<const LabelMask*> labels;
    for (const auto* it : src) {
        if (it->label.classCount() != C) throw InvalidArgument("trainSource: class counts differ");
        feats.push_back(computeFeatures(it->image));
        labels.push_back(&it->label);
    }
    PixelClassifier f(C);
    trainOnSamples(f, feats, allPixelSamples(labels), hyper);
    return f;
}

/// Mean foreground-class Dice inside the roi.
inline double roiClassDice(const LabelMask& pred, const LabelMask& gt, const Roi& roi) {
    double s = 0.0;
    for (int c = 1; c < gt.classCount(); ++c) s += diceInRoi(pred.classMask(c), gt.classMask(c), roi);
    return s / (gt.classCount() - 1);
}

/// Simulated expert pass over one roi: every foreground class in turn is
/// analyzed, phrased, parsed, executed and written back. Returns the
/// refined label map; fills the record.
inline LabelMask refineRoiWithFeedback(const LabelMask& labels, const LabelMask& gt, const GridImage& image,
                                       const Roi& roi, const AdaConfig& cfg, std::uint64_t seed, RoiRecord& rec) {
    LabelMask out = labels;
    rec.diceBefore = roiClassDice(labels, gt, roi);
    std::vector<std::string> commands, programs;
    for (int c = 1; c < gt.classCount(); ++c) {
        BinaryMask pred = out.classMask(c);
        BinaryMask truth = gt.classMask(c);
        rec.gtVertices += polygonVertexCount(truth, roi);
        FeedbackConfig fc = cfg.feedback;
        fc.seed = mixSeed(seed, static_cast<std::uint64_t>(c));
        auto items = analyzeRoi(pred, truth, image, roi, fc);
        if (items.empty()) continue;
        std::string text = renderFeedback(items, fc);
        Program program;
        try {
            program = parseCommand(text);
        } catch (const ParseError& e) {
            rec.warnings.push_back(std::string("feedback did not parse: ") + e.what());
            continue;
        }
        ExecResult res = execute(program, image, pred, roi, cfg.exec);
        for (const auto& s : res.log.steps)
            for (const auto& w : s.warnings) rec.warnings.push_back(w);
        if (gt.classCount() == 2) {
            out = applyPatch(out, roi, res.mask, c);
        } else {
            // Other classes keep their pixels; this class takes the patch.
            for (int y = roi.y; y < roi.bottom(); ++y)
                for (int x = roi.x; x < roi.right(); ++x) {
                    if (res.mask.fg(x, y))
                        out(x, y) = static_cast<std::uint8_t>(c);
                    else if (out(x, y) == c)
                        out(x, y) = 0;
                }
        }
        commands.push_back(std::move(text));
        programs.push_back(renderProgram(program));
    }
    for (std::size_t i = 0; i < commands.size(); ++i) {
        rec.command += (i ? " " : "") + commands[i];
        rec.program += programs[i];
    }
    rec.words = countWords(commands);
    rec.diceAfter = roiClassDice(out, gt, roi);
    return out;
}

/// Runs the full loop. Source items train the initial classifier;
/// target-train items are acquired from and refined; target-test items are
/// only evaluated.
inline LoopReport runAda(const Dataset& source, const Dataset& target, const AdaConfig& cfg) {
    cfg.plan.validate();
    LoopReport report;
    report.config = cfg.echo().values();
    report.seed = cfg.seed;

    TrainHyper srcHyper = cfg.sourceHyper;
    srcHyper.seed = mixSeed(cfg.seed, cfg.sourceHyper.seed, 0x5);
    PixelClassifier f = trainSource(source, srcHyper);
    report.sourceLoss = f.finalLoss();
    const int C = f.classCount();
    report.classCount = C;

    auto train = target.withDomain(Domain::TargetTrain);
    auto test = target.withDomain(Domain::TargetTest);
    if (train.empty() || test.empty()) throw InvalidArgument("runAda: target needs train and test items");
    for (const auto* it : train)
        if (it->label.classCount() != C) throw InvalidArgument("runAda: class count mismatch");

    std::vector<FeatureMap> trainFeats, testFeats;
    for (const auto* it : train) trainFeats.push_back(computeFeatures(it->image));
    for (const auto* it : test) testFeats.push_back(computeFeatures(it->image));
    std::vector<const LabelMask*> testGt;
    for (const auto* it : test) testGt.push_back(&it->label);

    auto evaluate = [&](const PixelClassifier& clf) {
        std::vector<LabelMask> preds;
        for (const auto& fm : testFeats) preds.push_back(predict(clf, fm).argmax());
        return pooledDice(preds, testGt, C);
    };
    report.sourceOnlyPerClass = evaluate(f);
    report.sourceOnlyMean = meanOf(report.sourceOnlyPerClass);

    // Accumulated expert labels: value per pixel and whether it is covered.
    std::vector<LabelMask> annotated;
    std::vector<BinaryMask> covered;
    std::vector<std::vector<Roi>> taken(train.size());
    for (const auto* it : train) {
        annotated.emplace_back(it->image.width(), it->image.height(), C, 0);
        covered.emplace_back(it->image.width(), it->image.height());
    }

    EntropyScorer entropy;
    for (int r = 1; r <= cfg.plan.rounds; ++r) {
        RoundRecord round;
        round.round = r;
        std::vector<LabelMask> yal(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            const DatasetItem& item = *train[i];
            ProbMap probs = predict(f, trainFeats[i]);
            LabelMask pinit = probs.argmax();
            std::vector<ScoredRoi> picked =
                cfg.acquisition == Acquisition::Entropy
                    ? selectRois(entropy.score(probs), cfg.plan, taken[i])
                    : randomRois(item.image.width(), item.image.height(), cfg.plan, taken[i],
                                 mixSeed(cfg.seed, static_cast<std::uint64_t>(r), i));
            LabelMask current = pinit;
            for (std::size_t k = 0; k < picked.size(); ++k) {
                RoiRecord rec;
                rec.imageId = item.id;
                rec.round = r;
                rec.roi = picked[k].roi;
                rec.score = picked[k].score;
                current = refineRoiWithFeedback(current, item.label, item.image, rec.roi, cfg,
                                                mixSeed(cfg.seed, static_cast<std::uint64_t>(r) << 32 | i, k), rec);
                taken[i].push_back(rec.roi);
                for (int y = rec.roi.y; y < rec.roi.bottom(); ++y)
                    for (int x = rec.roi.x; x < rec.roi.right(); ++x) {
                        annotated[i](x, y) = current(x, y);
                        covered[i](x, y) = 1;
                    }
                report.totalWords += rec.words;
                report.totalVertices += rec.gtVertices;
                round.rois.push_back(std::move(rec));
            }
            yal[i] = std::move(current);
        }

        std::vector<Sample> samples;
        for (std::size_t i = 0; i < train.size(); ++i)
            for (std::size_t p = 0; p < covered[i].size(); ++p) {
                if (covered[i][p])
                    samples.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(p), annotated[i][p]});
                else if (cfg.selfTrain)
                    samples.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(p), yal[i][p]});
            }
        round.supervisedPixels = static_cast<long long>(samples.size());
        TrainHyper h = cfg.adaptHyper;
        h.seed = mixSeed(cfg.seed, cfg.adaptHyper.seed, static_cast<std::uint64_t>(r));
        trainOnSamples(f, trainFeats, std::move(samples), h);
        round.trainLoss = f.finalLoss();
        round.testDicePerClass = evaluate(f);
        round.testDiceMean = meanOf(round.testDicePerClass);
        report.rounds.push_back(std::move(round));
    }
    report.finalPerClass = report.rounds.back().testDicePerClass;
    report.finalMean = report.rounds.back().testDiceMean;
    return report;
}

/// Seeded source and shifted target sets for the loop.
struct DeskData {
    Dataset source;
    Dataset target;
};

struct DeskDataSpec {
    int width = 128;
    int height = 128;
    int classCount = 2;
    int sourceCount = 20;
    int targetTrain = 20;
    int targetTest = 10;
    double remapGamma = 0.7;
    double shiftNoiseSigma = 0.02;
    std::uint64_t seed = 2024;
};

inline DeskData makeDeskData(const DeskDataSpec& s) {
    PhantomSpec src;
    src.width = s.width;
    src.height = s.height;
    src.classCount = s.classCount;
    src.classLevels.clear();
    for (int c = 0; c < s.classCount; ++c)
        src.classLevels.push_back(0.30 + 0.32 * c / std::max(1, s.classCount - 1));
    src.count = s.sourceCount;
    src.seed = mixSeed(s.seed, 1);
    PhantomSpec tgt = src;
    tgt.count = s.targetTrain + s.targetTest;
    tgt.testCount = s.targetTest;
    tgt.shift = DomainShift::IntensityRemap;
    tgt.remapGamma = s.remapGamma;
    tgt.shiftNoiseSigma = s.shiftNoiseSigma;
    tgt.seed = mixSeed(s.seed, 2);
    return {generatePhantoms(src), generatePhantoms(tgt)};
}

} // namespace langseg
