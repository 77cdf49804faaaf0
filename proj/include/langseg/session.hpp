#pragma once

/**
 * @file session.hpp
 * @brief Interactive refinement sessions: stage a command's result per roi,
 *        accept or reject it, and replay the accepted history.
 *
 * Transcript format (one block per accepted command, in order):
 *
 *     @roi <k> <x> <y> <w> <h>
 *     # <command text>
 *     OBJ0=...
 *     FINAL=RESULT(var=...)
 */

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "langseg/acquisition.hpp"
#include "langseg/classifier.hpp"
#include "langseg/command.hpp"
#include "langseg/executor.hpp"
#include "langseg/io.hpp"
#include "langseg/phantom.hpp"
#include "langseg/serialize.hpp"

namespace langseg {

/// Service-level failure mapped to an HTTP status.
class ServiceError : public Error {
public:
    ServiceError(int status, const std::string& what, Json detail = Json::object())
        : Error(what), status_(status), detail_(std::move(detail)) {}
    int status() const noexcept { return status_; }
    const Json& detail() const noexcept { return detail_; }

private:
    int status_;
    Json detail_;
};

enum class RoiStatus { Pending, Refined, Accepted };

inline std::string_view roiStatusName(RoiStatus s) {
    switch (s) {
        case RoiStatus::Pending: return "pending";
        case RoiStatus::Refined: return "refined";
        case RoiStatus::Accepted: return "accepted";
    }
    return "pending";
}

struct StagedResult {
    std::string command;
    Program program;
    BinaryMask mask;  // full-size, differs from the current mask only inside the roi
    ExecLog log;
};

struct SessionRoi {
    Roi roi{};
    double score = 0.0;
    RoiStatus status = RoiStatus::Pending;
    std::optional<StagedResult> staged;
};

struct HistoryEntry {
    std::size_t roiIndex = 0;
    std::string command;
    std::string program;  // canonical text
    bool accepted = false;
};

struct Session {
    std::string id;
    std::uint64_t seed = 0;
    GridImage image;
    std::optional<BinaryMask> gt;
    BinaryMask initialMask;
    BinaryMask current;
    std::vector<SessionRoi> rois;
    std::vector<HistoryEntry> history;
    mutable std::mutex mutex;
};

/// Replays a transcript against an initial mask.
inline BinaryMask replayTranscript(const GridImage& image, const BinaryMask& initial, std::string_view text,
                                   const ExecConfig& cfg = {}) {
    BinaryMask mask = initial;
    std::optional<Roi> roi;
    std::string block;
    auto flush = [&] {
        if (!roi) {
            if (block.find_first_not_of(" \t\r\n") != std::string::npos)
                throw FormatError("transcript: program text before any @roi line");
            return;
        }
        Program p = parseProgram(block);
        mask = execute(p, image, mask, *roi, cfg).mask;
        block.clear();
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        if (line.substr(0, 4) == "@roi") {
            if (roi) flush();
            std::istringstream is{std::string(line.substr(4))};
            std::size_t k = 0;
            Roi r{};
            if (!(is >> k >> r.x >> r.y >> r.w >> r.h))
                throw FormatError("transcript: malformed @roi line", pos);
            requireRoi(r, image);
            roi = r;
        } else {
            block.append(line);
            block.push_back('\n');
        }
        pos = eol + 1;
    }
    if (roi) flush();
    return mask;
}

struct SessionDefaults {
    BudgetPlan plan{5.0, 1, 21, 21};
    ExecConfig exec{};
    TrainHyper hyper{};
    std::uint64_t modelSeed = 2024;
};

/// Owns all live sessions. Session creation and lookup are serialized on
/// the store; everything else on the session's own mutex.
class SessionStore {
public:
    explicit SessionStore(std::filesystem::path dataDir = {}, SessionDefaults defaults = {})
        : dataDir_(std::move(dataDir)), defaults_(defaults) {}

    /// POST /sessions
    Json create(const Json& body) {
        auto s = std::make_shared<Session>();
        s->seed = body.value("seed", std::uint64_t{1});
        if (body.contains("synthSpec")) {
            const Json& spec = body.at("synthSpec");
            PhantomSpec ps;
            ps.count = 1;
            ps.width = spec.value("width", 128);
            ps.height = spec.value("height", 128);
            ps.seed = spec.value("seed", std::uint64_t{1});
            std::string shift = spec.value("shift", std::string("intensity"));
            if (shift == "intensity") {
                ps.shift = DomainShift::IntensityRemap;
                ps.remapGamma = spec.value("gamma", 0.7);
            } else if (shift != "none") {
                throw ServiceError(422, "synthSpec.shift must be 'none' or 'intensity'");
            }
            try {
                Dataset ds = generatePhantoms(ps);
                s->image = std::move(ds.items[0].image);
                s->gt = ds.items[0].label.classMask(1);
            } catch (const InvalidArgument& e) {
                throw ServiceError(422, std::string("bad synthSpec: ") + e.what());
            }
        } else if (body.contains("imageRef")) {
            s->image = readRef<GridImage>(body.at("imageRef").get<std::string>(),
                                          [](std::string_view b) { return io::decodeImage(b); });
            if (body.contains("gtRef"))
                s->gt = readRef<BinaryMask>(body.at("gtRef").get<std::string>(),
                                            [](std::string_view b) { return io::decodeBinary(b); });
            if (s->gt && !s->gt->sameShape(s->image)) throw ServiceError(422, "gtRef size differs from imageRef");
        } else {
            throw ServiceError(422, "request needs imageRef or synthSpec");
        }

        ProbMap probs = predict(model(), s->image);
        if (body.contains("maskRef")) {
            s->initialMask = readRef<BinaryMask>(body.at("maskRef").get<std::string>(),
                                                 [](std::string_view b) { return io::decodeBinary(b); });
            if (!s->initialMask.sameShape(s->image)) throw ServiceError(422, "maskRef size differs from imageRef");
        } else {
            s->initialMask = probs.argmax().classMask(1);
        }
        s->current = s->initialMask;

        BudgetPlan plan = defaults_.plan;
        plan.budgetPercent = body.value("budget", plan.budgetPercent);
        plan.roiW = plan.roiH = body.value("roiSize", plan.roiW);
        try {
            plan.validate();
            for (const auto& r : selectRois(entropyMap(probs), plan, {})) s->rois.push_back({r.roi, r.score, RoiStatus::Pending, std::nullopt});
        } catch (const InvalidArgument& e) {
            throw ServiceError(422, e.what());
        }

        std::lock_guard lock(mutex_);
        s->id = "s" + std::to_string(++counter_);
        sessions_[s->id] = s;
        Json out{{"sessionId", s->id}, {"rois", roisJson(*s)}};
        return out;
    }

    /// GET /sessions/{id}
    Json state(const std::string& id) const {
        auto s = find(id);
        std::lock_guard lock(s->mutex);
        Json history = Json::array();
        for (const auto& h : s->history)
            history.push_back(
                Json{{"roi", h.roiIndex}, {"command", h.command}, {"program", h.program}, {"accepted", h.accepted}});
        Json out{{"sessionId", s->id},
                 {"width", s->image.width()},
                 {"height", s->image.height()},
                 {"image", io::base64Encode(io::encodeImage(s->image))},
                 {"mask", io::base64Encode(io::encodeMask(s->current))},
                 {"rois", roisJson(*s)},
                 {"history", std::move(history)},
                 {"hasGt", s->gt.has_value()}};
        if (s->gt) out["gt"] = io::base64Encode(io::encodeMask(*s->gt));
        return out;
    }

    /// POST /sessions/{id}/rois/{k}/command
    Json command(const std::string& id, std::size_t k, const std::string& text) {
        auto s = find(id);
        std::lock_guard lock(s->mutex);
        SessionRoi& r = roiAt(*s, k);
        Program program;
        try {
            program = parseCommand(text);
        } catch (const ParseError& e) {
            throw ServiceError(422, e.what(), Json{{"kind", ParseError::kindName(e.kind())}, {"detail", e.detail()}});
        }
        ExecResult res = execute(program, s->image, s->current, r.roi, defaults_.exec);
        Json eta = Json::array();
        for (const auto& step : res.log.steps)
            if (step.op == OpKind::Expand || step.op == OpKind::Shrink)
                eta.push_back(Json{{"step", step.index}, {"trace", toJson(step.etaTrace)}, {"bestIter", step.bestIter}});
        Json out{{"program", renderProgram(program)},
                 {"refinedPatch", io::base64Encode(io::encodeMask(cropRoi(res.mask, r.roi)))},
                 {"etaTrace", std::move(eta)},
                 {"log", toJson(res.log)},
                 {"roiDiceIfGt", nullptr}};
        if (s->gt)
            out["roiDiceIfGt"] = Json{{"before", diceInRoi(s->current, *s->gt, r.roi)},
                                      {"after", diceInRoi(res.mask, *s->gt, r.roi)}};
        r.staged = StagedResult{text, std::move(program), std::move(res.mask), std::move(res.log)};
        r.status = RoiStatus::Refined;
        return out;
    }

    /// POST /sessions/{id}/rois/{k}/accept
    Json accept(const std::string& id, std::size_t k) {
        auto s = find(id);
        std::lock_guard lock(s->mutex);
        SessionRoi& r = roiAt(*s, k);
        if (!r.staged) throw ServiceError(409, "roi " + std::to_string(k) + " has no staged result");
        // Only roi pixels are taken from the staged mask.
        s->current = spliceRoi(s->current, r.staged->mask, r.roi);
        s->history.push_back({k, r.staged->command, renderProgram(r.staged->program), true});
        r.staged.reset();
        r.status = RoiStatus::Accepted;
        return Json{{"sessionId", s->id}, {"roi", k}, {"status", roiStatusName(r.status)}};
    }

    /// POST /sessions/{id}/rois/{k}/reject
    Json reject(const std::string& id, std::size_t k) {
        auto s = find(id);
        std::lock_guard lock(s->mutex);
        SessionRoi& r = roiAt(*s, k);
        if (!r.staged) throw ServiceError(409, "roi " + std::to_string(k) + " has no staged result");
        s->history.push_back({k, r.staged->command, renderProgram(r.staged->program), false});
        r.staged.reset();
        r.status = RoiStatus::Pending;
        return Json{{"sessionId", s->id}, {"roi", k}, {"status", roiStatusName(r.status)}};
    }

    /// GET /sessions/{id}/replay
    std::string replay(const std::string& id) const {
        auto s = find(id);
        std::lock_guard lock(s->mutex);
        std::string out;
        for (const auto& h : s->history) {
            if (!h.accepted) continue;
            const Roi& r = s->rois[h.roiIndex].roi;
            out += "@roi " + std::to_string(h.roiIndex) + " " + std::to_string(r.x) + " " + std::to_string(r.y) + " " +
                   std::to_string(r.w) + " " + std::to_string(r.h) + "\n";
            out += "# " + oneLine(h.command) + "\n";
            out += h.program;
        }
        return out;
    }

    /// Image, initial mask and current mask, for replay checks.
    std::tuple<GridImage, BinaryMask, BinaryMask> snapshot(const std::string& id) const {
        auto s = find(id);
        std::lock_guard lock(s->mutex);
        return {s->image, s->initialMask, s->current};
    }

    const SessionDefaults& defaults() const noexcept { return defaults_; }

    /// Every session as JSON, for a dump on shutdown.
    Json dumpAll() const {
        std::vector<std::string> ids;
        {
            std::lock_guard lock(mutex_);
            for (const auto& [id, _] : sessions_) ids.push_back(id);
        }
        Json out = Json::object();
        for (const auto& id : ids) {
            Json st = state(id);
            st["replay"] = replay(id);
            out[id] = std::move(st);
        }
        return out;
    }

private:
    std::shared_ptr<Session> find(const std::string& id) const {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw ServiceError(404, "unknown session '" + id + "'");
        return it->second;
    }

    static SessionRoi& roiAt(Session& s, std::size_t k) {
        if (k >= s.rois.size()) throw ServiceError(404, "session " + s.id + " has no roi " + std::to_string(k));
        return s.rois[k];
    }

    static Json roisJson(const Session& s) {
        Json out = Json::array();
        for (std::size_t k = 0; k < s.rois.size(); ++k) {
            Json r = toJson(s.rois[k].roi);
            r["k"] = k;
            r["score"] = s.rois[k].score;
            r["status"] = roiStatusName(s.rois[k].status);
            out.push_back(std::move(r));
        }
        return out;
    }

    static std::string oneLine(std::string s) {
        for (char& c : s)
            if (c == '\n' || c == '\r') c = ' ';
        return s;
    }

    template <typename T, typename Decode>
    T readRef(const std::string& ref, Decode decode) const {
        std::filesystem::path p(ref);
        if (ref.empty() || p.is_absolute() || ref.find("..") != std::string::npos)
            throw ServiceError(422, "reference '" + ref + "' must be a relative path inside the data directory");
        std::filesystem::path full = dataDir_ / p;
        if (!std::filesystem::exists(full)) throw ServiceError(404, "no such file '" + ref + "'");
        try {
            return decode(io::readFile(full));
        } catch (const FormatError& e) {
            throw ServiceError(422, "'" + ref + "': " + e.what());
        }
    }

    /// Source model shared by all sessions; trained once on first use.
    const PixelClassifier& model() {
        std::call_once(modelOnce_, [&] {
            PhantomSpec ps;
            ps.count = 20;
            ps.seed = mixSeed(defaults_.modelSeed, 1);
            Dataset source = generatePhantoms(ps);
            std::vector<FeatureMap> feats;
            std::vector<const LabelMask*> labels;
            for (const auto& it : source.items) {
                feats.push_back(computeFeatures(it.image));
                labels.push_back(&it.label);
            }
            model_ = PixelClassifier(2);
            trainOnSamples(model_, feats, allPixelSamples(labels), defaults_.hyper);
        });
        return model_;
    }

    std::filesystem::path dataDir_;
    SessionDefaults defaults_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    unsigned long long counter_ = 0;
    std::once_flag modelOnce_;
    PixelClassifier model_{2};
};

} // namespace langseg
