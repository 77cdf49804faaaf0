#pragma once

/**
 * @file serialize.hpp
 * @brief JSON encodings of execution logs, loop reports and effort reports.
 */

#include <string>
#include <vector>

#include "json.hpp"
#include "langseg/adapt.hpp"
#include "langseg/effort.hpp"
#include "langseg/executor.hpp"

namespace langseg {

using Json = nlohmann::json;

inline Json toJson(const Roi& r) { return Json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; }

inline Roi roiFromJson(const Json& j) {
    return Roi{j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
}

inline Json toJson(const EtaTrace& trace) {
    Json out = Json::array();
    for (const auto& e : trace) out.push_back(Json{{"t", e.iteration}, {"eta", e.eta}});
    return out;
}

inline Json toJson(const StepRecord& s) {
    Json j{{"index", s.index},
           {"op", opName(s.op)},
           {"direction", directionName(s.direction)},
           {"in", s.inVar},
           {"out", s.outVar},
           {"changedPixels", s.changedPixels},
           {"warnings", s.warnings}};
    Json args = Json::object();
    for (const auto& [k, v] : s.args) args[k] = v;
    j["args"] = std::move(args);
    if (s.op == OpKind::Expand || s.op == OpKind::Shrink) {
        j["etaTrace"] = toJson(s.etaTrace);
        j["bestIter"] = s.bestIter;
    }
    return j;
}

inline Json toJson(const ExecLog& log) {
    Json out = Json::array();
    for (const auto& s : log.steps) out.push_back(toJson(s));
    return out;
}

inline Json toJson(const EffortReport& r) {
    return Json{{"vertexCount", r.vertexCount},
                {"polygonHours", r.polygonHours},
                {"wordCount", r.wordCount},
                {"lingualHours", r.lingualHours},
                {"deltaPercent", r.deltaPercent}};
}

inline Json toJson(const RoiRecord& r) {
    return Json{{"imageId", r.imageId},   {"round", r.round},           {"roi", toJson(r.roi)},
                {"score", r.score},       {"command", r.command},       {"program", r.program},
                {"words", r.words},       {"gtVertices", r.gtVertices}, {"diceBefore", r.diceBefore},
                {"diceAfter", r.diceAfter}, {"warnings", r.warnings}};
}

inline RoiRecord roiRecordFromJson(const Json& j) {
    RoiRecord r;
    r.imageId = j.at("imageId").get<std::string>();
    r.round = j.at("round").get<int>();
    r.roi = roiFromJson(j.at("roi"));
    r.score = j.at("score").get<double>();
    r.command = j.at("command").get<std::string>();
    r.program = j.at("program").get<std::string>();
    r.words = j.at("words").get<long long>();
    r.gtVertices = j.at("gtVertices").get<long long>();
    r.diceBefore = j.at("diceBefore").get<double>();
    r.diceAfter = j.at("diceAfter").get<double>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
}

inline Json toJson(const LoopReport& rep) {
    Json rounds = Json::array();
    for (const auto& r : rep.rounds) {
        Json rois = Json::array();
        for (const auto& x : r.rois) rois.push_back(toJson(x));
        rounds.push_back(Json{{"round", r.round},
                              {"rois", std::move(rois)},
                              {"supervisedPixels", r.supervisedPixels},
                              {"trainLoss", r.trainLoss},
                              {"testDicePerClass", r.testDicePerClass},
                              {"testDiceMean", r.testDiceMean}});
    }
    Json cfg = Json::object();
    for (const auto& [k, v] : rep.config) cfg[k] = v;
    return Json{{"config", std::move(cfg)},
                {"seed", rep.seed},
                {"classCount", rep.classCount},
                {"sourceOnly", Json{{"perClass", rep.sourceOnlyPerClass}, {"mean", rep.sourceOnlyMean}}},
                {"sourceLoss", rep.sourceLoss},
                {"rounds", std::move(rounds)},
                {"final", Json{{"perClass", rep.finalPerClass}, {"mean", rep.finalMean}}},
                {"totalWords", rep.totalWords},
                {"totalVertices", rep.totalVertices}};
}

inline LoopReport loopReportFromJson(const Json& j) {
    LoopReport rep;
    for (const auto& [k, v] : j.at("config").items()) rep.config[k] = v.get<std::string>();
    rep.seed = j.at("seed").get<std::uint64_t>();
    rep.classCount = j.at("classCount").get<int>();
    rep.sourceOnlyPerClass = j.at("sourceOnly").at("perClass").get<std::vector<double>>();
    rep.sourceOnlyMean = j.at("sourceOnly").at("mean").get<double>();
    rep.sourceLoss = j.at("sourceLoss").get<double>();
    for (const auto& r : j.at("rounds")) {
        RoundRecord rr;
        rr.round = r.at("round").get<int>();
        for (const auto& x : r.at("rois")) rr.rois.push_back(roiRecordFromJson(x));
        rr.supervisedPixels = r.at("supervisedPixels").get<long long>();
        rr.trainLoss = r.at("trainLoss").get<double>();
        rr.testDicePerClass = r.at("testDicePerClass").get<std::vector<double>>();
        rr.testDiceMean = r.at("testDiceMean").get<double>();
        rep.rounds.push_back(std::move(rr));
    }
    rep.finalPerClass = j.at("final").at("perClass").get<std::vector<double>>();
    rep.finalMean = j.at("final").at("mean").get<double>();
    rep.totalWords = j.at("totalWords").get<long long>();
    rep.totalVertices = j.at("totalVertices").get<long long>();
    return rep;
}

/// Pretty-printed, key-sorted text; identical reports give identical bytes.
inline std::string dumpJson(const Json& j) { return j.dump(2) + "\n"; }

} // namespace langseg
