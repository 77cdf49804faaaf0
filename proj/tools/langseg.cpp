// langseg command-line tool.
//
// Exit codes: 0 ok, 1 internal failure, 2 usage error, 3 format error,
// 4 execution warnings with --strict.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "langseg/adapt.hpp"
#include "langseg/config.hpp"
#include "langseg/dataset.hpp"
#include "langseg/effort.hpp"
#include "langseg/http.hpp"
#include "langseg/io.hpp"
#include "langseg/refiner.hpp"
#include "langseg/serialize.hpp"

using namespace langseg;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitWarnings = 4;

Roi parseRoiArg(const std::string& s) {
    Roi r{};
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream is(s);
    if (!(is >> r.x >> c1 >> r.y >> c2 >> r.w >> c3 >> r.h) || c1 != ',' || c2 != ',' || c3 != ',' || !is.eof())
        throw InvalidArgument("--roi expects x,y,w,h, got '" + s + "'");
    return r;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    int n = 20;
    int test = 0;
    std::uint64_t seed = 1;
    std::string shift = "none";
    double gamma = 0.7;
    int width = 128;
    int height = 128;
    int classes = 2;
};

int runSynth(const SynthArgs& a) {
    PhantomSpec ps;
    ps.width = a.width;
    ps.height = a.height;
    ps.classCount = a.classes;
    ps.classLevels.clear();
    for (int c = 0; c < a.classes; ++c) ps.classLevels.push_back(0.30 + 0.32 * c / std::max(1, a.classes - 1));
    ps.count = a.n;
    ps.testCount = a.test;
    ps.seed = a.seed;
    if (a.shift == "intensity") {
        ps.shift = DomainShift::IntensityRemap;
        ps.remapGamma = a.gamma;
    } else if (a.test > 0) {
        throw InvalidArgument("--test needs --shift intensity");
    }
    Dataset ds = generatePhantoms(ps);
    io::writeDataset(a.out, ds);
    std::printf("wrote %zu items to %s\n", ds.items.size(), a.out.c_str());
    return 0;
}

// ---------------------------------------------------------------------------

int runParse(const std::string& command, const std::string& emit) {
    Program p = parseCommand(command);
    std::string text = renderProgram(p);
    if (!emit.empty()) io::writeFile(emit, text);
    std::cout << text;
    return 0;
}

// ---------------------------------------------------------------------------

struct RefineArgs {
    std::string image, mask, roi, command, program, out, etaTrace, log;
    bool strict = false;
};

int runRefine(const RefineArgs& a) {
    GridImage img = io::readImage(a.image);
    BinaryMask mask = io::decodeBinary(io::readFile(a.mask));
    requireSameShape(img, mask, "refine");
    Roi roi = parseRoiArg(a.roi);
    requireRoi(roi, img);
    Program p = a.program.empty() ? parseCommand(a.command) : io::readProgram(a.program);
    ExecResult res = execute(p, img, mask, roi);
    io::writeMask(a.out, res.mask);
    if (!a.etaTrace.empty()) {
        EtaTrace all;
        for (const auto& s : res.log.steps)
            if (s.op == OpKind::Expand || s.op == OpKind::Shrink) all = s.etaTrace;
        io::writeFile(a.etaTrace, etaTraceCsv(all));
    }
    if (!a.log.empty()) io::writeFile(a.log, dumpJson(toJson(res.log)));
    for (const auto& s : res.log.steps) {
        std::printf("%zu %-10s %-12s changed=%lld", s.index, std::string(opName(s.op)).c_str(),
                    std::string(directionName(s.direction)).c_str(), s.changedPixels);
        if (s.op == OpKind::Expand || s.op == OpKind::Shrink) std::printf(" bestIter=%d", s.bestIter);
        std::printf("\n");
        for (const auto& w : s.warnings) std::fprintf(stderr, "warning: step %zu: %s\n", s.index, w.c_str());
    }
    if (a.strict && res.log.hasWarnings()) return kExitWarnings;
    return 0;
}

// ---------------------------------------------------------------------------

struct LoopArgs {
    std::string source, target, report, config;
    std::optional<double> budget;
    std::optional<int> rounds, roiSize;
    std::optional<std::string> acq;
    std::optional<std::uint64_t> seed;
    std::uint64_t dataSeed = 2024;
    bool selfTrain = false;
    bool strict = false;
};

int runLoop(const LoopArgs& a) {
    FlatConfig fc = a.config.empty() ? FlatConfig{} : FlatConfig::load(a.config);
    if (a.budget) fc.set("budget", formatNumber(*a.budget));
    if (a.rounds) fc.set("rounds", std::to_string(*a.rounds));
    if (a.roiSize) {
        fc.set("roi_w", std::to_string(*a.roiSize));
        fc.set("roi_h", std::to_string(*a.roiSize));
    }
    if (a.acq) fc.set("acq", *a.acq);
    if (a.seed) fc.set("seed", std::to_string(*a.seed));
    if (a.selfTrain) fc.set("self_train", "true");
    AdaConfig cfg;
    cfg.apply(fc);

    Dataset source, target;
    if (a.source.empty() != a.target.empty()) throw InvalidArgument("--source and --target go together");
    if (a.source.empty()) {
        DeskDataSpec ds;
        ds.seed = a.dataSeed;
        DeskData d = makeDeskData(ds);
        source = std::move(d.source);
        target = std::move(d.target);
    } else {
        source = io::readDataset(a.source);
        target = io::readDataset(a.target);
    }
    LoopReport rep = runAda(source, target, cfg);
    if (!a.report.empty()) io::writeFile(a.report, dumpJson(toJson(rep)));

    std::printf("source-only  mean Dice %.4f\n", rep.sourceOnlyMean);
    for (const auto& r : rep.rounds)
        std::printf("round %d      mean Dice %.4f  rois %zu  supervised px %lld  loss %.4f\n", r.round, r.testDiceMean,
                    r.rois.size(), r.supervisedPixels, r.trainLoss);
    std::printf("final        mean Dice %.4f  words %lld  vertices %lld\n", rep.finalMean, rep.totalWords,
                rep.totalVertices);

    bool warned = false;
    for (const auto& r : rep.rounds)
        for (const auto& x : r.rois)
            for (const auto& w : x.warnings) {
                std::fprintf(stderr, "warning: round %d %s: %s\n", r.round, x.imageId.c_str(), w.c_str());
                warned = true;
            }
    if (a.strict && warned) return kExitWarnings;
    return 0;
}

// ---------------------------------------------------------------------------

int runEffort(std::optional<long long> vertices, std::optional<long long> words, const std::string& fromReport,
              bool json) {
    if (!fromReport.empty()) {
        if (vertices || words) throw InvalidArgument("--from-report excludes --vertices/--words");
        LoopReport rep;
        try {
            rep = loopReportFromJson(Json::parse(io::readFile(fromReport)));
        } catch (const Json::exception& e) {
            throw FormatError(fromReport + ": " + e.what());
        }
        vertices = rep.totalVertices;
        words = rep.totalWords;
    }
    if (!vertices || !words) throw InvalidArgument("need --vertices and --words, or --from-report");
    EffortReport r = estimate(*vertices, *words);
    if (json)
        std::cout << dumpJson(toJson(r));
    else
        std::cout << formatEffortTable({{fromReport.empty() ? "input" : "report", r}});
    return 0;
}

// ---------------------------------------------------------------------------

std::atomic<httplib::Server*> gServer{nullptr};

void onSignal(int) {
    if (auto* s = gServer.load()) s->stop();
}

int runServe(const std::string& host, int port, const std::string& data, const std::string& dump) {
    SessionStore store(data);
    httplib::Server server;
    mountRoutes(server, store);
    gServer = &server;
    std::signal(SIGINT, onSignal);
    std::signal(SIGTERM, onSignal);
    std::printf("listening on %s:%d (data dir %s)\n", host.c_str(), port, data.c_str());
    std::fflush(stdout);
    bool ok = server.listen(host, port);
    gServer = nullptr;
    if (!dump.empty()) io::writeFile(dump, dumpJson(store.dumpAll()));
    if (!ok) {
        std::fprintf(stderr, "error: could not listen on %s:%d\n", host.c_str(), port);
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Language-guided segmentation refinement"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* cSynth = app.add_subcommand("synth", "Write a seeded phantom dataset");
    cSynth->add_option("--out", synth.out, "Output directory")->required();
    cSynth->add_option("--n", synth.n, "Item count")->check(CLI::NonNegativeNumber);
    cSynth->add_option("--test", synth.test, "Trailing items tagged target-test");
    cSynth->add_option("--seed", synth.seed, "Seed");
    cSynth->add_option("--shift", synth.shift, "Domain shift")->check(CLI::IsMember({"none", "intensity"}));
    cSynth->add_option("--gamma", synth.gamma, "Intensity remap exponent");
    cSynth->add_option("--width", synth.width);
    cSynth->add_option("--height", synth.height);
    cSynth->add_option("--classes", synth.classes);

    std::string parseText, emit;
    auto* cParse = app.add_subcommand("parse", "Translate a command into a program");
    cParse->add_option("command", parseText, "Command text")->required();
    cParse->add_option("--emit", emit, "Also write the program to this file");

    RefineArgs refine;
    auto* cRefine = app.add_subcommand("refine", "Execute a command on one roi");
    cRefine->add_option("--image", refine.image)->required();
    cRefine->add_option("--mask", refine.mask)->required();
    cRefine->add_option("--roi", refine.roi, "x,y,w,h")->required();
    auto* optCommand = cRefine->add_option("--command", refine.command);
    auto* optProgram = cRefine->add_option("--program", refine.program, "Program file instead of --command");
    optCommand->excludes(optProgram);
    cRefine->add_option("--out", refine.out)->required();
    cRefine->add_option("--eta-trace", refine.etaTrace, "CSV of t,eta for the last EXPAND/SHRINK step");
    cRefine->add_option("--log", refine.log, "Execution log as JSON");
    cRefine->add_flag("--strict", refine.strict, "Exit 4 on execution warnings");

    LoopArgs loop;
    auto* cLoop = app.add_subcommand("loop", "Run the active-learning loop");
    cLoop->add_option("--source", loop.source, "Source dataset directory");
    cLoop->add_option("--target", loop.target, "Target dataset directory");
    cLoop->add_option("--data-seed", loop.dataSeed, "Seed of the built-in dataset when no directories are given");
    cLoop->add_option("--config", loop.config, "key = value file; flags override it");
    cLoop->add_option("--budget", loop.budget, "Percent of image area over all rounds");
    cLoop->add_option("--rounds", loop.rounds);
    cLoop->add_option("--roi-size", loop.roiSize);
    cLoop->add_option("--acq", loop.acq)->check(CLI::IsMember({"entropy", "random"}));
    cLoop->add_option("--seed", loop.seed);
    cLoop->add_option("--report", loop.report, "LoopReport JSON");
    cLoop->add_flag("--self-train", loop.selfTrain, "Also fine-tune on pseudo-labels outside the rois");
    cLoop->add_flag("--strict", loop.strict, "Exit 4 on parse or execution warnings");

    std::optional<long long> vertices, words;
    std::string fromReport;
    bool effortJson = false;
    auto* cEffort = app.add_subcommand("effort", "Polygon vs. language annotation time");
    cEffort->add_option("--vertices", vertices);
    cEffort->add_option("--words", words);
    cEffort->add_option("--from-report", fromReport, "Take counts from a LoopReport");
    cEffort->add_flag("--json", effortJson);

    std::string host = "127.0.0.1", dataDir = ".", dump;
    int port = 8080;
    auto* cServe = app.add_subcommand("serve", "Run the refinement HTTP service");
    cServe->add_option("--host", host);
    cServe->add_option("--port", port);
    cServe->add_option("--data", dataDir, "Directory that imageRef/gtRef/maskRef resolve against");
    cServe->add_option("--dump", dump, "Write all sessions as JSON on shutdown");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*cSynth) return runSynth(synth);
        if (*cParse) return runParse(parseText, emit);
        if (*cRefine) {
            if (refine.command.empty() && refine.program.empty()) throw InvalidArgument("need --command or --program");
            return runRefine(refine);
        }
        if (*cLoop) return runLoop(loop);
        if (*cEffort) return runEffort(vertices, words, fromReport, effortJson);
        if (*cServe) return runServe(host, port, dataDir, dump);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFormat;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFormat;
    } catch (const InvalidArgument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const DimensionError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
