#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>

#include "langseg/dataset.hpp"
#include "langseg/io.hpp"
#include "langseg/serialize.hpp"

using namespace langseg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
};

Outcome run(const std::string& args) {
    std::string cmd = std::string(LANGSEG_CLI) + " " + args + " 2>&1";
    Outcome r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("langseg_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("refine").code, 2);
    EXPECT_EQ(run("loop --acq greedy").code, 2);
    EXPECT_EQ(run("bogus").code, 2);
}

TEST(Cli, ParsePrintsProgram) {
    Outcome r = run("parse \"Expand the boundary at the top-right corner, remove the fragments at the bottom, and smooth the "
                "overall boundary.\"");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out,
              "OBJ0=EXPAND(direction='TOP-RIGHT', in=MASK)\n"
              "OBJ1=REMOVE(direction='BOTTOM', in=OBJ0)\n"
              "OBJ2=SMOOTH(direction='OVERALL', in=OBJ1)\n"
              "FINAL=RESULT(var=OBJ2)\n");
    Outcome bad = run("parse \"polish it\"");
    EXPECT_EQ(bad.code, 3);
    EXPECT_NE(bad.out.find("UnrecognizedVerb"), std::string::npos);
}

TEST(Cli, EffortTableAndJson) {
    Outcome t = run("effort --vertices 27826 --words 67186");
    EXPECT_EQ(t.code, 0);
    EXPECT_NE(t.out.find("42.90"), std::string::npos);
    EXPECT_NE(t.out.find("8.61"), std::string::npos);
    Outcome j = run("effort --vertices 12318 --words 18211 --json");
    ASSERT_EQ(j.code, 0);
    Json e = Json::parse(j.out);
    EXPECT_NEAR(e.at("polygonHours").get<double>(), 18.99, 0.01);
    EXPECT_NEAR(e.at("deltaPercent").get<double>(), 87.7, 0.2);
    EXPECT_EQ(run("effort --vertices 0 --words 3").code, 2);
}

TEST(Cli, SynthRefineRoundTrip) {
    auto dir = scratch("refine");
    ASSERT_EQ(run("synth --out " + (dir / "ds").string() + " --n 2 --width 64 --height 64 --seed 4").code, 0);
    Dataset ds = io::readDataset(dir / "ds");
    ASSERT_EQ(ds.items.size(), 2u);
    const std::string id = ds.items[0].id;
    io::writeMask(dir / "mask.pgm", ds.items[0].label);

    std::string base = "refine --image " + (dir / "ds" / (id + ".pgm")).string() + " --mask " + (dir / "mask.pgm").string() +
                       " --roi 10,12,20,16 --out " + (dir / "out.pgm").string();
    Outcome r = run(base + " --command \"the entire region is background\" --log " + (dir / "log.json").string());
    ASSERT_EQ(r.code, 0) << r.out;
    BinaryMask before = io::decodeBinary(io::readFile(dir / "mask.pgm"));
    BinaryMask after = io::decodeBinary(io::readFile(dir / "out.pgm"));
    Roi roi{10, 12, 20, 16};
    EXPECT_EQ(countInRoi(after, roi), 0);
    EXPECT_TRUE(identicalOutside(after, before, roi));
    EXPECT_TRUE(Json::parse(io::readFile(dir / "log.json")).is_array());

    Outcome eta = run(base + " --command \"expand at the left\" --eta-trace " + (dir / "eta.csv").string());
    ASSERT_EQ(eta.code, 0) << eta.out;
    EXPECT_EQ(io::readFile(dir / "eta.csv").rfind("t,eta\n", 0), 0u);

    io::writeFile(dir / "p.prog", "OBJ0=FILL(direction='OVERALL', in=MASK)\nFINAL=RESULT(var=OBJ0)\n");
    EXPECT_EQ(run(base + " --program " + (dir / "p.prog").string()).code, 0);
    io::writeFile(dir / "bad.prog", "OBJ0=FLIP(direction='OVERALL', in=MASK)\nFINAL=RESULT(var=OBJ0)\n");
    EXPECT_EQ(run(base + " --program " + (dir / "bad.prog").string()).code, 3);
    io::writeFile(dir / "warn.prog", "OBJ0=EXPAND(direction='TOP', in=MASK, granularity=5)\nFINAL=RESULT(var=OBJ0)\n");
    EXPECT_EQ(run(base + " --program " + (dir / "warn.prog").string()).code, 0);
    EXPECT_EQ(run(base + " --program " + (dir / "warn.prog").string() + " --strict").code, 4);
    EXPECT_EQ(run("refine --image " + (dir / "nope.pgm").string() + " --mask x --roi 0,0,1,1 --out y --command \"fill holes\"").code,
              3);
    EXPECT_EQ(run(base.substr(0, base.find("--roi")) + "--roi 60,60,20,20 --out " + (dir / "o.pgm").string() +
                  " --command \"fill holes\"")
                  .code,
              2);
    fs::remove_all(dir);
}

TEST(Cli, LoopReportIsReproducible) {
    auto dir = scratch("loop");
    ASSERT_EQ(run("synth --out " + (dir / "src").string() + " --n 3 --width 64 --height 64 --seed 1 --shift none").code, 0);
    ASSERT_EQ(run("synth --out " + (dir / "tgt").string() +
                  " --n 5 --test 2 --width 64 --height 64 --seed 2 --shift intensity --gamma 0.7")
                  .code,
              0);
    io::writeFile(dir / "cfg.txt", "adapt_steps = 10\nsource_epochs = 1\n");
    std::string args = "loop --source " + (dir / "src").string() + " --target " + (dir / "tgt").string() + " --config " +
                       (dir / "cfg.txt").string() + " --budget 10 --rounds 2 --roi-size 13 --seed 5 --report ";
    Outcome a = run(args + (dir / "a.json").string());
    ASSERT_EQ(a.code, 0) << a.out;
    ASSERT_EQ(run(args + (dir / "b.json").string()).code, 0);
    std::string ja = io::readFile(dir / "a.json");
    EXPECT_EQ(ja, io::readFile(dir / "b.json"));
    Json rep = Json::parse(ja);
    EXPECT_EQ(rep.at("rounds").size(), 2u);
    EXPECT_EQ(rep.at("config").at("adapt_steps"), "10");
    EXPECT_EQ(rep.at("config").at("roi_w"), "13");

    Outcome e = run("effort --from-report " + (dir / "a.json").string());
    EXPECT_EQ(e.code, 0) << e.out;
    EXPECT_NE(e.out.find("#Vertices"), std::string::npos);
    fs::remove_all(dir);
}
