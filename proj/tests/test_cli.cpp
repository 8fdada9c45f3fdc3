#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bnb/bnb.hpp"

namespace fs = std::filesystem;
using bnb::json;

namespace {

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = fs::temp_directory_path() / ("bnb_cli_" + std::to_string(::getpid()));
        fs::remove_all(root_);
        fs::create_directories(root_);
        // Small planted-anomaly data shared by most tests.
        ASSERT_EQ(run("synth --transactions 400 --alphabet 30 --patterns 10 --seed 5 --out " + path("syn")), 0);
    }

    static void TearDownTestSuite() { fs::remove_all(root_); }

    static std::string path(const std::string& name) { return (root_ / name).string(); }

    static int run(const std::string& args, std::string* out = nullptr) {
        const std::string log = path("last_stdout.txt");
        const std::string cmd = std::string(BNB_CLI_PATH) + " " + args + " >" + log + " 2>&1";
        const int status = std::system(cmd.c_str());
        if (out) *out = slurp(log);
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    static std::string slurp(const std::string& file) {
        std::ifstream in(file, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    static json manifest(const std::string& dir) { return json::parse(slurp(path(dir) + "/manifest.json")); }

    static std::string data() { return path("syn/data.dat"); }

    static std::size_t anomaly() {
        return json::parse(slurp(path("syn/ground_truth.json")))["anomaly_transaction_id"].get<std::size_t>();
    }

    static fs::path root_;
};

fs::path Cli::root_;

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST_F(Cli, SynthWritesDataTruthAndManifest) {
    const auto m = manifest("syn");
    EXPECT_EQ(m["command"], "synth");
    EXPECT_EQ(m["seed"], 5);
    EXPECT_TRUE(m["outputs"].contains("data.dat"));
    EXPECT_TRUE(m["outputs"].contains("ground_truth.json"));
    EXPECT_EQ(m["rng"], bnb::kRngAlgorithm);
    std::ifstream in(data());
    EXPECT_EQ(bnb::parse_fimi(in).size(), 400U);
}

TEST_F(Cli, ScoreRanksPlantedAnomalyFirst) {
    ASSERT_EQ(run("score " + data() + " --mine-inline --classes 0,1,2 --out " + path("score")), 0);
    const auto csv = lines(slurp(path("score/ranking.csv")));
    ASSERT_EQ(csv.size(), 401U);
    EXPECT_EQ(csv[1].substr(0, csv[1].find(',')), std::to_string(anomaly()));
    const auto jsonl = lines(slurp(path("score/report.jsonl")));
    EXPECT_EQ(jsonl.size(), 400U);
    const auto m = manifest("score");
    EXPECT_TRUE(m["timings_s"].contains("mining"));
    EXPECT_TRUE(m["timings_s"].contains("scoring"));
    EXPECT_EQ(m["inputs"][0]["sha256"].get<std::string>().size(), 64U);
}

TEST_F(Cli, ScoreFromMinedPatternsMatchesInline) {
    ASSERT_EQ(run("mine " + data() + " --out " + path("mine")), 0);
    ASSERT_EQ(run("score " + data() + " --patterns " + path("mine/patterns.json") + " --classes 1,2 --out " +
                  path("score_file")),
              0);
    ASSERT_EQ(run("score " + data() + " --mine-inline --classes 1,2 --out " + path("score_inline")), 0);
    EXPECT_EQ(slurp(path("score_file/ranking.csv")), slurp(path("score_inline/ranking.csv")));
}

TEST_F(Cli, ClassOneWithoutCodeTableIsAnError) {
    ASSERT_EQ(run("mine " + data() + " --method closed --minsup 0.05 --out " + path("closed")), 0);
    std::string out;
    EXPECT_NE(run("score " + data() + " --patterns " + path("closed/patterns.json") + " --classes 1 --out " +
                      path("c1"),
                  &out),
              0);
    EXPECT_NE(out.find("--mine-inline"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("c1/manifest.json")));
    EXPECT_NE(run("score " + data() + " --classes 1 --out " + path("c1b"), &out), 0);
    EXPECT_NE(out.find("--mine-inline"), std::string::npos);
}

TEST_F(Cli, ClosedSetIsLargerThanMdl) {
    std::string mdl;
    std::string closed;
    ASSERT_EQ(run("mine " + data() + " --method mdl --out " + path("m_mdl"), &mdl), 0);
    ASSERT_EQ(run("mine " + data() + " --method closed --minsup 0.05 --out " + path("m_closed"), &closed), 0);
    EXPECT_NE(mdl.find("|S| = "), std::string::npos);
    const auto mdl_set = json::parse(slurp(path("m_mdl/patterns.json")));
    const auto closed_set = json::parse(slurp(path("m_closed/patterns.json")));
    EXPECT_GT(closed_set.size(), mdl_set.size());
}

TEST_F(Cli, ArgumentErrors) {
    EXPECT_NE(run("mine " + data() + " --minsup 0 --out " + path("e1")), 0);
    EXPECT_NE(run("significance " + data() + " --replicates 0 --out " + path("e2")), 0);
    EXPECT_NE(run("mine " + data()), 0);
    EXPECT_NE(run("mine " + path("missing.dat") + " --out " + path("e3")), 0);
    EXPECT_NE(run("frobnicate"), 0);
    EXPECT_NE(run("score " + data() + " --mine-inline --patterns " + data() + " --out " + path("e4")), 0);
}

TEST_F(Cli, InvalidInputExitsNonZero) {
    std::ofstream(path("bad.dat")) << "1 2\n3 x\n";
    std::string out;
    EXPECT_NE(run("mine " + path("bad.dat") + " --out " + path("bad"), &out), 0);
    EXPECT_NE(out.find("line 2"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("bad/manifest.json")));
    std::ofstream(path("data.txt")) << "1 2\n";
    EXPECT_NE(run("mine " + path("data.txt") + " --out " + path("bad2"), &out), 0);
    EXPECT_EQ(run("mine " + path("data.txt") + " --format fimi --out " + path("ok2")), 0);
}

TEST_F(Cli, EmptyDatasetMinesEmptyTable) {
    std::ofstream(path("empty.dat")).close();
    std::string out;
    ASSERT_EQ(run("mine " + path("empty.dat") + " --out " + path("empty"), &out), 0);
    EXPECT_NE(out.find("|S| = 0"), std::string::npos);
    EXPECT_EQ(json::parse(slurp(path("empty/patterns.json"))), json::array());
}

TEST_F(Cli, UniformLengthsScoreZeroForClassZero) {
    std::ofstream(path("uniform.dat")) << "1 2\n3 4\n1 3\n";
    ASSERT_EQ(run("score " + path("uniform.dat") + " --classes 0 --out " + path("uniform")), 0);
    for (const auto& line : lines(slurp(path("uniform/report.jsonl")))) {
        EXPECT_EQ(json::parse(line)["score0"], 0.0);
    }
}

TEST_F(Cli, NoEligiblePairMarked) {
    std::ofstream(path("single.dat")) << "1\n2\n1\n";
    ASSERT_EQ(run("score " + path("single.dat") + " --mine-inline --classes 2 --out " + path("single")), 0);
    for (const auto& line : lines(slurp(path("single/report.jsonl")))) {
        EXPECT_EQ(json::parse(line)["explanation"], "no eligible pair");
    }
}

TEST_F(Cli, CategoricalCsvWithLabels) {
    ASSERT_EQ(run("synth --kind categorical --transactions 300 --attributes 12 --domain 3 --patterns 8 --seed 2 "
                  "--out " +
                  path("cat")),
              0);
    std::string out;
    ASSERT_EQ(run("score " + path("cat/data.csv") + " --mine-inline --top 1 --out " + path("cat_score"), &out), 0);
    // Items render as attribute=value in explanations.
    EXPECT_NE(out.find("=v"), std::string::npos);
}

TEST_F(Cli, ThresholdTable) {
    std::string out;
    ASSERT_EQ(run("threshold " + data() + " --replicates 40 --seed 3 --out " + path("thr"), &out), 0);
    const auto rows = lines(slurp(path("thr/thresholds.csv")));
    ASSERT_EQ(rows.size(), 5U);
    EXPECT_EQ(rows[0], "fnr,k,theta,above");
    const double ks[] = {1.0, 2.0, 3.0, std::sqrt(19.0)};
    std::size_t previous = SIZE_MAX;
    for (int i = 0; i < 4; ++i) {
        std::vector<std::string> cells;
        std::stringstream s(rows[i + 1]);
        for (std::string c; std::getline(s, c, ',');) cells.push_back(c);
        ASSERT_EQ(cells.size(), 4U);
        EXPECT_NEAR(std::stod(cells[1]), ks[i], 1e-12);
        const auto above = std::stoul(cells[3]);
        EXPECT_LE(above, previous);
        previous = above;
    }
    EXPECT_TRUE(fs::exists(path("thr/samples.csv")));
    // From exported samples the same thresholds follow.
    ASSERT_EQ(run("threshold --scores " + path("thr/samples.csv") + " --out " + path("thr2")), 0);
    const auto again = lines(slurp(path("thr2/thresholds.csv")));
    for (int i = 1; i < 5; ++i) {
        EXPECT_EQ(again[i].substr(0, again[i].rfind(',')), rows[i].substr(0, rows[i].rfind(',')));
    }
}

TEST_F(Cli, ThresholdSingleExtremeOutlier) {
    // One planted co-occurrence is the only transaction above the 10% threshold.
    ASSERT_EQ(run("threshold " + data() + " --replicates 100 --seed 1 --fnr 0.1 --out " + path("zoo")), 0);
    const auto rows = lines(slurp(path("zoo/thresholds.csv")));
    ASSERT_EQ(rows.size(), 2U);
    EXPECT_EQ(rows[1].substr(rows[1].rfind(',') + 1), "1");
}

TEST_F(Cli, ThresholdDegenerateIsAnError) {
    std::ofstream(path("flat.csv")) << "score\n2\n2\n2\n";
    std::string out;
    EXPECT_NE(run("threshold --scores " + path("flat.csv") + " --out " + path("flat"), &out), 0);
    EXPECT_NE(out.find("degenerate"), std::string::npos);
}

TEST_F(Cli, SignificanceDirectionAndDeterminism) {
    ASSERT_EQ(run("significance " + data() + " --replicates 40 --seed 9 --out " + path("sig1")), 0);
    ASSERT_EQ(run("significance " + data() + " --replicates 40 --seed 9 --out " + path("sig2")), 0);
    EXPECT_EQ(slurp(path("sig1/samples_with.csv")), slurp(path("sig2/samples_with.csv")));
    EXPECT_EQ(slurp(path("sig1/samples_without.csv")), slurp(path("sig2/samples_without.csv")));
    const auto summary = json::parse(slurp(path("sig1/summary.json")));
    EXPECT_GT(summary["mean_difference"].get<double>(), 0.0);
    EXPECT_EQ(summary["without"]["excluded_top"], true);
}

TEST_F(Cli, SeedFromEnvironmentIsRecorded) {
    ASSERT_EQ(::setenv("BNB_SEED", "77", 1), 0);
    ASSERT_EQ(run("synth --transactions 100 --alphabet 20 --patterns 4 --out " + path("envseed")), 0);
    ::unsetenv("BNB_SEED");
    const auto m = manifest("envseed");
    EXPECT_EQ(m["seed"], 77);
    const auto args = m["arguments"].get<std::vector<std::string>>();
    EXPECT_NE(std::find(args.begin(), args.end(), "77"), args.end());
    // Replay without the variable reproduces the same data.
    ASSERT_EQ(run("replay " + path("envseed/manifest.json") + " --out " + path("envseed_re")), 0);
    EXPECT_EQ(slurp(path("envseed/data.dat")), slurp(path("envseed_re/data.dat")));
}

TEST_F(Cli, PowerCurve) {
    ASSERT_EQ(run("power --transactions 200 --alphabet 25 --patterns 10 --growth 1:2:2 --n-per-point 3 --alpha 1 "
                  "--seed 4 --out " +
                  path("power")),
              0);
    const auto rows = lines(slurp(path("power/power.csv")));
    ASSERT_EQ(rows.size(), 3U);
    for (int i = 1; i < 3; ++i) EXPECT_EQ(rows[i].substr(rows[i].rfind(',') + 1), "1");
    EXPECT_EQ(lines(slurp(path("power/maxima.csv"))).size(), 1U + 2 * 6);
    EXPECT_NE(run("power --growth 1:2 --out " + path("power_bad")), 0);
}

TEST_F(Cli, ReplayReproducesEveryCommand) {
    ASSERT_EQ(run("score " + data() + " --mine-inline --classes 0,1,2 --out " + path("rep_score")), 0);
    ASSERT_EQ(run("mine " + data() + " --method closed --out " + path("rep_mine")), 0);
    for (const std::string dir : {"syn", "rep_score", "rep_mine"}) {
        std::string out;
        ASSERT_EQ(run("replay " + path(dir) + "/manifest.json --out " + path(dir + "_replayed"), &out), 0) << out;
        EXPECT_EQ(manifest(dir)["outputs"], manifest(dir + "_replayed")["outputs"]);
        for (const auto& [name, digest] : manifest(dir)["outputs"].items()) {
            EXPECT_EQ(slurp(path(dir) + "/" + name), slurp(path(dir + "_replayed") + "/" + name)) << name;
        }
    }
}

TEST_F(Cli, ReplayRefusesChangedInput) {
    std::ofstream(path("mutable.dat")) << "1 2\n2 3\n";
    ASSERT_EQ(run("mine " + path("mutable.dat") + " --out " + path("mut")), 0);
    std::ofstream(path("mutable.dat")) << "1 2\n2 4\n";
    std::string out;
    EXPECT_NE(run("replay " + path("mut/manifest.json") + " --out " + path("mut_re"), &out), 0);
    EXPECT_NE(out.find("input changed"), std::string::npos);
}

TEST_F(Cli, ThreadCountDoesNotChangeOutputs) {
    ASSERT_EQ(run("--threads 1 score " + data() + " --mine-inline --out " + path("t1")), 0);
    ASSERT_EQ(run("--threads 3 score " + data() + " --mine-inline --out " + path("t3")), 0);
    EXPECT_EQ(slurp(path("t1/report.jsonl")), slurp(path("t3/report.jsonl")));
    EXPECT_EQ(manifest("t3")["threads"], 3);
}
