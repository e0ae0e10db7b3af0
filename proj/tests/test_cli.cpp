#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "nsal/cli.hpp"
#include "nsal/io.hpp"

using namespace nsal;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("nsal_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(dir_ / name) << text;
        return dir_ / name;
    }

    int cli(std::vector<std::string> args) {
        out_.str("");
        err_.str("");
        return run_cli(args, out_, err_);
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    std::istringstream hs(line);
    for (std::string f; std::getline(hs, f, ',');) header.push_back(f);
    std::vector<std::map<std::string, std::string>> rows;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::map<std::string, std::string> row;
        std::size_t i = 0;
        for (std::string f; std::getline(ls, f, ','); ++i) row[header.at(i)] = f;
        rows.push_back(std::move(row));
    }
    return rows;
}

const char* kMinimal = R"({
  "schema_version": 1,
  "population": {"N": 1000, "K": 2, "class_rates": [0.9, 0.1],
                 "class_means": [[-0.5, -0.5], [0.5, 0.5]], "feature_sigma": 1.0},
  "strategies": ["SRS"],
  "model": {"type": "oracle"},
  "n_init": 50,
  "rounds": 3,
  "batch_size": 100,
  "positive_set": [1],
  "replications": 30,
  "seed": 1
})";

}  // namespace

TEST_F(CliTest, RunWritesSchemaConformingSummary) {
    const auto cfg = write("config.json", kMinimal);
    ASSERT_EQ(cli({"run", "--config", cfg.string(), "--out", (dir_ / "out").string()}), kExitOk) << err_.str();
    for (const char* f : {"report.json", "summary.csv", "histogram.csv", "manifest.json"})
        EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
    const auto rows = read_csv(dir_ / "out" / "summary.csv");
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.at("schema_version"), "1");
        EXPECT_EQ(r.at("strategy"), "SRS");
        const double e = std::stod(r.at("estimate"));
        EXPECT_GE(e, 0.0);
        EXPECT_LE(e, 1.0);
    }
    const auto manifest = nlohmann::json::parse(slurp(dir_ / "out" / "manifest.json"));
    EXPECT_EQ(manifest["schema_version"], 1);
    EXPECT_EQ(manifest["seed"], 1);
    EXPECT_TRUE(manifest.contains("version"));
    EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "out" / "report.json"))["schema_version"], 1);
}

TEST_F(CliTest, SameSeedGivesIdenticalSummary) {
    const auto cfg = write("config.json", kMinimal);
    ASSERT_EQ(cli({"run", "--config", cfg.string(), "--out", (dir_ / "a").string(), "--seed", "7"}), kExitOk);
    ASSERT_EQ(cli({"run", "--config", cfg.string(), "--out", (dir_ / "b").string(), "--seed", "7", "--threads", "2"}),
              kExitOk);
    EXPECT_EQ(slurp(dir_ / "a" / "summary.csv"), slurp(dir_ / "b" / "summary.csv"));
    EXPECT_EQ(slurp(dir_ / "a" / "report.json"), slurp(dir_ / "b" / "report.json"));
    ASSERT_EQ(cli({"run", "--config", cfg.string(), "--out", (dir_ / "c").string(), "--seed", "8"}), kExitOk);
    EXPECT_NE(slurp(dir_ / "a" / "summary.csv"), slurp(dir_ / "c" / "summary.csv"));
}

TEST_F(CliTest, ManifestAloneRegeneratesOutputs) {
    const auto cfg = write("config.json", kMinimal);
    ASSERT_EQ(cli({"run", "--config", cfg.string(), "--out", (dir_ / "a").string(), "--replications", "12"}), kExitOk);
    ASSERT_EQ(cli({"run", "--config", (dir_ / "a" / "manifest.json").string(), "--out", (dir_ / "b").string()}),
              kExitOk)
        << err_.str();
    for (const char* f : {"report.json", "summary.csv", "histogram.csv"})
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(CliTest, ReportRebuildsCsvFromRecords) {
    const auto cfg = write("config.json", kMinimal);
    ASSERT_EQ(cli({"run", "--config", cfg.string(), "--out", (dir_ / "a").string()}), kExitOk);
    ASSERT_EQ(cli({"report", "--config", (dir_ / "a" / "report.json").string(), "--out", (dir_ / "b").string()}),
              kExitOk)
        << err_.str();
    EXPECT_EQ(slurp(dir_ / "a" / "summary.csv"), slurp(dir_ / "b" / "summary.csv"));
    EXPECT_EQ(slurp(dir_ / "a" / "histogram.csv"), slurp(dir_ / "b" / "histogram.csv"));
}

TEST_F(CliTest, InvalidConfigExitsTwoWithLineNumber) {
    std::string text = kMinimal;
    text.replace(text.find("\"seed\": 1"), 9, "\"sed\": 1");
    const auto cfg = write("bad.json", text);
    EXPECT_EQ(cli({"run", "--config", cfg.string(), "--out", (dir_ / "o").string()}), kExitConfig);
    EXPECT_NE(err_.str().find("bad.json:12:"), std::string::npos) << err_.str();
    EXPECT_FALSE(fs::exists(dir_ / "o" / "summary.csv"));

    const auto broken = write("broken.json", "{\n  \"population\": {\n    \"N\": ,\n  }\n}\n");
    EXPECT_EQ(cli({"run", "--config", broken.string()}), kExitConfig);
    EXPECT_NE(err_.str().find("broken.json:3:"), std::string::npos) << err_.str();

    std::string overspent = kMinimal;
    overspent.replace(overspent.find("\"batch_size\": 100"), 17, "\"batch_size\": 400");
    EXPECT_EQ(cli({"run", "--config", write("over.json", overspent).string()}), kExitConfig);

    EXPECT_EQ(cli({"run", "--config", (dir_ / "missing.json").string()}), kExitConfig);
    EXPECT_EQ(cli({"run"}), kExitConfig);
}

TEST_F(CliTest, RuntimeFailureExitsOne) {
    const auto cfg = write("config.json", kMinimal);
    write("blocker", "not a directory");
    EXPECT_EQ(cli({"run", "--config", cfg.string(), "--out", (dir_ / "blocker" / "x").string()}), kExitRuntime);
}

TEST_F(CliTest, OracleCheckPasses) {
    EXPECT_EQ(cli({"oracle-check"}), kExitOk);
    EXPECT_NE(out_.str().find("PASS"), std::string::npos);
}

TEST_F(CliTest, SweepWithoutAxesMatchesRun) {
    const auto cfg = write("config.json", kMinimal);
    ASSERT_EQ(cli({"run", "--config", cfg.string(), "--out", (dir_ / "run").string()}), kExitOk);
    ASSERT_EQ(cli({"sweep", "--config", cfg.string(), "--out", (dir_ / "sweep").string()}), kExitOk) << err_.str();
    EXPECT_EQ(slurp(dir_ / "run" / "summary.csv"), slurp(dir_ / "sweep" / "point_000" / "summary.csv"));
    EXPECT_FALSE(fs::exists(dir_ / "sweep" / "point_001"));
    EXPECT_EQ(read_csv(dir_ / "sweep" / "sweep.csv").size(), 3u);
}

TEST_F(CliTest, SweepOverInitialSizesWritesTwoReportSets) {
    std::string text = kMinimal;
    text.insert(text.rfind('}'), ",\n  \"sweep\": {\"axes\": {\"n_init\": [100, 1000], \"strategy\": [\"NSRS\", \"SRS\"]}}\n");
    text.replace(text.find("\"N\": 1000"), 9, "\"N\": 2000");
    const auto cfg = write("config.json", text);
    ASSERT_EQ(cli({"sweep", "--config", cfg.string(), "--out", dir_.string(), "--replications", "5"}), kExitOk)
        << err_.str();
    for (const char* p : {"point_000", "point_001", "point_002", "point_003"})
        EXPECT_TRUE(fs::exists(dir_ / p / "summary.csv")) << p;
    const auto rows = read_csv(dir_ / "sweep.csv");
    ASSERT_EQ(rows.size(), 12u);
    EXPECT_EQ(rows.front().at("n_init"), "100");
    EXPECT_EQ(rows.back().at("n_init"), "1000");
}

TEST_F(CliTest, OversizedSweepIsRefused) {
    std::string axis = "[";
    for (int i = 0; i < 300; ++i) axis += (i ? "," : "") + std::to_string(i * 0.01);
    axis += "]";
    std::string text = kMinimal;
    text.insert(text.rfind('}'), ",\n  \"sweep\": {\"axes\": {\"sigma\": " + axis + "}}\n");
    const auto cfg = write("config.json", text);
    EXPECT_EQ(cli({"sweep", "--config", cfg.string(), "--out", (dir_ / "o").string()}), kExitConfig);
    EXPECT_NE(err_.str().find("cap of 256"), std::string::npos) << err_.str();
    EXPECT_FALSE(fs::exists(dir_ / "o" / "point_000"));
}

// Noisier oracle scores make the strata less homogeneous, so the NSRS
// variance relative to SRS must not fall as sigma grows.
TEST_F(CliTest, SigmaSweepWeakensStratification) {
    const std::string cfg = std::string(NSAL_CONFIG_DIR) + "/sigma_sweep.json";
    ASSERT_EQ(cli({"sweep", "--config", cfg, "--out", dir_.string(), "--replications", "1000"}), kExitOk)
        << err_.str();
    const auto rows = read_csv(dir_ / "sweep.csv");
    std::map<std::string, std::map<std::string, double>> design;  // sigma -> strategy -> design variance
    std::vector<double> empirical_ratio;
    for (const auto& r : rows) {
        if (r.at("round") != "1") continue;
        design[r.at("sigma")][r.at("strategy")] = std::stod(r.at("design_variance"));
        if (r.at("strategy") == "NSRS") empirical_ratio.push_back(std::stod(r.at("variance_ratio_vs_srs")));
    }
    ASSERT_EQ(empirical_ratio.size(), 3u);
    EXPECT_LE(empirical_ratio[0], empirical_ratio[1]);
    EXPECT_LE(empirical_ratio[1], empirical_ratio[2]);
    std::vector<double> design_ratio;
    for (const char* s : {"0", "0.5", "1"}) design_ratio.push_back(design[s]["NSRS"] / design[s]["SRS"]);
    EXPECT_LT(design_ratio[0], design_ratio[1]);
    EXPECT_LT(design_ratio[1], design_ratio[2]);
}
