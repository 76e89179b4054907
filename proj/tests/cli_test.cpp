#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "mdf/cli/report.hpp"
#include "mdf/cli/scenario.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("mdfcalc_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    Outcome run(const std::string& args) const {
        const auto out = dir_ / "stdout", err = dir_ / "stderr";
        const std::string cmd = std::string(MDFCALC_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }

    fs::path write(const std::string& name, const std::string& text) const {
        const auto p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    static std::string scenario(const std::string& name) { return std::string(SCENARIO_DIR) + "/" + name; }

    fs::path dir_;
};

constexpr const char* kSweepHeader =
    "C,blocking_emlm,blocking_mdf,blocking_sim_mean,blocking_sim_ci95_lo,blocking_sim_ci95_hi";

TEST_F(Cli, PlanWithUnitEpsilonReturnsLargestSize) {
    const auto r = run("plan --scenario " + scenario("toy_x2.yaml") + " --epsilon 1.0");
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, "C,blocking,epsilon,alpha");
    EXPECT_EQ(row.substr(0, row.find(',')), "11");
}

TEST_F(Cli, PlanSummaryWhenWritingToFile) {
    const auto out = dir_ / "plan.csv";
    const auto r = run("plan --scenario " + scenario("toy_x2.yaml") + " --epsilon 1.0 --output " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "C = 11\n");
    EXPECT_TRUE(fs::exists(out));
}

TEST_F(Cli, SweepHeaderIsExact) {
    const auto r = run("sweep --scenario " + scenario("toy_x2.yaml") + " --grid 100:140:5");
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, kSweepHeader);
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(line.substr(0, line.find(',')), std::to_string(95 + 5 * rows));
    }
    EXPECT_EQ(rows, 9);
}

TEST_F(Cli, EmptyGridGivesHeaderOnly) {
    const auto r = run("sweep --scenario " + scenario("toy_x2.yaml") + " --grid 140:100:5");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, std::string(kSweepHeader) + "\n");
}

TEST_F(Cli, SimulateIsByteIdentical) {
    const auto sc = write("sim.yaml", R"(model:
  mdf: {lambda: 0.05, population: 100, slot: 0.1, stay_prob: 0.9, requirement: {point: 2}}
policy: {capacity: 12}
run: {slots: 20000, replications: 3, threads: 2}
)");
    const auto a = dir_ / "a.json", b = dir_ / "b.json";
    ASSERT_EQ(run("simulate --scenario " + sc.string() + " --seed 7 --output " + a.string()).code, 0);
    ASSERT_EQ(run("simulate --scenario " + sc.string() + " --seed 7 --output " + b.string()).code, 0);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_FALSE(slurp(a).empty());
    const auto c = dir_ / "c.json";
    ASSERT_EQ(run("simulate --scenario " + sc.string() + " --seed 8 --output " + c.string()).code, 0);
    EXPECT_NE(slurp(a), slurp(c));
}

TEST_F(Cli, JsonRoundTripToTwelveDigits) {
    const auto out = dir_ / "m.json";
    const auto r = run("mdf-blocking --scenario " + scenario("toy_x2.yaml") + " --output " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(out));
    const auto sc = mdf::cli::load_scenario(scenario("toy_x2.yaml"));
    const auto& m = std::get<mdf::MdfModel>(sc.model);
    const double direct = mdf::blocking_prob(m.params, 112, 1.0);
    const double read = j.at("blocking_mdf").get<double>();
    EXPECT_EQ(mdf::cli::format_real(read), mdf::cli::format_real(direct));
    EXPECT_NEAR(read, direct, 1e-12 * std::max(1.0, direct));
    EXPECT_GE(read, 0.0);
    EXPECT_LE(read, 1.0);
}

TEST_F(Cli, SchemaViolationRejectedWithLine) {
    const auto sc = write("bad.yaml", R"(model:
  emlm:
    lambda: 0.001
    population: 10000
    mu: 0.5
    requirement:
      sizes: [1, 2, 4, 8]
      probs: [0.45, 0.35, 0.15, 0.5]
)");
    const auto r = run("solve-emlm --scenario " + sc.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 8"), std::string::npos) << r.err;
    EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, UnknownKeyRejected) {
    const auto sc = write("typo.yaml", R"(model:
  emlm: {lambda: 0.001, population: 10, mu: 0.5, requirement: {point: 1}}
policy:
  capacty: 4
)");
    const auto r = run("solve-emlm --scenario " + sc.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 4"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("capacty"), std::string::npos);
}

TEST_F(Cli, YamlSyntaxErrorRejected) {
    const auto sc = write("broken.yaml", "model:\n  emlm: {lambda: [1, 2\n");
    EXPECT_EQ(run("solve-emlm --scenario " + sc.string()).code, 2);
}

TEST_F(Cli, UnknownFlagRejected) {
    EXPECT_EQ(run("plan --scenario " + scenario("toy_x2.yaml") + " --bogus 1").code, 2);
    EXPECT_EQ(run("frobnicate --scenario x").code, 2);
    EXPECT_EQ(run("plan --scenario " + scenario("toy_x2.yaml") + " --format xml").code, 2);
    EXPECT_EQ(run("plan --scenario " + scenario("toy_x2.yaml") + " --alpha 1.5").code, 2);
}

TEST_F(Cli, MissingScenarioFile) {
    EXPECT_EQ(run("plan --scenario " + (dir_ / "nope.yaml").string()).code, 2);
}

TEST_F(Cli, InfeasiblePlanExitsOne) {
    const auto sc = write("cap.yaml", R"(model:
  mdf: {lambda: 0.5, population: 2, slot: 1, stay_prob: 0.5, requirement: {point: 1}}
policy: {epsilon: 0.1}
)");
    const auto r = run("plan --scenario " + sc.string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("infeasible"), std::string::npos);
}

TEST_F(Cli, UnstableDelayExitsOne) {
    const auto r = run("delay-blocking --scenario " + scenario("delay_small.yaml") + " --capacity 3");
    EXPECT_EQ(r.code, 1);
    const auto ok = run("delay-blocking --scenario " + scenario("delay_small.yaml"));
    EXPECT_EQ(ok.code, 0) << ok.err;
}

TEST_F(Cli, UnwritableOutputExitsOne) {
    const auto r = run("plan --scenario " + scenario("toy_x2.yaml") + " --output " + (dir_ / "no/such/dir.csv").string());
    EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, EveryBundledScenarioRuns) {
    EXPECT_EQ(run("solve-emlm --scenario " + scenario("emlm_x2.yaml")).code, 0);
    EXPECT_EQ(run("plan --scenario " + scenario("emlm_x2.yaml")).code, 0);
    EXPECT_EQ(run("mdf-blocking --scenario " + scenario("toy_x1.yaml") + " --mode literal").code, 0);
    EXPECT_EQ(run("timevar-blocking --scenario " + scenario("timevar_small.yaml")).code, 0);
    EXPECT_EQ(run("plan --scenario " + scenario("timevar_small.yaml")).code, 0);
    EXPECT_EQ(run("plan --scenario " + scenario("delay_small.yaml")).code, 0);
    EXPECT_EQ(run("convergence --scenario " + scenario("toy_x2.yaml")).code, 0);
    EXPECT_EQ(run("simulate --scenario " + scenario("delay_sim.yaml") + " --format json").code, 0);
}

TEST_F(Cli, ConvergenceTable) {
    const auto r = run("convergence --scenario " + scenario("toy_x2.yaml") + " --capacity 120");
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "slot,stay_prob,blocking_mdf,blocking_emlm,delta");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 3);
}

TEST(Scenario, CorrectedX1Bundled) {
    const auto sc = mdf::cli::load_scenario(std::string(SCENARIO_DIR) + "/toy_x1.yaml");
    const auto& req = std::get<mdf::MdfModel>(sc.model).params.requirement;
    ASSERT_EQ(req.count(), 4u);
    EXPECT_DOUBLE_EQ(req.atoms()[3].prob, 0.05);
    EXPECT_NEAR(req.mean(), 2.15, 1e-12);
}

TEST(Scenario, GridParsing) {
    EXPECT_EQ(mdf::cli::parse_grid("100:140:20"), (std::vector<std::size_t>{100, 120, 140}));
    EXPECT_EQ(mdf::cli::parse_grid("5:5:1"), (std::vector<std::size_t>{5}));
    EXPECT_TRUE(mdf::cli::parse_grid("6:5:1").empty());
    EXPECT_THROW(mdf::cli::parse_grid("1:2"), mdf::cli::ScenarioError);
    EXPECT_THROW(mdf::cli::parse_grid("1:2:0"), mdf::cli::ScenarioError);
    EXPECT_THROW(mdf::cli::parse_grid("a:2:1"), mdf::cli::ScenarioError);
    EXPECT_THROW(mdf::cli::parse_grid("-1:2:1"), mdf::cli::ScenarioError);
}

TEST(Scenario, ExactlyOneModel) {
    EXPECT_THROW(mdf::cli::parse_scenario("model:\n  emlm: {lambda: 1, population: 1, mu: 1, requirement: {point: 1}}\n"
                                          "  delay: {increment: [1.0]}\n"),
                 mdf::cli::ScenarioError);
    EXPECT_THROW(mdf::cli::parse_scenario("policy: {alpha: 1}\n"), mdf::cli::ScenarioError);
}

TEST(Scenario, MdfNeedsOneHoldingParameter) {
    EXPECT_THROW(mdf::cli::parse_scenario(
                     "model:\n  mdf: {lambda: 1, population: 1, slot: 1, requirement: {point: 1}}\n"),
                 mdf::cli::ScenarioError);
    const auto sc = mdf::cli::parse_scenario(
        "model:\n  mdf: {lambda: 1, population: 1, slot: 0.5, stay_prob: 0.5, requirement: {point: 1}}\n");
    EXPECT_NEAR(sc.mu, std::log(2.0) / 0.5, 1e-15);
}

TEST(Report, TwelveSignificantDigits) {
    EXPECT_EQ(mdf::cli::format_real(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(mdf::cli::format_real(2.5e-17), "2.5e-17");
    EXPECT_EQ(mdf::cli::format_real(std::nan("")), "");
    EXPECT_EQ(mdf::cli::clamp_prob(-1e-18), 0.0);
    EXPECT_EQ(mdf::cli::clamp_prob(1.0 + 1e-15), 1.0);
}

}  // namespace
