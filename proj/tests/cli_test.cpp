#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "run.hpp"

using namespace bvp;
using namespace bvp::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path scenario_dir{BVP_SCENARIO_DIR};
const std::string cli_path{BVP_CLI_PATH};

/// Fresh scratch directory per test.
fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("bvp_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int invoke(const std::string& args)
{
    const std::string cmd = cli_path + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

RunOptions options(Command c, const std::string& scenario, const fs::path& out)
{
    RunOptions opt;
    opt.command = c;
    opt.scenario = scenario_dir / scenario;
    opt.out = out;
    return opt;
}

} // namespace

TEST(Cli, SolveWritesAccurateSolution)
{
    const fs::path out = scratch("solve");
    ASSERT_EQ(run(options(Command::solve, "dirichlet_sine.json", out)), exit_ok);
    const auto rows = read_csv(out / "solution.csv");
    ASSERT_EQ(rows.front(),
              (std::vector<std::string>{"t", "y1_re", "y1_im", "d1y1_re", "d1y1_im", "d2y1_re", "d2y1_im"}));
    ASSERT_EQ(rows.size(), 202u);
    double worst = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double t = std::stod(rows[i][0]);
        worst = std::max(worst, std::abs(std::stod(rows[i][1]) - std::sin(std::numbers::pi * t)));
        worst = std::max(worst, std::abs(std::stod(rows[i][2])));
    }
    EXPECT_LT(worst, 1e-6);

    const json doc = json::parse(slurp(out / "solution.json"));
    EXPECT_EQ(doc.at("schema_version"), schema_version);
    EXPECT_EQ(doc.at("classification"), "unique");
    EXPECT_EQ(doc.at("kernel_dim"), 0);
    EXPECT_NEAR(doc.at("det_M")[0].get<double>(), 1.0, 1e-9);
}

TEST(Cli, ExitCodes)
{
    const fs::path out = scratch("exit");
    const std::string dirichlet = (scenario_dir / "dirichlet_sine.json").string();
    EXPECT_EQ(invoke("solve --scenario " + dirichlet + " --out " + out.string()), exit_ok);
    EXPECT_EQ(invoke("bogus --scenario " + dirichlet + " --out " + out.string()), exit_validation);
    EXPECT_EQ(invoke("solve --out " + out.string()), exit_validation);
    // No family block in this scenario.
    EXPECT_EQ(invoke("analyze --scenario " + dirichlet + " --out " + out.string()), exit_validation);
    EXPECT_EQ(invoke("solve --scenario " + (scenario_dir / "missing.json").string() + " --out " + out.string()),
              exit_validation);
    EXPECT_EQ(invoke("solve --grid-N 3 --scenario " + dirichlet + " --out " + out.string()), exit_validation);

    // Division by zero in the right-hand side is a numerical failure.
    json doc = json::parse(slurp(scenario_dir / "dirichlet_sine.json"));
    doc["rhs"][0] = "1/(t - t)";
    const fs::path bad = out / "bad.json";
    std::ofstream(bad) << doc.dump();
    EXPECT_EQ(invoke("solve --scenario " + bad.string() + " --out " + out.string()), exit_numerical);
}

TEST(Cli, AnalyzeRhsFamilyRatiosStayBounded)
{
    const fs::path out = scratch("analyze");
    ASSERT_EQ(run(options(Command::analyze, "family_rhs.json", out)), exit_ok);
    const auto rows = read_csv(out / "report.csv");
    ASSERT_EQ(rows.front().back(), "ratio");
    ASSERT_EQ(rows.size(), 5u);
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double ratio = std::stod(rows[i].back());
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    EXPECT_GT(lo, 0.0);
    EXPECT_LT(hi / lo, 2.0);
    const json rep = json::parse(slurp(out / "report.json"));
    EXPECT_EQ(rep.at("continuous"), true);
    EXPECT_EQ(rep.at("observed").at("verdict"), "converges");
    EXPECT_EQ(rep.at("consistent"), true);
}

TEST(Cli, CheckDetectsCoefficientGap)
{
    const fs::path out = scratch("check");
    ASSERT_EQ(run(options(Command::check, "family_fails_I.json", out)), exit_ok);
    const json doc = json::parse(slurp(out / "conditions.json"));
    EXPECT_EQ(doc.at("condition0").at("verdict"), "holds");
    EXPECT_EQ(doc.at("limit_I").at("verdict"), "fails");
    EXPECT_EQ(doc.at("limit_II").at("verdict"), "holds");
    EXPECT_EQ(doc.at("continuous"), false);
}

TEST(Cli, NormsMatchClosedForms)
{
    const fs::path out = scratch("norms");
    ASSERT_EQ(run(options(Command::norms, "dirichlet_sine.json", out)), exit_ok);
    const json doc = json::parse(slurp(out / "norms.json"));
    const auto& norms = doc.at("norms");
    ASSERT_EQ(norms.size(), 4u);
    EXPECT_NEAR(norms[0].at("value").get<double>(), std::sqrt(1.0 / 3.0), 1e-8);
    EXPECT_NEAR(norms[1].at("value").get<double>(), std::sqrt(4.0 / 3.0), 1e-8);
    EXPECT_NEAR(norms[2].at("value").get<double>(), 1.0, 1e-8);
    // sin(pi t) in W^{2,2}: (1 + pi^2 + pi^4) / 2 under the root.
    const double pi = std::numbers::pi;
    EXPECT_NEAR(norms[3].at("value").get<double>(), std::sqrt((1.0 + pi * pi + pi * pi * pi * pi) / 2.0), 1e-4);
}

TEST(Cli, OutputIsDeterministic)
{
    const fs::path a = scratch("det_a");
    const fs::path b = scratch("det_b");
    for (const auto& dir : {a, b}) {
        ASSERT_EQ(run(options(Command::analyze, "family_coefficient.json", dir)), exit_ok);
        ASSERT_EQ(run(options(Command::solve, "coupled_system.json", dir)), exit_ok);
    }
    for (const char* name : {"report.json", "report.csv", "solution.csv", "solution.json"})
        EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
}

TEST(Cli, GridOverrideChangesResolution)
{
    const fs::path out = scratch("grid");
    RunOptions opt = options(Command::solve, "dirichlet_sine.json", out);
    opt.grid_N = 50;
    ASSERT_EQ(run(opt), exit_ok);
    EXPECT_EQ(read_csv(out / "solution.csv").size(), 52u);
}

TEST(Cli, JsonWriterFormatsFloats)
{
    EXPECT_EQ(dump_json(json{{"x", 0.1}}), "{\n  \"x\": 0.10000000000000001\n}\n");
    EXPECT_EQ(dump_json(json{{"x", -0.0}}), "{\n  \"x\": 0\n}\n");
    EXPECT_EQ(dump_json(json{{"x", NAN}, {"v", {1, 2.5}}}), "{\n  \"v\": [1, 2.5],\n  \"x\": null\n}\n");
}
