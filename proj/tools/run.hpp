#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "scenario.hpp"

namespace bvp::cli {

enum class Command { solve, check, analyze, norms };

std::optional<Command> parse_command(const std::string& name);

struct RunOptions
{
    Command command = Command::solve;
    std::filesystem::path scenario;
    std::filesystem::path out;
    std::optional<Index> grid_N;
    std::optional<double> tolerance;
};

/// Exit codes of the command-line tool.
inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_numerical = 3;

/// Loads the scenario, executes the command and writes its artifacts into
/// `out`. Returns the exit code; failures are logged to stderr.
int run(const RunOptions& opt);

/// Pretty-printed JSON (2-space indent, LF, trailing newline) with every
/// float in %.17g; non-finite floats become null.
std::string dump_json(const nlohmann::json& doc);

/// Writes `content` to `path` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Artifacts per command.
std::string solution_csv(const Problem& P, const Solution& s);
nlohmann::json solution_json(const Scenario& sc, const Solution& s);
nlohmann::json conditions_json(const Condition0Check& c0, const LimitTable& lim_I, const LimitTable& lim_II);
nlohmann::json report_json(const Scenario& sc, const AnalysisReport& rep);
std::string report_csv(const AnalysisReport& rep);
nlohmann::json norms_json(const Scenario& sc);

} // namespace bvp::cli
