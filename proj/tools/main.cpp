#include <cstdlib>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "run.hpp"

namespace {

void configure_logging()
{
    auto logger = spdlog::stderr_logger_st("bvp");
    logger->set_pattern("%l: %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::err);
    if (const char* env = std::getenv("BVP_LOG_LEVEL")) {
        const std::string level(env);
        if (level == "debug")
            spdlog::set_level(spdlog::level::debug);
        else if (level == "info")
            spdlog::set_level(spdlog::level::info);
        else if (level != "error")
            spdlog::error("ignoring BVP_LOG_LEVEL={} (expected error, info or debug)", level);
    }
}

} // namespace

int main(int argc, char** argv)
{
    configure_logging();

    CLI::App app{"Linear boundary value problems for ODE systems with general boundary operators"};
    std::string command;
    std::string scenario;
    std::string out;
    bvp::Index grid_N = 0;
    double tolerance = 0.0;
    app.add_option("command", command, "solve | check | analyze | norms")
        ->required()
        ->check(CLI::IsMember({"solve", "check", "analyze", "norms"}));
    app.add_option("--scenario", scenario, "scenario JSON file")->required();
    app.add_option("--out", out, "output directory")->required();
    auto* grid_opt = app.add_option("--grid-N", grid_N, "override the scenario's grid size")->check(CLI::PositiveNumber);
    auto* tol_opt = app.add_option("--tolerance", tolerance, "override the family's convergence tolerance")
                        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int status = app.exit(e);
        return status == 0 ? 0 : bvp::cli::exit_validation;
    }

    bvp::cli::RunOptions opt;
    opt.command = *bvp::cli::parse_command(command);
    opt.scenario = scenario;
    opt.out = out;
    if (*grid_opt)
        opt.grid_N = grid_N;
    if (*tol_opt)
        opt.tolerance = tolerance;
    return bvp::cli::run(opt);
}
