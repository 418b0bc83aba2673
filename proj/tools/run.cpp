#include "run.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

namespace bvp::cli {

using nlohmann::json;

namespace {

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void dump(const json& v, int depth, std::string& out)
{
    const std::string pad(2 * (depth + 1), ' ');
    const std::string close(2 * depth, ' ');
    switch (v.type()) {
    case json::value_t::object: {
        if (v.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (const auto& [key, value] : v.items()) {
            if (!first)
                out += ",\n";
            first = false;
            out += pad + json(key).dump() + ": ";
            dump(value, depth + 1, out);
        }
        out += "\n" + close + "}";
        return;
    }
    case json::value_t::array: {
        if (v.empty()) {
            out += "[]";
            return;
        }
        if (std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_primitive(); })) {
            out += "[";
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i)
                    out += ", ";
                dump(v[i], depth + 1, out);
            }
            out += "]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i)
                out += ",\n";
            out += pad;
            dump(v[i], depth + 1, out);
        }
        out += "\n" + close + "]";
        return;
    }
    case json::value_t::number_float: {
        const double x = v.get<double>();
        out += std::isfinite(x) ? format_real(x) : "null";
        return;
    }
    default: out += v.dump(); return;
    }
}

std::string csv_real(double v) { return std::isfinite(v) ? format_real(v) : ""; }

std::string csv_optional(const std::optional<double>& v) { return v ? csv_real(*v) : ""; }

/// Limit (I) rows list one delta per coefficient; limit (II) rows hold the
/// single worst-probe gap.
json limit_table_json(const LimitTable& t, bool per_coefficient)
{
    json rows = json::array();
    for (std::size_t i = 0; i < t.eps.size(); ++i) {
        json row{{"eps", t.eps[i]}, {"worst", t.worst[i]}};
        if (per_coefficient)
            row["delta"] = t.values[i];
        rows.push_back(row);
    }
    return {{"verdict", t.verdict.holds ? "holds" : "fails"},
            {"threshold", t.verdict.threshold},
            {"labels", t.labels},
            {"table", rows}};
}

json condition0_json(const Condition0Check& c)
{
    return {{"verdict", c.holds ? "holds" : "fails"}, {"det_M", complex_json(c.det)}, {"kernel_dim", c.kernel_dim}};
}

int fail(int code, const std::string& message)
{
    spdlog::error("{}", message);
    return code;
}

} // namespace

std::optional<Command> parse_command(const std::string& name)
{
    if (name == "solve")
        return Command::solve;
    if (name == "check")
        return Command::check;
    if (name == "analyze")
        return Command::analyze;
    if (name == "norms")
        return Command::norms;
    return std::nullopt;
}

std::string dump_json(const json& doc)
{
    std::string out;
    dump(doc, 0, out);
    out += "\n";
    return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            throw validation_error("io-error", "cannot write " + tmp.string());
        os << content;
        os.flush();
        if (!os)
            throw validation_error("io-error", "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string solution_csv(const Problem& P, const Solution& s)
{
    std::ostringstream os;
    const Index m = P.dims.m;
    const Index r = P.dims.r;
    os << "t";
    for (Index k = 0; k <= r; ++k)
        for (Index i = 0; i < m; ++i) {
            const std::string name = (k == 0 ? "" : "d" + std::to_string(k)) + "y" + std::to_string(i + 1);
            os << "," << name << "_re," << name << "_im";
        }
    os << "\n";
    for (Index node = 0; node < P.grid.size(); ++node) {
        os << format_real(P.grid.node(node));
        for (Index k = 0; k <= r; ++k)
            for (Index i = 0; i < m; ++i) {
                const Complex v = s.derivs[k](node, i);
                os << "," << format_real(v.real()) << "," << format_real(v.imag());
            }
        os << "\n";
    }
    return os.str();
}

json solution_json(const Scenario& sc, const Solution& s)
{
    const auto& cm = s.characteristic;
    json q = json::array();
    for (Index i = 0; i < s.q.size(); ++i)
        q.push_back(complex_json(s.q(i)));
    std::vector<double> svals(cm.svals.data(), cm.svals.data() + cm.svals.size());
    return {{"schema_version", schema_version},
            {"scenario", sc.name},
            {"eps", 0.0},
            {"classification", to_string(s.classification)},
            {"kernel_dim", s.kernel_dim},
            {"q", q},
            {"det_M", complex_json(cm.det)},
            {"rank", cm.rank},
            {"rank_tolerance", cm.rank_tolerance},
            {"singular_values", svals},
            {"condition_number", cm.condition_number()},
            {"lsq_residual", s.lsq_residual},
            {"ode_residual", s.ode_residual},
            {"boundary_residual", s.boundary_residual},
            {"min_abs_det_X", s.min_abs_det_X},
            {"warnings", s.warnings}};
}

json conditions_json(const Condition0Check& c0, const LimitTable& lim_I, const LimitTable& lim_II)
{
    return {{"schema_version", schema_version},
            {"condition0", condition0_json(c0)},
            {"limit_I", limit_table_json(lim_I, true)},
            {"limit_II", limit_table_json(lim_II, false)},
            {"continuous", c0.holds && lim_I.verdict.holds && lim_II.verdict.holds}};
}

json report_json(const Scenario& sc, const AnalysisReport& rep)
{
    json rows = json::array();
    for (const auto& row : rep.rows)
        rows.push_back({{"eps", row.eps},
                        {"limit_I", row.limit_I},
                        {"gap_II", row.gap_II},
                        {"error", row.error},
                        {"discrepancy", optional_json(row.discrepancy)},
                        {"ratio", optional_json(row.ratio)},
                        {"classification", to_string(row.classification)}});
    json out = conditions_json(rep.cond0, rep.limit_I, rep.limit_II);
    out["scenario"] = sc.name;
    out["limit_classification"] = to_string(rep.limit_classification);
    out["observed"] = {{"verdict", rep.observed.holds ? "converges" : "does-not-converge"},
                       {"threshold", rep.observed.threshold}};
    out["consistent"] = rep.consistent();
    out["gamma1_hat"] = optional_json(rep.gamma1_hat);
    out["gamma2_hat"] = optional_json(rep.gamma2_hat);
    out["eps1_hat"] = optional_json(rep.eps1_hat);
    out["eps2_hat"] = optional_json(rep.eps2_hat);
    out["rows"] = rows;
    out["notes"] = rep.notes;
    return out;
}

std::string report_csv(const AnalysisReport& rep)
{
    std::ostringstream os;
    os << "eps";
    for (const auto& label : rep.limit_I.labels)
        os << ",errI_" << label;
    os << ",gapII,error,discrepancy,ratio\n";
    for (const auto& row : rep.rows) {
        os << format_real(row.eps);
        for (double v : row.limit_I)
            os << "," << csv_real(v);
        os << "," << csv_real(row.gap_II) << "," << csv_real(row.error) << "," << csv_optional(row.discrepancy) << ","
           << csv_optional(row.ratio) << "\n";
    }
    return os.str();
}

json norms_json(const Scenario& sc)
{
    json list = json::array();
    for (const auto& spec : sc.norms) {
        double value = 0.0;
        const Problem P = sc.problem(spec.eps);
        const SobolevIndex idx(spec.n, spec.p);
        if (spec.of_solution) {
            const Solution s = solve(P);
            if (s.classification != Classification::unique)
                spdlog::info("norm '{}': problem is {}; using the minimum-norm solution", spec.name,
                             to_string(s.classification));
            if (spec.n > P.dims.top_order())
                throw validation_error("order-out-of-range", "norm '" + spec.name + "' needs n <= n + r of the problem");
            value = sobolev_norm(std::span<const GridFunction>(s.derivs.data(), spec.n + 1), spec.p);
        } else {
            const Grid g = sc.grid();
            const Index rows = static_cast<Index>(spec.function.size());
            CMatrix data(g.size(), rows);
            for (Index i = 0; i < rows; ++i) {
                const auto& e = spec.function[i];
                data.col(i) = expr::sample(e.re, g, spec.eps).storage().col(0);
                if (!e.is_real())
                    data.col(i) += Complex(0.0, 1.0) * expr::sample(e.im, g, spec.eps).storage().col(0);
            }
            value = sobolev_norm(GridFunction(g, rows, 1, std::move(data)), idx);
        }
        list.push_back({{"name", spec.name},
                        {"n", spec.n},
                        {"p", std::isinf(spec.p) ? json("inf") : json(spec.p)},
                        {"eps", spec.eps},
                        {"value", value}});
    }
    return {{"schema_version", schema_version}, {"scenario", sc.name}, {"norms", list}};
}

int run(const RunOptions& opt)
{
    try {
        spdlog::debug("loading scenario {}", opt.scenario.string());
        Scenario sc = load_scenario(opt.scenario);
        if (opt.grid_N)
            sc.N = *opt.grid_N;
        if (opt.tolerance) {
            if (!(*opt.tolerance > 0.0))
                throw validation_error("schema-violation", "--tolerance must be positive");
            if (sc.family)
                sc.family->conv_tolerance = *opt.tolerance;
        }
        std::error_code ec;
        std::filesystem::create_directories(opt.out, ec);
        if (ec)
            throw validation_error("io-error", "cannot create output directory " + opt.out.string());

        switch (opt.command) {
        case Command::solve: {
            const Problem P = sc.problem(0.0);
            spdlog::info("solving {} (m = {}, n = {}, r = {}, N = {})", sc.name, P.dims.m, P.dims.n, P.dims.r, P.grid.N());
            const Solution s = solve(P);
            for (const auto& w : s.warnings)
                spdlog::info("warning: {}", w);
            spdlog::info("classification: {}", to_string(s.classification));
            write_atomic(opt.out / "solution.csv", solution_csv(P, s));
            write_atomic(opt.out / "solution.json", dump_json(solution_json(sc, s)));
            break;
        }
        case Command::check: {
            const ParamFamily F = sc.param_family();
            const auto c0 = check_condition0(F);
            const auto lim_I = check_limit_I(F);
            const auto lim_II = check_limit_II(F);
            spdlog::info("condition (0): {}, limit (I): {}, limit (II): {}", c0.holds, lim_I.verdict.holds,
                         lim_II.verdict.holds);
            write_atomic(opt.out / "conditions.json", dump_json(conditions_json(c0, lim_I, lim_II)));
            break;
        }
        case Command::analyze: {
            const ParamFamily F = sc.param_family();
            const AnalysisReport rep = two_sided_report(F);
            for (const auto& note : rep.notes)
                spdlog::info("note: {}", note);
            write_atomic(opt.out / "report.json", dump_json(report_json(sc, rep)));
            write_atomic(opt.out / "report.csv", report_csv(rep));
            break;
        }
        case Command::norms: {
            if (sc.norms.empty())
                throw validation_error("schema-violation", "norms: the scenario requests no norms");
            write_atomic(opt.out / "norms.json", dump_json(norms_json(sc)));
            break;
        }
        }
        return exit_ok;
    } catch (const Error& e) {
        return fail(e.kind() == ErrorKind::validation ? exit_validation : exit_numerical, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(exit_validation, std::string("io-error: ") + e.what());
    }
}

} // namespace bvp::cli
