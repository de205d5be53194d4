#include "leqlab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "leqlab/config.hpp"
#include "leqlab/csv.hpp"
#include "leqlab/errors.hpp"
#include "leqlab/mc.hpp"
#include "leqlab/policy.hpp"
#include "leqlab/riccati.hpp"
#include "leqlab/verify.hpp"

namespace leq {

namespace {

namespace fs = std::filesystem;

struct Command {
    std::string verb;
    std::string config_path;
    std::string output_dir = "out";
    std::vector<std::string> overrides;
    std::optional<std::int64_t> n_paths;
    std::optional<double> dt;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> checks;
    std::optional<std::string> theta_sweep;
    int workers = 0;
    bool dump_paths = false;
};

std::ofstream open_output(const Command& cmd, const std::string& name)
{
    fs::create_directories(cmd.output_dir);
    const fs::path path = fs::path(cmd.output_dir) / name;
    std::ofstream f(path);
    if (!f) {
        throw Error("cannot write " + path.string());
    }
    return f;
}

void print_warnings(const ProblemSpec& spec, std::ostream& err)
{
    for (const std::string& w : spec.warnings) {
        err << "warning: " << w << '\n';
    }
}

ProblemSpec load_problem(const Command& cmd, std::ostream& err)
{
    ConfigDocument doc = load_config(cmd.config_path);
    for (const std::string& kv : cmd.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigParseError("override must be KEY=VALUE: " + kv);
        }
        apply_override(doc, std::string_view(kv).substr(0, eq), std::string_view(kv).substr(eq + 1));
    }
    if (cmd.n_paths) {
        apply_override(doc, "mc.n_paths", std::to_string(*cmd.n_paths));
    }
    if (cmd.dt) {
        apply_override(doc, "mc.dt", csv::format(*cmd.dt));
    }
    if (cmd.seed) {
        apply_override(doc, "mc.seed", std::to_string(*cmd.seed));
    }
    ProblemSpec spec = build_problem(doc);
    print_warnings(spec, err);
    return spec;
}

int workers_of(const Command& cmd)
{
    return cmd.workers > 0 ? cmd.workers : default_workers();
}

RiccatiSolution solve_or_throw(const ProblemSpec& spec)
{
    RiccatiSolution sol = solve_riccati(spec);
    if (!sol.exists_on_full_interval) {
        throw BlowUpBeforeTerminal("Riccati solution escapes before t = 0", sol.eta);
    }
    return sol;
}

int cmd_solve(const Command& cmd, std::ostream& out, std::ostream& err)
{
    const ProblemSpec spec = load_problem(cmd, err);
    const RiccatiSolution sol = solve_riccati(spec);
    {
        std::ofstream f = open_output(cmd, "riccati.csv");
        write_riccati_csv(f, sol);
    }
    if (!sol.exists_on_full_interval) {
        throw BlowUpBeforeTerminal("Riccati solution escapes before t = 0", sol.eta);
    }
    const LinearPolicy pol = optimal_feedback(spec, sol);
    {
        std::ofstream f = open_output(cmd, "gains.csv");
        write_gains_csv(f, pol, sol.grid);
    }
    const CostValue cost = closed_form_optimal_cost(sol, spec.x0, spec.theta);
    out << "Upsilon(0)=" << csv::format(cost.J) << " CE=" << csv::format(cost.CE)
        << " eta=" << csv::format(sol.eta) << " exists_on_full_interval=true\n";
    return exit_ok;
}

int cmd_simulate(const Command& cmd, std::ostream& out, std::ostream& err)
{
    const ProblemSpec spec = load_problem(cmd, err);
    const RiccatiSolution sol = solve_or_throw(spec);
    const LinearPolicy pol = optimal_feedback(spec, sol);
    const PolicyEvaluation eval = evaluate_linear_policy(spec, pol, spec.grid_n);
    const CostValue closed = closed_form_optimal_cost(sol, spec.x0, spec.theta);

    SimulationOptions opts;
    opts.n_paths = spec.mc.n_paths;
    opts.dt = spec.mc_dt();
    opts.seed = spec.mc.seed;
    opts.workers = workers_of(cmd);
    const PathEnsemble ens = simulate(spec, pol, eval.fields, &sol, opts);
    const CostEstimate est = estimate_cost(ens, spec.theta);
    const WeightEstimate w = girsanov_check(ens);

    SummaryRow row;
    row.estimator = "optimal";
    row.estimate = est;
    row.n_paths = ens.n_paths;
    row.dt = ens.dt;
    row.seed = ens.seed;
    row.J_ref = closed.J;
    row.z_score = est.stderr_J > 0.0 ? (est.J_hat - closed.J) / est.stderr_J : 0.0;
    {
        std::ofstream f = open_output(cmd, "mc_summary.csv");
        write_mc_summary_csv(f, std::span<const SummaryRow>(&row, 1));
    }
    if (cmd.dump_paths) {
        std::ofstream f = open_output(cmd, "paths.csv");
        write_path_dump_csv(f, ens);
    }
    out << "J_hat=" << csv::format(est.J_hat) << " stderr=" << csv::format(est.stderr_J)
        << " CE_hat=" << csv::format(est.CE_hat) << " J_closed=" << csv::format(closed.J)
        << " CE=" << csv::format(closed.CE) << " z=" << csv::format(row.z_score)
        << " girsanov_mean=" << csv::format(w.mean) << " overflow=" << est.overflow_count
        << '\n';
    return exit_ok;
}

std::vector<std::string> split_checks(const std::string& list)
{
    std::vector<std::string> names;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) {
            names.push_back(item);
        }
    }
    return names;
}

int cmd_verify(const Command& cmd, std::ostream& out, std::ostream& err)
{
    AcceptanceConfig cfg;
    cfg.spec = load_problem(cmd, err);
    cfg.seed = cfg.spec.mc.seed;
    cfg.n_paths = cfg.spec.mc.n_paths;
    cfg.dt = cfg.spec.mc_dt();
    cfg.workers = workers_of(cmd);
    if (cmd.checks) {
        cfg.checks = split_checks(*cmd.checks);
    }
    const VerificationReport report = run_acceptance_suite(cfg);
    {
        std::ofstream f = open_output(cmd, "report.csv");
        write_report_csv(f, report);
    }
    write_report_text(out, report);
    return report.overall() ? exit_ok : exit_verify;
}

double parse_number(std::string_view s, const char* what)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ConfigParseError(std::string("bad ") + what + " in --theta-sweep: '" + std::string(s) + "'");
    }
    return v;
}

std::vector<double> parse_sweep(const std::string& text)
{
    const auto c1 = text.find(':');
    const auto c2 = c1 == std::string::npos ? c1 : text.find(':', c1 + 1);
    if (c2 == std::string::npos) {
        throw ConfigParseError("--theta-sweep must be MIN:MAX:COUNT");
    }
    const std::string_view s(text);
    const double lo = parse_number(s.substr(0, c1), "MIN");
    const double hi = parse_number(s.substr(c1 + 1, c2 - c1 - 1), "MAX");
    const double count = parse_number(s.substr(c2 + 1), "COUNT");
    if (!(count >= 1.0) || count != std::floor(count)) {
        throw ConfigParseError("--theta-sweep range is empty");
    }
    const auto n = static_cast<std::size_t>(count);
    std::vector<double> thetas(n);
    for (std::size_t i = 0; i < n; ++i) {
        thetas[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        if (n > 1 && i == n - 1) {
            thetas[i] = hi;
        }
        if (thetas[i] == 0.0) {
            throw ConfigParseError("--theta-sweep contains theta = 0");
        }
    }
    return thetas;
}

int cmd_sweep(const Command& cmd, std::ostream& out, std::ostream& err)
{
    if (!cmd.theta_sweep) {
        throw ConfigParseError("sweep needs --theta-sweep MIN:MAX:COUNT");
    }
    const std::vector<double> thetas = parse_sweep(*cmd.theta_sweep);
    const ProblemSpec base = load_problem(cmd, err);
    std::ofstream f = open_output(cmd, "sweep.csv");
    csv::header(f, {"theta", "CE", "alpha1_0", "eta", "exists"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double theta : thetas) {
        ProblemSpec spec = base;
        spec.theta = theta;
        double ce = nan, a10 = nan, eta = 0.0;
        bool exists = false;
        try {
            const RiccatiSolution sol = solve_riccati(spec);
            eta = sol.eta;
            exists = sol.exists_on_full_interval;
            if (exists) {
                ce = closed_form_optimal_cost(sol, spec.x0, theta).CE;
                a10 = sol.alpha1[0];
            }
        } catch (const BlowUpBeforeTerminal& e) {
            eta = e.eta();
        }
        csv::Row(f) << theta << ce << a10 << eta << (exists ? "true" : "false");
        out << "theta=" << csv::format(theta) << " CE=" << csv::format(ce)
            << " eta=" << csv::format(eta) << " exists=" << (exists ? "true" : "false") << '\n';
    }
    return exit_ok;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Risk-sensitive LEQ control solver and verification lab", "leqlab"};
    Command cmd;
    app.add_option("verb", cmd.verb, "solve | simulate | verify | sweep")
        ->required()
        ->check(CLI::IsMember({"solve", "simulate", "verify", "sweep"}));
    app.add_option("--config", cmd.config_path, "problem configuration (JSON)")->required();
    app.add_option("--output-dir", cmd.output_dir, "directory for CSV outputs")
        ->capture_default_str();
    app.add_option("--set", cmd.overrides, "override a config field, KEY=VALUE (dotted key)");
    app.add_option("--n-paths", cmd.n_paths, "Monte Carlo paths");
    app.add_option("--dt", cmd.dt, "Euler-Maruyama step");
    app.add_option("--seed", cmd.seed, "Monte Carlo seed");
    app.add_option("--checks", cmd.checks, "comma-separated acceptance checks (verify)");
    app.add_option("--theta-sweep", cmd.theta_sweep, "MIN:MAX:COUNT (sweep)");
    app.add_option("--workers", cmd.workers, "worker threads (default: LEQLAB_WORKERS or all cores)");
    app.add_flag("--dump-paths", cmd.dump_paths, "also write per-path exponents (simulate)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (cmd.verb == "solve") {
            return cmd_solve(cmd, out, err);
        }
        if (cmd.verb == "simulate") {
            return cmd_simulate(cmd, out, err);
        }
        if (cmd.verb == "verify") {
            return cmd_verify(cmd, out, err);
        }
        return cmd_sweep(cmd, out, err);
    } catch (const ValidationError& e) {
        err << "validation error (" << e.field() << "): " << e.what() << '\n';
        return exit_config;
    } catch (const ConfigParseError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const GridMismatch& e) {
        err << "grid error: " << e.what() << '\n';
        return exit_config;
    } catch (const BlowUpBeforeTerminal& e) {
        err << "blow-up: " << e.what() << "; solution exists on [T - eta, T] with eta = "
            << csv::format(e.eta()) << '\n';
        return exit_blowup;
    } catch (const AllPathsOverflowed& e) {
        err << "overflow: " << e.what() << '\n';
        return exit_blowup;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    }
}

} // namespace leq
