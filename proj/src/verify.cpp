#include "leqlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>

#include "leqlab/csv.hpp"
#include "leqlab/errors.hpp"
#include "leqlab/mc.hpp"
#include "leqlab/philox.hpp"
#include "leqlab/policy.hpp"
#include "leqlab/riccati.hpp"

namespace leq {

namespace {

constexpr double huge = std::numeric_limits<double>::max();

double finite_or_huge(double v)
{
    return std::isfinite(v) ? v : huge;
}

std::string fmt(double v)
{
    return csv::format(v);
}

CheckRecord record(std::string name, bool ok, double measured, double tolerance,
                   std::string detail = {})
{
    return CheckRecord{std::move(name), ok ? CheckStatus::pass : CheckStatus::fail,
                       finite_or_huge(measured), tolerance, std::move(detail)};
}

CheckRecord skipped(std::string name, std::string detail)
{
    return CheckRecord{std::move(name), CheckStatus::skip, 0.0, 0.0, std::move(detail)};
}

// Value of `values` with the smallest margin inside [lo, hi] (negative when outside).
double tightest(const std::vector<double>& values, double lo, double hi)
{
    double worst = values.front();
    double margin = huge;
    for (double v : values) {
        const double m = std::isfinite(v) ? std::min(v - lo, hi - v) : -huge;
        if (m < margin) {
            margin = m;
            worst = v;
        }
    }
    return worst;
}

bool in_band(const std::vector<double>& values, double lo, double hi)
{
    return std::all_of(values.begin(), values.end(),
                       [&](double v) { return v >= lo && v <= hi; });
}

std::string join(const std::vector<double>& values)
{
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i != 0) {
            s += ' ';
        }
        s += fmt(values[i]);
    }
    return s;
}

double relative_cost_error(double theta, double ce, double ce_ref)
{
    return std::abs(std::expm1(theta * (ce - ce_ref)));
}

std::pair<double, double> perturbation(std::uint64_t seed, int k)
{
    if (k == 0) {
        return {1.0, 0.0};
    }
    if (k == 1) {
        return {1.2, 0.0};
    }
    const auto u = rng::uniform_pair(seed, rng::Stream::perturbation, 0, static_cast<std::uint64_t>(k));
    return {0.5 + u[0], 2.0 * u[1] - 1.0};
}

struct Optimal {
    RiccatiSolution sol;
    LinearPolicy pol;
    PolicyEvaluation eval;
    CostValue closed;
};

Optimal solve_optimal(const ProblemSpec& spec)
{
    Optimal o;
    o.sol = solve_riccati(spec, spec.grid_n);
    if (!o.sol.exists_on_full_interval) {
        throw BlowUpBeforeTerminal("Riccati solution escapes before t = 0 (eta = " +
                                       fmt(o.sol.eta) + ")",
                                   o.sol.eta);
    }
    o.pol = optimal_feedback(spec, o.sol);
    o.eval = evaluate_linear_policy(spec, o.pol, spec.grid_n);
    o.closed = closed_form_optimal_cost(o.sol, spec.x0, spec.theta);
    return o;
}

ProblemSpec with_simulation(ProblemSpec spec, std::int64_t n_paths, double dt, std::uint64_t seed)
{
    spec.mc.n_paths = n_paths;
    spec.mc.dt = dt;
    spec.mc.seed = seed;
    return spec;
}

SimulationOptions options_of(const ProblemSpec& spec, int workers, bool keep_paths = false)
{
    SimulationOptions o;
    o.n_paths = spec.mc.n_paths;
    o.dt = spec.mc_dt();
    o.seed = spec.mc.seed;
    o.workers = workers;
    o.keep_paths = keep_paths;
    return o;
}

SummaryRow summary_row(std::string estimator, const CostEstimate& est, const PathEnsemble& ens,
                       double J_ref)
{
    SummaryRow row;
    row.estimator = std::move(estimator);
    row.estimate = est;
    row.n_paths = ens.n_paths;
    row.dt = ens.dt;
    row.seed = ens.seed;
    row.J_ref = J_ref;
    row.z_score = est.stderr_J > 0.0 ? (est.J_hat - J_ref) / est.stderr_J
                                     : (est.J_hat == J_ref ? 0.0 : huge);
    return row;
}

CheckRecord mc_confirmation(std::string name, const ProblemSpec& spec, const LinearPolicy& pol,
                            const PolicyEvaluation& eval, int workers)
{
    const PathEnsemble ens = simulate(spec, pol, eval.fields, nullptr, options_of(spec, workers));
    const CostEstimate est = estimate_cost(ens, spec.theta);
    const SummaryRow row = summary_row(name, est, ens, eval.cost.J);
    return record(std::move(name), std::abs(row.z_score) <= 3.0, std::abs(row.z_score), 3.0,
                  "J_hat=" + fmt(est.J_hat) + " stderr=" + fmt(est.stderr_J) +
                      " J_oracle=" + fmt(eval.cost.J));
}

ProblemSpec coupled_variant(ProblemSpec spec)
{
    spec.G = 0.5;
    spec.A2 = CoefficientFunction::constant(0.3);
    spec.B2 = CoefficientFunction::constant(-0.2);
    spec.g = CoefficientFunction::constant(0.1);
    return spec;
}

} // namespace

std::string_view to_string(CheckStatus s)
{
    switch (s) {
    case CheckStatus::pass:
        return "pass";
    case CheckStatus::fail:
        return "fail";
    case CheckStatus::skip:
        return "skip";
    }
    return "skip";
}

bool VerificationReport::overall() const
{
    return std::none_of(checks.begin(), checks.end(),
                        [](const CheckRecord& r) { return r.status == CheckStatus::fail; });
}

const CheckRecord* VerificationReport::find(std::string_view name) const
{
    for (const CheckRecord& r : checks) {
        if (r.name == name) {
            return &r;
        }
    }
    return nullptr;
}

void VerificationReport::add(CheckRecord r)
{
    r.measured = finite_or_huge(r.measured);
    checks.push_back(std::move(r));
}

void write_report_text(std::ostream& out, const VerificationReport& report)
{
    for (const CheckRecord& r : report.checks) {
        out << r.name << ' ' << to_string(r.status) << " measured=" << fmt(r.measured)
            << " tolerance=" << fmt(r.tolerance);
        if (!r.detail.empty()) {
            out << ' ' << r.detail;
        }
        out << '\n';
    }
    if (!report.note.empty()) {
        out << report.note << '\n';
    }
    out << "overall " << (report.overall() ? "pass" : "fail") << '\n';
}

void write_report_csv(std::ostream& out, const VerificationReport& report)
{
    csv::header(out, {"name", "status", "measured", "tolerance", "detail"});
    for (const CheckRecord& r : report.checks) {
        csv::Row(out) << csv::quote(r.name) << to_string(r.status) << r.measured << r.tolerance
                      << csv::quote(r.detail);
    }
}

double scalar_riccati_exact(double a, double c, double q, double S1, double tau)
{
    if (c == 0.0) {
        if (a == 0.0) {
            return S1 + q * tau;
        }
        const double fixed = -q / (2.0 * a);
        return fixed + (S1 - fixed) * std::exp(2.0 * a * tau);
    }
    const double disc = a * a - c * q;
    if (disc > 0.0) {
        const double lambda = std::sqrt(disc);
        const double r1 = (-a + lambda) / c;
        const double r2 = (-a - lambda) / c;
        if (S1 == r2) {
            return r2;
        }
        const double k = (S1 - r1) / (S1 - r2) * std::exp(2.0 * lambda * tau);
        const double den = 1.0 - k;
        if (den == 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        return (r1 - r2 * k) / den;
    }
    if (disc < 0.0) {
        const double omega = std::sqrt(-disc);
        const double phi = std::atan((S1 + a / c) * c / omega);
        const double arg = omega * tau + phi;
        if (arg >= std::numbers::pi / 2.0) {
            return std::numeric_limits<double>::infinity();
        }
        return -a / c + omega / c * std::tan(arg);
    }
    const double root = -a / c;
    const double den = 1.0 - c * (S1 - root) * tau;
    if (den <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return root + (S1 - root) / den;
}

ProblemSpec random_instance(std::uint64_t seed, std::uint32_t index, bool control_free_backward)
{
    std::uint32_t draw = 0;
    auto unit = [&] {
        return rng::uniform_pair(seed, rng::Stream::instance, draw++, index)[0];
    };
    auto sym = [&] { return 2.0 * unit() - 1.0; };
    auto constant = [&] { return CoefficientFunction::constant(sym()); };
    auto varying = [&] {
        std::vector<double> v(5);
        for (double& x : v) {
            x = sym();
        }
        return CoefficientFunction::piecewise(v, 1.0);
    };

    ProblemSpec spec;
    spec.horizon = 1.0;
    spec.x0 = sym();
    const double magnitude = 0.1 + 0.9 * unit();
    spec.theta = unit() < 0.5 ? -magnitude : magnitude;
    spec.A1 = varying();
    spec.B1 = constant();
    spec.C1 = constant();
    spec.D1 = constant();
    spec.b = constant();
    spec.sigma = varying();
    spec.A2 = constant();
    spec.B2 = constant();
    spec.C2 = constant();
    spec.D2 = constant();
    spec.g = constant();
    spec.G = sym();
    spec.S1 = unit();
    spec.S2 = unit();
    for (std::size_t k = 0; k < WeightMatrix::names.size(); ++k) {
        spec.R.stored(k) = CoefficientFunction::constant(sym());
    }
    spec.R.entry(1, 1) = CoefficientFunction::constant(unit());
    spec.R.entry(2, 2) = CoefficientFunction::constant(unit());
    spec.R.entry(3, 3) = CoefficientFunction::constant(unit());
    spec.R.entry(4, 4) = CoefficientFunction::constant(0.5 + 1.5 * unit());
    if (control_free_backward) {
        spec.A2 = CoefficientFunction::constant(0.0);
        spec.D2 = CoefficientFunction::constant(0.0);
        spec.G = 0.0;
    }
    validate(spec);
    return spec;
}

bool backward_trivial(const ProblemSpec& spec)
{
    return spec.G == 0.0 && spec.A2.identically_zero() && spec.B2.identically_zero() &&
           spec.C2.identically_zero() && spec.D2.identically_zero() && spec.g.identically_zero();
}

double risk_neutral_lq_value(const ProblemSpec& spec, int n_steps)
{
    if (!backward_trivial(spec)) {
        throw ValidationError("risk-neutral LQ reference needs a trivial backward equation",
                              "G");
    }
    if (n_steps < 1) {
        throw ValidationError("n_steps must be positive", "grid_n");
    }
    using V3 = std::array<double, 3>;
    // (P, Q, W) with u* = -((d P + m) x + d Q) / r
    auto rate = [&](double t, const V3& y) -> V3 {
        const double a = spec.A1(t), d = spec.D1(t), b = spec.b(t), s = spec.sigma(t);
        const double q = spec.R.entry(1, 1)(t), m = spec.R.entry(1, 4)(t), r = spec.R.entry(4, 4)(t);
        const double P = y[0], Q = y[1];
        const double k = d * P + m;
        return {-(2.0 * a * P - k * k / r + q), -((a - d * k / r) * Q + P * b),
                -(0.5 * s * s * P + b * Q - 0.5 * d * d * Q * Q / r)};
    };
    auto axpy = [](const V3& y, double h, const V3& k) {
        return V3{y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]};
    };
    const double h = spec.horizon / n_steps;
    V3 y{spec.S1, 0.0, 0.0};
    for (int i = n_steps; i > 0; --i) {
        const double t = spec.horizon * i / n_steps;
        const V3 k1 = rate(t, y);
        const V3 k2 = rate(t - 0.5 * h, axpy(y, -0.5 * h, k1));
        const V3 k3 = rate(t - 0.5 * h, axpy(y, -0.5 * h, k2));
        const V3 k4 = rate(t - h, axpy(y, -h, k3));
        for (int j = 0; j < 3; ++j) {
            y[j] -= h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    const double x0 = spec.x0;
    return 0.5 * y[0] * x0 * x0 + y[1] * x0 + y[2];
}

VerificationReport verify_optimality(const ProblemSpec& spec, int n_perturbations,
                                     std::uint64_t seed, int workers)
{
    VerificationReport report;
    report.environment = {spec.grid_n, spec.mc.n_paths, spec.mc_dt(), seed};
    const Optimal o = solve_optimal(spec);
    const double ce_opt = o.eval.cost.CE;
    const double rel = std::abs(ce_opt - o.closed.CE) / std::max(1.0, std::abs(o.closed.CE));
    report.add(record("optimal-oracle-vs-closed-form", rel <= 1e-8, rel, 1e-8,
                      "CE_oracle=" + fmt(ce_opt) + " CE_closed=" + fmt(o.closed.CE)));
    if (n_perturbations <= 0) {
        return report;
    }

    struct Evaluated {
        int k;
        LinearPolicy pol;
        PolicyEvaluation eval;
        double gap;
    };
    std::vector<Evaluated> evaluated;
    for (int k = 0; k < n_perturbations; ++k) {
        const auto [scale, shift] = perturbation(seed, k);
        const std::string name = "perturbation[" + std::to_string(k) + "]";
        const std::string what = "gain_scale=" + fmt(scale) + " offset_shift=" + fmt(shift);
        LinearPolicy pol = perturb(o.pol, scale, shift);
        try {
            PolicyEvaluation eval = evaluate_linear_policy(spec, pol, spec.grid_n);
            const double gap = eval.cost.CE - ce_opt;
            report.add(record(name, gap >= -1e-9, gap, -1e-9, what + " CE=" + fmt(eval.cost.CE)));
            evaluated.push_back(Evaluated{k, std::move(pol), std::move(eval), gap});
        } catch (const BlowUpBeforeTerminal& e) {
            report.add(skipped(name, what + " inadmissible: " + e.what()));
        }
    }

    const auto identity = std::find_if(evaluated.begin(), evaluated.end(),
                                       [](const Evaluated& e) { return e.k == 0; });
    if (identity != evaluated.end() && evaluated.size() > 1) {
        double margin = huge;
        for (const Evaluated& e : evaluated) {
            if (e.k != 0) {
                margin = std::min(margin, e.gap - identity->gap);
            }
        }
        report.add(record("min-gap-at-identity", margin >= -1e-9, margin, -1e-9,
                          "smallest non-identity gap minus identity gap"));
    }

    report.add(mc_confirmation("mc-optimal", spec, o.pol, o.eval, workers));
    int confirmed = 0;
    for (const Evaluated& e : evaluated) {
        if (e.k == 0 || confirmed == 2) {
            continue;
        }
        report.add(mc_confirmation("mc-perturbation[" + std::to_string(e.k) + "]", spec, e.pol,
                                   e.eval, workers));
        ++confirmed;
    }
    return report;
}

VerificationReport risk_neutral_limit(const ProblemSpec& spec, const std::vector<double>& thetas)
{
    VerificationReport report;
    report.environment = {spec.grid_n, 0, 0.0, 0};
    if (thetas.empty()) {
        report.note = "vacuous: no theta values given";
        return report;
    }
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        if (!(thetas[i] > 0.0) || (i > 0 && !(thetas[i] < thetas[i - 1]))) {
            report.add(record("thetas", false, thetas[i], 0.0,
                              "thetas must be positive and strictly decreasing"));
            return report;
        }
    }

    std::vector<double> ce;
    for (double theta : thetas) {
        ProblemSpec s = spec;
        s.theta = theta;
        const RiccatiSolution sol = solve_riccati(s, s.grid_n);
        if (!sol.exists_on_full_interval) {
            report.add(record("theta=" + fmt(theta), false, sol.eta, s.horizon,
                              "Riccati solution escapes before t = 0"));
            return report;
        }
        ce.push_back(closed_form_optimal_cost(sol, s.x0, theta).CE);
    }

    if (ce.size() >= 3) {
        std::vector<double> gaps;
        for (std::size_t i = 1; i < ce.size(); ++i) {
            gaps.push_back(std::abs(ce[i] - ce[i - 1]));
        }
        bool shrinking = true;
        double worst = 0.0;
        for (std::size_t i = 1; i < gaps.size(); ++i) {
            shrinking = shrinking && gaps[i] <= gaps[i - 1];
            worst = std::max(worst, gaps[i - 1] > 0.0 ? gaps[i] / gaps[i - 1]
                                                      : (gaps[i] > 0.0 ? huge : 0.0));
        }
        report.add(record("ce-cauchy", shrinking, worst, 1.0, "gaps " + join(gaps)));
    }

    const double theta_min = thetas.back();
    if (!backward_trivial(spec)) {
        report.add(skipped("lq-limit", "LQ reference covers trivial backward equations only"));
        return report;
    }
    const double lq = risk_neutral_lq_value(spec, spec.grid_n);
    const double bound = 10.0 * theta_min * std::max(1.0, std::abs(lq));
    const double diff = std::abs(ce.back() - lq);
    report.add(record("lq-limit", diff <= bound, diff, bound,
                      "CE=" + fmt(ce.back()) + " LQ=" + fmt(lq)));
    return report;
}

const std::vector<std::string>& acceptance_check_names()
{
    static const std::vector<std::string> names = {
        "riccati-equivalence",  "rk4-order",          "blowup-time",
        "cost-identity-deterministic", "cost-identity-mc", "affine-optimality",
        "girsanov-unit-mean",   "bsde-residual-scaling", "risk-neutral-limit",
        "determinism"};
    return names;
}

namespace {

class Suite {
public:
    explicit Suite(const AcceptanceConfig& cfg)
        : cfg_(cfg), spec_(with_simulation(cfg.spec, cfg.n_paths, cfg.dt, cfg.seed))
    {
    }

    CheckRecord riccati_equivalence() const
    {
        double worst = 0.0;
        int compared = 0;
        int truncated = 0;
        for (int i = 0; i < cfg_.n_equivalence_instances; ++i) {
            const ProblemSpec s = random_instance(cfg_.seed, static_cast<std::uint32_t>(i));
            RiccatiSolution comp;
            MatrixKSolution mat;
            try {
                comp = solve_alpha1_beta1(s, s.grid_n);
                mat = solve_matrix_K(s, s.grid_n);
            } catch (const BlowUpBeforeTerminal&) {
                ++truncated;
                continue;
            }
            if (!comp.exists_on_full_interval || !mat.exists_on_full_interval) {
                ++truncated;
            }
            const std::size_t from = std::max(comp.first_valid, mat.first_valid);
            for (std::size_t j = from; j < comp.grid.size(); ++j) {
                const Eigen::Matrix2d& k = mat.K[j];
                const double dev = std::max({std::abs(comp.alpha1[j] - k(0, 0)) /
                                                 std::max(1.0, std::abs(k(0, 0))),
                                             std::abs(comp.beta1[j] - k(1, 1)) /
                                                 std::max(1.0, std::abs(k(1, 1))),
                                             std::abs(k(0, 1)), std::abs(k(1, 0))});
                worst = std::max(worst, std::isfinite(dev) ? dev : huge);
            }
            ++compared;
        }
        return record("riccati-equivalence", compared > 0 && worst <= 1e-10, worst, 1e-10,
                      std::to_string(compared) + " instances, " + std::to_string(truncated) +
                          " with escape before t = 0");
    }

    static CheckRecord rk4_order()
    {
        const double a = 1.0, d = 2.0, r = 1.0, qw = 4.0, s = 0.5, theta = 0.5;
        ProblemSpec spec = scalar_reduction(a, d, r, qw, s, theta, 1.0, 1.0, 0.0);
        const double c = theta * s * s - d * d / r;
        std::vector<double> errors;
        for (int n : {256, 512, 1024, 2048}) {
            const RiccatiSolution sol = solve_alpha1_beta1(spec, n);
            double e = 0.0;
            for (std::size_t i = 0; i < sol.grid.size(); ++i) {
                const double exact = scalar_riccati_exact(a, c, qw, spec.S1, spec.horizon - sol.grid[i]);
                e = std::max(e, std::abs(sol.alpha1[i] - exact));
            }
            errors.push_back(e);
        }
        std::vector<double> ratios;
        for (std::size_t i = 1; i < errors.size(); ++i) {
            ratios.push_back(errors[i - 1] / errors[i]);
        }
        return record("rk4-order", in_band(ratios, 12.0, 20.0), tightest(ratios, 12.0, 20.0), 20.0,
                      "band [12, 20]; ratios " + join(ratios) + "; errors " + join(errors));
    }

    static CheckRecord blowup_time()
    {
        constexpr int n = 2048;
        const double fine = 1.0 / n / 2.0;
        double worst = 0.0;
        std::string detail;
        for (double theta : {4.0, 16.0}) {
            const ProblemSpec spec = scalar_reduction(0.0, 0.0, 1.0, 1.0, 1.0, theta, 1.0, 1.0, 0.0);
            const ExistenceInterval ex = existence_interval(spec, n);
            const double exact = std::numbers::pi / (2.0 * std::sqrt(theta));
            const double steps = ex.exists_on_full_interval ? huge : std::abs(ex.eta - exact) / fine;
            worst = std::max(worst, steps);
            detail += "theta=" + fmt(theta) + " eta=" + fmt(ex.eta) + " exact=" + fmt(exact) + "; ";
        }
        detail += "measured in fine steps";
        return record("blowup-time", worst <= 2.0, worst, 2.0, detail);
    }

    CheckRecord cost_identity_deterministic() const
    {
        double worst = 0.0;
        int done = 0;
        int rejected = 0;
        auto check = [&](const ProblemSpec& s) {
            const Optimal o = solve_optimal(s);
            worst = std::max(worst, relative_cost_error(s.theta, o.eval.cost.CE, o.closed.CE));
        };
        check(spec_);
        for (std::uint32_t i = 0; done < cfg_.n_identity_instances && i < 1000; ++i) {
            try {
                check(random_instance(cfg_.seed, 100000 + i));
                ++done;
            } catch (const BlowUpBeforeTerminal&) {
                ++rejected;
            }
        }
        const bool ok = done == cfg_.n_identity_instances && worst <= 1e-8;
        return record("cost-identity-deterministic", ok, worst, 1e-8,
                      "configured instance + " + std::to_string(done) + " random instances (" +
                          std::to_string(rejected) + " rejected for escape)");
    }

    CheckRecord cost_identity_mc()
    {
        const MonteCarloRun& run = main_run();
        const double rel = run.estimate.J_hat > 0.0 ? run.estimate.stderr_J / run.estimate.J_hat : huge;
        const double z = std::abs(run.row.z_score);
        const bool ok = z <= 3.0 && rel <= 0.02;
        return record("cost-identity-mc", ok, z, 3.0,
                      "J_hat=" + fmt(run.estimate.J_hat) + " stderr=" + fmt(run.estimate.stderr_J) +
                          " J_closed=" + fmt(run.row.J_ref) + " stderr/J_hat=" + fmt(rel) +
                          " (limit 0.02) bias=" + fmt(run.estimate.J_hat - run.row.J_ref) +
                          " overflow=" + std::to_string(run.estimate.overflow_count) +
                          " max_weight_share=" + fmt(run.estimate.max_weight_share));
    }

    CheckRecord affine_optimality() const
    {
        const VerificationReport r = verify_optimality(spec_, cfg_.n_perturbations, cfg_.seed, cfg_.workers);
        double min_gap = huge;
        double gap_12 = std::numeric_limits<double>::quiet_NaN();
        bool ok = r.overall();
        std::string failed;
        for (const CheckRecord& c : r.checks) {
            if (c.name.rfind("perturbation[", 0) == 0 && c.status != CheckStatus::skip) {
                min_gap = std::min(min_gap, c.measured);
            }
            if (c.name == "perturbation[1]") {
                gap_12 = c.status == CheckStatus::skip ? std::numeric_limits<double>::quiet_NaN()
                                                       : c.measured;
            }
            if (c.status == CheckStatus::fail) {
                failed += " " + c.name;
            }
        }
        if (cfg_.n_perturbations >= 2) {
            ok = ok && gap_12 >= 1e-4;
        }
        std::string detail = "gap(gain_scale=1.2)=" + fmt(gap_12) + " (limit 1e-4)";
        for (const CheckRecord& c : r.checks) {
            if (c.name.rfind("mc-", 0) == 0) {
                detail += " " + c.name + ".z=" + fmt(c.measured);
            }
        }
        if (!failed.empty()) {
            detail += "; failed:" + failed;
        }
        return record("affine-optimality", ok, min_gap, -1e-9, detail);
    }

    CheckRecord girsanov_unit_mean()
    {
        const MonteCarloRun& run = main_run();
        const WeightEstimate w = girsanov_check(run.ensemble);
        const double z = w.stderr_mean > 0.0 ? std::abs(w.mean - 1.0) / w.stderr_mean
                                             : (w.mean == 1.0 ? 0.0 : huge);
        return record("girsanov-unit-mean", z <= 3.0, z, 3.0,
                      "mean=" + fmt(w.mean) + " stderr=" + fmt(w.stderr_mean));
    }

    CheckRecord bsde_residual_scaling() const
    {
        const ProblemSpec coupled = backward_trivial(spec_) ? coupled_variant(spec_) : spec_;
        const Optimal main_opt = solve_optimal(spec_);
        const Optimal coupled_opt = backward_trivial(spec_) ? solve_optimal(coupled) : main_opt;
        std::vector<double> backward, ansatz;
        for (int k : {8, 9, 10}) {
            const double dt = spec_.horizon / static_cast<double>(1 << k);
            auto run = [&](const ProblemSpec& s, const Optimal& o) {
                const ProblemSpec sim = with_simulation(s, cfg_.residual_paths, dt, cfg_.seed);
                const PathEnsemble ens =
                    simulate(sim, o.pol, o.eval.fields, nullptr, options_of(sim, cfg_.workers, true));
                return bsde_residuals(ens, sim, o.sol);
            };
            ansatz.push_back(run(spec_, main_opt).ansatz.rms);
            backward.push_back(run(coupled, coupled_opt).backward.rms);
        }
        std::vector<double> ratios;
        for (const auto* v : {&backward, &ansatz}) {
            for (std::size_t i = 1; i < v->size(); ++i) {
                ratios.push_back((*v)[i - 1] / (*v)[i]);
            }
        }
        std::string detail = "band [1.3, 3.0]; backward rms " + join(backward) + "; ansatz rms " +
                             join(ansatz) + "; ratios " + join(ratios);
        if (backward_trivial(spec_)) {
            detail += "; backward family on the coupled variant G=0.5 A2=0.3 B2=-0.2 g=0.1";
        }
        return record("bsde-residual-scaling", in_band(ratios, 1.3, 3.0), tightest(ratios, 1.3, 3.0),
                      3.0, detail);
    }

    CheckRecord risk_neutral() const
    {
        const VerificationReport r = risk_neutral_limit(spec_, cfg_.thetas);
        const CheckRecord* lq = r.find("lq-limit");
        const CheckRecord* cauchy = r.find("ce-cauchy");
        if (lq == nullptr || lq->status == CheckStatus::skip) {
            return skipped("risk-neutral-limit",
                           lq == nullptr ? "no LQ comparison" : lq->detail);
        }
        const bool ok = r.overall() && lq->measured <= 1e-3;
        return record("risk-neutral-limit", ok, lq->measured, 1e-3,
                      lq->detail + (cauchy ? "; " + cauchy->detail : std::string()));
    }

    CheckRecord determinism()
    {
        const MonteCarloRun& run = main_run();
        const std::string reference = run.csv;
        const int resolved = cfg_.workers > 0 ? cfg_.workers : default_workers();
        bool same = true;
        std::string detail = "workers " + std::to_string(resolved);
        for (int w : {1, 8}) {
            if (w == resolved) {
                continue;
            }
            same = same && summary_csv(w) == reference;
            detail += " vs " + std::to_string(w);
        }
        return record("determinism", same, same ? 0.0 : 1.0, 0.0,
                      detail + (same ? ": mc_summary.csv identical" : ": mc_summary.csv differs"));
    }

private:
    struct MonteCarloRun {
        PathEnsemble ensemble;
        CostEstimate estimate;
        SummaryRow row;
        std::string csv;
    };

    MonteCarloRun compute_run(int workers) const
    {
        const Optimal o = solve_optimal(spec_);
        MonteCarloRun run;
        run.ensemble = simulate(spec_, o.pol, o.eval.fields, &o.sol, options_of(spec_, workers));
        run.estimate = estimate_cost(run.ensemble, spec_.theta);
        run.row = summary_row("optimal", run.estimate, run.ensemble, o.closed.J);
        std::ostringstream out;
        write_mc_summary_csv(out, std::span<const SummaryRow>(&run.row, 1));
        run.csv = out.str();
        return run;
    }

    std::string summary_csv(int workers) const { return compute_run(workers).csv; }

    const MonteCarloRun& main_run()
    {
        if (!main_) {
            main_ = std::make_unique<MonteCarloRun>(compute_run(cfg_.workers));
        }
        return *main_;
    }

    const AcceptanceConfig& cfg_;
    ProblemSpec spec_;
    std::unique_ptr<MonteCarloRun> main_;
};

bool uses_monte_carlo(std::string_view name)
{
    return name == "cost-identity-mc" || name == "affine-optimality" ||
           name == "girsanov-unit-mean" || name == "bsde-residual-scaling" ||
           name == "determinism";
}

} // namespace

VerificationReport run_acceptance_suite(const AcceptanceConfig& config)
{
    VerificationReport report;
    report.environment = {config.spec.grid_n, config.n_paths, config.dt, config.seed};
    Suite suite(config);

    const std::vector<std::string>& canonical = acceptance_check_names();
    auto selected = [&](std::string_view name) {
        return std::find(config.checks.begin(), config.checks.end(), name) != config.checks.end();
    };
    for (const std::string& name : config.checks) {
        if (std::find(canonical.begin(), canonical.end(), name) == canonical.end()) {
            report.add(record(name, false, 0.0, 0.0, "unknown check"));
        }
    }

    const std::map<std::string_view, std::function<CheckRecord()>> runners = {
        {"riccati-equivalence", [&] { return suite.riccati_equivalence(); }},
        {"rk4-order", [&] { return Suite::rk4_order(); }},
        {"blowup-time", [&] { return Suite::blowup_time(); }},
        {"cost-identity-deterministic", [&] { return suite.cost_identity_deterministic(); }},
        {"cost-identity-mc", [&] { return suite.cost_identity_mc(); }},
        {"affine-optimality", [&] { return suite.affine_optimality(); }},
        {"girsanov-unit-mean", [&] { return suite.girsanov_unit_mean(); }},
        {"bsde-residual-scaling", [&] { return suite.bsde_residual_scaling(); }},
        {"risk-neutral-limit", [&] { return suite.risk_neutral(); }},
        {"determinism", [&] { return suite.determinism(); }},
    };

    std::string gate;
    std::size_t run_count = 0;
    for (const std::string& name : canonical) {
        if (!selected(name)) {
            continue;
        }
        ++run_count;
        if (!gate.empty() && uses_monte_carlo(name)) {
            report.add(skipped(name, "not attempted: " + gate + " failed"));
            continue;
        }
        CheckRecord r;
        try {
            r = runners.at(name)();
        } catch (const std::exception& e) {
            r = record(name, false, 0.0, 0.0, std::string("error: ") + e.what());
        }
        if ((name == "riccati-equivalence" || name == "rk4-order") &&
            r.status == CheckStatus::fail) {
            gate += gate.empty() ? name : ", " + name;
        }
        report.add(std::move(r));
    }
    if (run_count == 0) {
        report.note = "vacuous: no checks selected";
    }
    return report;
}

} // namespace leq
