#include "leqlab/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <thread>

#include "leqlab/csv.hpp"
#include "leqlab/errors.hpp"
#include "leqlab/philox.hpp"

namespace leq {

namespace {

std::size_t euler_steps(double horizon, double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw GridMismatch("dt must be positive");
    }
    const double ratio = horizon / dt;
    const double steps = std::round(ratio);
    if (steps < 1.0 || std::abs(steps * dt - horizon) > 1e-12 * std::max(1.0, horizon)) {
        throw GridMismatch("dt = " + csv::format(dt) + " does not divide T = " +
                           csv::format(horizon));
    }
    return static_cast<std::size_t>(steps);
}

std::size_t grid_stride(std::size_t grid_steps, std::size_t euler, const char* what)
{
    if (grid_steps == 0 || grid_steps % euler != 0) {
        throw GridMismatch(std::string(what) + " grid (" + std::to_string(grid_steps) +
                           " steps) is not a multiple of the Euler grid (" +
                           std::to_string(euler) + " steps)");
    }
    return grid_steps / euler;
}

// Per-step closed-loop tables shared by every path.
struct StepTable {
    std::vector<double> slope, shift, sigma, quad, lin, cst, h1, h0;
};

template <class Fn>
void run_parallel(std::int64_t n, int workers, Fn&& fn)
{
    workers = std::max(1, workers);
    if (workers == 1 || n < 2) {
        fn(std::int64_t{0}, n);
        return;
    }
    const auto w = static_cast<std::int64_t>(workers);
    std::vector<std::jthread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (std::int64_t k = 0; k < w; ++k) {
        const std::int64_t begin = n * k / w;
        const std::int64_t end = n * (k + 1) / w;
        if (begin < end) {
            threads.emplace_back([&fn, begin, end] { fn(begin, end); });
        }
    }
}

struct ShiftedMean {
    double max_log = 0.0;
    double mean_w = 0.0; ///< mean of exp(l - max_log)
    double sd_w = 0.0;   ///< sample standard deviation of exp(l - max_log)
    double sum_w = 0.0;
    std::int64_t n = 0;
};

ShiftedMean shifted_mean(const std::vector<double>& logs, const std::vector<std::uint8_t>& skip)
{
    ShiftedMean s;
    s.max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < logs.size(); ++i) {
        if (!skip[i]) {
            s.max_log = std::max(s.max_log, logs[i]);
            ++s.n;
        }
    }
    if (s.n == 0) {
        return s;
    }
    for (std::size_t i = 0; i < logs.size(); ++i) {
        if (!skip[i]) {
            s.sum_w += std::exp(logs[i] - s.max_log);
        }
    }
    s.mean_w = s.sum_w / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (std::size_t i = 0; i < logs.size(); ++i) {
            if (!skip[i]) {
                const double d = std::exp(logs[i] - s.max_log) - s.mean_w;
                ss += d * d;
            }
        }
        s.sd_w = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

} // namespace

int default_workers()
{
    if (const char* env = std::getenv("LEQLAB_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) {
            return w;
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::int64_t PathEnsemble::overflow_count() const
{
    return static_cast<std::int64_t>(std::count(overflow.begin(), overflow.end(), 1));
}

PathEnsemble simulate(const ProblemSpec& spec, const LinearPolicy& pol, const PolicyFields& fields,
                      const RiccatiSolution* girsanov_reference, const SimulationOptions& options)
{
    if (options.n_paths < 1) {
        throw Error("n_paths must be at least 1");
    }
    const std::size_t m = euler_steps(spec.horizon, options.dt);
    const std::size_t field_stride = grid_stride(fields.grid.size() - 1, m, "policy fields");
    std::size_t ref_stride = 0;
    if (girsanov_reference != nullptr) {
        if (girsanov_reference->alpha2.size() != girsanov_reference->alpha1.size() ||
            !girsanov_reference->exists_on_full_interval) {
            throw MissingPrerequisite("Girsanov reference needs alpha1 and alpha2 on [0, T]");
        }
        ref_stride = grid_stride(girsanov_reference->n_steps(), m, "Riccati");
    }

    const double dt = spec.horizon / static_cast<double>(m);
    const double sqrt_dt = std::sqrt(dt);
    const double theta = spec.theta;

    StepTable tab;
    for (auto* v : {&tab.slope, &tab.shift, &tab.sigma, &tab.quad, &tab.lin, &tab.cst, &tab.h1,
                    &tab.h0}) {
        v->assign(m + 1, 0.0);
    }
    for (std::size_t n = 0; n <= m; ++n) {
        const double t = spec.horizon * static_cast<double>(n) / static_cast<double>(m);
        const PointCoefficients k = coefficients_at(spec, t);
        const std::size_t fi = n * field_stride;
        const ClosedLoopTerms c =
            closed_loop_terms(k, pol.gain(t), pol.offset(t), fields.eta1[fi], fields.eta0[fi]);
        tab.slope[n] = c.drift_slope;
        tab.shift[n] = c.drift_shift;
        tab.sigma[n] = k.sigma;
        tab.quad[n] = c.quad;
        tab.lin[n] = c.lin;
        tab.cst[n] = c.cst;
        if (girsanov_reference != nullptr) {
            const std::size_t ri = n * ref_stride;
            tab.h1[n] = theta * k.sigma * girsanov_reference->alpha1[ri];
            tab.h0[n] = theta * k.sigma * girsanov_reference->alpha2[ri];
        }
    }

    PathEnsemble ens;
    ens.n_paths = options.n_paths;
    ens.dt = dt;
    ens.n_steps = m;
    ens.seed = options.seed;
    ens.theta = theta;
    ens.has_girsanov = girsanov_reference != nullptr;
    const auto np = static_cast<std::size_t>(options.n_paths);
    ens.log_cost.assign(np, 0.0);
    ens.log_girsanov.assign(np, 0.0);
    ens.x_terminal.assign(np, 0.0);
    ens.overflow.assign(np, 0);
    if (options.keep_paths) {
        ens.paths.assign(np * (m + 1), 0.0);
    }

    const double terminal_y = 0.5 * spec.S2 * fields.y0 * fields.y0;
    const double x0 = spec.x0;
    const double S1 = spec.S1;
    const std::uint64_t seed = options.seed;
    const bool keep = options.keep_paths;

    auto work = [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t path = begin; path < end; ++path) {
            const auto pi = static_cast<std::size_t>(path);
            double* trace = keep ? ens.paths.data() + pi * (m + 1) : nullptr;
            double x = x0;
            double lg = 0.0;
            double running = 0.0;
            double l_prev = 0.5 * tab.quad[0] * x * x + tab.lin[0] * x + tab.cst[0];
            if (keep) {
                trace[0] = x;
            }
            for (std::size_t n = 0; n < m; ++n) {
                const double dw = sqrt_dt * rng::standard_normal(seed, static_cast<std::uint64_t>(path),
                                                                 static_cast<std::uint32_t>(n));
                const double hx = tab.h1[n] * x + tab.h0[n];
                lg += hx * dw - 0.5 * hx * hx * dt;
                x += (tab.slope[n] * x + tab.shift[n]) * dt + tab.sigma[n] * dw;
                const double l_next =
                    0.5 * tab.quad[n + 1] * x * x + tab.lin[n + 1] * x + tab.cst[n + 1];
                running += 0.5 * (l_prev + l_next) * dt;
                l_prev = l_next;
                if (keep) {
                    trace[n + 1] = x;
                }
            }
            const double lc = theta * (running + 0.5 * S1 * x * x + terminal_y);
            ens.log_cost[pi] = lc;
            ens.log_girsanov[pi] = lg;
            ens.x_terminal[pi] = x;
            ens.overflow[pi] = (std::isfinite(lc) && std::isfinite(lg) && std::isfinite(x)) ? 0 : 1;
        }
    };
    run_parallel(options.n_paths, options.workers > 0 ? options.workers : default_workers(), work);
    return ens;
}

CostEstimate estimate_cost(const PathEnsemble& ens, double theta)
{
    if (ens.log_cost.empty()) {
        throw Error("estimate_cost: empty ensemble");
    }
    const ShiftedMean s = shifted_mean(ens.log_cost, ens.overflow);
    if (s.n == 0) {
        throw AllPathsOverflowed("every path overflowed the representable range");
    }
    CostEstimate e;
    e.n_effective = s.n;
    e.overflow_count = static_cast<std::int64_t>(ens.log_cost.size()) - s.n;
    const double scale = std::exp(s.max_log);
    e.J_hat = scale * s.mean_w;
    e.stderr_J = scale * s.sd_w / std::sqrt(static_cast<double>(s.n));
    e.CE_hat = (s.max_log + std::log(s.mean_w)) / theta;
    e.max_weight_share = 1.0 / s.sum_w;
    return e;
}

WeightEstimate girsanov_check(const PathEnsemble& ens)
{
    if (!ens.has_girsanov) {
        throw MissingPrerequisite("ensemble carries no Girsanov weights");
    }
    const ShiftedMean s = shifted_mean(ens.log_girsanov, ens.overflow);
    if (s.n == 0) {
        throw AllPathsOverflowed("every path overflowed the representable range");
    }
    const double scale = std::exp(s.max_log);
    return WeightEstimate{scale * s.mean_w, scale * s.sd_w / std::sqrt(static_cast<double>(s.n))};
}

ResidualStats bsde_residuals(const PathEnsemble& ens, const ProblemSpec& spec,
                             const RiccatiSolution& sol)
{
    if (ens.paths.empty()) {
        throw MissingPrerequisite("bsde_residuals: ensemble was simulated without keep_paths");
    }
    if (!sol.exists_on_full_interval || !sol.has_alpha3) {
        throw MissingPrerequisite("bsde_residuals: full Riccati solution required");
    }
    const std::size_t m = ens.n_steps;
    const std::size_t stride = grid_stride(sol.n_steps(), m, "Riccati");
    const LinearPolicy opt = optimal_feedback(spec, sol);
    const double dt = ens.dt;
    const double sqrt_dt = std::sqrt(dt);
    const double theta = spec.theta;

    struct Step {
        double t, b1, b2, a1, a2, a3, gain, offset;
        PointCoefficients k;
    };
    std::vector<Step> steps;
    steps.reserve(m + 1);
    for (std::size_t n = 0; n <= m; ++n) {
        const std::size_t i = n * stride;
        const double t = sol.grid[i];
        steps.push_back(Step{t, sol.beta1[i], sol.beta2[i], sol.alpha1[i], sol.alpha2[i],
                             sol.alpha3[i], opt.gain(t), opt.offset(t), coefficients_at(spec, t)});
    }

    ResidualStats out;
    for (ResidualFamily* f : {&out.backward, &out.ansatz}) {
        f->step_mean.assign(m, 0.0);
        f->step_rms.assign(m, 0.0);
    }
    std::vector<double> sq_b(m, 0.0), sq_a(m, 0.0);
    std::int64_t used = 0;
    for (std::int64_t path = 0; path < ens.n_paths; ++path) {
        if (ens.overflow[static_cast<std::size_t>(path)]) {
            continue;
        }
        ++used;
        for (std::size_t n = 0; n < m; ++n) {
            const Step& s0 = steps[n];
            const Step& s1 = steps[n + 1];
            const double x0 = ens.x(path, n);
            const double x1 = ens.x(path, n + 1);
            const double dw = sqrt_dt * rng::standard_normal(ens.seed, static_cast<std::uint64_t>(path),
                                                             static_cast<std::uint32_t>(n));
            const auto& k = s0.k;
            const double y0 = s0.b1 * x0 + s0.b2;
            const double y1 = s1.b1 * x1 + s1.b2;
            const double z0 = s0.b1 * k.sigma;
            const double u0 = s0.gain * x0 + s0.offset;
            const double res_b =
                (y1 - y0) + (k.A2 * x0 + k.B2 * y0 + k.C2 * z0 + k.D2 * u0 + k.g) * dt - z0 * dw;

            const Eigen::Vector4d v(x0, y0, z0, u0);
            const double ell = 0.5 * v.dot(k.R * v);
            const double g0 = 0.5 * s0.a1 * x0 * x0 + s0.a2 * x0 + s0.a3;
            const double g1 = 0.5 * s1.a1 * x1 * x1 + s1.a2 * x1 + s1.a3;
            const double kap = k.sigma * (s0.a1 * x0 + s0.a2);
            const double res_a = (g1 - g0) + (ell + 0.5 * theta * kap * kap) * dt - kap * dw;

            out.backward.step_mean[n] += res_b;
            out.ansatz.step_mean[n] += res_a;
            sq_b[n] += res_b * res_b;
            sq_a[n] += res_a * res_a;
        }
    }
    if (used == 0) {
        throw AllPathsOverflowed("every path overflowed the representable range");
    }
    const auto nu = static_cast<double>(used);
    auto finish = [&](ResidualFamily& f, const std::vector<double>& sq) {
        double total_sq = 0.0, total = 0.0;
        for (std::size_t n = 0; n < m; ++n) {
            total += f.step_mean[n];
            total_sq += sq[n];
            f.step_mean[n] /= nu;
            f.step_rms[n] = std::sqrt(sq[n] / nu);
        }
        f.mean = total / (nu * static_cast<double>(m));
        f.rms = std::sqrt(total_sq / (nu * static_cast<double>(m)));
    };
    finish(out.backward, sq_b);
    finish(out.ansatz, sq_a);
    return out;
}

void write_mc_summary_csv(std::ostream& out, std::span<const SummaryRow> rows)
{
    csv::header(out, {"estimator", "J_hat", "stderr", "CE_hat", "n_paths", "n_effective",
                      "overflow_count", "dt", "seed", "J_ref", "z_score"});
    for (const SummaryRow& r : rows) {
        csv::Row(out) << csv::quote(r.estimator) << r.estimate.J_hat << r.estimate.stderr_J
                      << r.estimate.CE_hat << r.n_paths << r.estimate.n_effective
                      << r.estimate.overflow_count << r.dt << r.seed << r.J_ref << r.z_score;
    }
}

void write_path_dump_csv(std::ostream& out, const PathEnsemble& ens)
{
    csv::header(out, {"path_index", "log_cost", "log_girsanov"});
    for (std::size_t i = 0; i < ens.log_cost.size(); ++i) {
        csv::Row(out) << i << ens.log_cost[i] << ens.log_girsanov[i];
    }
}

} // namespace leq
