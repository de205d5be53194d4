#include "leqlab/riccati.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "leqlab/csv.hpp"
#include "leqlab/errors.hpp"
#include "leqlab/ode.hpp"

namespace leq {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::vector<double> uniform_grid(double horizon, std::size_t n)
{
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        grid[i] = horizon * static_cast<double>(i) / static_cast<double>(n);
    }
    return grid;
}

std::string to_text(double v)
{
    return csv::format(v);
}

void require_full(const ProblemSpec& spec, const RiccatiSolution& sol, const char* what)
{
    const std::size_t n = sol.n_steps();
    if (n < 2 || sol.alpha1.size() != n + 1 || sol.beta1.size() != n + 1) {
        throw MissingPrerequisite(std::string(what) + ": alpha1/beta1 absent");
    }
    if (!sol.exists_on_full_interval) {
        throw MissingPrerequisite(std::string(what) + ": alpha1/beta1 truncated at eta = " +
                                  to_text(sol.eta));
    }
    if (std::abs(sol.grid.back() - spec.horizon) > 1e-12 * spec.horizon) {
        throw MissingPrerequisite(std::string(what) + ": solution grid does not span the horizon");
    }
}

// d/dt of (alpha1, beta1) at every grid point.
struct GridPair {
    std::vector<double> rate_a, rate_b;
};

GridPair alpha1_beta1_rates(const ProblemSpec& spec, const RiccatiSolution& sol)
{
    GridPair r;
    const std::size_t n = sol.n_steps();
    r.rate_a.resize(n + 1);
    r.rate_b.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const CVector c = assemble_c(spec, sol.grid[i], 0.0, 0.0, 0.0, 0.0);
        const Eigen::Vector2d rate = alpha1_beta1_rate(c, sol.alpha1[i], sol.beta1[i]);
        r.rate_a[i] = rate(0);
        r.rate_b[i] = rate(1);
    }
    return r;
}

} // namespace

Eigen::Vector2d alpha1_beta1_rate(const CVector& c, double a1, double b1)
{
    Eigen::Vector2d r;
    r(0) = -(2.0 * c.c1 * a1 + 2.0 * c.c2 * b1 + 2.0 * c.c3 * a1 * b1 + c.c4 * a1 * a1 +
             c.c5 * b1 * b1 + c.c6);
    r(1) = -(c.c11 * b1 - c.c12 * a1 - c.c13 * a1 * b1 + c.c14 * b1 * b1 + c.c15);
    return r;
}

Eigen::Vector2d alpha2_beta2_rate(const CVector& c, double a2, double b2)
{
    Eigen::Vector2d r;
    r(0) = -(c.c7 * a2 + c.c8 * b2 + c.c9);
    r(1) = -(c.c16 * b2 - c.c17 * a2 + c.c18);
    return r;
}

RiccatiSolution solve_alpha1_beta1(const ProblemSpec& spec, int n_steps, double threshold)
{
    if (n_steps < 2) {
        throw Error("n_steps must be at least 2");
    }
    const auto n = static_cast<std::size_t>(n_steps);
    auto rhs = [&spec](double t, const Eigen::Vector2d& y) -> Eigen::Vector2d {
        const CVector c = assemble_c(spec, t, 0.0, 0.0, 0.0, 0.0);
        return alpha1_beta1_rate(c, y(0), y(1));
    };
    const Eigen::Vector2d terminal(spec.S1, spec.G);
    const auto run = ode::integrate_backward(rhs, terminal, spec.horizon, n, threshold);

    if (run.first_valid == n) {
        throw BlowUpBeforeTerminal("Riccati pair escapes within the first step (eta = " +
                                       to_text(run.eta) + ")",
                                   run.eta);
    }

    RiccatiSolution sol;
    sol.grid = uniform_grid(spec.horizon, n);
    sol.step_h = spec.horizon / static_cast<double>(n);
    sol.alpha1.assign(n + 1, nan);
    sol.beta1.assign(n + 1, nan);
    for (std::size_t i = run.first_valid; i <= n; ++i) {
        sol.alpha1[i] = run.values[i](0);
        sol.beta1[i] = run.values[i](1);
    }
    // terminal conditions are assigned, not integrated
    sol.alpha1[n] = spec.S1;
    sol.beta1[n] = spec.G;
    sol.first_valid = run.first_valid;
    sol.exists_on_full_interval = run.first_valid == 0;
    sol.eta = sol.exists_on_full_interval ? spec.horizon : run.eta;
    sol.diagnostics["integrator"] = "rk4-fixed-step-backward";
    sol.diagnostics["n_steps"] = std::to_string(n);
    sol.diagnostics["blowup_threshold"] = to_text(threshold);
    if (!sol.exists_on_full_interval) {
        sol.diagnostics["escape_refined_step"] = to_text(0.5 * sol.step_h);
        sol.diagnostics["coarse_first_valid_t"] = to_text(sol.grid[run.first_valid]);
    }
    return sol;
}

RiccatiSolution solve_alpha2_beta2(const ProblemSpec& spec, RiccatiSolution sol)
{
    require_full(spec, sol, "solve_alpha2_beta2");
    const std::size_t n = sol.n_steps();
    const double h = sol.grid[1] - sol.grid[0];
    const GridPair rates = alpha1_beta1_rates(spec, sol);

    auto rate_at = [&](double t, double a1, double b1, const Eigen::Vector2d& y) {
        const CVector c = assemble_c(spec, t, a1, 0.0, b1, 0.0);
        return alpha2_beta2_rate(c, y(0), y(1));
    };

    sol.alpha2.assign(n + 1, 0.0);
    sol.beta2.assign(n + 1, 0.0);
    Eigen::Vector2d y(0.0, 0.0);
    for (std::size_t i = n; i > 0; --i) {
        const double t1 = sol.grid[i];
        const double t0 = sol.grid[i - 1];
        const double tm = t1 - 0.5 * h;
        const double a_mid = ode::hermite_midpoint(sol.alpha1[i - 1], sol.alpha1[i],
                                                   rates.rate_a[i - 1], rates.rate_a[i], h);
        const double b_mid = ode::hermite_midpoint(sol.beta1[i - 1], sol.beta1[i],
                                                   rates.rate_b[i - 1], rates.rate_b[i], h);
        const Eigen::Vector2d k1 = rate_at(t1, sol.alpha1[i], sol.beta1[i], y);
        const Eigen::Vector2d k2 = rate_at(tm, a_mid, b_mid, y - 0.5 * h * k1);
        const Eigen::Vector2d k3 = rate_at(tm, a_mid, b_mid, y - 0.5 * h * k2);
        const Eigen::Vector2d k4 = rate_at(t0, sol.alpha1[i - 1], sol.beta1[i - 1], y - h * k3);
        y = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!ode::within(y, std::numeric_limits<double>::max())) {
            throw NonFiniteValue("alpha2/beta2 became non-finite at t = " + to_text(t0));
        }
        sol.alpha2[i - 1] = y(0);
        sol.beta2[i - 1] = y(1);
    }
    sol.has_alpha2_beta2 = true;
    return sol;
}

HalfGridRiccati refine_to_half_grid(const ProblemSpec& spec, const RiccatiSolution& sol)
{
    require_full(spec, sol, "refine_to_half_grid");
    if (!sol.has_alpha2_beta2) {
        throw MissingPrerequisite("refine_to_half_grid: alpha2/beta2 absent");
    }
    const std::size_t n = sol.n_steps();
    const double h = sol.grid[1] - sol.grid[0];
    const GridPair rates1 = alpha1_beta1_rates(spec, sol);
    std::vector<double> rate_a2(n + 1), rate_b2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const CVector c = assemble_c(spec, sol.grid[i], sol.alpha1[i], 0.0, sol.beta1[i], 0.0);
        const Eigen::Vector2d r = alpha2_beta2_rate(c, sol.alpha2[i], sol.beta2[i]);
        rate_a2[i] = r(0);
        rate_b2[i] = r(1);
    }

    HalfGridRiccati half;
    half.grid = uniform_grid(spec.horizon, 2 * n);
    auto fill = [&](std::vector<double>& out, const std::vector<double>& v,
                    const std::vector<double>& dv) {
        out.resize(2 * n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            out[2 * i] = v[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            out[2 * i + 1] = ode::hermite_midpoint(v[i], v[i + 1], dv[i], dv[i + 1], h);
        }
    };
    fill(half.alpha1, sol.alpha1, rates1.rate_a);
    fill(half.beta1, sol.beta1, rates1.rate_b);
    fill(half.alpha2, sol.alpha2, rate_a2);
    fill(half.beta2, sol.beta2, rate_b2);
    return half;
}

RiccatiSolution solve_alpha3(const ProblemSpec& spec, RiccatiSolution sol)
{
    require_full(spec, sol, "solve_alpha3");
    if (!sol.has_alpha2_beta2) {
        throw MissingPrerequisite("solve_alpha3: alpha2/beta2 absent");
    }
    const std::size_t n = sol.n_steps();
    const double h = sol.grid[1] - sol.grid[0];
    const HalfGridRiccati half = refine_to_half_grid(spec, sol);

    std::vector<double> c10(2 * n + 1);
    for (std::size_t j = 0; j <= 2 * n; ++j) {
        c10[j] = assemble_c(spec, half.grid[j], half.alpha1[j], half.alpha2[j], half.beta1[j],
                            half.beta2[j])
                     .c10;
    }

    // the terminal value reads beta1(0), beta2(0), so alpha3 comes last
    const double y0 = sol.beta1[0] * spec.x0 + sol.beta2[0];
    sol.alpha3.assign(n + 1, 0.0);
    sol.alpha3[n] = 0.5 * spec.S2 * y0 * y0;
    for (std::size_t i = n; i > 0; --i) {
        sol.alpha3[i - 1] =
            sol.alpha3[i] + (h / 6.0) * (c10[2 * i] + 4.0 * c10[2 * i - 1] + c10[2 * i - 2]);
    }
    sol.has_alpha3 = true;
    return sol;
}

RiccatiSolution solve_riccati(const ProblemSpec& spec, int n_steps, double threshold)
{
    RiccatiSolution sol = solve_alpha1_beta1(spec, n_steps, threshold);
    if (!sol.exists_on_full_interval) {
        return sol;
    }
    return solve_alpha3(spec, solve_alpha2_beta2(spec, std::move(sol)));
}

RiccatiSolution solve_riccati(const ProblemSpec& spec)
{
    return solve_riccati(spec, spec.grid_n);
}

MatrixKSolution solve_matrix_K(const ProblemSpec& spec, int n_steps, double threshold)
{
    if (n_steps < 2) {
        throw Error("n_steps must be at least 2");
    }
    const auto n = static_cast<std::size_t>(n_steps);
    auto rhs = [&spec](double t, const Eigen::Matrix2d& K) -> Eigen::Matrix2d {
        return -matrix_rhs(assemble_matrix_form(spec, t), K);
    };
    const Eigen::Matrix2d terminal = assemble_matrix_form(spec, spec.horizon).K_T;
    const auto run = ode::integrate_backward(rhs, terminal, spec.horizon, n, threshold);
    if (run.first_valid == n) {
        throw BlowUpBeforeTerminal("matrix Riccati escapes within the first step (eta = " +
                                       to_text(run.eta) + ")",
                                   run.eta);
    }

    MatrixKSolution k;
    k.grid = uniform_grid(spec.horizon, n);
    k.K.assign(n + 1, Eigen::Matrix2d::Constant(nan));
    for (std::size_t i = run.first_valid; i <= n; ++i) {
        k.K[i] = run.values[i];
    }
    k.K[n] = terminal;
    k.first_valid = run.first_valid;
    k.exists_on_full_interval = run.first_valid == 0;
    k.eta = k.exists_on_full_interval ? spec.horizon : run.eta;
    return k;
}

RiccatiSolution from_matrix_solution(const MatrixKSolution& k)
{
    RiccatiSolution sol;
    sol.grid = k.grid;
    const std::size_t n = k.grid.size() - 1;
    sol.step_h = k.grid[1] - k.grid[0];
    sol.alpha1.resize(n + 1);
    sol.beta1.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        sol.alpha1[i] = k.K[i](0, 0);
        sol.beta1[i] = k.K[i](1, 1);
    }
    sol.first_valid = k.first_valid;
    sol.exists_on_full_interval = k.exists_on_full_interval;
    sol.eta = k.eta;
    sol.diagnostics["integrator"] = "rk4-fixed-step-backward (matrix form)";
    return sol;
}

ExistenceInterval existence_interval(const ProblemSpec& spec, int n_steps, double threshold)
{
    try {
        const RiccatiSolution sol = solve_alpha1_beta1(spec, n_steps, threshold);
        return {sol.eta, sol.exists_on_full_interval};
    } catch (const BlowUpBeforeTerminal& e) {
        return {e.eta(), false};
    }
}

void write_riccati_csv(std::ostream& out, const RiccatiSolution& sol)
{
    csv::header(out, {"t", "alpha1", "alpha2", "alpha3", "beta1", "beta2"});
    const std::size_t n = sol.n_steps();
    auto at = [](const std::vector<double>& v, std::size_t i) {
        return i < v.size() ? v[i] : nan;
    };
    for (std::size_t i = 0; i <= n; ++i) {
        csv::Row(out) << sol.grid[i] << at(sol.alpha1, i) << at(sol.alpha2, i)
                      << at(sol.alpha3, i) << at(sol.beta1, i) << at(sol.beta2, i);
    }
}

} // namespace leq
