#include "leqlab/policy.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "leqlab/csv.hpp"
#include "leqlab/errors.hpp"
#include "leqlab/ode.hpp"

namespace leq {

namespace {

using Vector5d = Eigen::Matrix<double, 5, 1>;

void require_full(const RiccatiSolution& sol, const char* what, bool need_alpha3)
{
    const std::size_t n = sol.n_steps();
    if (n < 2 || sol.alpha1.size() != n + 1 || !sol.exists_on_full_interval) {
        throw MissingPrerequisite(std::string(what) + ": Riccati solution absent or truncated");
    }
    if (!sol.has_alpha2_beta2 || (need_alpha3 && !sol.has_alpha3)) {
        throw MissingPrerequisite(std::string(what) + ": Riccati solution incomplete");
    }
}

CoefficientFunction on_grid(const std::vector<double>& v, double horizon)
{
    return CoefficientFunction::piecewise(v, horizon);
}

std::vector<double> uniform_grid(double horizon, std::size_t n)
{
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        grid[i] = horizon * static_cast<double>(i) / static_cast<double>(n);
    }
    return grid;
}

Eigen::Vector2d eta_rate(const PointCoefficients& k, double gain, double offset, double eta1,
                         double eta0)
{
    Eigen::Vector2d r;
    r(0) = -(eta1 * (k.A1 + k.B1 * eta1 + k.D1 * gain) + k.A2 + k.B2 * eta1 + k.D2 * gain);
    r(1) = -(eta1 * (k.B1 * eta0 + k.C1 * eta1 * k.sigma + k.D1 * offset + k.b) + k.B2 * eta0 +
             k.C2 * eta1 * k.sigma + k.D2 * offset + k.g);
    return r;
}

} // namespace

LinearPolicy perturb(const LinearPolicy& base, double gain_scale, double offset_shift)
{
    return LinearPolicy{base.gain.affine(gain_scale, 0.0), base.offset.affine(1.0, offset_shift)};
}

LinearPolicy optimal_feedback(const ProblemSpec& spec, const RiccatiSolution& sol)
{
    require_full(sol, "optimal_feedback", false);
    const HalfGridRiccati half = refine_to_half_grid(spec, sol);
    const std::size_t m = half.grid.size();
    std::vector<double> gain(m), offset(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double t = half.grid[j];
        const PointCoefficients k = coefficients_at(spec, t);
        const double inv = 1.0 / k.R(3, 3);
        gain[j] = -inv * (half.alpha1[j] * k.D1 + k.R(0, 3) + k.R(1, 3) * half.beta1[j]);
        offset[j] = -inv * (half.alpha2[j] * k.D1 + k.R(1, 3) * half.beta2[j] +
                            k.R(2, 3) * half.beta1[j] * k.sigma);
    }
    return LinearPolicy{on_grid(gain, spec.horizon), on_grid(offset, spec.horizon)};
}

DecouplingFields decoupling_fields(const RiccatiSolution& sol, const ProblemSpec& spec)
{
    require_full(sol, "decoupling_fields", false);
    return DecouplingFields(on_grid(sol.beta1, spec.horizon), on_grid(sol.beta2, spec.horizon),
                            spec.sigma);
}

GammaKappaAnsatz gamma_kappa(const RiccatiSolution& sol, const ProblemSpec& spec)
{
    require_full(sol, "gamma_kappa", true);
    return GammaKappaAnsatz(on_grid(sol.alpha1, spec.horizon), on_grid(sol.alpha2, spec.horizon),
                            on_grid(sol.alpha3, spec.horizon), spec.sigma);
}

ClosedLoopTerms closed_loop_terms(const PointCoefficients& k, double gain, double offset,
                                  double eta1, double eta0)
{
    // (X, Y, Z, u) = v_x x + v_c
    const Eigen::Vector4d v_x(1.0, eta1, 0.0, gain);
    const Eigen::Vector4d v_c(0.0, eta0, eta1 * k.sigma, offset);
    const Eigen::Vector4d Rv_x = k.R * v_x;
    ClosedLoopTerms c;
    c.drift_slope = k.A1 + k.B1 * eta1 + k.D1 * gain;
    c.drift_shift = k.B1 * eta0 + k.C1 * eta1 * k.sigma + k.D1 * offset + k.b;
    c.quad = v_x.dot(Rv_x);
    c.lin = v_c.dot(Rv_x);
    c.cst = 0.5 * v_c.dot(k.R * v_c);
    return c;
}

PolicyFields policy_fbsde_fields(const ProblemSpec& spec, const LinearPolicy& pol, int n_steps)
{
    if (n_steps < 2) {
        throw Error("n_steps must be at least 2");
    }
    const auto n = static_cast<std::size_t>(n_steps);
    auto rhs = [&](double t, const Eigen::Vector2d& y) -> Eigen::Vector2d {
        return eta_rate(coefficients_at(spec, t), pol.gain(t), pol.offset(t), y(0), y(1));
    };
    const auto run = ode::integrate_backward(rhs, Eigen::Vector2d(spec.G, 0.0), spec.horizon, n,
                                             default_blowup_threshold);
    if (run.first_valid != 0) {
        throw BlowUpBeforeTerminal("policy decoupling field escapes (eta = " +
                                       csv::format(run.eta) + ")",
                                   run.eta);
    }
    PolicyFields f;
    f.grid = uniform_grid(spec.horizon, n);
    f.eta1.resize(n + 1);
    f.eta0.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        f.eta1[i] = run.values[i](0);
        f.eta0[i] = run.values[i](1);
    }
    f.eta1[n] = spec.G;
    f.eta0[n] = 0.0;
    f.y0 = f.eta1[0] * spec.x0 + f.eta0[0];
    return f;
}

PolicyEvaluation evaluate_linear_policy(const ProblemSpec& spec, const LinearPolicy& pol,
                                        int n_steps)
{
    if (n_steps < 2) {
        throw Error("n_steps must be at least 2");
    }
    const auto n = static_cast<std::size_t>(n_steps);
    const double theta = spec.theta;

    // state (eta1, eta0, p, q, r)
    auto rhs = [&](double t, const Vector5d& y) -> Vector5d {
        const PointCoefficients k = coefficients_at(spec, t);
        const double gain = pol.gain(t);
        const double offset = pol.offset(t);
        const Eigen::Vector2d eta = eta_rate(k, gain, offset, y(0), y(1));
        const ClosedLoopTerms c = closed_loop_terms(k, gain, offset, y(0), y(1));
        const double s2 = k.sigma * k.sigma;
        const double p = y(2), q = y(3);
        Vector5d r;
        r(0) = eta(0);
        r(1) = eta(1);
        r(2) = -(2.0 * c.drift_slope * p + theta * s2 * p * p + c.quad);
        r(3) = -(c.drift_slope * q + p * c.drift_shift + theta * s2 * p * q + c.lin);
        r(4) = -(q * c.drift_shift + 0.5 * s2 * p + 0.5 * theta * s2 * q * q + c.cst);
        return r;
    };
    Vector5d terminal;
    terminal << spec.G, 0.0, spec.S1, 0.0, 0.0;
    const auto run =
        ode::integrate_backward(rhs, terminal, spec.horizon, n, default_blowup_threshold);
    if (run.first_valid != 0) {
        throw BlowUpBeforeTerminal("exponential moment of the policy cost does not exist on "
                                   "[0, T] (escape at eta = " +
                                       csv::format(run.eta) + ")",
                                   run.eta);
    }

    PolicyEvaluation out;
    PolicyFields& f = out.fields;
    f.grid = uniform_grid(spec.horizon, n);
    for (auto* v : {&f.eta1, &f.eta0, &f.p, &f.q, &f.r}) {
        v->resize(n + 1);
    }
    for (std::size_t i = 0; i <= n; ++i) {
        f.eta1[i] = run.values[i](0);
        f.eta0[i] = run.values[i](1);
        f.p[i] = run.values[i](2);
        f.q[i] = run.values[i](3);
        f.r[i] = run.values[i](4);
    }
    f.y0 = f.eta1[0] * spec.x0 + f.eta0[0];

    const double x0 = spec.x0;
    const double exponent =
        0.5 * f.p[0] * x0 * x0 + f.q[0] * x0 + f.r[0] + 0.5 * spec.S2 * f.y0 * f.y0;
    out.cost = CostValue{std::exp(theta * exponent), exponent};
    return out;
}

CostValue closed_form_optimal_cost(const RiccatiSolution& sol, double x0, double theta)
{
    const double value = 0.5 * sol.alpha1.at(0) * x0 * x0 + sol.alpha2.at(0) * x0 + sol.alpha3.at(0);
    return CostValue{std::exp(theta * value), value};
}

void write_gains_csv(std::ostream& out, const LinearPolicy& pol, const std::vector<double>& grid)
{
    csv::header(out, {"t", "Kx", "k0"});
    for (double t : grid) {
        csv::Row(out) << t << pol.gain(t) << pol.offset(t);
    }
}

void write_policy_fields_csv(std::ostream& out, const PolicyFields& f)
{
    csv::header(out, {"t", "eta1", "eta0", "p", "q", "r"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < f.grid.size(); ++i) {
        csv::Row(out) << f.grid[i] << f.eta1[i] << f.eta0[i] << (f.has_exponent() ? f.p[i] : nan)
                      << (f.has_exponent() ? f.q[i] : nan) << (f.has_exponent() ? f.r[i] : nan);
    }
}

} // namespace leq
