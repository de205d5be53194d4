#include <doctest.h>

#include <cmath>
#include <sstream>

#include "leqlab/errors.hpp"
#include "leqlab/policy.hpp"
#include "leqlab/riccati.hpp"
#include "leqlab/verify.hpp"
#include "oracles.hpp"

using namespace leq;

namespace {

ProblemSpec zero_instance()
{
    ProblemSpec spec;
    spec.horizon = 1.0;
    spec.theta = 1.0;
    spec.R.entry(4, 4) = CoefficientFunction::constant(1.0);
    return spec;
}

RiccatiSolution full_solution(const ProblemSpec& spec, int n = 2048)
{
    RiccatiSolution sol = solve_riccati(spec, n);
    REQUIRE(sol.exists_on_full_interval);
    return sol;
}

} // namespace

TEST_CASE("optimal gains vanish when the control does not enter the cost gradient")
{
    ProblemSpec spec = random_instance(21, 0, true);
    spec.D1 = CoefficientFunction::constant(0.0);
    spec.R.entry(1, 4) = CoefficientFunction::constant(0.0);
    spec.R.entry(2, 4) = CoefficientFunction::constant(0.0);
    spec.R.entry(3, 4) = CoefficientFunction::constant(0.0);
    const RiccatiSolution sol = solve_riccati(spec, 256);
    REQUIRE(sol.exists_on_full_interval);
    const LinearPolicy pol = optimal_feedback(spec, sol);
    for (double t : {0.0, 0.25, 0.6, 1.0}) {
        CHECK(pol.gain(t) == 0.0);
        CHECK(pol.offset(t) == 0.0);
    }
}

TEST_CASE("scalar reduction gain is -(d / r) alpha1")
{
    const double d = 1.3, r = 0.7;
    const ProblemSpec spec = scalar_reduction(0.2, d, r, 1.0, 0.3, 0.5, 1.0, 1.0, 0.4);
    const RiccatiSolution sol = full_solution(spec, 512);
    const LinearPolicy pol = optimal_feedback(spec, sol);
    for (std::size_t i = 0; i < sol.grid.size(); i += 37) {
        CHECK(pol.gain(sol.grid[i]) == doctest::Approx(-d / r * sol.alpha1[i]).epsilon(1e-14));
        CHECK(pol.offset(sol.grid[i]) == 0.0);
    }
}

TEST_CASE("terminal gain for S1 = 1, d = 1, r = 2")
{
    const ProblemSpec spec = scalar_reduction(0.0, 1.0, 2.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0);
    const LinearPolicy pol = optimal_feedback(spec, full_solution(spec, 64));
    CHECK(pol.gain(1.0) == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("policy synthesis requires a full solution")
{
    const ProblemSpec spec = scalar_reduction(0.0, 0.0, 1.0, 1.0, 1.0, 16.0, 1.0, 1.0, 0.0);
    const RiccatiSolution truncated = solve_riccati(spec, 256);
    REQUIRE_FALSE(truncated.exists_on_full_interval);
    CHECK_THROWS_AS(optimal_feedback(spec, truncated), MissingPrerequisite);
    CHECK_THROWS_AS(decoupling_fields(truncated, spec), MissingPrerequisite);
    CHECK_THROWS_AS(gamma_kappa(truncated, spec), MissingPrerequisite);
}

TEST_CASE("decoupling fields")
{
    SUBCASE("G = 0 with zero backward data")
    {
        const ProblemSpec spec = benchmark_problem();
        const DecouplingFields f = decoupling_fields(full_solution(spec, 128), spec);
        for (double t : {0.0, 0.5, 1.0}) {
            CHECK(f.y(t, 1.7) == 0.0);
            CHECK(f.z(t) == 0.0);
        }
    }
    SUBCASE("terminal value G x")
    {
        const ProblemSpec spec = random_instance(21, 2, true);
        ProblemSpec coupled = spec;
        coupled.G = 0.6;
        const RiccatiSolution sol = solve_riccati(coupled, 256);
        REQUIRE(sol.exists_on_full_interval);
        CHECK(decoupling_fields(sol, coupled).y(1.0, 2.0) == doctest::Approx(1.2).epsilon(1e-15));
    }
    SUBCASE("sigma = 0 gives Z = 0")
    {
        ProblemSpec spec = zero_instance();
        spec.G = 1.0;
        spec.A2 = CoefficientFunction::constant(0.5);
        const RiccatiSolution sol = full_solution(spec, 128);
        const DecouplingFields f = decoupling_fields(sol, spec);
        CHECK(sol.beta1[0] != 0.0);
        CHECK(f.z(0.0) == 0.0);
        CHECK(f.z(0.5) == 0.0);
    }
}

TEST_CASE("gamma and kappa")
{
    SUBCASE("zero solution")
    {
        const ProblemSpec spec = zero_instance();
        const GammaKappaAnsatz gk = gamma_kappa(full_solution(spec, 64), spec);
        CHECK(gk.gamma(0.3, 2.0) == 0.0);
        CHECK(gk.kappa(0.3, 2.0) == 0.0);
    }
    SUBCASE("terminal value")
    {
        ProblemSpec spec = random_instance(21, 5, true);
        spec.G = 0.3;
        const RiccatiSolution sol = solve_riccati(spec, 512);
        REQUIRE(sol.exists_on_full_interval);
        const GammaKappaAnsatz gk = gamma_kappa(sol, spec);
        const double x = 0.9;
        const double y0 = sol.beta1[0] * spec.x0 + sol.beta2[0];
        CHECK(gk.gamma(1.0, x) ==
              doctest::Approx(0.5 * spec.S1 * x * x + 0.5 * spec.S2 * y0 * y0).epsilon(1e-14));
    }
    SUBCASE("sigma = 0")
    {
        ProblemSpec spec = scalar_reduction(0.1, 1.0, 1.0, 1.0, 0.0, 0.5, 1.0, 1.0, 1.0);
        const GammaKappaAnsatz gk = gamma_kappa(full_solution(spec, 64), spec);
        CHECK(gk.kappa(0.2, 3.0) == 0.0);
    }
}

TEST_CASE("policy decoupling fields")
{
    SUBCASE("optimal policy reproduces beta1, beta2")
    {
        for (std::uint32_t i = 0; i < 6; ++i) {
            const ProblemSpec spec = random_instance(23, i);
            const RiccatiSolution sol = solve_riccati(spec, 1024);
            if (!sol.exists_on_full_interval) {
                continue;
            }
            const PolicyFields f = policy_fbsde_fields(spec, optimal_feedback(spec, sol), 1024);
            CHECK(f.eta1.back() == spec.G);
            CHECK(f.eta0.back() == 0.0);
            for (std::size_t j = 0; j < f.grid.size(); ++j) {
                CHECK(std::abs(f.eta1[j] - sol.beta1[j]) <= 1e-9);
                CHECK(std::abs(f.eta0[j] - sol.beta2[j]) <= 1e-9);
            }
            CHECK_FALSE(f.has_exponent());
        }
    }
    SUBCASE("zero dynamics with G = 1")
    {
        ProblemSpec spec = zero_instance();
        spec.G = 1.0;
        const LinearPolicy none{CoefficientFunction::constant(0.0), CoefficientFunction::constant(0.0)};
        const PolicyFields f = policy_fbsde_fields(spec, none, 64);
        for (std::size_t j = 0; j < f.grid.size(); ++j) {
            CHECK(f.eta1[j] == 1.0);
            CHECK(f.eta0[j] == 0.0);
        }
    }
    SUBCASE("fields do not see the policy when the control enters no equation")
    {
        ProblemSpec spec = random_instance(23, 7);
        spec.D1 = CoefficientFunction::constant(0.0);
        spec.D2 = CoefficientFunction::constant(0.0);
        const LinearPolicy p1{CoefficientFunction::constant(0.0), CoefficientFunction::constant(0.0)};
        const LinearPolicy p2{CoefficientFunction::constant(3.0), CoefficientFunction::constant(-1.0)};
        const PolicyFields a = policy_fbsde_fields(spec, p1, 256);
        const PolicyFields b = policy_fbsde_fields(spec, p2, 256);
        CHECK(a.eta1 == b.eta1);
        CHECK(a.eta0 == b.eta0);
    }
}

TEST_CASE("oracle reproduces the optimal cost")
{
    SUBCASE("benchmark")
    {
        const ProblemSpec spec = benchmark_problem();
        const RiccatiSolution sol = full_solution(spec);
        const PolicyEvaluation ev = evaluate_linear_policy(spec, optimal_feedback(spec, sol), 2048);
        const CostValue closed = closed_form_optimal_cost(sol, spec.x0, spec.theta);
        CHECK(std::abs(ev.cost.J - closed.J) / closed.J <= 1e-8);
        CHECK(ev.fields.p.back() == spec.S1);
        CHECK(ev.fields.q.back() == 0.0);
        CHECK(ev.fields.r.back() == 0.0);
    }
    SUBCASE("random instances, term by term")
    {
        int checked = 0;
        for (std::uint32_t i = 0; i < 12; ++i) {
            const ProblemSpec spec = random_instance(29, i);
            const RiccatiSolution sol = solve_riccati(spec, 2048);
            if (!sol.exists_on_full_interval) {
                continue;
            }
            PolicyEvaluation ev;
            try {
                ev = evaluate_linear_policy(spec, optimal_feedback(spec, sol), 2048);
            } catch (const BlowUpBeforeTerminal&) {
                continue;
            }
            const PolicyFields& f = ev.fields;
            CHECK(std::abs(f.p[0] - sol.alpha1[0]) <= 1e-8);
            CHECK(std::abs(f.q[0] - sol.alpha2[0]) <= 1e-8);
            CHECK(std::abs(f.r[0] + 0.5 * spec.S2 * f.y0 * f.y0 - sol.alpha3[0]) <= 1e-8);
            const CostValue closed = closed_form_optimal_cost(sol, spec.x0, spec.theta);
            CHECK(std::abs(std::expm1(spec.theta * (ev.cost.CE - closed.CE))) <= 1e-8);
            ++checked;
        }
        CHECK(checked >= 8);
    }
}

TEST_CASE("zero exponent gives J = 1")
{
    ProblemSpec spec = random_instance(31, 0);
    for (std::size_t k = 0; k < WeightMatrix::names.size(); ++k) {
        spec.R.stored(k) = CoefficientFunction::constant(0.0);
    }
    spec.R.entry(4, 4) = CoefficientFunction::constant(1.0);
    spec.S1 = 0.0;
    spec.S2 = 0.0;
    const LinearPolicy none{CoefficientFunction::constant(0.0), CoefficientFunction::constant(0.0)};
    const PolicyEvaluation ev = evaluate_linear_policy(spec, none, 256);
    CHECK(ev.cost.J == 1.0);
    CHECK(ev.cost.CE == 0.0);
}

TEST_CASE("suboptimal gain costs strictly more")
{
    const ProblemSpec spec = benchmark_problem();
    const RiccatiSolution sol = full_solution(spec);
    const LinearPolicy opt = optimal_feedback(spec, sol);
    const CostValue closed = closed_form_optimal_cost(sol, spec.x0, spec.theta);
    const PolicyEvaluation ev = evaluate_linear_policy(spec, perturb(opt, 1.1, 0.0), 2048);
    CHECK(ev.cost.J > closed.J);
}

TEST_CASE("argmin over a 5 x 5 perturbation grid is the optimal policy")
{
    const ProblemSpec spec = benchmark_problem();
    const RiccatiSolution sol = full_solution(spec, 512);
    const LinearPolicy opt = optimal_feedback(spec, sol);
    double best = INFINITY;
    double best_scale = 0.0, best_shift = 0.0;
    for (double scale : {0.8, 0.9, 1.0, 1.1, 1.2}) {
        for (double shift : {-0.2, -0.1, 0.0, 0.1, 0.2}) {
            const double ce = evaluate_linear_policy(spec, perturb(opt, scale, shift), 512).cost.CE;
            if (ce < best) {
                best = ce;
                best_scale = scale;
                best_shift = shift;
            }
        }
    }
    CHECK(best_scale == 1.0);
    CHECK(best_shift == 0.0);
}

TEST_CASE("closed-form cost")
{
    RiccatiSolution sol;
    sol.alpha1 = {0.0};
    sol.alpha2 = {0.0};
    sol.alpha3 = {0.0};
    CHECK(closed_form_optimal_cost(sol, 2.0, 0.5).J == 1.0);
    sol.alpha1 = {3.0};
    sol.alpha2 = {-1.0};
    sol.alpha3 = {0.4};
    CHECK(closed_form_optimal_cost(sol, 0.0, 0.5).J == doctest::Approx(std::exp(0.5 * 0.4)));
}

TEST_CASE("benchmark optimal cost against the scalar closed form")
{
    const ProblemSpec spec = benchmark_problem();
    const RiccatiSolution sol = full_solution(spec);
    const CostValue v = closed_form_optimal_cost(sol, spec.x0, spec.theta);
    const double a = 0.0, c = 0.5 * 0.2 * 0.2 - 1.0, q = 1.0, S1 = 1.0, s = 0.2;
    auto alpha1 = [&](double t) { return oracle::scalar_riccati(a, c, q, S1, 1.0 - t); };
    const double alpha3 = oracle::simpson([&](double t) { return 0.5 * s * s * alpha1(t); }, 0.0, 1.0, 2000);
    const double ce = 0.5 * alpha1(0.0) + alpha3;
    CHECK(v.CE == doctest::Approx(ce).epsilon(1e-11));
    CHECK(v.J == doctest::Approx(std::exp(0.5 * ce)).epsilon(1e-11));
}

TEST_CASE("missing exponential moment is an error")
{
    ProblemSpec spec = benchmark_problem();
    spec.theta = 20.0;
    const RiccatiSolution sol = full_solution(spec);
    const LinearPolicy lazy = perturb(optimal_feedback(spec, sol), 0.0, 0.0);
    CHECK_THROWS_AS(evaluate_linear_policy(spec, lazy, 2048), BlowUpBeforeTerminal);
    CHECK_NOTHROW(evaluate_linear_policy(spec, optimal_feedback(spec, sol), 2048));
}

TEST_CASE("gain and field CSV layouts")
{
    const ProblemSpec spec = benchmark_problem();
    const RiccatiSolution sol = full_solution(spec, 64);
    const LinearPolicy pol = optimal_feedback(spec, sol);
    std::ostringstream g;
    write_gains_csv(g, pol, sol.grid);
    CHECK(g.str().rfind("t,Kx,k0\n", 0) == 0);
    std::ostringstream f;
    write_policy_fields_csv(f, evaluate_linear_policy(spec, pol, 64).fields);
    CHECK(f.str().rfind("t,eta1,eta0,p,q,r\n", 0) == 0);
}
