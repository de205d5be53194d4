#include <doctest.h>

#include <cmath>
#include <sstream>

#include "leqlab/errors.hpp"
#include "leqlab/verify.hpp"

using namespace leq;

namespace {

ProblemSpec small_mc(ProblemSpec spec, std::int64_t n_paths = 4000)
{
    spec.mc.n_paths = n_paths;
    spec.mc.dt = 1.0 / 256.0;
    return spec;
}

AcceptanceConfig selection(std::vector<std::string> checks)
{
    AcceptanceConfig cfg;
    cfg.checks = std::move(checks);
    cfg.n_paths = 4000;
    cfg.dt = 1.0 / 256.0;
    cfg.workers = 1;
    return cfg;
}

} // namespace

TEST_CASE("status names")
{
    CHECK(to_string(CheckStatus::pass) == "pass");
    CHECK(to_string(CheckStatus::fail) == "fail");
    CHECK(to_string(CheckStatus::skip) == "skip");
}

TEST_CASE("report conjunction")
{
    VerificationReport r;
    CHECK(r.overall());
    r.add({"a", CheckStatus::pass, 0.0, 1.0, ""});
    r.add({"b", CheckStatus::skip, 0.0, 1.0, ""});
    CHECK(r.overall());
    r.add({"c", CheckStatus::fail, INFINITY, 1.0, ""});
    CHECK_FALSE(r.overall());
    REQUIRE(r.find("c") != nullptr);
    CHECK(std::isfinite(r.find("c")->measured));
    CHECK(r.find("missing") == nullptr);
}

TEST_CASE("report formats")
{
    VerificationReport r;
    r.add({"alpha", CheckStatus::pass, 0.5, 1.0, "fine"});
    r.note = "a note";
    std::ostringstream csv;
    write_report_csv(csv, r);
    CHECK(csv.str().rfind("name,status,measured,tolerance,detail\nalpha,pass,", 0) == 0);
    std::ostringstream text;
    write_report_text(text, r);
    const std::string s = text.str();
    CHECK(s.find("alpha pass") != std::string::npos);
    CHECK(s.find("a note") != std::string::npos);
    CHECK(s.find("overall pass") != std::string::npos);
}

TEST_CASE("random instances are reproducible and valid")
{
    const ProblemSpec a = random_instance(3, 4);
    const ProblemSpec b = random_instance(3, 4);
    const ProblemSpec c = random_instance(3, 5);
    CHECK(a.theta == b.theta);
    CHECK(a.A1(0.3) == b.A1(0.3));
    CHECK(a.theta != c.theta);
    CHECK(std::abs(a.theta) >= 0.1);
    CHECK(std::abs(a.theta) <= 1.0);
    CHECK(a.R.entry(4, 4).min_value() >= 0.5);
    const ProblemSpec f = random_instance(3, 4, true);
    CHECK(f.G == 0.0);
    CHECK(f.A2.identically_zero());
    CHECK(f.D2.identically_zero());
}

TEST_CASE("backward-trivial classification")
{
    CHECK(backward_trivial(benchmark_problem()));
    ProblemSpec spec = benchmark_problem();
    spec.g = CoefficientFunction::constant(0.1);
    CHECK_FALSE(backward_trivial(spec));
    CHECK_THROWS_AS(risk_neutral_lq_value(spec, 64), ValidationError);
}

TEST_CASE("risk-neutral LQ value of the scalar benchmark")
{
    ProblemSpec spec = benchmark_problem();
    // P' - P^2 + 1 = 0, P(1) = 1 is solved by P = 1; sigma adds 1/2 s^2 P per unit time.
    CHECK(risk_neutral_lq_value(spec, 512) == doctest::Approx(0.5 + 0.5 * 0.04).epsilon(1e-12));
}

TEST_CASE("optimality without perturbations")
{
    const VerificationReport r = verify_optimality(small_mc(benchmark_problem()), 0, 42, 1);
    REQUIRE(r.checks.size() == 1);
    CHECK(r.checks[0].status == CheckStatus::pass);
}

TEST_CASE("optimality over random perturbations")
{
    const VerificationReport r = verify_optimality(small_mc(benchmark_problem()), 10, 42, 1);
    CHECK(r.overall());
    const CheckRecord* identity = r.find("perturbation[0]");
    REQUIRE(identity != nullptr);
    CHECK(std::abs(identity->measured) <= 1e-12);
    int gaps = 0;
    for (const CheckRecord& c : r.checks) {
        if (c.name.rfind("perturbation[", 0) == 0 && c.status == CheckStatus::pass) {
            CHECK(c.measured >= -1e-9);
            ++gaps;
        }
    }
    CHECK(gaps >= 5);
    REQUIRE(r.find("min-gap-at-identity") != nullptr);
    CHECK(r.find("min-gap-at-identity")->status == CheckStatus::pass);
    CHECK(r.find("mc-optimal") != nullptr);
}

TEST_CASE("perturbations never beat the optimum when the state ignores the control")
{
    ProblemSpec spec = random_instance(9, 2, true);
    spec.D1 = CoefficientFunction::constant(0.0);
    spec.D2 = CoefficientFunction::constant(0.0);
    spec.theta = std::abs(spec.theta);
    const VerificationReport r = verify_optimality(small_mc(spec, 2000), 6, 11, 1);
    for (const CheckRecord& c : r.checks) {
        if (c.name.rfind("perturbation[", 0) == 0 && c.status != CheckStatus::skip) {
            CHECK(c.measured >= -1e-9);
        }
    }
}

TEST_CASE("risk-neutral limit")
{
    SUBCASE("benchmark")
    {
        const VerificationReport r = risk_neutral_limit(benchmark_problem(), {1e-2, 1e-3, 1e-4});
        CHECK(r.overall());
        REQUIRE(r.find("ce-cauchy") != nullptr);
        REQUIRE(r.find("lq-limit") != nullptr);
        CHECK(r.find("lq-limit")->measured <= 1e-3);
    }
    SUBCASE("zero volatility removes the theta dependence")
    {
        ProblemSpec spec = benchmark_problem();
        spec.sigma = CoefficientFunction::constant(0.0);
        const VerificationReport r = risk_neutral_limit(spec, {1e-2, 1e-3, 1e-4});
        REQUIRE(r.find("ce-cauchy") != nullptr);
        CHECK(r.find("lq-limit")->measured <= 1e-12);
    }
    SUBCASE("a single theta gives only the LQ comparison")
    {
        const VerificationReport r = risk_neutral_limit(benchmark_problem(), {1e-3});
        REQUIRE(r.checks.size() == 1);
        CHECK(r.checks[0].name == "lq-limit");
    }
    SUBCASE("non-decreasing thetas are rejected")
    {
        const VerificationReport r = risk_neutral_limit(benchmark_problem(), {1e-3, 1e-2});
        CHECK_FALSE(r.overall());
    }
    SUBCASE("non-trivial backward equation skips the LQ reference")
    {
        ProblemSpec spec = benchmark_problem();
        spec.g = CoefficientFunction::constant(0.1);
        const VerificationReport r = risk_neutral_limit(spec, {1e-2, 1e-3, 1e-4});
        REQUIRE(r.find("lq-limit") != nullptr);
        CHECK(r.find("lq-limit")->status == CheckStatus::skip);
    }
}

TEST_CASE("acceptance suite selection")
{
    SUBCASE("empty selection is vacuous")
    {
        const VerificationReport r = run_acceptance_suite(selection({}));
        CHECK(r.checks.empty());
        CHECK(r.overall());
        CHECK(r.note.find("vacuous") != std::string::npos);
    }
    SUBCASE("unknown names fail")
    {
        const VerificationReport r = run_acceptance_suite(selection({"no-such-check"}));
        REQUIRE(r.checks.size() == 1);
        CHECK(r.checks[0].status == CheckStatus::fail);
    }
    SUBCASE("records follow canonical order")
    {
        const VerificationReport r = run_acceptance_suite(selection({"blowup-time", "riccati-equivalence"}));
        REQUIRE(r.checks.size() == 2);
        CHECK(r.checks[0].name == "riccati-equivalence");
        CHECK(r.checks[1].name == "blowup-time");
        CHECK(r.overall());
    }
    SUBCASE("a coarse Euler step is detected")
    {
        AcceptanceConfig cfg = selection({"cost-identity-mc"});
        cfg.n_paths = 200000;
        cfg.dt = 0.25;
        const VerificationReport r = run_acceptance_suite(cfg);
        REQUIRE(r.checks.size() == 1);
        CHECK(r.checks[0].status == CheckStatus::fail);
    }
    SUBCASE("determinism with a small ensemble")
    {
        const VerificationReport r = run_acceptance_suite(selection({"determinism"}));
        REQUIRE(r.checks.size() == 1);
        CHECK(r.checks[0].status == CheckStatus::pass);
    }
}
