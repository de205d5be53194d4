#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "leqlab/model.hpp"

namespace leq {

enum class CheckStatus { pass, fail, skip };

std::string_view to_string(CheckStatus s);

struct CheckRecord {
    std::string name;
    CheckStatus status = CheckStatus::skip;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct ReportEnvironment {
    int grid_n = 0;
    std::int64_t n_paths = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
};

struct VerificationReport {
    std::vector<CheckRecord> checks;
    ReportEnvironment environment;
    std::string note;

    /// Conjunction of all non-skip statuses; true for an empty report.
    bool overall() const;
    const CheckRecord* find(std::string_view name) const;
    void add(CheckRecord r);
};

/// One record per line: name, status, measured, tolerance, detail.
void write_report_text(std::ostream& out, const VerificationReport& report);

/// Columns name, status, measured, tolerance, detail.
void write_report_csv(std::ostream& out, const VerificationReport& report);

/// Exact solution of a' + 2 a a + c a^2 + q = 0, a(T) = S1 at backward time
/// tau = T - t, for constant coefficients. Infinite past the escape time.
double scalar_riccati_exact(double a, double c, double q, double S1, double tau);

/// Seeded random instance on [0, 1]: coefficients in [-1, 1], sigma, A1
/// piecewise linear on four intervals, R44 in [0.5, 2], |theta| in [0.1, 1].
/// With `control_free_backward`, the backward driver and G ignore X and u
/// (A2 = D2 = G = 0).
ProblemSpec random_instance(std::uint64_t seed, std::uint32_t index,
                            bool control_free_backward = false);

/// True when Y carries no information: G = 0 and the backward equation is
/// identically zero.
bool backward_trivial(const ProblemSpec& spec);

/// Risk-neutral LQ value 1/2 P x0^2 + Q x0 + W of a problem whose backward
/// equation is trivial, by a separate RK4 solve of the classical Riccati
/// system with cross weight R14. Throws ValidationError otherwise.
double risk_neutral_lq_value(const ProblemSpec& spec, int n_steps);

/// Affine perturbations of the optimal feedback: index 0 is the identity,
/// index 1 scales the gain by 1.2, further ones draw a gain scale in
/// [0.5, 1.5] and an offset shift in [-1, 1]. Each is evaluated with the
/// deterministic oracle; the optimal policy and the first two non-identity
/// perturbations are confirmed by Monte Carlo with spec.mc.
VerificationReport verify_optimality(const ProblemSpec& spec, int n_perturbations,
                                     std::uint64_t seed, int workers = 0);

/// Certainty equivalent for each theta, a Cauchy check on successive gaps,
/// and a comparison of the smallest theta with the risk-neutral LQ value.
VerificationReport risk_neutral_limit(const ProblemSpec& spec, const std::vector<double>& thetas);

/// Canonical check names in execution order.
const std::vector<std::string>& acceptance_check_names();

struct AcceptanceConfig {
    ProblemSpec spec = benchmark_problem();
    std::vector<std::string> checks = acceptance_check_names();
    std::uint64_t seed = 42;
    std::int64_t n_paths = 100000;
    double dt = 1.0 / 1024.0;
    int workers = 0;
    int n_equivalence_instances = 20;
    int n_identity_instances = 10;
    int n_perturbations = 10;
    std::int64_t residual_paths = 2000;
    std::vector<double> thetas = {1e-2, 1e-3, 1e-4};
};

/// Runs the selected checks, one record each, in canonical order. The
/// MC-free checks riccati-equivalence and rk4-order gate every Monte Carlo
/// check when they are selected.
VerificationReport run_acceptance_suite(const AcceptanceConfig& config);

} // namespace leq
