#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "leqlab/model.hpp"
#include "leqlab/policy.hpp"
#include "leqlab/riccati.hpp"

namespace leq {

/// Worker count from LEQLAB_WORKERS, else the available parallelism.
int default_workers();

struct SimulationOptions {
    std::int64_t n_paths = 100000;
    double dt = 1.0 / 1024.0;
    std::uint64_t seed = 42;
    int workers = 0;         ///< 0 selects default_workers()
    bool keep_paths = false; ///< retain full state trajectories
};

/// Euler-Maruyama paths of the closed-loop forward SDE with per-path
/// exponent accumulators. Path i, step n always uses the normal deviate
/// keyed by (seed, i, n).
struct PathEnsemble {
    std::int64_t n_paths = 0;
    double dt = 0.0;
    std::size_t n_steps = 0;
    std::uint64_t seed = 0;
    double theta = 0.0;

    std::vector<double> log_cost;     ///< theta * (running + terminal + S2 Y^u(0)^2 / 2)
    std::vector<double> log_girsanov; ///< log dP^u/dP, when a reference was given
    std::vector<double> x_terminal;
    std::vector<std::uint8_t> overflow;
    std::vector<double> paths; ///< n_paths x (n_steps + 1), row-major, when kept

    bool has_girsanov = false;

    double x(std::int64_t path, std::size_t step) const
    {
        return paths[static_cast<std::size_t>(path) * (n_steps + 1) + step];
    }
    std::int64_t overflow_count() const;
};

/// Simulates under `pol`, substituting Y = eta1 X + eta0 and Z = eta1 sigma
/// from `fields` into the running cost. The running quadratic is integrated
/// with the trapezoid rule on the Euler grid. When `girsanov_reference` is
/// given, the log density
///   int theta sigma (alpha1 X + alpha2) dW - 1/2 int theta^2 sigma^2 (alpha1 X + alpha2)^2 dt
/// is accumulated with left-point (Ito) sums.
///
/// dt must divide T and the fields grid must be an integer multiple of the
/// Euler grid; otherwise GridMismatch.
PathEnsemble simulate(const ProblemSpec& spec, const LinearPolicy& pol, const PolicyFields& fields,
                      const RiccatiSolution* girsanov_reference, const SimulationOptions& options);

struct CostEstimate {
    double J_hat = 0.0;
    double stderr_J = 0.0;
    double CE_hat = 0.0;
    std::int64_t n_effective = 0;
    std::int64_t overflow_count = 0;
    double max_weight_share = 0.0; ///< largest single-path share of the sum
};

/// Max-shifted mean of exp(log_cost) over non-overflowed paths.
CostEstimate estimate_cost(const PathEnsemble& ens, double theta);

struct WeightEstimate {
    double mean = 0.0;
    double stderr_mean = 0.0;
};

WeightEstimate girsanov_check(const PathEnsemble& ens);

struct ResidualFamily {
    std::vector<double> step_mean; ///< per Euler step, over paths
    std::vector<double> step_rms;
    double rms = 0.0;  ///< over all (path, step) pairs
    double mean = 0.0;
};

struct ResidualStats {
    ResidualFamily backward; ///< dY + (A2 X + B2 Y + C2 Z + D2 u + g) dt - Z dW
    ResidualFamily ansatz;   ///< d gamma + (l + theta kappa^2 / 2) dt - kappa dW
};

/// One-step residuals along paths simulated (with keep_paths) under the
/// optimal policy of `sol`. Brownian increments are regenerated from the seed.
ResidualStats bsde_residuals(const PathEnsemble& ens, const ProblemSpec& spec,
                             const RiccatiSolution& sol);

struct SummaryRow {
    std::string estimator;
    CostEstimate estimate;
    std::int64_t n_paths = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    double J_ref = 0.0;   ///< reference value the estimate is compared with
    double z_score = 0.0; ///< (J_hat - J_ref) / stderr
};

/// Columns estimator, J_hat, stderr, CE_hat, n_paths, n_effective,
/// overflow_count, dt, seed, J_ref, z_score.
void write_mc_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);

/// Columns path_index, log_cost, log_girsanov.
void write_path_dump_csv(std::ostream& out, const PathEnsemble& ens);

} // namespace leq
