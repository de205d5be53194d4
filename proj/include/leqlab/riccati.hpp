#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "leqlab/model.hpp"

namespace leq {

inline constexpr double default_blowup_threshold = 1e8;

/// Grid samples of the Riccati/ODE system on t_i = T i / N.
///
/// When the backward solve escapes before t = 0, entries below
/// `first_valid` are NaN and `eta` is the covered length of [T - eta, T].
struct RiccatiSolution {
    std::vector<double> grid;
    std::vector<double> alpha1, alpha2, alpha3, beta1, beta2;
    bool exists_on_full_interval = false;
    double eta = 0.0;
    double step_h = 0.0;
    std::size_t first_valid = 0;
    bool has_alpha2_beta2 = false;
    bool has_alpha3 = false;
    std::map<std::string, std::string> diagnostics;

    std::size_t n_steps() const { return grid.empty() ? 0 : grid.size() - 1; }
};

struct MatrixKSolution {
    std::vector<double> grid;
    std::vector<Eigen::Matrix2d> K;
    bool exists_on_full_interval = false;
    double eta = 0.0;
    std::size_t first_valid = 0;
};

struct ExistenceInterval {
    double eta = 0.0;
    bool exists_on_full_interval = false;
};

/// Right-hand sides (d/dt) of the coupled (alpha1, beta1) pair.
Eigen::Vector2d alpha1_beta1_rate(const CVector& c, double alpha1, double beta1);

/// Right-hand sides (d/dt) of the coupled linear (alpha2, beta2) pair.
Eigen::Vector2d alpha2_beta2_rate(const CVector& c, double alpha2, double beta2);

/// Backward RK4 solve of the coupled Riccati pair. Escape beyond
/// `threshold` truncates the solution; escaping within the first step throws
/// BlowUpBeforeTerminal.
RiccatiSolution solve_alpha1_beta1(const ProblemSpec& spec, int n_steps,
                                   double threshold = default_blowup_threshold);

RiccatiSolution solve_alpha2_beta2(const ProblemSpec& spec, RiccatiSolution partial);

RiccatiSolution solve_alpha3(const ProblemSpec& spec, RiccatiSolution partial);

/// Full pipeline: (alpha1, beta1), then (alpha2, beta2), then alpha3. A
/// truncated (alpha1, beta1) solve is returned as is.
RiccatiSolution solve_riccati(const ProblemSpec& spec, int n_steps,
                              double threshold = default_blowup_threshold);
RiccatiSolution solve_riccati(const ProblemSpec& spec);

MatrixKSolution solve_matrix_K(const ProblemSpec& spec, int n_steps,
                               double threshold = default_blowup_threshold);

/// Partial solution (alpha1, beta1) read off the diagonal of K.
RiccatiSolution from_matrix_solution(const MatrixKSolution& k);

/// Values of (alpha1, alpha2, beta1, beta2) on the half-step grid
/// t_j = T j / (2N): grid points copied, midpoints by cubic Hermite
/// interpolation with the ODE right-hand sides as slopes.
struct HalfGridRiccati {
    std::vector<double> grid;
    std::vector<double> alpha1, alpha2, beta1, beta2;
};

HalfGridRiccati refine_to_half_grid(const ProblemSpec& spec, const RiccatiSolution& sol);

ExistenceInterval existence_interval(const ProblemSpec& spec, int n_steps,
                                     double threshold = default_blowup_threshold);

/// Columns t, alpha1, alpha2, alpha3, beta1, beta2; one row per grid point.
void write_riccati_csv(std::ostream& out, const RiccatiSolution& sol);

} // namespace leq
