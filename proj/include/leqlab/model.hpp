#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "leqlab/coefficient.hpp"

namespace leq {

/// Symmetric 4x4 weight matrix over (X, Y, Z, u). Only the upper triangle is
/// stored; `entry(i, j)` mirrors it. Indices are 1-based as in R_ij.
class WeightMatrix {
public:
    static constexpr std::array<const char*, 10> names = {
        "R11", "R12", "R13", "R14", "R22", "R23", "R24", "R33", "R34", "R44"};

    const CoefficientFunction& entry(int i, int j) const { return entries_[slot(i, j)]; }
    CoefficientFunction& entry(int i, int j) { return entries_[slot(i, j)]; }

    /// Access by upper-triangle storage index in the order of `names`.
    const CoefficientFunction& stored(std::size_t k) const { return entries_[k]; }
    CoefficientFunction& stored(std::size_t k) { return entries_[k]; }

    Eigen::Matrix4d at(double t) const;

private:
    static std::size_t slot(int i, int j);

    std::array<CoefficientFunction, 10> entries_{};
};

struct MonteCarloSettings {
    std::int64_t n_paths = 100000;
    double dt = 0.0; ///< 0 selects horizon / 1024
    std::uint64_t seed = 42;
};

/// A full LEQ problem instance over a fully coupled linear FBSDE.
struct ProblemSpec {
    double horizon = 1.0;
    double x0 = 0.0;
    double theta = 1.0;
    int grid_n = 2048; ///< Riccati integration steps

    // forward equation
    CoefficientFunction A1, B1, C1, D1, b, sigma;
    // backward equation
    CoefficientFunction A2, B2, C2, D2, g;

    double G = 0.0;
    double S1 = 0.0;
    double S2 = 0.0;
    WeightMatrix R;

    MonteCarloSettings mc;

    std::vector<std::string> warnings;

    double mc_dt() const { return mc.dt > 0.0 ? mc.dt : horizon / 1024.0; }
};

/// All coefficient values of a ProblemSpec frozen at one instant.
struct PointCoefficients {
    double A1, B1, C1, D1, b, sigma;
    double A2, B2, C2, D2, g;
    Eigen::Matrix4d R;
};

PointCoefficients coefficients_at(const ProblemSpec& spec, double t);

/// Derived coefficients 𝒞1..𝒞18 at one time point. c7..c10 and c16..c18
/// depend on the Riccati values passed in.
struct CVector {
    double c1, c2, c3, c4, c5, c6, c7, c8, c9, c10;
    double c11, c12, c13, c14, c15, c16, c17, c18;
};

CVector assemble_c(const PointCoefficients& k, double theta, double alpha1, double alpha2,
                   double beta1, double beta2);
CVector assemble_c(const ProblemSpec& spec, double t, double alpha1, double alpha2,
                   double beta1, double beta2);

/// Diagonal blocks of the 2x2 matrix form of the (alpha1, beta1) system.
/// K' + G(t, K) = 0 with
///   G = D1 K + K D1 + D2 J K J + K J D3 K J + K D4 K + J K J D5 J K J + D6.
struct DMatrices {
    Eigen::Matrix2d D1, D2, D3, D4, D5, D6;
    Eigen::Matrix2d J;
    Eigen::Matrix2d K_T;
};

DMatrices assemble_matrix_form(const ProblemSpec& spec, double t);

Eigen::Matrix2d matrix_rhs(const DMatrices& d, const Eigen::Matrix2d& K);

/// Throws ValidationError on any violated invariant; appends warnings.
void validate(ProblemSpec& spec);

/// The scalar LEQG reduction: B1 = C1 = 0, zero backward data, G = 0, with
/// constant a, d, r, q_w, s and theta. Other weights are zero.
ProblemSpec scalar_reduction(double a, double d, double r, double q_w, double s, double theta,
                             double horizon, double x0, double S1 = 0.0);

/// Reference instance: a = 0, d = 1, r = 1, q_w = 1, s = 0.2, theta = 0.5,
/// T = 1, x0 = 1, S1 = 1.
ProblemSpec benchmark_problem();

} // namespace leq
