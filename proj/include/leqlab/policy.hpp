#pragma once

#include <iosfwd>
#include <vector>

#include "leqlab/coefficient.hpp"
#include "leqlab/model.hpp"
#include "leqlab/riccati.hpp"

namespace leq {

/// Affine state feedback u(t) = gain(t) x + offset(t).
struct LinearPolicy {
    CoefficientFunction gain;
    CoefficientFunction offset;

    double control(double t, double x) const { return gain(t) * x + offset(t); }
};

/// Scales the gain and shifts the offset of `base`.
LinearPolicy perturb(const LinearPolicy& base, double gain_scale, double offset_shift);

/// The optimal feedback law read off a full Riccati solution. Gains are
/// sampled on the half-step grid of the solution so that RK4 stages of a
/// policy evaluation on the same grid hit samples exactly.
LinearPolicy optimal_feedback(const ProblemSpec& spec, const RiccatiSolution& sol);

/// Y(t) = beta1(t) x + beta2(t), Z(t) = beta1(t) sigma(t).
class DecouplingFields {
public:
    DecouplingFields(CoefficientFunction beta1, CoefficientFunction beta2, CoefficientFunction sigma)
        : beta1_(std::move(beta1)), beta2_(std::move(beta2)), sigma_(std::move(sigma)) {}

    double y(double t, double x) const { return beta1_(t) * x + beta2_(t); }
    double z(double t) const { return beta1_(t) * sigma_(t); }

private:
    CoefficientFunction beta1_, beta2_, sigma_;
};

DecouplingFields decoupling_fields(const RiccatiSolution& sol, const ProblemSpec& spec);

/// gamma(t, x) = alpha1 x^2 / 2 + alpha2 x + alpha3, kappa(t, x) = sigma (alpha1 x + alpha2).
class GammaKappaAnsatz {
public:
    GammaKappaAnsatz(CoefficientFunction alpha1, CoefficientFunction alpha2,
                     CoefficientFunction alpha3, CoefficientFunction sigma)
        : alpha1_(std::move(alpha1)), alpha2_(std::move(alpha2)), alpha3_(std::move(alpha3)),
          sigma_(std::move(sigma)) {}

    double gamma(double t, double x) const
    {
        return 0.5 * alpha1_(t) * x * x + alpha2_(t) * x + alpha3_(t);
    }
    double kappa(double t, double x) const { return sigma_(t) * (alpha1_(t) * x + alpha2_(t)); }

private:
    CoefficientFunction alpha1_, alpha2_, alpha3_, sigma_;
};

GammaKappaAnsatz gamma_kappa(const RiccatiSolution& sol, const ProblemSpec& spec);

/// Closed-loop quantities at one instant for u = gain x + offset with the
/// decoupling Y = eta1 x + eta0, Z = eta1 sigma:
///   drift         = drift_slope x + drift_shift
///   running cost  = quad x^2 / 2 + lin x + cst
struct ClosedLoopTerms {
    double drift_slope;
    double drift_shift;
    double quad;
    double lin;
    double cst;
};

ClosedLoopTerms closed_loop_terms(const PointCoefficients& k, double gain, double offset,
                                  double eta1, double eta0);

/// Backward-decoupling fields (eta1, eta0) of the closed-loop FBSDE and the
/// exponent fields (p, q, r) of the policy's exponential cost, on the
/// uniform grid of n_steps intervals.
struct PolicyFields {
    std::vector<double> grid;
    std::vector<double> eta1, eta0;
    std::vector<double> p, q, r;
    double y0 = 0.0; ///< Y^u(0) = eta1(0) x0 + eta0(0)

    bool has_exponent() const { return !p.empty(); }
};

/// Only (eta1, eta0). Throws BlowUpBeforeTerminal when eta1 escapes.
PolicyFields policy_fbsde_fields(const ProblemSpec& spec, const LinearPolicy& pol, int n_steps);

struct CostValue {
    double J;  ///< E exp{theta * cost}
    double CE; ///< theta^{-1} ln J, computed without forming J
};

struct PolicyEvaluation {
    CostValue cost;
    PolicyFields fields;
};

/// Deterministic evaluation of E exp{theta * cost} for an affine policy by
/// solving the Feynman-Kac exponent ODEs jointly with (eta1, eta0).
/// Throws BlowUpBeforeTerminal when the exponential moment does not exist
/// on [0, T] (p escapes).
PolicyEvaluation evaluate_linear_policy(const ProblemSpec& spec, const LinearPolicy& pol,
                                        int n_steps);

CostValue closed_form_optimal_cost(const RiccatiSolution& sol, double x0, double theta);

/// Columns t, Kx, k0 on the given grid.
void write_gains_csv(std::ostream& out, const LinearPolicy& pol, const std::vector<double>& grid);

/// Columns t, eta1, eta0, p, q, r.
void write_policy_fields_csv(std::ostream& out, const PolicyFields& fields);

} // namespace leq
