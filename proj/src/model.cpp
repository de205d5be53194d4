#include "leqlab/model.hpp"

#include <cmath>
#include <string>

#include "leqlab/errors.hpp"

namespace leq {

std::size_t WeightMatrix::slot(int i, int j)
{
    if (i > j) {
        std::swap(i, j);
    }
    if (i < 1 || j > 4) {
        throw Error("weight index out of range");
    }
    // row offsets of the packed upper triangle: 0, 4, 7, 9
    static constexpr std::array<std::size_t, 4> offset = {0, 4, 7, 9};
    return offset[static_cast<std::size_t>(i - 1)] + static_cast<std::size_t>(j - i);
}

Eigen::Matrix4d WeightMatrix::at(double t) const
{
    Eigen::Matrix4d m;
    for (int i = 1; i <= 4; ++i) {
        for (int j = i; j <= 4; ++j) {
            const double v = entry(i, j)(t);
            m(i - 1, j - 1) = v;
            m(j - 1, i - 1) = v;
        }
    }
    return m;
}

PointCoefficients coefficients_at(const ProblemSpec& spec, double t)
{
    return PointCoefficients{spec.A1(t), spec.B1(t), spec.C1(t), spec.D1(t), spec.b(t),
                             spec.sigma(t), spec.A2(t), spec.B2(t), spec.C2(t), spec.D2(t),
                             spec.g(t), spec.R.at(t)};
}

CVector assemble_c(const PointCoefficients& k, double theta, double alpha1, double alpha2,
                   double beta1, double beta2)
{
    const auto& R = k.R;
    const double R12 = R(0, 1), R13 = R(0, 2), R14 = R(0, 3), R11 = R(0, 0);
    const double R22 = R(1, 1), R23 = R(1, 2), R24 = R(1, 3);
    const double R33 = R(2, 2), R34 = R(2, 3);
    const double inv = 1.0 / R(3, 3);
    const double s = k.sigma;

    // gain numerators of the feedback law
    const double gain_x = k.D1 * alpha1 + R14 + R24 * beta1;
    const double gain_0 = alpha2 * k.D1 + R24 * beta2 + R34 * beta1 * s;
    const double d_beta = k.D1 * beta1 + k.D2;

    CVector c{};
    c.c1 = k.A1 - inv * k.D1 * R14;
    c.c2 = R12 - inv * R14 * R24;
    c.c3 = k.B1 - inv * k.D1 * R24;
    c.c4 = theta * s * s - inv * k.D1 * k.D1;
    c.c5 = R22 - inv * R24 * R24;
    c.c6 = R11 - inv * R14 * R14;
    c.c7 = k.A1 + k.B1 * beta1 + theta * s * s * alpha1 - inv * k.D1 * gain_x;
    c.c8 = k.B1 * alpha1 + R12 + R22 * beta1 - inv * R24 * gain_x;
    c.c9 = k.C1 * s * alpha1 * beta1 + alpha1 * k.b + R13 * s * beta1 + R23 * s * beta1 * beta1 -
           inv * R34 * s * gain_x * beta1;
    c.c10 = 0.5 * alpha1 * s * s + alpha2 * (k.B1 * beta2 + k.C1 * beta1 * s + k.b) +
            0.5 * R22 * beta2 * beta2 + R23 * s * beta1 * beta2 + 0.5 * R33 * s * s * beta1 * beta1 +
            0.5 * theta * s * s * alpha2 * alpha2 - 0.5 * inv * gain_0 * gain_0;
    c.c11 = k.A1 + k.B2 - inv * (k.D1 * R14 + k.D2 * R24);
    c.c12 = inv * k.D1 * k.D2;
    c.c13 = inv * k.D1 * k.D1;
    c.c14 = k.B1 - inv * k.D1 * R24;
    c.c15 = k.A2 - inv * k.D2 * R14;
    c.c16 = k.B1 * beta1 + k.B2 - inv * R24 * d_beta;
    c.c17 = inv * k.D1 * d_beta;
    c.c18 = (k.C1 * beta1 + k.C2) * s * beta1 + k.b * beta1 + k.g - inv * R34 * s * beta1 * d_beta;

    for (double v : {c.c1, c.c2, c.c3, c.c4, c.c5, c.c6, c.c7, c.c8, c.c9, c.c10, c.c11, c.c12,
                     c.c13, c.c14, c.c15, c.c16, c.c17, c.c18}) {
        if (!std::isfinite(v)) {
            throw NonFiniteValue("derived coefficient is not finite");
        }
    }
    return c;
}

CVector assemble_c(const ProblemSpec& spec, double t, double alpha1, double alpha2, double beta1,
                   double beta2)
{
    return assemble_c(coefficients_at(spec, t), spec.theta, alpha1, alpha2, beta1, beta2);
}

DMatrices assemble_matrix_form(const ProblemSpec& spec, double t)
{
    // c1..c6 and c11..c15 do not depend on the Riccati values
    const CVector c = assemble_c(spec, t, 0.0, 0.0, 0.0, 0.0);

    auto diag = [](double a, double b) {
        Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
        m(0, 0) = a;
        m(1, 1) = b;
        return m;
    };

    DMatrices d;
    d.D1 = diag(c.c1, 0.5 * c.c11);
    d.D2 = diag(2.0 * c.c2, -c.c12);
    // K J D3 K J = diag(a1 b1 D3(1,1), a1 b1 D3(0,0)), so the cross-term
    // coefficients sit on the opposite diagonal slots.
    d.D3 = diag(-c.c13, 2.0 * c.c3);
    d.D4 = diag(c.c4, c.c14);
    d.D5 = diag(c.c5, 0.0);
    d.D6 = diag(c.c6, c.c15);
    d.J << 0.0, 1.0, 1.0, 0.0;
    d.K_T = diag(spec.S1, spec.G);
    return d;
}

Eigen::Matrix2d matrix_rhs(const DMatrices& d, const Eigen::Matrix2d& K)
{
    const Eigen::Matrix2d JKJ = d.J * K * d.J;
    return d.D1 * K + K * d.D1 + d.D2 * JKJ + K * d.J * d.D3 * K * d.J + K * d.D4 * K +
           JKJ * d.D5 * JKJ + d.D6;
}

namespace {

void check_finite(const CoefficientFunction& f, const std::string& field)
{
    for (double v : f.samples()) {
        if (!std::isfinite(v)) {
            throw ValidationError(field + " has a non-finite sample", field);
        }
    }
}

} // namespace

void validate(ProblemSpec& spec)
{
    if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon)) {
        throw ValidationError("horizon must be positive", "horizon");
    }
    for (auto [value, name] : {std::pair{spec.x0, "x0"}, std::pair{spec.theta, "theta"},
                               std::pair{spec.G, "terminal.G"}, std::pair{spec.S1, "terminal.S1"},
                               std::pair{spec.S2, "terminal.S2"}}) {
        if (!std::isfinite(value)) {
            throw ValidationError(std::string(name) + " is not finite", name);
        }
    }
    if (spec.theta == 0.0) {
        throw ValidationError("theta must be nonzero", "theta");
    }
    if (spec.theta < 0.0) {
        spec.warnings.emplace_back("theta < 0 (risk-seeking): optimality results assume theta > 0");
    }
    if (spec.grid_n < 2) {
        throw ValidationError("grid_n must be at least 2", "grid_n");
    }
    const std::pair<const CoefficientFunction*, const char*> coefs[] = {
        {&spec.A1, "A1"}, {&spec.B1, "B1"}, {&spec.C1, "C1"}, {&spec.D1, "D1"},
        {&spec.b, "b"},   {&spec.sigma, "sigma"}, {&spec.A2, "A2"}, {&spec.B2, "B2"},
        {&spec.C2, "C2"}, {&spec.D2, "D2"}, {&spec.g, "g"}};
    for (const auto& [f, name] : coefs) {
        check_finite(*f, name);
    }
    for (std::size_t k = 0; k < WeightMatrix::names.size(); ++k) {
        check_finite(spec.R.stored(k), std::string("weights.") + WeightMatrix::names[k]);
    }
    if (!(spec.R.entry(4, 4).min_value() > 0.0)) {
        throw ValidationError("R44 not uniformly positive", "weights.R44");
    }
    if (spec.mc.n_paths < 1) {
        throw ValidationError("mc.n_paths must be at least 1", "mc.n_paths");
    }
    if (spec.mc.dt < 0.0 || !std::isfinite(spec.mc.dt)) {
        throw ValidationError("mc.dt must be positive", "mc.dt");
    }
}

ProblemSpec scalar_reduction(double a, double d, double r, double q_w, double s, double theta,
                             double horizon, double x0, double S1)
{
    ProblemSpec spec;
    spec.horizon = horizon;
    spec.x0 = x0;
    spec.theta = theta;
    spec.A1 = CoefficientFunction::constant(a);
    spec.D1 = CoefficientFunction::constant(d);
    spec.sigma = CoefficientFunction::constant(s);
    spec.R.entry(1, 1) = CoefficientFunction::constant(q_w);
    spec.R.entry(4, 4) = CoefficientFunction::constant(r);
    spec.S1 = S1;
    return spec;
}

ProblemSpec benchmark_problem()
{
    return scalar_reduction(0.0, 1.0, 1.0, 1.0, 0.2, 0.5, 1.0, 1.0, 1.0);
}

} // namespace leq
