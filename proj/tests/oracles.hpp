#pragma once

// Closed forms and reference integrators used as test oracles. None of them
// goes through the library's solvers.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

/// a' + 2 a a + c a^2 + q = 0, a(T) = S1, at backward time tau, through the
/// linearisation a = W / U with (U, W)' = M (U, W), M = [[-a, -c], [q, a]].
/// M^2 = (a^2 - c q) I, so exp(M tau) has a two-term closed form.
inline double scalar_riccati(double a, double c, double q, double S1, double tau)
{
    const double disc = a * a - c * q;
    double ch = 1.0;
    double sh = tau;
    if (disc > 0.0) {
        const double l = std::sqrt(disc);
        ch = std::cosh(l * tau);
        sh = std::sinh(l * tau) / l;
    } else if (disc < 0.0) {
        const double w = std::sqrt(-disc);
        ch = std::cos(w * tau);
        sh = std::sin(w * tau) / w;
    }
    const double U = ch + sh * (-a - c * S1);
    const double W = ch * S1 + sh * (q + a * S1);
    return W / U;
}

/// Escape time of a' = -theta a^2 - 1, a(T) = 0, measured back from T.
inline double blowup_time(double theta)
{
    return std::numbers::pi / (2.0 * std::sqrt(theta));
}

/// Composite Simpson rule with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int n)
{
    const double h = (hi - lo) / n;
    double s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) {
        s += (i % 2 == 1 ? 4.0 : 2.0) * f(lo + i * h);
    }
    return s * h / 3.0;
}

/// Composite trapezoid rule with n intervals.
inline double trapezoid(const std::function<double(double)>& f, double lo, double hi, int n)
{
    const double h = (hi - lo) / n;
    double s = 0.5 * (f(lo) + f(hi));
    for (int i = 1; i < n; ++i) {
        s += f(lo + i * h);
    }
    return s * h;
}

/// y(t) = int_t^T exp(int_t^s k) f(s) ds, the solution of y' + k y + f = 0,
/// y(T) = 0, by nested Simpson quadrature.
inline double variation_of_constants(const std::function<double(double)>& k,
                                     const std::function<double(double)>& f, double t,
                                     double horizon, int n)
{
    auto integrand = [&](double s) { return std::exp(simpson(k, t, s, n)) * f(s); };
    return simpson(integrand, t, horizon, n);
}

/// Classical LQ Riccati P' + 2 a P - (d P + m)^2 / r + q = 0, P(T) = S1,
/// by classical RK4 on its own grid.
inline std::vector<double> lq_riccati(double a, double d, double r, double q, double m, double S1,
                                      double horizon, int n)
{
    auto rate = [&](double P) { return -(2.0 * a * P - (d * P + m) * (d * P + m) / r + q); };
    std::vector<double> P(n + 1);
    P[n] = S1;
    const double h = horizon / n;
    for (int i = n; i > 0; --i) {
        const double y = P[i];
        const double k1 = rate(y);
        const double k2 = rate(y - 0.5 * h * k1);
        const double k3 = rate(y - 0.5 * h * k2);
        const double k4 = rate(y - h * k3);
        P[i - 1] = y - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return P;
}

/// Mean of the closed-loop state m' = (a + d k) m, m(0) = x0, with a
/// time-dependent gain k, by RK4 with n steps.
inline double closed_loop_mean(double a, double d, const std::function<double(double)>& k,
                               double x0, double horizon, int n)
{
    auto rate = [&](double t, double m) { return (a + d * k(t)) * m; };
    const double h = horizon / n;
    double m = x0;
    for (int i = 0; i < n; ++i) {
        const double t = i * h;
        const double k1 = rate(t, m);
        const double k2 = rate(t + 0.5 * h, m + 0.5 * h * k1);
        const double k3 = rate(t + 0.5 * h, m + 0.5 * h * k2);
        const double k4 = rate(t + h, m + h * k3);
        m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return m;
}

} // namespace oracle
