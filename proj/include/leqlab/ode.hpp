#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace leq::ode {

/// One classical RK4 step of y' = f(t, y) from t down to t - h.
template <class State, class Rhs>
State rk4_backward_step(const Rhs& f, double t, const State& y, double h)
{
    const double half = 0.5 * h;
    const State k1 = f(t, y);
    const State y2 = y - half * k1;
    const State k2 = f(t - half, y2);
    const State y3 = y - half * k2;
    const State k3 = f(t - half, y3);
    const State y4 = y - h * k3;
    const State k4 = f(t - h, y4);
    const State incr = k1 + 2.0 * k2 + 2.0 * k3 + k4;
    return y - (h / 6.0) * incr;
}

/// True when every entry is finite and bounded by `threshold` in magnitude.
template <class Derived>
bool within(const Eigen::DenseBase<Derived>& y, double threshold)
{
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double v = y.derived().coeff(i);
        if (!std::isfinite(v) || std::abs(v) > threshold) {
            return false;
        }
    }
    return true;
}

template <class State>
struct BackwardRun {
    std::vector<State> values;   ///< indexed by grid point; valid from first_valid on
    std::size_t first_valid = 0; ///< 0 when the whole grid was covered
    double eta = 0.0;            ///< length of the covered interval ending at T
};

/// Integrates a terminal-value problem on the uniform grid t_i = T i / n.
/// Stops at the first step whose result leaves the admissible region; in
/// that case the escape is re-resolved from the last good point with half
/// the step, and `eta` reports the refined covered length.
template <class State, class Rhs>
BackwardRun<State> integrate_backward(const Rhs& f, const State& terminal, double horizon,
                                      std::size_t n_steps, double threshold)
{
    BackwardRun<State> run;
    run.values.assign(n_steps + 1, State(terminal));
    const double h = horizon / static_cast<double>(n_steps);
    auto grid = [&](std::size_t i) {
        return horizon * static_cast<double>(i) / static_cast<double>(n_steps);
    };

    State y = terminal;
    std::size_t i = n_steps;
    while (i > 0) {
        State next = rk4_backward_step(f, grid(i), y, h);
        if (!within(next, threshold)) {
            break;
        }
        y = next;
        --i;
        run.values[i] = y;
    }
    run.first_valid = i;
    if (i == 0) {
        run.eta = horizon;
        return run;
    }

    // one-level refinement near the escape
    const double fine = 0.5 * h;
    const std::size_t fine_n = 2 * n_steps;
    std::size_t j = 2 * i;
    while (j > 0) {
        const double t = horizon * static_cast<double>(j) / static_cast<double>(fine_n);
        State next = rk4_backward_step(f, t, y, fine);
        if (!within(next, threshold)) {
            break;
        }
        y = next;
        --j;
    }
    run.eta = horizon - horizon * static_cast<double>(j) / static_cast<double>(fine_n);
    return run;
}

/// Cubic Hermite value at the midpoint of [t0, t0 + h] from end values and
/// derivatives.
inline double hermite_midpoint(double y0, double y1, double dy0, double dy1, double h)
{
    return 0.5 * (y0 + y1) + 0.125 * h * (dy0 - dy1);
}

} // namespace leq::ode
