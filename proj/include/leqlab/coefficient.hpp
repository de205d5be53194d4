#pragma once

#include <span>
#include <vector>

namespace leq {

/// Deterministic bounded function of time on [0, T]: either a constant or
/// piecewise-linear samples on a uniform grid. Evaluation outside [0, T]
/// clamps to the nearest endpoint.
class CoefficientFunction {
public:
    enum class Kind { constant, piecewise_linear };

    CoefficientFunction() = default;

    static CoefficientFunction constant(double value);

    /// `samples` covers [0, horizon] uniformly; needs at least two entries.
    static CoefficientFunction piecewise(std::vector<double> samples, double horizon);

    double operator()(double t) const noexcept
    {
        if (kind_ == Kind::constant) {
            return values_[0];
        }
        return interpolate(t);
    }

    Kind kind() const noexcept { return kind_; }
    bool is_constant() const noexcept { return kind_ == Kind::constant; }

    /// Number of grid intervals (0 for a constant).
    int grid_n() const noexcept;

    std::span<const double> samples() const noexcept { return values_; }

    /// Largest |value| over [0, T]; exact for piecewise-linear data.
    double max_abs() const noexcept;
    double min_value() const noexcept;

    bool identically_zero() const noexcept { return max_abs() == 0.0; }

    /// Pointwise a * f + shift on the same representation.
    CoefficientFunction affine(double scale, double shift) const;

private:
    double interpolate(double t) const noexcept;

    Kind kind_ = Kind::constant;
    std::vector<double> values_{0.0};
    double horizon_ = 1.0;
    double inv_step_ = 0.0;
};

} // namespace leq
