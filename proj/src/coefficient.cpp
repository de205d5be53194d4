#include "leqlab/coefficient.hpp"

#include <algorithm>
#include <cmath>

#include "leqlab/errors.hpp"

namespace leq {

CoefficientFunction CoefficientFunction::constant(double value)
{
    if (!std::isfinite(value)) {
        throw NonFiniteValue("coefficient constant is not finite");
    }
    CoefficientFunction f;
    f.values_ = {value};
    return f;
}

CoefficientFunction CoefficientFunction::piecewise(std::vector<double> samples, double horizon)
{
    if (samples.size() < 2) {
        throw Error("piecewise coefficient needs at least two samples");
    }
    if (!(horizon > 0.0)) {
        throw Error("piecewise coefficient needs a positive horizon");
    }
    for (double v : samples) {
        if (!std::isfinite(v)) {
            throw NonFiniteValue("coefficient sample is not finite");
        }
    }
    CoefficientFunction f;
    f.kind_ = Kind::piecewise_linear;
    f.values_ = std::move(samples);
    f.horizon_ = horizon;
    f.inv_step_ = static_cast<double>(f.values_.size() - 1) / horizon;
    return f;
}

int CoefficientFunction::grid_n() const noexcept
{
    return kind_ == Kind::constant ? 0 : static_cast<int>(values_.size()) - 1;
}

double CoefficientFunction::interpolate(double t) const noexcept
{
    const auto n = values_.size() - 1;
    const double s = t * inv_step_;
    if (!(s > 0.0)) {
        return values_.front();
    }
    if (s >= static_cast<double>(n)) {
        return values_.back();
    }
    auto i = static_cast<std::size_t>(s);
    if (i >= n) {
        i = n - 1;
    }
    const double w = s - static_cast<double>(i);
    if (w == 0.0) {
        return values_[i];
    }
    return values_[i] + w * (values_[i + 1] - values_[i]);
}

double CoefficientFunction::max_abs() const noexcept
{
    double m = 0.0;
    for (double v : values_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

double CoefficientFunction::min_value() const noexcept
{
    return *std::min_element(values_.begin(), values_.end());
}

CoefficientFunction CoefficientFunction::affine(double scale, double shift) const
{
    CoefficientFunction f = *this;
    for (double& v : f.values_) {
        v = scale * v + shift;
    }
    return f;
}

} // namespace leq
