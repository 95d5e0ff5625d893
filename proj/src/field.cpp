#include "cgqg/field.hpp"

#include <cmath>
#include <stdexcept>

namespace cgqg {

double LayeredField::rms() const {
    double s = 0.0;
    for (double x : v) s += x * x;
    return v.empty() ? 0.0 : std::sqrt(s / double(v.size()));
}

double LayeredField::max_abs() const {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

bool LayeredField::finite() const {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void axpy(double a, const LayeredField& x, LayeredField& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("axpy: shape mismatch");
    for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += a * x.v[i];
}

void axpy(std::complex<double> a, const SpectralField& x, SpectralField& y) {
    if (x.c.size() != y.c.size()) throw std::invalid_argument("axpy: shape mismatch");
    for (std::size_t i = 0; i < y.c.size(); ++i) y.c[i] += a * x.c[i];
}

}  // namespace cgqg
