#include "vsmrf/kernels.hpp"

#include <cmath>

namespace vsmrf::kernels::scalar {

double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sumsq(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
    return s;
}

double weighted_dot(const double* w, const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * y[i];
    return s;
}

double weighted_sumsq(const double* w, const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * x[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void soft_threshold(const double* x, double lambda, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double mag = std::fabs(x[i]) - lambda;
        out[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
    }
}

}  // namespace vsmrf::kernels::scalar
