#pragma once

// Dense inner-loop kernels used by the solver and the Gibbs sampler.
//
// Every kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2/FMA variant. The variant is chosen once at runtime from CPUID and can
// be pinned with force_backend() or the VSMRF_KERNELS=scalar environment
// variable. The two backends agree to rounding; they are not bit-identical
// because the vector variants reassociate sums.

#include <span>
#include <string_view>

namespace vsmrf::kernels {

enum class Backend { scalar, avx2 };

std::string_view backend_name(Backend b);

bool avx2_available();
Backend active_backend();

/// Pins the backend for the whole process. Throws std::invalid_argument if the
/// CPU does not support the requested backend.
void force_backend(Backend b);

double dot(std::span<const double> x, std::span<const double> y);
double sumsq(std::span<const double> x);
/// sum_i w_i * x_i * y_i
double weighted_dot(std::span<const double> w, std::span<const double> x,
                    std::span<const double> y);
/// sum_i w_i * x_i^2
double weighted_sumsq(std::span<const double> w, std::span<const double> x);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
/// out_i = sign(x_i) * max(|x_i| - lambda, 0)
void soft_threshold(std::span<const double> x, double lambda, std::span<double> out);

namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
double sumsq(const double* x, std::size_t n);
double weighted_dot(const double* w, const double* x, const double* y, std::size_t n);
double weighted_sumsq(const double* w, const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void soft_threshold(const double* x, double lambda, double* out, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define VSMRF_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
double sumsq(const double* x, std::size_t n);
double weighted_dot(const double* w, const double* x, const double* y, std::size_t n);
double weighted_sumsq(const double* w, const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void soft_threshold(const double* x, double lambda, double* out, std::size_t n);
}  // namespace avx2
#else
#define VSMRF_HAVE_AVX2_KERNELS 0
#endif

}  // namespace vsmrf::kernels
