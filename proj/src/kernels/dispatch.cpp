#include "vsmrf/kernels.hpp"

#include <atomic>
#include <cassert>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace vsmrf::kernels {

namespace {

struct Table {
    Backend backend;
    double (*dot)(const double*, const double*, std::size_t);
    double (*sumsq)(const double*, std::size_t);
    double (*weighted_dot)(const double*, const double*, const double*, std::size_t);
    double (*weighted_sumsq)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*soft_threshold)(const double*, double, double*, std::size_t);
};

constexpr Table kScalar{Backend::scalar,       scalar::dot,  scalar::sumsq,
                        scalar::weighted_dot,  scalar::weighted_sumsq,
                        scalar::axpy,          scalar::soft_threshold};

#if VSMRF_HAVE_AVX2_KERNELS
constexpr Table kAvx2{Backend::avx2,         avx2::dot,  avx2::sumsq,
                      avx2::weighted_dot,    avx2::weighted_sumsq,
                      avx2::axpy,            avx2::soft_threshold};
#endif

const Table* detect() {
    if (const char* env = std::getenv("VSMRF_KERNELS"); env && std::string(env) == "scalar") {
        return &kScalar;
    }
#if VSMRF_HAVE_AVX2_KERNELS
    if (avx2_available()) return &kAvx2;
#endif
    return &kScalar;
}

std::atomic<const Table*>& table_slot() {
    static std::atomic<const Table*> slot{detect()};
    return slot;
}

inline const Table& table() { return *table_slot().load(std::memory_order_relaxed); }

}  // namespace

std::string_view backend_name(Backend b) {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

bool avx2_available() {
#if VSMRF_HAVE_AVX2_KERNELS && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() { return table().backend; }

void force_backend(Backend b) {
    if (b == Backend::scalar) {
        table_slot().store(&kScalar);
        return;
    }
#if VSMRF_HAVE_AVX2_KERNELS
    if (avx2_available()) {
        table_slot().store(&kAvx2);
        return;
    }
#endif
    throw std::invalid_argument("avx2 kernels are not supported on this CPU");
}

double dot(std::span<const double> x, std::span<const double> y) {
    assert(x.size() == y.size());
    return table().dot(x.data(), y.data(), x.size());
}

double sumsq(std::span<const double> x) { return table().sumsq(x.data(), x.size()); }

double weighted_dot(std::span<const double> w, std::span<const double> x,
                    std::span<const double> y) {
    assert(w.size() == x.size() && x.size() == y.size());
    return table().weighted_dot(w.data(), x.data(), y.data(), x.size());
}

double weighted_sumsq(std::span<const double> w, std::span<const double> x) {
    assert(w.size() == x.size());
    return table().weighted_sumsq(w.data(), x.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    table().axpy(a, x.data(), y.data(), x.size());
}

void soft_threshold(std::span<const double> x, double lambda, std::span<double> out) {
    assert(x.size() == out.size());
    table().soft_threshold(x.data(), lambda, out.data(), x.size());
}

}  // namespace vsmrf::kernels
