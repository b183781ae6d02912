#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "vsmrf/kernels.hpp"

namespace k = vsmrf::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 3.0);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

double close_tol(double ref, std::size_t n) { return 1e-13 * static_cast<double>(n + 1) * std::max(1.0, std::fabs(ref)); }

}  // namespace

TEST_CASE("backend selection") {
    CHECK(k::backend_name(k::Backend::scalar) == "scalar");
    CHECK(k::backend_name(k::Backend::avx2) == "avx2");
    const auto before = k::active_backend();
    k::force_backend(k::Backend::scalar);
    CHECK(k::active_backend() == k::Backend::scalar);
    if (k::avx2_available()) {
        k::force_backend(k::Backend::avx2);
        CHECK(k::active_backend() == k::Backend::avx2);
    } else {
        CHECK_THROWS_AS(k::force_backend(k::Backend::avx2), std::invalid_argument);
    }
    k::force_backend(before);
}

#if VSMRF_HAVE_AVX2_KERNELS
TEST_CASE("avx2 kernels agree with the scalar reference") {
    if (!k::avx2_available()) return;
    std::mt19937_64 rng(99);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 15u, 16u, 17u, 63u, 250u, 1001u, 5000u}) {
        CAPTURE(n);
        const auto x = random_vec(n, rng), y = random_vec(n, rng);
        auto w = random_vec(n, rng);
        for (auto& v : w) v = std::fabs(v);

        const double d = k::scalar::dot(x.data(), y.data(), n);
        CHECK(std::fabs(k::avx2::dot(x.data(), y.data(), n) - d) <= close_tol(d, n));
        const double s = k::scalar::sumsq(x.data(), n);
        CHECK(std::fabs(k::avx2::sumsq(x.data(), n) - s) <= close_tol(s, n));
        const double wd = k::scalar::weighted_dot(w.data(), x.data(), y.data(), n);
        CHECK(std::fabs(k::avx2::weighted_dot(w.data(), x.data(), y.data(), n) - wd) <= close_tol(wd, n));
        const double ws = k::scalar::weighted_sumsq(w.data(), x.data(), n);
        CHECK(std::fabs(k::avx2::weighted_sumsq(w.data(), x.data(), n) - ws) <= close_tol(ws, n));

        std::vector<double> a1 = y, a2 = y;
        k::scalar::axpy(0.37, x.data(), a1.data(), n);
        k::avx2::axpy(0.37, x.data(), a2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(a1[i] - a2[i]) <= 1e-15 * std::max(1.0, std::fabs(a1[i])));

        std::vector<double> t1(n), t2(n);
        k::scalar::soft_threshold(x.data(), 1.5, t1.data(), n);
        k::avx2::soft_threshold(x.data(), 1.5, t2.data(), n);
        CHECK(t1 == t2);
    }
}
#endif

TEST_CASE("soft threshold reference values") {
    const std::vector<double> x{3.0, -3.0, 0.5, -0.5, 1.0};
    std::vector<double> out(x.size());
    k::soft_threshold(x, 1.0, out);
    CHECK(out == std::vector<double>{2.0, -2.0, 0.0, 0.0, 0.0});
    CHECK_FALSE(std::signbit(out[3]));
}

TEST_CASE("dispatching kernels match naive loops") {
    std::mt19937_64 rng(5);
    const auto x = random_vec(37, rng), y = random_vec(37, rng);
    double ref = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) ref += x[i] * y[i];
    CHECK(k::dot(x, y) == doctest::Approx(ref).epsilon(1e-13));
    std::vector<double> z = y;
    k::axpy(2.0, x, z);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(z[i] == doctest::Approx(y[i] + 2.0 * x[i]));
}
