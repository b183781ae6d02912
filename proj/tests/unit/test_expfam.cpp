#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

#include "support/oracles.hpp"
#include "vsmrf/expfam.hpp"

using namespace vsmrf;
using vsmrf::test::catalog_families;

namespace {

std::span<const double> sp(const std::vector<double>& v) { return {v.data(), v.size()}; }

double evaluate_unchecked(const FamilySpec& f, const Vec& eta) {
    return f.evaluate(as_span(eta), nullptr, nullptr);
}

Vec grad_unchecked(const FamilySpec& f, const Vec& eta) {
    Vec g(f.stat_dim());
    f.evaluate(as_span(eta), g.data(), nullptr);
    return g;
}

}  // namespace

TEST_CASE("sufficient statistics of catalog families") {
    CHECK(sufficient_statistics(FamilySpec::bernoulli(), sp({1.0}))[0] == 1.0);

    const Vec g = sufficient_statistics(FamilySpec::gaussian(), sp({2.0}));
    CHECK(g[0] == 2.0);
    CHECK(g[1] == 4.0);

    const Vec ga = sufficient_statistics(FamilySpec::gamma(), sp({1.0}));
    CHECK(ga[0] == 0.0);
    CHECK(ga[1] == 1.0);

    const double third = 1.0 / 3.0;
    const Vec d = sufficient_statistics(FamilySpec::dirichlet(3), sp({third, third, third}));
    for (int j = 0; j < 3; ++j) CHECK(d[j] == doctest::Approx(-1.0986122886681098).epsilon(1e-12));

    const Vec c = sufficient_statistics(FamilySpec::categorical(3), sp({2.0}));
    CHECK(c.size() == 2);
    CHECK(c[0] == 0.0);
    CHECK(c[1] == 1.0);
    CHECK(sufficient_statistics(FamilySpec::categorical(3), sp({0.0})).isZero());
}

TEST_CASE("domain violations are rejected") {
    CHECK_THROWS_AS(FamilySpec::gamma().sufficient_statistics(sp({0.0})), DomainError);
    CHECK_THROWS_AS(FamilySpec::gamma().sufficient_statistics(sp({-1.0})), DomainError);
    CHECK_THROWS_AS(FamilySpec::bernoulli().sufficient_statistics(sp({0.5})), DomainError);
    CHECK_THROWS_AS(FamilySpec::dirichlet(3).sufficient_statistics(sp({0.3, 0.3, 0.3})), DomainError);
    CHECK_THROWS_AS(FamilySpec::categorical(3).sufficient_statistics(sp({3.0})), DomainError);
    CHECK_THROWS_AS(FamilySpec::gaussian().sufficient_statistics(sp({NAN})), DomainError);
    // within the simplex tolerance
    CHECK_NOTHROW(FamilySpec::dirichlet(2).sufficient_statistics(sp({0.5, 0.5 + 5e-10})));
}

TEST_CASE("base measure is zero for every catalog family") {
    CHECK(base_measure(FamilySpec::bernoulli(), sp({0.0})) == 0.0);
    CHECK(base_measure(FamilySpec::gaussian(), sp({5.0})) == 0.0);
    CHECK(base_measure(FamilySpec::gamma(), sp({2.0})) == 0.0);
    CHECK_THROWS_AS(base_measure(FamilySpec::gamma(), sp({-2.0})), DomainError);
}

TEST_CASE("log partition reference values") {
    CHECK(log_partition(FamilySpec::gaussian(), sp({0.0, -0.5})) ==
          doctest::Approx(0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK(log_partition(FamilySpec::gaussian(), sp({0.0, -0.5})) == doctest::Approx(0.9189385).epsilon(1e-7));
    CHECK(log_partition(FamilySpec::bernoulli(), sp({0.0})) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(std::fabs(log_partition(FamilySpec::gamma(), sp({0.0, -1.0}))) < 1e-14);
}

TEST_CASE("gradient reference values") {
    CHECK(grad_log_partition(FamilySpec::bernoulli(), sp({0.0}))[0] == doctest::Approx(0.5));
    const Vec g = grad_log_partition(FamilySpec::gaussian(), sp({0.0, -0.5}));
    CHECK(std::fabs(g[0]) < 1e-15);
    CHECK(g[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("infeasible natural parameters carry the violated bound") {
    try {
        (void)log_partition(FamilySpec::gaussian(), sp({0.0, 0.5}));
        FAIL("expected ConstraintViolation");
    } catch (const ConstraintViolation& e) {
        CHECK(e.kind() == ConstraintViolation::Kind::upper);
        CHECK(e.coordinate() == 1);
        CHECK(e.bound() == 0.0);
        CHECK(e.value() == 0.5);
    }
    try {
        (void)log_partition(FamilySpec::gamma(), sp({-1.5, -1.0}));
        FAIL("expected ConstraintViolation");
    } catch (const ConstraintViolation& e) {
        CHECK(e.kind() == ConstraintViolation::Kind::lower);
        CHECK(e.coordinate() == 0);
        CHECK(e.bound() == -1.0);
    }
    CHECK_THROWS_AS(grad_log_partition(FamilySpec::dirichlet(2), sp({-1.0, 0.0})), ConstraintViolation);
    CHECK_THROWS_AS(log_partition(FamilySpec::categorical(3, true), sp({1.0, 0.0, 0.0})), ConstraintViolation);
}

TEST_CASE("feasible points") {
    CHECK(feasible_point(FamilySpec::gaussian()) == Vec{{0.0, -0.5}});
    CHECK(feasible_point(FamilySpec::gamma()) == Vec{{0.0, -1.0}});
    CHECK(feasible_point(FamilySpec::dirichlet(3)) == Vec::Zero(3));
    for (const auto& f : catalog_families()) {
        const Vec fp = f.feasible_point();
        CHECK(f.is_feasible(as_span(fp)));
        const auto& c = f.constraints();
        for (int j = 0; j < f.stat_dim(); ++j) {
            const double lo = c.bounds[j].lower, hi = c.bounds[j].upper;
            if (std::isfinite(lo)) CHECK(fp[j] - lo >= 0.1 * std::max(1.0, std::fabs(lo)));
            if (std::isfinite(hi)) CHECK(hi - fp[j] >= 0.1 * std::max(1.0, std::fabs(hi)) * 0.5);
        }
        if (c.has_equality()) CHECK((c.equality * fp).isZero(0.0));
    }
}

TEST_CASE("log partition matches independent oracles for random feasible parameters") {
    std::mt19937_64 rng(11);
    for (const auto& f : catalog_families()) {
        CAPTURE(f.tag());
        for (int rep = 0; rep < 100; ++rep) {
            const Vec eta = test::random_feasible(f, rng);
            CAPTURE(eta.transpose());
            CHECK(std::fabs(f.log_partition(as_span(eta)) - test::log_partition_oracle(f, eta)) < 1e-6);
        }
    }
}

TEST_CASE("gradient and hessian match finite differences; hessian is symmetric PSD") {
    std::mt19937_64 rng(12);
    for (const auto& f : catalog_families()) {
        CAPTURE(f.tag());
        for (int rep = 0; rep < 100; ++rep) {
            const Vec eta = test::random_feasible(f, rng);
            CAPTURE(eta.transpose());
            const Vec g = grad_unchecked(f, eta);
            const Vec fd = test::fd_gradient([&](const Vec& e) { return evaluate_unchecked(f, e); }, eta);
            CHECK(test::max_scaled_error(g, fd) < 1e-5);

            Mat h(f.stat_dim(), f.stat_dim());
            f.evaluate(as_span(eta), nullptr, h.data());
            const Mat fdh = test::fd_jacobian([&](const Vec& e) { return grad_unchecked(f, e); }, eta);
            CHECK(test::max_scaled_error(h, fdh) < 1e-5);
            CHECK((h - h.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff()));
            Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.transpose()));
            CHECK(es.eigenvalues().minCoeff() >= -1e-10);
        }
    }
}

TEST_CASE("sufficient statistics are minimal") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<FamilySpec> minimal = {
        FamilySpec::bernoulli(),  FamilySpec::gaussian(),        FamilySpec::gamma(),
        FamilySpec::dirichlet(3), FamilySpec::categorical(4),
        inflate(FamilySpec::gamma(), std::vector<double>{0.0, 25.0}),
    };
    for (const auto& f : minimal) {
        CAPTURE(f.tag());
        std::vector<Vec> rows;
        for (int i = 0; i < 1000; ++i) {
            std::vector<double> x;
            switch (f.kind()) {
                case FamilyKind::bernoulli: x = {static_cast<double>(i % 2)}; break;
                case FamilyKind::categorical: x = {static_cast<double>(i % 4)}; break;
                case FamilyKind::gaussian: x = {-5.0 + 10.0 * u(rng)}; break;
                case FamilyKind::gamma: x = {0.01 + 10.0 * u(rng)}; break;
                case FamilyKind::dirichlet: {
                    double a = u(rng) + 1e-3, b = u(rng) + 1e-3, c = u(rng) + 1e-3;
                    const double s = a + b + c;
                    x = {a / s, b / s, 1.0 - a / s - b / s};
                    break;
                }
                case FamilyKind::inflated:
                    x = {i % 10 == 0 ? 0.0 : (i % 10 == 1 ? 25.0 : 0.01 + 10.0 * u(rng))};
                    break;
            }
            rows.push_back(f.sufficient_statistics(x));
        }
        Mat s(rows.size(), f.stat_dim());
        for (std::size_t i = 0; i < rows.size(); ++i) s.row(i) = rows[i].transpose();
        const Mat centered = s.rowwise() - s.colwise().mean();
        const Mat gram = centered.transpose() * centered / static_cast<double>(rows.size());
        Eigen::SelfAdjointEigenSolver<Mat> es(gram);
        CHECK(es.eigenvalues().minCoeff() > 1e-8);
    }
}

TEST_CASE("sampling matches the mean parameter within Monte-Carlo error") {
    for (const auto& f : catalog_families()) {
        CAPTURE(f.tag());
        Rng rng(2024);
        std::mt19937_64 prng(77);
        const Vec eta = f.kind() == FamilyKind::bernoulli ? Vec::Zero(1)
                        : f.kind() == FamilyKind::gaussian ? Vec{{0.0, -0.5}}
                                                           : test::random_feasible(f, prng);
        const int n = 100000;
        Vec sum = Vec::Zero(f.stat_dim());
        for (int i = 0; i < n; ++i) sum += f.sufficient_statistics(f.sample(as_span(eta), rng));
        const Vec mean = sum / n;
        const Vec mu = f.grad_log_partition(as_span(eta));
        const Mat cov = f.hessian_log_partition(as_span(eta));
        for (int j = 0; j < f.stat_dim(); ++j) {
            const double se = std::sqrt(cov(j, j) / n);
            CAPTURE(j);
            CHECK(std::fabs(mean[j] - mu[j]) <= 3.0 * se + 1e-12);
        }
    }
}

TEST_CASE("sampling is reproducible under a fixed seed") {
    const auto f = FamilySpec::dirichlet(3);
    const Vec eta{{-0.5, 0.2, 1.0}};
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(f.sample(as_span(eta), a) == f.sample(as_span(eta), b));
}

TEST_CASE("dirichlet draws stay on the simplex for small concentrations") {
    const auto f = FamilySpec::dirichlet(3);
    const Vec eta{{-0.95, -0.95, -0.9}};
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const auto x = f.sample(as_span(eta), rng);
        CHECK(f.contains(x));
    }
}

TEST_CASE("inflated bernoulli log partition") {
    const auto f = inflate(FamilySpec::bernoulli(), std::vector<InflationPoint>{{0.0, true}});
    CHECK(f.stat_dim() == 2);
    CHECK(f.tag() == "inflated:bernoulli:0");
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        const double e0 = std::uniform_real_distribution<double>(-3, 3)(rng);
        const double e1 = std::uniform_real_distribution<double>(-3, 3)(rng);
        const Vec eta{{e0, e1}};
        const double expected = std::log(std::exp(e0) + std::exp(e1));
        CHECK(f.log_partition(as_span(eta)) == doctest::Approx(expected).epsilon(1e-12));
        // brute force over the two states with the inflated density
        double z = 0.0;
        for (double x : {0.0, 1.0}) z += std::exp(f.sufficient_statistics(std::vector<double>{x}).dot(eta));
        CHECK(f.log_partition(as_span(eta)) == doctest::Approx(std::log(z)).epsilon(1e-12));
    }
}

TEST_CASE("inflated gamma at zero adds an atom outside the base domain") {
    const auto f = inflate(FamilySpec::gamma(), std::vector<InflationPoint>{{0.0, false}});
    const Vec eta{{0.7, 0.5, -2.0}};
    const double base = log_partition(FamilySpec::gamma(), sp({0.5, -2.0}));
    CHECK(f.log_partition(as_span(eta)) == doctest::Approx(std::log(std::exp(0.7) + std::exp(base))).epsilon(1e-12));
    CHECK(f.contains(std::vector<double>{0.0}));
    CHECK_FALSE(f.contains(std::vector<double>{-1.0}));
    const Vec s0 = f.sufficient_statistics(std::vector<double>{0.0});
    CHECK(s0 == Vec{{1.0, 0.0, 0.0}});
}

TEST_CASE("two-point inflated gamma density integrates to one") {
    const auto f = FamilySpec::parse("inflated:gamma:0,25");
    CHECK(f.stat_dim() == 4);
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        const Vec eta = test::random_feasible(f, rng);
        const double a = f.log_partition(as_span(eta));
        auto density = [&](double x) {
            return std::exp(f.sufficient_statistics(std::vector<double>{x}).dot(eta) - a);
        };
        double mass = density(0.0) + density(25.0);
        // continuous part: split at 1 with x = u^(1/k) on [0,1] to tame x^(k-1)
        const double k = eta[2] + 1.0;
        mass += test::integrate([&](double u) { return u <= 0.0 ? 0.0 : density(std::pow(u, 1.0 / k)) * std::pow(u, 1.0 / k) / (k * u); }, 0.0, 1.0);
        mass += test::integrate(density, 1.0, std::numeric_limits<double>::infinity());
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("inflation rejects duplicate and misdeclared points") {
    CHECK_THROWS_AS(inflate(FamilySpec::gamma(), std::vector<double>{0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(inflate(FamilySpec::gamma(), std::vector<InflationPoint>{{0.0, true}}), std::invalid_argument);
    const auto once = inflate(FamilySpec::gamma(), std::vector<double>{0.0});
    CHECK_THROWS_AS(inflate(once, std::vector<double>{0.0}), std::invalid_argument);
    const auto twice = inflate(once, std::vector<double>{30.0});
    CHECK(twice.tag() == "inflated:gamma:30,0");
    CHECK(twice.stat_dim() == 4);
}

TEST_CASE("inflated gamma with a dominant zero atom samples zeros") {
    const auto f = inflate(FamilySpec::gamma(), std::vector<double>{0.0});
    const Vec eta{{30.0, 0.0, -1.0}};
    Rng rng(9);
    int zeros = 0;
    for (int i = 0; i < 10000; ++i) zeros += f.sample(as_span(eta), rng)[0] == 0.0;
    CHECK(zeros == 10000);
}

TEST_CASE("family tags round-trip through the parser") {
    for (const auto& f : catalog_families()) CHECK(FamilySpec::parse(f.tag()).tag() == f.tag());
    CHECK_THROWS_AS(FamilySpec::parse("poisson"), std::invalid_argument);
    CHECK_THROWS_AS(FamilySpec::parse("dirichlet:x"), std::invalid_argument);
    CHECK_THROWS_AS(FamilySpec::parse("inflated:gamma:0,abc"), std::invalid_argument);
    CHECK(FamilySpec::parse("inflated:categorical:3:0,7").stat_dim() == 4);
}

TEST_CASE("outlier cap is the 99.5th percentile of positive values") {
    std::vector<double> v;
    for (int i = 0; i <= 1000; ++i) v.push_back(i);  // includes one zero
    v.push_back(-4.0);
    // positives 1..1000: h = 0.995 * 999 = 994.005
    CHECK(outlier_cap(v) == doctest::Approx(995.005).epsilon(1e-12));
    CHECK_THROWS(outlier_cap(std::vector<double>{0.0, -1.0}));
}
