#include <doctest.h>

#include <cmath>
#include <map>

#include "vsmrf/sampler.hpp"

using namespace vsmrf;

namespace {

GraphSchema benchmark_schema(int per_family) {
    std::vector<NodeSpec> nodes;
    for (int i = 0; i < per_family; ++i) nodes.push_back({"bern" + std::to_string(i), FamilySpec::bernoulli()});
    for (int i = 0; i < per_family; ++i) nodes.push_back({"gauss" + std::to_string(i), FamilySpec::gaussian()});
    for (int i = 0; i < per_family; ++i) nodes.push_back({"gamma" + std::to_string(i), FamilySpec::gamma()});
    for (int i = 0; i < per_family; ++i) nodes.push_back({"dir" + std::to_string(i), FamilySpec::dirichlet(3)});
    return GraphSchema(nodes);
}

double tv_distance(const JointModel& m, const Dataset& d) {
    const auto joint = enumerate_joint(m);
    std::map<std::vector<double>, double> freq;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto row = d.row(i);
        freq[std::vector<double>(row.begin(), row.end())] += 1.0 / static_cast<double>(d.size());
    }
    double tv = 0.0;
    for (std::size_t s = 0; s < joint.states.size(); ++s) tv += std::fabs(std::exp(joint.log_prob[s]) - freq[joint.states[s]]);
    return 0.5 * tv;
}

}  // namespace

TEST_CASE("generator sparsity extremes") {
    const GraphSchema s({{"a", FamilySpec::bernoulli()}, {"b", FamilySpec::bernoulli()}, {"c", FamilySpec::categorical(3)}});
    Rng rng(1);
    CHECK(random_model(s, {1.0, 0.3}, rng).edges().empty());
    const auto dense = random_model(s, {0.0, 0.0}, rng);
    CHECK(dense.edges().size() == 3);
    for (const auto& [k, b] : dense.edges()) {
        CHECK((b.array() != 0.0).all());
        CHECK(b.cwiseAbs().minCoeff() >= 0.5);
        CHECK(b.cwiseAbs().maxCoeff() <= 1.0);
    }
    CHECK_THROWS(random_model(s, {1.5, 0.0}, rng));
    CHECK_THROWS_AS(random_model(s, {0.0, 1.0}, rng), ValidationError);
}

TEST_CASE("realized edge density matches the profile") {
    const auto s = benchmark_schema(6);  // p = 24
    const double pairs = 24.0 * 23.0 / 2.0;
    double total = 0.0;
    for (int seed = 0; seed < 30; ++seed) {
        Rng rng(static_cast<std::uint64_t>(seed));
        total += static_cast<double>(random_model(s, SparsityProfile::high(), rng).edges().size()) / pairs;
    }
    const double mean = total / 30.0;
    const double se = std::sqrt(0.1 * 0.9 / (pairs * 30.0));
    CHECK(std::fabs(mean - 0.1) <= 3.0 * se);
}

TEST_CASE("generated mixed models are conditionally feasible and every edge is nonzero") {
    const auto s = benchmark_schema(3);
    for (int seed = 0; seed < 50; ++seed) {
        Rng rng(static_cast<std::uint64_t>(seed));
        const auto m = random_model(s, SparsityProfile::low(), rng);
        CHECK(joint_feasibility_problems(m).empty());
        for (const auto& [k, b] : m.edges()) CHECK_FALSE(b.isZero(0.0));
        // gaussian precision restricted to gaussian-gaussian couplings is diagonally dominant
        for (std::size_t r = 3; r < 6; ++r) {
            double off = 0.0;
            for (std::size_t t = 3; t < 6; ++t) if (t != r) off += std::fabs(m.edge(r, t)(0, 0));
            CHECK(-2.0 * m.bias(r)[1] > off);
        }
    }
}

TEST_CASE("gibbs accounting and determinism") {
    const auto s = benchmark_schema(2);
    Rng rng(7);
    const auto m = random_model(s, SparsityProfile::low(), rng);
    SamplerConfig cfg{.burn_in = 13, .thin = 3, .seed = 99};
    GibbsReport rep;
    const auto a = gibbs_sample(m, 40, cfg, &rep);
    CHECK(rep.scans == 13 + 40 * 3);
    CHECK(a.size() == 40);
    const auto b = gibbs_sample(m, 40, cfg);
    CHECK(a.values() == b.values());
    cfg.seed = 100;
    CHECK(gibbs_sample(m, 40, cfg).values() != a.values());
}

TEST_CASE("edgeless chains have the family marginals") {
    const auto s = GraphSchema({{"a", FamilySpec::bernoulli()}, {"g", FamilySpec::gaussian()}, {"x", FamilySpec::gamma()}, {"d", FamilySpec::dirichlet(3)}});
    JointModel m(s);
    m.set_bias(0, Vec{{0.4}});
    m.set_bias(1, Vec{{0.5, -0.8}});
    m.set_bias(2, Vec{{1.5, -2.0}});
    m.set_bias(3, Vec{{0.5, 1.0, -0.3}});
    const std::size_t n = 20000;
    const auto d = gibbs_sample(m, n, {.burn_in = 10, .thin = 1, .seed = 3});
    const Vec means = d.stat_means();
    for (std::size_t r = 0; r < s.size(); ++r) {
        const Vec mu = s.family(r).grad_log_partition(as_span(m.bias(r)));
        const Mat cov = s.family(r).hessian_log_partition(as_span(m.bias(r)));
        for (int j = 0; j < s.stat_dim(r); ++j) {
            CAPTURE(r);
            CAPTURE(j);
            CHECK(std::fabs(means[s.stat_offset(r) + j] - mu[j]) <= 3.0 * std::sqrt(cov(j, j) / n));
        }
    }
}

TEST_CASE("two-node bernoulli chains match the exact joint") {
    const GraphSchema s({{"a", FamilySpec::bernoulli()}, {"b", FamilySpec::bernoulli()}});
    for (double w : {-1.0, 0.0, 1.0}) {
        JointModel m(s);
        m.set_bias(0, Vec{{0.2}});
        m.set_bias(1, Vec{{-0.3}});
        m.set_edge(0, 1, Mat::Constant(1, 1, w));
        const std::size_t n = 20000;
        const auto d = gibbs_sample(m, n, {.burn_in = 200, .thin = 10, .seed = 5});
        const auto joint = enumerate_joint(m);
        std::map<std::vector<double>, double> count;
        for (std::size_t i = 0; i < n; ++i) count[{d.value(i, 0)[0], d.value(i, 1)[0]}] += 1.0;
        for (std::size_t k = 0; k < joint.states.size(); ++k) {
            const double pk = std::exp(joint.log_prob[k]);
            const double emp = count[joint.states[k]] / n;
            CHECK(std::fabs(emp - pk) <= 3.0 * std::sqrt(pk * (1.0 - pk) / n));
        }
    }
}

TEST_CASE("three-node categorical chain total variation") {
    const GraphSchema s({{"a", FamilySpec::bernoulli()}, {"b", FamilySpec::categorical(3)}, {"c", FamilySpec::bernoulli()}});
    Rng rng(11);
    const auto m = random_model(s, {0.0, 0.0}, rng);
    const auto d = gibbs_sample(m, 50000, {.burn_in = 2000, .thin = 10, .seed = 12});
    CHECK(tv_distance(m, d) <= 0.02);
}

TEST_CASE("improper user models are reported at the scan that fails") {
    const GraphSchema s({{"g", FamilySpec::gaussian()}, {"x", FamilySpec::gamma()}});
    JointModel m(s);
    m.set_edge(0, 1, Mat{{0.0, 0.0}, {0.0, 5.0}});
    try {
        (void)gibbs_sample(m, 100, {.burn_in = 100, .thin = 1, .seed = 1});
        FAIL("expected ConstraintViolation");
    } catch (const ConstraintViolation& cv) {
        CHECK(cv.sample().has_value());
    }
}
