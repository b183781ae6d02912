#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "support/oracles.hpp"
#include "vsmrf/diagnostics.hpp"
#include "vsmrf/sampler.hpp"
#include "vsmrf/stitcher.hpp"

using namespace vsmrf;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

GraphSchema mixed_schema() {
    return GraphSchema({{"a", FamilySpec::bernoulli()},
                        {"b", FamilySpec::gaussian()},
                        {"c", FamilySpec::categorical(3)},
                        {"d", FamilySpec::bernoulli()},
                        {"e", FamilySpec::gamma()}});
}

NodeFit as_fit(NodeParamVector p, double l1, double l2) {
    NodeFit f;
    f.params = std::move(p);
    f.lambda1 = l1;
    f.lambda2 = l2;
    return f;
}

/// Shoelace area under the closed polygon (0,0) -> sorted points -> (1,1) -> (1,0).
double shoelace_auc(std::vector<std::pair<double, double>> pts) {
    pts.emplace_back(0.0, 0.0);
    pts.emplace_back(1.0, 1.0);
    std::sort(pts.begin(), pts.end());
    pts.emplace_back(1.0, 0.0);
    double twice = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& p = pts[i];
        const auto& q = pts[(i + 1) % pts.size()];
        twice += p.first * q.second - q.first * p.second;
    }
    return std::fabs(twice) / 2.0;
}

double nested_norm_oracle(const std::vector<double>& v, const Groups& groups, double a, double b) {
    auto norm = [](const std::vector<double>& x, double p) {
        double out = 0.0;
        if (std::isinf(p)) {
            for (double y : x) out = std::max(out, std::fabs(y));
            return out;
        }
        for (double y : x) out += std::pow(std::fabs(y), p);
        return std::pow(out, 1.0 / p);
    };
    std::vector<double> inner;
    for (const auto& g : groups) {
        std::vector<double> part;
        for (std::size_t i : g) part.push_back(v[i]);
        inner.push_back(norm(part, b));
    }
    return norm(inner, a);
}

Groups random_partition(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::uniform_int_distribution<std::size_t> cut(1, 3);
    Groups out;
    std::size_t i = 0;
    while (i < n) {
        const std::size_t len = std::min(cut(rng), n - i);
        out.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(i), idx.begin() + static_cast<std::ptrdiff_t>(i + len));
        i += len;
    }
    return out;
}

}  // namespace

TEST_CASE("confusion counts match an exhaustive comparison") {
    const auto s = mixed_schema();
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 30; ++rep) {
        Rng mrng(static_cast<std::uint64_t>(rep));
        const auto truth = random_model(s, {0.5, 0.4}, mrng);
        std::vector<NodeParamVector> fits;
        for (std::size_t r = 0; r < s.size(); ++r) {
            auto f = true_node_params(truth, r);
            for (std::size_t t = 0; t < s.size(); ++t) {
                if (t == r) continue;
                for (auto& v : f.blocks[t].reshaped()) {
                    const double x = u(rng);
                    if (x < 0.25) v = 0.0;
                    else if (x < 0.5) v = 0.1;
                }
            }
            fits.push_back(std::move(f));
        }
        ConfusionCounts edge_oracle, param_oracle;
        for (std::size_t r = 0; r < s.size(); ++r) {
            for (std::size_t t = r + 1; t < s.size(); ++t) {
                const bool est = !fits[r].blocks[t].isZero(0.0) && !fits[t].blocks[r].isZero(0.0);
                const bool tru = truth.has_edge(r, t);
                (tru ? (est ? edge_oracle.tp : edge_oracle.fn) : (est ? edge_oracle.fp : edge_oracle.tn))++;
                const Mat tb = truth.edge(r, t);
                for (Eigen::Index a = 0; a < tb.rows(); ++a) {
                    for (Eigen::Index b = 0; b < tb.cols(); ++b) {
                        const bool pe = est && (fits[r].blocks[t](a, b) != 0.0 || fits[t].blocks[r](b, a) != 0.0);
                        const bool pt = tb(a, b) != 0.0;
                        (pt ? (pe ? param_oracle.tp : param_oracle.fn) : (pe ? param_oracle.fp : param_oracle.tn))++;
                    }
                }
            }
        }
        const auto ec = compare_to_truth(truth, fits, RocLevel::edge);
        const auto pc = compare_to_truth(truth, fits, RocLevel::parameter);
        CHECK(ec.tp == edge_oracle.tp);
        CHECK(ec.fp == edge_oracle.fp);
        CHECK(ec.tn == edge_oracle.tn);
        CHECK(ec.fn == edge_oracle.fn);
        CHECK(pc.tp == param_oracle.tp);
        CHECK(pc.fp == param_oracle.fp);
        CHECK(pc.tn == param_oracle.tn);
        CHECK(pc.fn == param_oracle.fn);
        CHECK(ec.tp + ec.fp + ec.tn + ec.fn == s.size() * (s.size() - 1) / 2);
    }
}

TEST_CASE("ROC endpoints on a fitted path") {
    const GraphSchema s({{"a", FamilySpec::bernoulli()}, {"b", FamilySpec::bernoulli()}, {"c", FamilySpec::bernoulli()},
                         {"d", FamilySpec::bernoulli()}});
    JointModel truth(s);
    truth.set_edge(0, 1, Mat::Constant(1, 1, 1.0));
    truth.set_edge(2, 3, Mat::Constant(1, 1, -1.0));
    const auto d = gibbs_sample(truth, 400, {200, 2, 1});
    const auto paths = fit_all_nodes(d, {50.0, 0.0}, {0.0}, AdmmConfig{});
    for (auto level : {RocLevel::edge, RocLevel::parameter}) {
        const auto roc = roc_curve(truth, paths, level);
        REQUIRE(roc.size() == 2);
        CHECK(roc[0].tpr == 0.0);
        CHECK(roc[0].fpr == 0.0);
        CHECK(roc[1].tpr == 1.0);
        CHECK(roc[1].fpr == 1.0);
        CHECK(roc[1].lambda1 == 0.0);
        CHECK(auc(roc) == 0.5);
    }
    auto bad = paths;
    bad[2].pop_back();
    CHECK_THROWS_AS(roc_curve(truth, bad, RocLevel::edge), std::invalid_argument);
    bad = paths;
    bad[1][0].lambda1 = 49.0;
    CHECK_THROWS_AS(roc_curve(truth, bad, RocLevel::edge), std::invalid_argument);
}

TEST_CASE("ROC rates flag empty denominators") {
    const GraphSchema s({{"a", FamilySpec::bernoulli()}, {"b", FamilySpec::bernoulli()}});
    const JointModel truth(s);
    std::vector<std::vector<NodeFit>> paths{{as_fit(zero_params(s, 0), 1.0, 0.0)}, {as_fit(zero_params(s, 1), 1.0, 0.0)}};
    const auto roc = roc_curve(truth, paths, RocLevel::edge);
    CHECK_FALSE(roc[0].tpr_defined);
    CHECK(roc[0].fpr_defined);
    CHECK(roc[0].counts.tn == 1);
}

TEST_CASE("auc") {
    CHECK(auc(std::vector<std::pair<double, double>>{{0.0, 0.0}, {1.0, 1.0}}) == 0.5);
    CHECK(auc(std::vector<std::pair<double, double>>{{0.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}) == 1.0);
    // one operating point joined to the corners
    CHECK(auc(std::vector<std::pair<double, double>>{{0.2, 0.3}}) == doctest::Approx(0.2 * 0.15 + 0.8 * 0.65));
    CHECK_THROWS_AS(auc(std::vector<std::pair<double, double>>{}), std::invalid_argument);
    CHECK_THROWS_AS(auc(std::vector<std::pair<double, double>>{{0.2, 0.3}, {1.2, 0.3}}), std::invalid_argument);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> count(2, 25);
    for (int rep = 0; rep < 200; ++rep) {
        // monotone ROC-like point set with ties
        std::vector<double> f(static_cast<std::size_t>(count(rng))), t(f.size());
        for (auto& v : f) v = std::round(u(rng) * 8.0) / 8.0;
        for (auto& v : t) v = u(rng);
        std::sort(f.begin(), f.end());
        std::sort(t.begin(), t.end());
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < f.size(); ++i) pts.emplace_back(f[i], t[i]);
        std::shuffle(pts.begin(), pts.end(), rng);
        const double a = auc(pts);
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
        CHECK(std::fabs(a - shoelace_auc(pts)) <= 1e-12);
    }
}

TEST_CASE("group structured norms") {
    Vec v(4);
    v << 3.0, 4.0, 0.0, 0.0;
    CHECK(group_structured_norm(v, {{0, 1}, {2, 3}}, kInf, 2.0) == 5.0);
    CHECK(group_structured_norm(v, {{0, 1, 2, 3}}, 2.0, 2.0) == 5.0);
    CHECK_THROWS_AS(group_structured_norm(v, {{0, 1}, {1, 2, 3}}, 2.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(group_structured_norm(v, {{0, 1}, {2}}, 2.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(group_structured_norm(v, {{0, 1}, {2, 3}}, 0.5, 2.0), std::invalid_argument);

    std::mt19937_64 rng(10);
    std::normal_distribution<double> nd;
    const std::vector<double> exps{1.0, 1.5, 2.0, 3.0, kInf};
    std::uniform_int_distribution<std::size_t> pick(0, exps.size() - 1);
    std::uniform_int_distribution<std::size_t> len(1, 9);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = len(rng);
        Vec x(static_cast<Eigen::Index>(n));
        for (auto& y : x) y = nd(rng);
        const auto groups = random_partition(n, rng);
        const double a = exps[pick(rng)], b = exps[pick(rng)];
        const double got = group_structured_norm(x, groups, a, b);
        CHECK(got == doctest::Approx(nested_norm_oracle(std::vector<double>(x.begin(), x.end()), groups, a, b)).epsilon(1e-13));
        // singleton groups reduce to the plain a-norm
        Groups single;
        for (std::size_t i = 0; i < n; ++i) single.push_back({i});
        CHECK(group_structured_norm(x, single, a, b) == lp_norm(x, a));
    }
}

TEST_CASE("matrix group structured norm") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 100; ++rep) {
        Mat m(5, 4);
        for (auto& y : m.reshaped()) y = nd(rng);
        const auto rg = random_partition(5, rng);
        const auto cg = random_partition(4, rng);
        for (double a : {2.0, kInf}) {
            for (double c : {1.0, 2.0, kInf}) {
                std::vector<double> rows;
                for (Eigen::Index i = 0; i < 5; ++i) {
                    std::vector<double> row(m.row(i).begin(), m.row(i).end());
                    rows.push_back(nested_norm_oracle(row, cg, c, 2.0));
                }
                CHECK(group_structured_norm(m, rg, cg, a, c) == doctest::Approx(nested_norm_oracle(rows, rg, a, 2.0)).epsilon(1e-13));
            }
        }
    }
    // (inf,2),(2,2) is the largest Frobenius norm of a row-group slab
    Mat m(3, 2);
    m << 1, 2, 2, 0, 0, 3;
    CHECK(group_structured_norm(m, {{0, 1}, {2}}, {{0}, {1}}, kInf, 2.0) == doctest::Approx(3.0));
}

TEST_CASE("sample Fisher information") {
    // one sample, bernoulli node with a bernoulli and a gaussian neighbour
    const GraphSchema s({{"a", FamilySpec::bernoulli()}, {"b", FamilySpec::bernoulli()}, {"g", FamilySpec::gaussian()}});
    const Dataset d(s, {1.0, 1.0, 2.0});
    auto theta = zero_params(s, 0);
    theta.bias[0] = 0.2;
    theta.blocks[1](0, 0) = -0.5;
    theta.blocks[2] << 0.1, 0.05;
    const double eta = 0.2 - 0.5 + 0.1 * 2.0 + 0.05 * 4.0;
    const double p = 1.0 / (1.0 + std::exp(-eta));
    Vec b(3);
    b << 1.0, 2.0, 4.0;
    const Mat expect = p * (1.0 - p) * b * b.transpose();
    const Mat q = sample_fisher_information(theta, d, 0);
    CHECK(test::max_scaled_error(q, expect) <= 1e-14);

    Rng rng(4);
    const auto truth = random_model(mixed_schema(), {0.4, 0.3}, rng);
    const auto data = gibbs_sample(truth, 300, {200, 2, 4});
    for (std::size_t r = 0; r < 5; ++r) {
        const auto tp = true_node_params(truth, r);
        const Mat qr = sample_fisher_information(tp, data, r);
        CHECK((qr - qr.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(Eigen::SelfAdjointEigenSolver<Mat>(qr).eigenvalues().minCoeff() >= -1e-10);
        const Vec flat = flatten(tp);
        const auto m = static_cast<Eigen::Index>(truth.schema().stat_dim(r));
        const Mat fd = test::fd_jacobian([&](const Vec& x) { return node_loss_grad(unflatten(truth.schema(), r, as_span(x)), data, r); }, flat);
        CHECK(test::max_scaled_error(qr, fd.bottomRightCorner(fd.rows() - m, fd.cols() - m)) <= 1e-5);
    }
}

TEST_CASE("sparsistency report on constructed cases") {
    const GraphSchema s({{"r", FamilySpec::bernoulli()}, {"u", FamilySpec::bernoulli()}, {"v", FamilySpec::bernoulli()}});
    const std::vector<double> alphas{0.1, 0.5, 0.9, 1.0};
    {
        const JointModel independent(s);
        const auto d = gibbs_sample(independent, 200, {100, 1, 2});
        const auto rep = check_sparsistency_conditions(independent, d, 0, alphas);
        CHECK(rep.degenerate);
        CHECK(rep.d_r == 0);
    }
    // u and v are never both 1, so their cross term in Q vanishes
    JointModel truth(s);
    truth.set_edge(0, 1, Mat::Constant(1, 1, 0.8));
    std::vector<double> rows;
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> pick(0, 2);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int i = 0; i < 300; ++i) {
        const int which = pick(rng);
        rows.insert(rows.end(), {static_cast<double>(coin(rng)), which == 1 ? 1.0 : 0.0, which == 2 ? 1.0 : 0.0});
    }
    const Dataset d(s, rows);
    const auto rep = check_sparsistency_conditions(truth, d, 0, alphas);
    CHECK_FALSE(rep.degenerate);
    CHECK_FALSE(rep.singular);
    CHECK(rep.d_r == 1);
    CHECK(rep.c_min > 0.0);
    CHECK(rep.incoherence == 0.0);
    REQUIRE(rep.alpha.has_value());
    CHECK(*rep.alpha == 1.0);
    CHECK(rep.min_edge_norm == 0.8);
    CHECK(rep.m_ratio == 1.0);
    CHECK(rep.nu_ratio == 1.0);
    CHECK(rep.max_lambda_sum == doctest::Approx(0.8 * rep.c_min / 10.0));
    // second moment of (u, v): diag(p_u, p_v) with no cross term
    CHECK(rep.d_max_hat > 0.0);
    CHECK(rep.d_max_hat <= 1.0);
    CHECK_THROWS_AS(check_sparsistency_conditions(truth, d, 0, {0.0}), std::invalid_argument);
}

TEST_CASE("dependency condition holds on generated models") {
    GraphSchema s({{"b0", FamilySpec::bernoulli()}, {"b1", FamilySpec::bernoulli()}, {"g0", FamilySpec::gaussian()},
                   {"g1", FamilySpec::gaussian()}, {"x0", FamilySpec::gamma()}, {"d0", FamilySpec::dirichlet(3)}});
    int good = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        const auto truth = random_model(s, {0.6, 0.5}, rng);
        const auto d = gibbs_sample(truth, 2000, {500, 5, seed});
        for (std::size_t r = 0; r < s.size(); ++r) {
            const auto rep = check_sparsistency_conditions(truth, d, r, {0.5});
            CHECK(rep.nu_ratio > 0.0);
            CHECK(rep.m_ratio == doctest::Approx(1.0 / 3.0));
            if (rep.degenerate) continue;
            ++total;
            good += rep.c_min > 0.0;
        }
    }
    CHECK(total > 0);
    CHECK(good == total);
}
