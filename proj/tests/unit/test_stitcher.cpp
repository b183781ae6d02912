#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "vsmrf/diagnostics.hpp"
#include "vsmrf/sampler.hpp"
#include "vsmrf/stitcher.hpp"

using namespace vsmrf;

namespace {

GraphSchema small_schema() {
    return GraphSchema({{"a", FamilySpec::bernoulli()},
                        {"b", FamilySpec::gaussian()},
                        {"c", FamilySpec::categorical(3)},
                        {"d", FamilySpec::bernoulli()}});
}

std::vector<NodeParamVector> random_fits(const GraphSchema& s, std::mt19937_64& rng, double zero_prob) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd;
    std::vector<NodeParamVector> fits;
    for (std::size_t r = 0; r < s.size(); ++r) {
        auto f = zero_params(s, r);
        for (auto& v : f.bias) v = nd(rng);
        for (std::size_t t = 0; t < s.size(); ++t) {
            if (t == r || u(rng) < zero_prob) continue;
            for (auto& v : f.blocks[t].reshaped()) v = u(rng) < 0.3 ? 0.0 : nd(rng);
        }
        fits.push_back(std::move(f));
    }
    return fits;
}

}  // namespace

TEST_CASE("AND and OR rules") {
    const auto s = small_schema();
    auto fits = std::vector<NodeParamVector>{zero_params(s, 0), zero_params(s, 1), zero_params(s, 2), zero_params(s, 3)};
    for (auto rule : {StitchRule::and_rule, StitchRule::or_rule}) CHECK(stitch(s, fits, rule).edges().empty());

    fits[0].blocks[1](0, 0) = 0.5;  // a -> b only
    CHECK_FALSE(stitch(s, fits, StitchRule::and_rule).has_edge(0, 1));
    const auto g_or = stitch(s, fits, StitchRule::or_rule);
    REQUIRE(g_or.has_edge(1, 0));
    const auto& e = g_or.edges().at({0, 1});
    CHECK(e.block_rt(0, 0) == 0.5);
    CHECK(e.block_tr.rows() == 2);
    CHECK(e.block_tr.isZero(0.0));
    CHECK(e.strength == 0.5);

    fits[1].blocks[0](1, 0) = -1e-300;  // any nonzero entry counts
    CHECK(stitch(s, fits, StitchRule::and_rule).has_edge(0, 1));
}

TEST_CASE("AND edges are a subset of OR edges") {
    const auto s = small_schema();
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 30; ++rep) {
        const auto fits = random_fits(s, rng, 0.5);
        const auto a = stitch(s, fits, StitchRule::and_rule).edge_list();
        const auto o = stitch(s, fits, StitchRule::or_rule).edge_list();
        CHECK(std::includes(o.begin(), o.end(), a.begin(), a.end()));
    }
}

TEST_CASE("stitching ignores fit order and repeated fits") {
    const auto s = small_schema();
    std::mt19937_64 rng(4);
    const auto fits = random_fits(s, rng, 0.4);
    const auto base = stitch(s, fits, StitchRule::or_rule);
    auto shuffled = fits;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    shuffled.push_back(fits[2]);
    const auto again = stitch(s, shuffled, StitchRule::or_rule);
    REQUIRE(base.edges().size() == again.edges().size());
    for (const auto& [k, e] : base.edges()) {
        const auto& f = again.edges().at(k);
        CHECK(e.block_rt == f.block_rt);
        CHECK(e.block_tr == f.block_tr);
        CHECK(e.strength == f.strength);
    }
}

TEST_CASE("stitching errors") {
    const auto s = small_schema();
    std::vector<NodeParamVector> fits{zero_params(s, 0), zero_params(s, 1), zero_params(s, 3)};
    CHECK_THROWS_WITH_AS(stitch(s, fits, StitchRule::and_rule), doctest::Contains("missing fit for node 'c'"), ValidationError);
    fits.push_back(zero_params(s, 2));
    auto conflict = zero_params(s, 1);
    conflict.bias[0] = 1.0;
    fits.push_back(conflict);
    CHECK_THROWS_AS(stitch(s, fits, StitchRule::and_rule), ValidationError);
    fits.pop_back();
    fits[0].blocks[1] = Mat::Zero(2, 2);
    CHECK_THROWS_AS(stitch(s, fits, StitchRule::and_rule), ValidationError);
    CHECK(parse_stitch_rule("AND") == StitchRule::and_rule);
    CHECK_THROWS_AS(parse_stitch_rule("xor"), std::invalid_argument);
}

TEST_CASE("exact recovery of a symmetric truth stitches identically under both rules") {
    const auto s = small_schema();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const auto truth = random_model(s, {0.5, 0.3}, rng);
        std::vector<NodeParamVector> fits;
        for (std::size_t r = 0; r < s.size(); ++r) fits.push_back(true_node_params(truth, r));
        const auto a = stitch(s, fits, StitchRule::and_rule);
        const auto o = stitch(s, fits, StitchRule::or_rule);
        CHECK(a.edge_list() == o.edge_list());
        CHECK(a.edge_list() == truth.edge_list());
    }
}

TEST_CASE("edge strength") {
    CHECK(edge_strength(Mat::Zero(1, 2), Mat::Zero(2, 1)) == 0.0);
    CHECK(edge_strength(Mat::Constant(1, 1, 3.0), Mat::Constant(1, 1, 4.0)) == 5.0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 20; ++rep) {
        Mat a(2, 3), b(3, 2);
        for (auto& v : a.reshaped()) v = nd(rng);
        for (auto& v : b.reshaped()) v = nd(rng);
        for (double c : {-2.0, 0.5, 4.0}) {
            CHECK(edge_strength(c * a, c * b) == doctest::Approx(std::fabs(c) * edge_strength(a, b)).epsilon(1e-15));
        }
    }
}

TEST_CASE("top_k_edges ordering") {
    const GraphSchema s({{"d", FamilySpec::bernoulli()},
                         {"b", FamilySpec::bernoulli()},
                         {"c", FamilySpec::bernoulli()},
                         {"a", FamilySpec::bernoulli()}});
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> level(0, 3);
    for (int rep = 0; rep < 30; ++rep) {
        StitchedGraph g(s, StitchRule::or_rule);
        for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t t = r + 1; t < 4; ++t) {
                const int l = level(rng);
                if (l == 0) continue;
                g.edges().emplace(NodePair{r, t}, StitchedEdge{Mat::Constant(1, 1, l), Mat::Zero(1, 1), static_cast<double>(l), 0});
            }
        }
        CHECK(top_k_edges(g, 0).empty());
        const auto all = top_k_edges(g, 100);
        CHECK(all.size() == g.edges().size());
        // oracle: full sort on (-strength, sorted name pair)
        std::vector<std::tuple<double, std::string, std::string>> keys;
        for (const auto& [k, e] : g.edges()) {
            auto x = s.node(k.first).name, y = s.node(k.second).name;
            if (y < x) std::swap(x, y);
            keys.emplace_back(-e.strength, x, y);
        }
        std::sort(keys.begin(), keys.end());
        for (std::size_t i = 0; i < all.size(); ++i) {
            auto x = s.node(all[i].r).name, y = s.node(all[i].t).name;
            if (y < x) std::swap(x, y);
            CHECK(std::get<1>(keys[i]) == x);
            CHECK(std::get<2>(keys[i]) == y);
            CHECK(-std::get<0>(keys[i]) == all[i].strength);
        }
        const auto two = top_k_edges(g, 2);
        for (std::size_t i = 0; i < two.size(); ++i) CHECK(two[i].r == all[i].r);
    }
}

TEST_CASE("effect signs use neighbour statistic means") {
    const GraphSchema s({{"a", FamilySpec::bernoulli()}, {"g", FamilySpec::gaussian()}});
    StitchedEdge e{Mat(1, 2), Mat(2, 1), 0.0, 0};
    e.block_rt << 1.0, -1.0;  // theta_ag, weighted by (E x, E x^2) of g
    e.block_tr << 0.5, 0.0;   // theta_ga, weighted by E a
    Vec mu(3);
    mu << 0.5, 0.2, 2.0;
    // 1*0.2 - 1*2.0 + 0.5*0.5 < 0
    CHECK(effect_sign(s, 0, 1, e, mu) == -1);
    mu << 0.5, 3.0, 1.0;
    CHECK(effect_sign(s, 0, 1, e, mu) == 1);
    e.block_rt.setZero();
    e.block_tr.setZero();
    CHECK(effect_sign(s, 0, 1, e, mu) == 0);
    CHECK_THROWS(effect_sign(s, 0, 1, e, Vec::Zero(2)));
}

TEST_CASE("graph export") {
    const GraphSchema s({{"x<&\"", FamilySpec::bernoulli()}, {"y", FamilySpec::gamma()}, {"z", FamilySpec::gaussian()}});
    StitchedGraph g(s, StitchRule::and_rule);
    g.edges().emplace(NodePair{0, 1}, StitchedEdge{Mat::Constant(1, 2, 0.25), Mat::Constant(2, 1, 0.25), 0.5, -1});
    std::ostringstream dot, gml;
    write_dot(dot, g);
    write_graphml(gml, g);
    CHECK(dot.str().find("\"x<&\\\"\" -- \"y\" [strength=0.5, effect=negative") != std::string::npos);
    CHECK(dot.str().find("family=\"gamma\"") != std::string::npos);
    CHECK(dot.str().find("\"z\"") != std::string::npos);
    CHECK(gml.str().find("<node id=\"x&lt;&amp;&quot;\">") != std::string::npos);
    CHECK(gml.str().find("<data key=\"strength\">0.5</data><data key=\"effect\">negative</data>") != std::string::npos);
    CHECK(gml.str().find("edgedefault=\"undirected\"") != std::string::npos);
}
