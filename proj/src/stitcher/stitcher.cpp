#include "vsmrf/stitcher.hpp"

#include <algorithm>
#include <cmath>

#include "vsmrf/errors.hpp"
#include "vsmrf/numeric_format.hpp"

namespace vsmrf {

std::string_view stitch_rule_name(StitchRule rule) { return rule == StitchRule::and_rule ? "and" : "or"; }

StitchRule parse_stitch_rule(std::string_view s) {
    if (s == "and" || s == "AND") return StitchRule::and_rule;
    if (s == "or" || s == "OR") return StitchRule::or_rule;
    throw std::invalid_argument("unknown stitching rule '" + std::string(s) + "' (expected and|or)");
}

std::vector<NodePair> StitchedGraph::edge_list() const {
    std::vector<NodePair> out;
    out.reserve(edges_.size());
    for (const auto& [k, e] : edges_) out.push_back(k);
    return out;
}

double edge_strength(const Mat& block_rt, const Mat& block_tr) {
    return std::sqrt(block_rt.squaredNorm() + block_tr.squaredNorm());
}

StitchedGraph stitch(const GraphSchema& schema, const std::vector<NodeParamVector>& fits, StitchRule rule) {
    const std::size_t p = schema.size();
    std::vector<const NodeParamVector*> by_node(p, nullptr);
    for (const auto& f : fits) {
        if (f.node >= p) throw ValidationError("fit for node " + std::to_string(f.node) + " outside a " + std::to_string(p) + "-node schema");
        const auto m = static_cast<Eigen::Index>(schema.stat_dim(f.node));
        bool ok = f.bias.size() == m && f.blocks.size() == p;
        for (std::size_t t = 0; ok && t < p; ++t) {
            const auto mt = t == f.node ? 0 : static_cast<Eigen::Index>(schema.stat_dim(t));
            ok = f.blocks[t].rows() == (t == f.node ? 0 : m) && f.blocks[t].cols() == mt;
        }
        if (!ok) throw ValidationError("fit for node '" + schema.node(f.node).name + "' does not match the schema");
        if (by_node[f.node] && !(*by_node[f.node] == f)) {
            throw ValidationError("conflicting fits for node '" + schema.node(f.node).name + "'");
        }
        by_node[f.node] = &f;
    }
    for (std::size_t r = 0; r < p; ++r) {
        if (!by_node[r]) throw ValidationError("missing fit for node '" + schema.node(r).name + "'");
    }

    StitchedGraph g(schema, rule);
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t t = r + 1; t < p; ++t) {
            const Mat& rt = by_node[r]->blocks[t];
            const Mat& tr = by_node[t]->blocks[r];
            const bool a = !rt.isZero(0.0);
            const bool b = !tr.isZero(0.0);
            if (rule == StitchRule::and_rule ? (a && b) : (a || b)) {
                g.edges().emplace(NodePair{r, t}, StitchedEdge{rt, tr, edge_strength(rt, tr), 0});
            }
        }
    }
    return g;
}

std::vector<NodeParamVector> fits_at(const std::vector<std::vector<NodeFit>>& paths, std::size_t k) {
    std::vector<NodeParamVector> out;
    out.reserve(paths.size());
    for (const auto& path : paths) {
        if (k >= path.size()) throw std::out_of_range("grid index " + std::to_string(k) + " beyond a path of length " + std::to_string(path.size()));
        out.push_back(path[k].params);
    }
    return out;
}

int effect_sign(const GraphSchema& schema, std::size_t r, std::size_t t, const StitchedEdge& e, const Vec& stat_means) {
    if (stat_means.size() != schema.total_stat_dim()) throw std::invalid_argument("statistic means have the wrong length");
    const Vec mu_r = stat_means.segment(schema.stat_offset(r), schema.stat_dim(r));
    const Vec mu_t = stat_means.segment(schema.stat_offset(t), schema.stat_dim(t));
    double total = 0.0;
    if (e.block_rt.size() > 0) total += (e.block_rt * mu_t).sum();
    if (e.block_tr.size() > 0) total += (e.block_tr * mu_r).sum();
    return total > 0.0 ? 1 : (total < 0.0 ? -1 : 0);
}

void annotate_effects(StitchedGraph& graph, const Vec& stat_means) {
    for (auto& [k, e] : graph.edges()) e.effect_sign = effect_sign(graph.schema(), k.first, k.second, e, stat_means);
}

std::vector<RankedEdge> top_k_edges(const StitchedGraph& graph, std::size_t k) {
    const auto& s = graph.schema();
    auto names = [&](const RankedEdge& e) {
        const std::string& a = s.node(e.r).name;
        const std::string& b = s.node(e.t).name;
        return a <= b ? std::pair<const std::string&, const std::string&>(a, b)
                      : std::pair<const std::string&, const std::string&>(b, a);
    };
    std::vector<RankedEdge> all;
    all.reserve(graph.edges().size());
    for (const auto& [key, e] : graph.edges()) all.push_back({key.first, key.second, e.strength});
    const auto cmp = [&](const RankedEdge& x, const RankedEdge& y) {
        if (x.strength != y.strength) return x.strength > y.strength;
        return names(x) < names(y);
    };
    const std::size_t keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), cmp);
    all.resize(keep);
    return all;
}

namespace {

std::string dot_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out + "\"";
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string effect_name(int sign) { return sign > 0 ? "positive" : (sign < 0 ? "negative" : "neutral"); }

}  // namespace

void write_dot(std::ostream& os, const StitchedGraph& graph) {
    const auto& s = graph.schema();
    os << "graph vsmrf {\n";
    os << "  // stitching rule: " << stitch_rule_name(graph.rule()) << "\n";
    for (std::size_t r = 0; r < s.size(); ++r) {
        const auto& n = s.node(r);
        os << "  " << dot_quote(n.name) << " [label=" << dot_quote(n.name + "\n" + n.family.tag())
           << ", family=" << dot_quote(n.family.tag()) << "];\n";
    }
    for (const auto& [k, e] : graph.edges()) {
        const char* color = e.effect_sign > 0 ? "forestgreen" : (e.effect_sign < 0 ? "firebrick" : "gray40");
        os << "  " << dot_quote(s.node(k.first).name) << " -- " << dot_quote(s.node(k.second).name)
           << " [strength=" << format_double(e.strength) << ", effect=" << effect_name(e.effect_sign)
           << ", color=" << color << "];\n";
    }
    os << "}\n";
}

void write_graphml(std::ostream& os, const StitchedGraph& graph) {
    const auto& s = graph.schema();
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
       << "  <key id=\"family\" for=\"node\" attr.name=\"family\" attr.type=\"string\"/>\n"
       << "  <key id=\"strength\" for=\"edge\" attr.name=\"strength\" attr.type=\"double\"/>\n"
       << "  <key id=\"effect\" for=\"edge\" attr.name=\"effect\" attr.type=\"string\"/>\n"
       << "  <graph id=\"vsmrf\" edgedefault=\"undirected\">\n";
    for (std::size_t r = 0; r < s.size(); ++r) {
        const auto& n = s.node(r);
        os << "    <node id=\"" << xml_escape(n.name) << "\"><data key=\"family\">" << xml_escape(n.family.tag())
           << "</data></node>\n";
    }
    for (const auto& [k, e] : graph.edges()) {
        os << "    <edge source=\"" << xml_escape(s.node(k.first).name) << "\" target=\""
           << xml_escape(s.node(k.second).name) << "\"><data key=\"strength\">" << format_double(e.strength)
           << "</data><data key=\"effect\">" << effect_name(e.effect_sign) << "</data></edge>\n";
    }
    os << "  </graph>\n</graphml>\n";
}

}  // namespace vsmrf
