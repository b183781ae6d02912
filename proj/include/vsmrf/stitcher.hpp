#pragma once

// Undirected graph assembly from per-node neighbourhood fits.

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "vsmrf/model.hpp"
#include "vsmrf/solver.hpp"

namespace vsmrf {

enum class StitchRule {
    and_rule,  ///< keep {r, t} when both pseudo-edges are nonzero
    or_rule,   ///< keep {r, t} when either pseudo-edge is nonzero
};

std::string_view stitch_rule_name(StitchRule rule);
StitchRule parse_stitch_rule(std::string_view s);

struct StitchedEdge {
    Mat block_rt;  ///< from node r's fit, m_r x m_t (r < t)
    Mat block_tr;  ///< from node t's fit, m_t x m_r
    double strength = 0.0;
    /// -1, 0 or +1; 0 until annotate_effects() runs.
    int effect_sign = 0;
};

class StitchedGraph {
   public:
    StitchedGraph(GraphSchema schema, StitchRule rule) : schema_(std::move(schema)), rule_(rule) {}

    const GraphSchema& schema() const { return schema_; }
    StitchRule rule() const { return rule_; }
    const std::map<NodePair, StitchedEdge>& edges() const { return edges_; }
    std::map<NodePair, StitchedEdge>& edges() { return edges_; }
    bool has_edge(std::size_t r, std::size_t t) const { return edges_.count(ordered_pair(r, t)) > 0; }
    std::vector<NodePair> edge_list() const;

   private:
    GraphSchema schema_;
    StitchRule rule_;
    std::map<NodePair, StitchedEdge> edges_;
};

/// One fit per node in any order. Repeated identical fits for a node are
/// accepted; conflicting ones, missing nodes or foreign shapes throw ValidationError.
StitchedGraph stitch(const GraphSchema& schema, const std::vector<NodeParamVector>& fits, StitchRule rule);

/// Column k of a per-node path collection ([node][grid point]).
std::vector<NodeParamVector> fits_at(const std::vector<std::vector<NodeFit>>& paths, std::size_t k);

/// L2 norm of both blocks taken together.
double edge_strength(const Mat& block_rt, const Mat& block_tr);

/// Sign of sum_{a,c} theta_rt[a,c] mu_t[c] + sum_{c,a} theta_tr[c,a] mu_r[a], where
/// mu are the stacked statistic means (length total_stat_dim).
int effect_sign(const GraphSchema& schema, std::size_t r, std::size_t t, const StitchedEdge& e, const Vec& stat_means);
void annotate_effects(StitchedGraph& graph, const Vec& stat_means);

struct RankedEdge {
    std::size_t r = 0;
    std::size_t t = 0;
    double strength = 0.0;
};

/// Strongest k edges; ties go to the lexicographically smaller (name, name)
/// pair, each pair written with its smaller name first.
std::vector<RankedEdge> top_k_edges(const StitchedGraph& graph, std::size_t k);

void write_dot(std::ostream& os, const StitchedGraph& graph);
void write_graphml(std::ostream& os, const StitchedGraph& graph);

}  // namespace vsmrf
