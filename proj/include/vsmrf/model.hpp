#pragma once

// Pairwise vector-space MRF: node-conditional natural parameters
//
//   eta_r(x) = theta_r + sum_{t != r} theta_rt B_t(x_t)
//
// and the joint whose log-density is, up to its normalizer,
//
//   sum_r <B_r(x_r), theta_r> + sum_{r < t} B_r(x_r)^T theta_rt B_t(x_t).

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vsmrf/expfam.hpp"

namespace vsmrf {

struct NodeSpec {
    std::string name;
    FamilySpec family;
};

class GraphSchema {
   public:
    explicit GraphSchema(std::vector<NodeSpec> nodes);

    std::size_t size() const { return nodes_.size(); }
    const NodeSpec& node(std::size_t r) const { return nodes_.at(r); }
    const std::vector<NodeSpec>& nodes() const { return nodes_; }
    const FamilySpec& family(std::size_t r) const { return nodes_.at(r).family; }
    int stat_dim(std::size_t r) const { return nodes_.at(r).family.stat_dim(); }
    int value_dim(std::size_t r) const { return nodes_.at(r).family.value_dim(); }

    /// Offsets into the stacked statistic vector (B_1, ..., B_p) and the raw value row.
    int stat_offset(std::size_t r) const { return stat_offsets_.at(r); }
    int value_offset(std::size_t r) const { return value_offsets_.at(r); }
    int total_stat_dim() const { return stat_offsets_.back(); }
    int total_value_dim() const { return value_offsets_.back(); }
    int max_stat_dim() const;
    int min_stat_dim() const;

    std::optional<std::size_t> index_of(std::string_view name) const;

    friend bool operator==(const GraphSchema& a, const GraphSchema& b);

   private:
    std::vector<NodeSpec> nodes_;
    std::vector<int> stat_offsets_;   ///< size p + 1
    std::vector<int> value_offsets_;  ///< size p + 1
};

using NodePair = std::pair<std::size_t, std::size_t>;

/// Canonical (min, max) ordering of an unordered pair.
inline NodePair ordered_pair(std::size_t a, std::size_t b) {
    return a < b ? NodePair{a, b} : NodePair{b, a};
}

class JointModel {
   public:
    /// Biases start at each family's feasible point; no edges.
    explicit JointModel(GraphSchema schema);

    const GraphSchema& schema() const { return schema_; }
    std::size_t size() const { return schema_.size(); }

    const Vec& bias(std::size_t r) const { return bias_.at(r); }
    void set_bias(std::size_t r, Vec theta);

    /// theta_rt with shape (m_r, m_t); zero when the pair has no edge.
    Mat edge(std::size_t r, std::size_t t) const;
    bool has_edge(std::size_t r, std::size_t t) const;
    /// Stores theta_rt (and thereby theta_tr = theta_rt^T). An all-zero block removes the edge.
    void set_edge(std::size_t r, std::size_t t, const Mat& theta_rt);

    /// Stored blocks keyed by (min, max); the value is theta_{min,max}.
    const std::map<NodePair, Mat>& edges() const { return edges_; }
    std::vector<NodePair> edge_list() const;
    std::vector<std::size_t> neighbors(std::size_t r) const;

   private:
    GraphSchema schema_;
    std::vector<Vec> bias_;
    std::map<NodePair, Mat> edges_;
};

/// Stacked statistics (B_1(x_1), ..., B_p(x_p)) of a full sample; validates every node value.
Vec stacked_statistics(const GraphSchema& schema, std::span<const double> x);

/// theta_r + sum_{t != r} theta_rt B_t, from stacked statistics. No feasibility check.
Vec conditional_eta_from_stats(const JointModel& model, std::size_t r, std::span<const double> stats);

/// Node-conditional natural parameter given a full sample (x_r itself is ignored).
/// Throws DomainError for invalid neighbor values and ConstraintViolation when
/// the result is infeasible for node r's family.
Vec conditional_natural_params(const JointModel& model, std::size_t r, std::span<const double> x);

/// sum_r [<B_r, eta_r> + C_r - A_r(eta_r)] for one full sample.
double node_log_pseudolikelihood(const JointModel& model, std::span<const double> x);

/// Unnormalized joint log-density of one full sample.
double joint_log_potential(const JointModel& model, std::span<const double> x);

/// Exhaustively normalized joint of a model whose nodes are all discrete.
struct EnumeratedJoint {
    std::vector<std::vector<double>> states;  ///< full raw-value rows
    std::vector<double> log_prob;
};
EnumeratedJoint enumerate_joint(const JointModel& model, std::size_t max_states = 1u << 20);

/// Per-statistic closed ranges used by the interval feasibility check; empty
/// optional entries fall back to the family's exact range.
struct StatBounds {
    std::vector<std::vector<std::optional<StatRange>>> overrides;  ///< [node][stat]
};

/// Interval-arithmetic proof that every node-conditional natural parameter is
/// feasible for every configuration whose statistics lie in the given ranges.
/// Also checks equality constraints on bias and edge blocks. Returns the list
/// of violations (empty when the model is valid).
std::vector<std::string> joint_feasibility_problems(const JointModel& model,
                                                    const StatBounds* truncation = nullptr);
/// Throws ValidationError with the first problem.
void validate_joint_feasibility(const JointModel& model, const StatBounds* truncation = nullptr);

/// Range of theta_r[a] + sum_t theta_rt[a,:] B_t over the statistic ranges.
StatRange conditional_eta_range(const JointModel& model, std::size_t r, int a,
                                const StatBounds* truncation = nullptr);

// ---------------------------------------------------------------------------
// Per-node parameter vector of the pseudo-likelihood problem.

struct NodeParamVector {
    std::size_t node = 0;
    Vec bias;                 ///< theta_r, length m_r (unpenalized)
    std::vector<Mat> blocks;  ///< blocks[t] = theta_rt (m_r x m_t); blocks[node] is 0x0

    friend bool operator==(const NodeParamVector& a, const NodeParamVector& b);
};

/// tau = m_r * (1 + sum_{t != r} m_t)
std::size_t param_length(const GraphSchema& schema, std::size_t r);

NodeParamVector zero_params(const GraphSchema& schema, std::size_t r);

/// Bias first, then blocks in ascending node index, each block row-major.
Vec flatten(const NodeParamVector& npv);
NodeParamVector unflatten(const GraphSchema& schema, std::size_t r, std::span<const double> flat);

/// Offsets of each pseudo-edge block inside the flat layout.
struct ParamLayout {
    std::size_t node = 0;
    int m_r = 0;
    std::size_t tau = 0;
    std::vector<std::size_t> neighbors;     ///< all t != r, ascending
    std::vector<std::size_t> block_offset;  ///< flat offset of theta_rt, per neighbor slot
    std::vector<int> block_cols;            ///< m_t per neighbor slot

    static ParamLayout make(const GraphSchema& schema, std::size_t r);
    std::size_t block_size(std::size_t slot) const { return static_cast<std::size_t>(m_r * block_cols[slot]); }
};

}  // namespace vsmrf
