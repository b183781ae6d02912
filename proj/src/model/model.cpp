#include "vsmrf/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "vsmrf/numeric_format.hpp"

namespace vsmrf {

GraphSchema::GraphSchema(std::vector<NodeSpec> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw std::invalid_argument("schema must contain at least one node");
    std::set<std::string> seen;
    stat_offsets_.push_back(0);
    value_offsets_.push_back(0);
    for (const auto& n : nodes_) {
        if (n.name.empty()) throw std::invalid_argument("schema: empty node name");
        if (!seen.insert(n.name).second) {
            throw std::invalid_argument("schema: duplicate node name '" + n.name + "'");
        }
        stat_offsets_.push_back(stat_offsets_.back() + n.family.stat_dim());
        value_offsets_.push_back(value_offsets_.back() + n.family.value_dim());
    }
}

int GraphSchema::max_stat_dim() const {
    int m = 0;
    for (const auto& n : nodes_) m = std::max(m, n.family.stat_dim());
    return m;
}

int GraphSchema::min_stat_dim() const {
    int m = std::numeric_limits<int>::max();
    for (const auto& n : nodes_) m = std::min(m, n.family.stat_dim());
    return m;
}

std::optional<std::size_t> GraphSchema::index_of(std::string_view name) const {
    for (std::size_t r = 0; r < nodes_.size(); ++r) {
        if (nodes_[r].name == name) return r;
    }
    return std::nullopt;
}

bool operator==(const GraphSchema& a, const GraphSchema& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t r = 0; r < a.size(); ++r) {
        if (a.nodes_[r].name != b.nodes_[r].name || !(a.nodes_[r].family == b.nodes_[r].family)) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------

JointModel::JointModel(GraphSchema schema) : schema_(std::move(schema)) {
    for (std::size_t r = 0; r < schema_.size(); ++r) bias_.push_back(schema_.family(r).feasible_point());
}

void JointModel::set_bias(std::size_t r, Vec theta) {
    if (theta.size() != schema_.stat_dim(r)) {
        throw std::invalid_argument("set_bias: length mismatch for node " + schema_.node(r).name);
    }
    bias_.at(r) = std::move(theta);
}

Mat JointModel::edge(std::size_t r, std::size_t t) const {
    if (r == t) throw std::invalid_argument("edge: self pair");
    const auto it = edges_.find(ordered_pair(r, t));
    if (it == edges_.end()) return Mat::Zero(schema_.stat_dim(r), schema_.stat_dim(t));
    return r < t ? it->second : Mat(it->second.transpose());
}

bool JointModel::has_edge(std::size_t r, std::size_t t) const {
    return edges_.contains(ordered_pair(r, t));
}

void JointModel::set_edge(std::size_t r, std::size_t t, const Mat& theta_rt) {
    if (r == t || r >= size() || t >= size()) throw std::invalid_argument("set_edge: bad node pair");
    if (theta_rt.rows() != schema_.stat_dim(r) || theta_rt.cols() != schema_.stat_dim(t)) {
        throw std::invalid_argument("set_edge: block shape does not match (m_r, m_t)");
    }
    const NodePair key = ordered_pair(r, t);
    if (theta_rt.isZero(0.0)) {
        edges_.erase(key);
        return;
    }
    edges_[key] = r < t ? theta_rt : Mat(theta_rt.transpose());
}

std::vector<NodePair> JointModel::edge_list() const {
    std::vector<NodePair> out;
    for (const auto& [k, v] : edges_) out.push_back(k);
    return out;
}

std::vector<std::size_t> JointModel::neighbors(std::size_t r) const {
    std::vector<std::size_t> out;
    for (const auto& [k, v] : edges_) {
        if (k.first == r) out.push_back(k.second);
        if (k.second == r) out.push_back(k.first);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------

Vec stacked_statistics(const GraphSchema& schema, std::span<const double> x) {
    if (static_cast<int>(x.size()) != schema.total_value_dim()) {
        throw std::invalid_argument("sample has " + std::to_string(x.size()) + " values, schema needs " +
                                    std::to_string(schema.total_value_dim()));
    }
    Vec s(schema.total_stat_dim());
    for (std::size_t t = 0; t < schema.size(); ++t) {
        const auto xt = x.subspan(schema.value_offset(t), schema.value_dim(t));
        try {
            schema.family(t).sufficient_statistics(
                xt, std::span<double>(s.data() + schema.stat_offset(t), schema.stat_dim(t)));
        } catch (const DomainError& e) {
            throw DomainError("node '" + schema.node(t).name + "': " + e.what());
        }
    }
    return s;
}

Vec conditional_eta_from_stats(const JointModel& model, std::size_t r, std::span<const double> stats) {
    const auto& schema = model.schema();
    Vec eta = model.bias(r);
    for (const auto& [key, block] : model.edges()) {
        if (key.first == r) {
            const auto t = key.second;
            eta.noalias() += block * Eigen::Map<const Vec>(stats.data() + schema.stat_offset(t), schema.stat_dim(t));
        } else if (key.second == r) {
            const auto t = key.first;
            eta.noalias() += block.transpose() *
                             Eigen::Map<const Vec>(stats.data() + schema.stat_offset(t), schema.stat_dim(t));
        }
    }
    return eta;
}

Vec conditional_natural_params(const JointModel& model, std::size_t r, std::span<const double> x) {
    const auto& schema = model.schema();
    if (static_cast<int>(x.size()) != schema.total_value_dim()) {
        throw std::invalid_argument("conditional_natural_params: sample length mismatch");
    }
    Vec stats = Vec::Zero(schema.total_stat_dim());
    for (std::size_t t = 0; t < schema.size(); ++t) {
        if (t == r) continue;
        const auto xt = x.subspan(schema.value_offset(t), schema.value_dim(t));
        try {
            schema.family(t).sufficient_statistics(
                xt, std::span<double>(stats.data() + schema.stat_offset(t), schema.stat_dim(t)));
        } catch (const DomainError& e) {
            throw DomainError("node '" + schema.node(t).name + "': " + e.what());
        }
    }
    Vec eta = conditional_eta_from_stats(model, r, as_span(stats));
    schema.family(r).check_feasible(as_span(eta));
    return eta;
}

double node_log_pseudolikelihood(const JointModel& model, std::span<const double> x) {
    const auto& schema = model.schema();
    const Vec stats = stacked_statistics(schema, x);
    double total = 0.0;
    for (std::size_t r = 0; r < schema.size(); ++r) {
        const Vec eta = conditional_eta_from_stats(model, r, as_span(stats));
        const auto br = stats.segment(schema.stat_offset(r), schema.stat_dim(r));
        const auto xr = x.subspan(schema.value_offset(r), schema.value_dim(r));
        total += br.dot(eta) + schema.family(r).base_measure(xr) - schema.family(r).log_partition(as_span(eta));
    }
    return total;
}

double joint_log_potential(const JointModel& model, std::span<const double> x) {
    const auto& schema = model.schema();
    const Vec stats = stacked_statistics(schema, x);
    double total = 0.0;
    auto seg = [&](std::size_t t) { return stats.segment(schema.stat_offset(t), schema.stat_dim(t)); };
    for (std::size_t r = 0; r < schema.size(); ++r) {
        const auto xr = x.subspan(schema.value_offset(r), schema.value_dim(r));
        total += seg(r).dot(model.bias(r)) + schema.family(r).base_measure(xr);
    }
    for (const auto& [key, block] : model.edges()) {
        total += seg(key.first).dot(block * seg(key.second));
    }
    return total;
}

EnumeratedJoint enumerate_joint(const JointModel& model, std::size_t max_states) {
    const auto& schema = model.schema();
    std::vector<std::vector<std::vector<double>>> domains;
    std::size_t count = 1;
    for (std::size_t r = 0; r < schema.size(); ++r) {
        if (!schema.family(r).is_discrete()) {
            throw std::invalid_argument("enumerate_joint: node '" + schema.node(r).name + "' is continuous");
        }
        domains.push_back(schema.family(r).enumerate_domain());
        count *= domains.back().size();
        if (count > max_states) throw std::invalid_argument("enumerate_joint: state space too large");
    }
    EnumeratedJoint out;
    std::vector<std::size_t> idx(schema.size(), 0);
    for (std::size_t s = 0; s < count; ++s) {
        std::vector<double> row;
        for (std::size_t r = 0; r < schema.size(); ++r) {
            const auto& v = domains[r][idx[r]];
            row.insert(row.end(), v.begin(), v.end());
        }
        out.log_prob.push_back(joint_log_potential(model, row));
        out.states.push_back(std::move(row));
        for (std::size_t r = schema.size(); r-- > 0;) {
            if (++idx[r] < domains[r].size()) break;
            idx[r] = 0;
        }
    }
    const double mx = *std::max_element(out.log_prob.begin(), out.log_prob.end());
    double z = 0.0;
    for (double lp : out.log_prob) z += std::exp(lp - mx);
    const double log_z = mx + std::log(z);
    for (double& lp : out.log_prob) lp -= log_z;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

StatRange stat_range_of(const GraphSchema& schema, const StatBounds* truncation, std::size_t t, int c) {
    if (truncation && t < truncation->overrides.size() &&
        static_cast<std::size_t>(c) < truncation->overrides[t].size() && truncation->overrides[t][c]) {
        return *truncation->overrides[t][c];
    }
    return schema.family(t).stat_range(c);
}

// w * [lo, hi] with 0 * inf = 0.
StatRange scale_range(double w, StatRange r) {
    if (w == 0.0) return {0.0, 0.0};
    const double a = w * r.lo;
    const double b = w * r.hi;
    return w > 0.0 ? StatRange{a, b} : StatRange{b, a};
}

}  // namespace

StatRange conditional_eta_range(const JointModel& model, std::size_t r, int a, const StatBounds* truncation) {
    const auto& schema = model.schema();
    StatRange acc{model.bias(r)[a], model.bias(r)[a]};
    for (std::size_t t = 0; t < schema.size(); ++t) {
        if (t == r || !model.has_edge(r, t)) continue;
        const Mat block = model.edge(r, t);
        for (int c = 0; c < block.cols(); ++c) {
            const StatRange term = scale_range(block(a, c), stat_range_of(schema, truncation, t, c));
            acc.lo += term.lo;
            acc.hi += term.hi;
        }
    }
    return acc;
}

std::vector<std::string> joint_feasibility_problems(const JointModel& model, const StatBounds* truncation) {
    const auto& schema = model.schema();
    std::vector<std::string> problems;
    for (std::size_t r = 0; r < schema.size(); ++r) {
        const auto& fam = schema.family(r);
        const auto& cons = fam.constraints();
        const std::string who = "node '" + schema.node(r).name + "' coordinate ";
        for (int a = 0; a < fam.stat_dim(); ++a) {
            const auto& b = cons.bounds[a];
            if (!b.bounded_below() && !b.bounded_above()) continue;
            const StatRange range = conditional_eta_range(model, r, a, truncation);
            if (b.bounded_below() && !(range.lo > b.lower)) {
                problems.push_back(who + std::to_string(a) + " can reach " + format_double(range.lo) +
                                   ", needs > " + format_double(b.lower));
            }
            if (b.bounded_above() && !(range.hi < b.upper)) {
                problems.push_back(who + std::to_string(a) + " can reach " + format_double(range.hi) +
                                   ", needs < " + format_double(b.upper));
            }
        }
        if (cons.has_equality()) {
            const double tol = 1e-9;
            if ((cons.equality * model.bias(r)).lpNorm<Eigen::Infinity>() > tol) {
                problems.push_back("node '" + schema.node(r).name + "' bias violates its equality constraint");
            }
            for (std::size_t t = 0; t < schema.size(); ++t) {
                if (t == r || !model.has_edge(r, t)) continue;
                if ((cons.equality * model.edge(r, t)).lpNorm<Eigen::Infinity>() > tol) {
                    problems.push_back("edge ('" + schema.node(r).name + "', '" + schema.node(t).name +
                                       "') violates the equality constraint of '" + schema.node(r).name + "'");
                }
            }
        }
    }
    return problems;
}

void validate_joint_feasibility(const JointModel& model, const StatBounds* truncation) {
    const auto problems = joint_feasibility_problems(model, truncation);
    if (!problems.empty()) throw ValidationError("model is not conditionally feasible: " + problems.front());
}

// ---------------------------------------------------------------------------

bool operator==(const NodeParamVector& a, const NodeParamVector& b) {
    if (a.node != b.node || a.bias != b.bias || a.blocks.size() != b.blocks.size()) return false;
    for (std::size_t t = 0; t < a.blocks.size(); ++t) {
        if (a.blocks[t].rows() != b.blocks[t].rows() || a.blocks[t].cols() != b.blocks[t].cols()) return false;
        if (a.blocks[t] != b.blocks[t]) return false;
    }
    return true;
}

std::size_t param_length(const GraphSchema& schema, std::size_t r) {
    const int m_r = schema.stat_dim(r);
    return static_cast<std::size_t>(m_r) * (1 + schema.total_stat_dim() - m_r);
}

NodeParamVector zero_params(const GraphSchema& schema, std::size_t r) {
    NodeParamVector npv;
    npv.node = r;
    npv.bias = Vec::Zero(schema.stat_dim(r));
    npv.blocks.resize(schema.size());
    for (std::size_t t = 0; t < schema.size(); ++t) {
        if (t != r) npv.blocks[t] = Mat::Zero(schema.stat_dim(r), schema.stat_dim(t));
    }
    return npv;
}

Vec flatten(const NodeParamVector& npv) {
    std::size_t len = npv.bias.size();
    for (std::size_t t = 0; t < npv.blocks.size(); ++t) len += npv.blocks[t].size();
    Vec out(len);
    out.head(npv.bias.size()) = npv.bias;
    std::size_t off = npv.bias.size();
    for (std::size_t t = 0; t < npv.blocks.size(); ++t) {
        if (t == npv.node) continue;
        const Mat& b = npv.blocks[t];
        for (Eigen::Index a = 0; a < b.rows(); ++a) {
            for (Eigen::Index c = 0; c < b.cols(); ++c) out[off++] = b(a, c);
        }
    }
    return out;
}

NodeParamVector unflatten(const GraphSchema& schema, std::size_t r, std::span<const double> flat) {
    const std::size_t tau = param_length(schema, r);
    if (flat.size() != tau) {
        throw std::invalid_argument("unflatten: expected length " + std::to_string(tau) + ", got " +
                                    std::to_string(flat.size()));
    }
    NodeParamVector npv = zero_params(schema, r);
    const int m_r = schema.stat_dim(r);
    std::size_t off = 0;
    for (int a = 0; a < m_r; ++a) npv.bias[a] = flat[off++];
    for (std::size_t t = 0; t < schema.size(); ++t) {
        if (t == r) continue;
        Mat& b = npv.blocks[t];
        for (Eigen::Index a = 0; a < b.rows(); ++a) {
            for (Eigen::Index c = 0; c < b.cols(); ++c) b(a, c) = flat[off++];
        }
    }
    return npv;
}

ParamLayout ParamLayout::make(const GraphSchema& schema, std::size_t r) {
    ParamLayout l;
    l.node = r;
    l.m_r = schema.stat_dim(r);
    std::size_t off = l.m_r;
    for (std::size_t t = 0; t < schema.size(); ++t) {
        if (t == r) continue;
        l.neighbors.push_back(t);
        l.block_offset.push_back(off);
        l.block_cols.push_back(schema.stat_dim(t));
        off += static_cast<std::size_t>(l.m_r * schema.stat_dim(t));
    }
    l.tau = off;
    return l;
}

}  // namespace vsmrf
