#include "vsmrf/diagnostics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "vsmrf/errors.hpp"
#include "vsmrf/stitcher.hpp"

namespace vsmrf {

std::string_view roc_level_name(RocLevel level) { return level == RocLevel::edge ? "edge" : "parameter"; }

RocLevel parse_roc_level(std::string_view s) {
    if (s == "edge") return RocLevel::edge;
    if (s == "parameter") return RocLevel::parameter;
    throw std::invalid_argument("unknown ROC level '" + std::string(s) + "' (expected edge|parameter)");
}

namespace {

void tally(ConfusionCounts& c, bool truth, bool estimate) {
    if (truth) {
        ++(estimate ? c.tp : c.fn);
    } else {
        ++(estimate ? c.fp : c.tn);
    }
}

}  // namespace

ConfusionCounts compare_to_truth(const JointModel& truth, const std::vector<NodeParamVector>& fits, RocLevel level) {
    const auto& s = truth.schema();
    const auto g = stitch(s, fits, StitchRule::and_rule);
    ConfusionCounts c;
    for (std::size_t r = 0; r < s.size(); ++r) {
        for (std::size_t t = r + 1; t < s.size(); ++t) {
            const bool kept = g.has_edge(r, t);
            if (level == RocLevel::edge) {
                tally(c, truth.has_edge(r, t), kept);
                continue;
            }
            const Mat block = truth.edge(r, t);
            const StitchedEdge* e = kept ? &g.edges().at({r, t}) : nullptr;
            for (Eigen::Index a = 0; a < block.rows(); ++a) {
                for (Eigen::Index b = 0; b < block.cols(); ++b) {
                    const bool est = e && (e->block_rt(a, b) != 0.0 || e->block_tr(b, a) != 0.0);
                    tally(c, block(a, b) != 0.0, est);
                }
            }
        }
    }
    return c;
}

std::vector<RocPoint> roc_curve(const JointModel& truth, const std::vector<std::vector<NodeFit>>& paths, RocLevel level) {
    if (paths.size() != truth.size()) {
        throw std::invalid_argument("expected paths for " + std::to_string(truth.size()) + " nodes, got " +
                                    std::to_string(paths.size()));
    }
    const std::size_t len = paths.empty() ? 0 : paths.front().size();
    for (std::size_t r = 0; r < paths.size(); ++r) {
        if (paths[r].size() != len) throw std::invalid_argument("paths do not share a lambda grid (length differs at node " + std::to_string(r) + ")");
        for (std::size_t k = 0; k < len; ++k) {
            if (paths[r][k].lambda1 != paths[0][k].lambda1 || paths[r][k].lambda2 != paths[0][k].lambda2) {
                throw std::invalid_argument("paths do not share a lambda grid (point " + std::to_string(k) + " at node " +
                                            std::to_string(r) + ")");
            }
        }
    }
    std::vector<RocPoint> out;
    out.reserve(len);
    for (std::size_t k = 0; k < len; ++k) {
        RocPoint p;
        p.lambda1 = paths[0][k].lambda1;
        p.lambda2 = paths[0][k].lambda2;
        p.level = level;
        p.counts = compare_to_truth(truth, fits_at(paths, k), level);
        const auto& c = p.counts;
        p.tpr_defined = c.tp + c.fn > 0;
        p.fpr_defined = c.fp + c.tn > 0;
        p.tpr = p.tpr_defined ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
        p.fpr = p.fpr_defined ? static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn) : 0.0;
        out.push_back(p);
    }
    return out;
}

double auc(std::vector<std::pair<double, double>> pts) {
    if (pts.empty()) throw std::invalid_argument("auc needs at least one ROC point");
    for (const auto& [f, t] : pts) {
        if (!(f >= 0.0 && f <= 1.0 && t >= 0.0 && t <= 1.0)) throw std::invalid_argument("ROC coordinates must lie in [0, 1]");
    }
    pts.emplace_back(0.0, 0.0);
    pts.emplace_back(1.0, 1.0);
    std::sort(pts.begin(), pts.end());
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        area += (pts[i].first - pts[i - 1].first) * 0.5 * (pts[i].second + pts[i - 1].second);
    }
    return area;
}

double auc(const std::vector<RocPoint>& points) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(points.size());
    for (const auto& p : points) pts.emplace_back(p.fpr, p.tpr);
    return auc(std::move(pts));
}

NodeParamVector true_node_params(const JointModel& truth, std::size_t r) {
    NodeParamVector out = zero_params(truth.schema(), r);
    out.bias = truth.bias(r);
    for (std::size_t t = 0; t < truth.size(); ++t) {
        if (t != r) out.blocks[t] = truth.edge(r, t);
    }
    return out;
}

Mat sample_fisher_information(const NodeParamVector& theta, const Dataset& data, std::size_t r) {
    const NodeProblem prob(data, r);
    const Vec flat = flatten(theta);
    (void)prob.loss_checked(flat);
    const Mat h = prob.hessian(flat);
    const Eigen::Index m = prob.m();
    const Eigen::Index k = h.rows() - m;
    Mat q = h.bottomRightCorner(k, k);
    return 0.5 * (q + q.transpose());
}

double lp_norm(const Vec& v, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("norm exponent must be >= 1");
    if (v.size() == 0) return 0.0;
    if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
    // index-order sums, so the result does not depend on vectorization
    double total = 0.0;
    if (p == 1.0) {
        for (double x : v) total += std::fabs(x);
        return total;
    }
    if (p == 2.0) {
        for (double x : v) total += x * x;
        return std::sqrt(total);
    }
    const double scale = v.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    for (double x : v) total += std::pow(std::fabs(x) / scale, p);
    return scale * std::pow(total, 1.0 / p);
}

namespace {

void check_partition(const Groups& groups, std::size_t n, const char* what) {
    std::vector<char> seen(n, 0);
    std::size_t count = 0;
    for (const auto& g : groups) {
        for (std::size_t i : g) {
            if (i >= n) throw std::invalid_argument(std::string(what) + ": index " + std::to_string(i) + " out of range");
            if (seen[i]) throw std::invalid_argument(std::string(what) + ": index " + std::to_string(i) + " in two groups");
            seen[i] = 1;
            ++count;
        }
    }
    if (count != n) throw std::invalid_argument(std::string(what) + ": groups do not cover every index");
}

Vec group_norms(const Vec& v, const Groups& groups, double b) {
    Vec out(static_cast<Eigen::Index>(groups.size()));
    for (std::size_t g = 0; g < groups.size(); ++g) {
        Vec part(static_cast<Eigen::Index>(groups[g].size()));
        for (std::size_t k = 0; k < groups[g].size(); ++k) part[static_cast<Eigen::Index>(k)] = v[static_cast<Eigen::Index>(groups[g][k])];
        out[static_cast<Eigen::Index>(g)] = lp_norm(part, b);
    }
    return out;
}

}  // namespace

double group_structured_norm(const Vec& v, const Groups& groups, double a, double b) {
    check_partition(groups, static_cast<std::size_t>(v.size()), "group_structured_norm");
    return lp_norm(group_norms(v, groups, b), a);
}

double group_structured_norm(const Mat& m, const Groups& row_groups, const Groups& col_groups, double a, double c) {
    check_partition(row_groups, static_cast<std::size_t>(m.rows()), "group_structured_norm rows");
    check_partition(col_groups, static_cast<std::size_t>(m.cols()), "group_structured_norm columns");
    Vec rows(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows[i] = lp_norm(group_norms(m.row(i).transpose(), col_groups, 2.0), c);
    return lp_norm(group_norms(rows, row_groups, 2.0), a);
}

SparsistencyReport check_sparsistency_conditions(const JointModel& truth, const Dataset& data, std::size_t r,
                                                 const std::vector<double>& alpha_grid) {
    const auto& s = truth.schema();
    if (!(s == data.schema())) throw ValidationError("truth and data use different schemas");
    for (double a : alpha_grid) {
        if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("alpha grid values must lie in (0, 1]");
    }
    SparsistencyReport rep;
    rep.node = r;
    const auto layout = ParamLayout::make(s, r);
    const auto m_r = static_cast<std::size_t>(layout.m_r);

    int m_min = s.min_stat_dim();
    int m_max = s.max_stat_dim();
    rep.m_ratio = static_cast<double>(m_min) / static_cast<double>(m_max);
    double nu_min = std::numeric_limits<double>::infinity();
    double nu_max = 0.0;
    for (std::size_t slot = 0; slot < layout.neighbors.size(); ++slot) {
        const double nu = static_cast<double>(layout.block_size(slot));
        nu_min = std::min(nu_min, nu);
        nu_max = std::max(nu_max, nu);
    }
    rep.nu_ratio = nu_max > 0.0 ? nu_min / nu_max : 1.0;

    // boundedness: largest eigenvalue of (1/n) sum_i B_i B_i^T over the other nodes' statistics
    {
        std::vector<int> cols;
        for (std::size_t t : layout.neighbors) {
            for (int c = 0; c < s.stat_dim(t); ++c) cols.push_back(s.stat_offset(t) + c);
        }
        const auto n = static_cast<Eigen::Index>(data.size());
        Mat b(n, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto col = data.stat_column(static_cast<std::size_t>(cols[j]));
            std::copy(col.begin(), col.end(), b.col(static_cast<Eigen::Index>(j)).data());
        }
        if (b.cols() > 0 && n > 0) {
            const Mat second = b.transpose() * b / static_cast<double>(n);
            rep.d_max_hat = Eigen::SelfAdjointEigenSolver<Mat>(second, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
        }
    }

    // S: coordinates of true-neighbour blocks, grouped by block; S^c likewise
    Groups s_groups, sc_groups;
    std::vector<std::size_t> s_idx, sc_idx;
    rep.min_edge_norm = std::numeric_limits<double>::infinity();
    for (std::size_t slot = 0; slot < layout.neighbors.size(); ++slot) {
        const std::size_t t = layout.neighbors[slot];
        const bool edge = truth.has_edge(r, t);
        auto& idx = edge ? s_idx : sc_idx;
        auto& groups = edge ? s_groups : sc_groups;
        std::vector<std::size_t> g;
        for (std::size_t k = 0; k < layout.block_size(slot); ++k) {
            g.push_back(idx.size());
            idx.push_back(layout.block_offset[slot] + k - m_r);
        }
        groups.push_back(std::move(g));
        if (edge) {
            ++rep.d_r;
            rep.min_edge_norm = std::min(rep.min_edge_norm, truth.edge(r, t).norm());
        }
    }
    if (rep.d_r == 0) {
        rep.degenerate = true;
        rep.min_edge_norm = 0.0;
        return rep;
    }

    const Mat q = sample_fisher_information(true_node_params(truth, r), data, r);
    const auto ns = static_cast<Eigen::Index>(s_idx.size());
    const auto nc = static_cast<Eigen::Index>(sc_idx.size());
    Mat qss(ns, ns), qcs(nc, ns);
    for (Eigen::Index i = 0; i < ns; ++i) {
        for (Eigen::Index j = 0; j < ns; ++j) qss(i, j) = q(static_cast<Eigen::Index>(s_idx[static_cast<std::size_t>(i)]), static_cast<Eigen::Index>(s_idx[static_cast<std::size_t>(j)]));
    }
    for (Eigen::Index i = 0; i < nc; ++i) {
        for (Eigen::Index j = 0; j < ns; ++j) qcs(i, j) = q(static_cast<Eigen::Index>(sc_idx[static_cast<std::size_t>(i)]), static_cast<Eigen::Index>(s_idx[static_cast<std::size_t>(j)]));
    }
    const Eigen::SelfAdjointEigenSolver<Mat> es(qss);
    rep.c_min = es.eigenvalues().minCoeff();
    const double scale = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
    rep.singular = !(rep.c_min > 1e-12 * scale);

    const double root_d = std::sqrt(static_cast<double>(rep.d_r));
    if (rep.singular) {
        rep.incoherence = std::numeric_limits<double>::infinity();
    } else {
        rep.incoherence = nc > 0 ? group_structured_norm(Mat(qcs * es.eigenvectors() *
                                                             es.eigenvalues().cwiseInverse().asDiagonal() *
                                                             es.eigenvectors().transpose()),
                                                         sc_groups, s_groups, std::numeric_limits<double>::infinity(), 2.0)
                                 : 0.0;
        rep.max_lambda_sum = rep.min_edge_norm * rep.c_min / (10.0 * static_cast<double>(m_max));
    }
    rep.incoherence_bound = rep.m_ratio / root_d;
    for (double a : alpha_grid) {
        const double bound = rep.m_ratio * (1.0 - a) / root_d;
        if (rep.incoherence <= bound && (!rep.alpha || a > *rep.alpha)) {
            rep.alpha = a;
            rep.incoherence_bound = bound;
        }
    }
    return rep;
}

}  // namespace vsmrf
