#pragma once

// Recovery evaluation against a known truth and numerical checks of the
// dependency, incoherence and boundedness conditions behind sparsistency.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vsmrf/dataset.hpp"
#include "vsmrf/solver.hpp"

namespace vsmrf {

enum class RocLevel {
    edge,       ///< unordered node pairs
    parameter,  ///< scalar entries theta_rt[a, c] of every pair
};

std::string_view roc_level_name(RocLevel level);
RocLevel parse_roc_level(std::string_view s);

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
};

struct RocPoint {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    RocLevel level = RocLevel::edge;
    ConfusionCounts counts;
    double tpr = 0.0;  ///< 0 when undefined
    double fpr = 0.0;  ///< 0 when undefined
    bool tpr_defined = true;   ///< false when the truth has no positives
    bool fpr_defined = true;   ///< false when the truth has no negatives
};

/// Confusion counts of an AND-stitched fit collection against the truth.
/// At parameter level an entry counts as estimated nonzero when its edge
/// survives stitching and the entry is nonzero in either direction's block.
ConfusionCounts compare_to_truth(const JointModel& truth, const std::vector<NodeParamVector>& fits, RocLevel level);

/// One point per grid position of the per-node paths ([node][grid point]).
/// Throws std::invalid_argument when the paths do not share a grid.
std::vector<RocPoint> roc_curve(const JointModel& truth, const std::vector<std::vector<NodeFit>>& paths, RocLevel level);

/// Trapezoidal area under the FPR-sorted points extended by (0,0) and (1,1).
double auc(const std::vector<RocPoint>& points);
double auc(std::vector<std::pair<double, double>> fpr_tpr);

/// theta*_r. with bias and blocks read from the joint model.
NodeParamVector true_node_params(const JointModel& truth, std::size_t r);

/// Hessian of the node loss at theta, restricted to the pseudo-edge
/// coordinates (flat order without the bias). Throws ConstraintViolation when
/// theta is infeasible on the data.
Mat sample_fisher_information(const NodeParamVector& theta, const Dataset& data, std::size_t r);

/// Index sets partitioning [0, n).
using Groups = std::vector<std::vector<std::size_t>>;

/// || ( ||v_G1||_b, ..., ||v_GT||_b ) ||_a; a and b may be infinity.
double group_structured_norm(const Vec& v, const Groups& groups, double a, double b);
/// ||M||_{(a,2),(c,2)}: every row is reduced with the (c, 2) norm over the
/// column groups, then the column of row values with the (a, 2) norm over the row groups.
double group_structured_norm(const Mat& m, const Groups& row_groups, const Groups& col_groups, double a, double c);

/// Scalar l_p norm with p in [1, inf].
double lp_norm(const Vec& v, double p);

struct SparsistencyReport {
    std::size_t node = 0;
    std::size_t d_r = 0;  ///< true degree
    bool degenerate = false;  ///< empty true neighbourhood
    bool singular = false;    ///< Q_SS numerically singular
    double c_min = 0.0;       ///< smallest eigenvalue of Q_SS
    double incoherence = 0.0;  ///< ||Q_{S^c S} Q_SS^{-1}||_{inf,2}
    double m_ratio = 0.0;      ///< m_min / m_max over all nodes
    double nu_ratio = 0.0;     ///< nu_min / nu_max over the pseudo-edges of r
    /// Largest alpha of the grid with incoherence <= m_ratio (1 - alpha) / sqrt(d_r).
    std::optional<double> alpha;
    double incoherence_bound = 0.0;  ///< the bound at `alpha`, or at alpha -> 0 when none holds
    double min_edge_norm = 0.0;      ///< min over true edges of ||theta*_rt||_2
    /// Largest lambda1 + lambda2 with min_edge_norm >= (10 m_max / c_min)(lambda1 + lambda2).
    double max_lambda_sum = 0.0;
    double d_max_hat = 0.0;  ///< largest eigenvalue of the sample second moment of B(X_{V \ r})
};

SparsistencyReport check_sparsistency_conditions(const JointModel& truth, const Dataset& data, std::size_t r,
                                                 const std::vector<double>& alpha_grid);

}  // namespace vsmrf
