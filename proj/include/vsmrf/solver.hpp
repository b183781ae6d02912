#pragma once

// Node-wise sparse-group-lasso pseudo-likelihood estimation by ADMM.
//
// For node r with flat parameter theta (bias first, then pseudo-edge blocks):
//
//   loss(theta)    = -(1/n) sum_i [<B_r(x_r^i), eta^i> - A_r(eta^i)]
//   eta^i          = theta_r + sum_{t != r} theta_rt B_t(x_t^i)
//   penalty(theta) = lambda1 sum_t sqrt(nu_rt) ||theta_rt||_2 + lambda2 sum_t ||theta_rt||_1
//
// ADMM splits theta = z with scaled dual u:
//   theta <- argmin loss(theta) + alpha/2 ||theta - z + u||^2   (damped Newton)
//   z     <- prox_{penalty/alpha}(theta + u)
//   u     <- u + theta - z

#include <optional>
#include <string>
#include <vector>

#include "vsmrf/dataset.hpp"
#include "vsmrf/model.hpp"

namespace vsmrf {

enum class HessianMode {
    automatic,  ///< exact when n < tau/2 or tau <= 512, diagonal otherwise
    exact,      ///< woodbury when n*m_r < tau, dense otherwise
    woodbury,
    dense,
    diagonal,
};

std::string_view hessian_mode_name(HessianMode m);
HessianMode parse_hessian_mode(std::string_view s);

struct AdmmConfig {
    double alpha = 1.0;
    double eps_abs = 1e-6;
    double eps_rel = 1e-4;
    int max_iter = 10000;
    double newton_tol = 1e-9;
    int newton_max = 50;
    HessianMode hessian_mode = HessianMode::automatic;
    /// Rescale alpha when one residual dominates the other by 10x.
    bool residual_balancing = false;

    void validate() const;
};

struct PenaltyWeights {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    std::vector<double> group_sizes;  ///< nu_rt = m_r * m_t per neighbor slot of the layout

    static PenaltyWeights for_node(const GraphSchema& schema, std::size_t r, double lambda1, double lambda2);
};

struct NodeFit {
    NodeParamVector params;  ///< the z iterate: exactly sparse
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    int iterations = 0;
    long newton_steps = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double objective = 0.0;
    bool converged = false;
    std::string status;  ///< "converged", "max_iter", or a failure description
};

/// ADMM iterates carried between fits for warm starts.
struct AdmmState {
    Vec theta;
    Vec z;
    Vec u;
};

struct ThetaUpdateReport {
    int steps = 0;
    bool converged = false;
    bool line_search_failed = false;
    /// No step could lower the objective and the predicted decrease was below rounding noise.
    bool precision_limited = false;
    double grad_norm = 0.0;
    std::vector<double> objective_trace;  ///< subproblem objective after each accepted step (first entry: start)
};

/// Precomputed design of one node's problem. The covariate matrix holds an
/// intercept column followed by every other node's statistics, so
/// eta^i = W z_i with W the m_r x q reshaping of the flat parameter.
class NodeProblem {
   public:
    NodeProblem(const Dataset& data, std::size_t r);

    const GraphSchema& schema() const { return schema_; }
    const ParamLayout& layout() const { return layout_; }
    const FamilySpec& family() const { return family_; }
    std::size_t node() const { return layout_.node; }
    std::size_t samples() const { return n_; }
    std::size_t tau() const { return layout_.tau; }
    int m() const { return m_; }
    int q() const { return q_; }
    const Mat& covariates() const { return z_; }

    /// Natural parameters of all samples, m_r x n (column i is eta^i).
    Mat eta(const Vec& theta) const;

    /// Loss, or +inf if some sample is infeasible (index stored in *bad).
    double loss(const Vec& theta, std::size_t* bad = nullptr) const;
    /// Throws ConstraintViolation naming the sample when infeasible.
    double loss_checked(const Vec& theta) const;
    Vec gradient(const Vec& theta) const;
    Mat hessian(const Vec& theta) const;

    /// Per-sample derivative data at a fixed eta matrix.
    struct Derivatives {
        double loss = 0.0;
        Mat residual;  ///< m x n: grad A(eta^i) - B_r^i
        Mat weights;   ///< (m(m+1)/2) x n: upper-triangular entries of hess A(eta^i), row-major pairs
    };
    /// False when some sample is infeasible; *bad receives its index.
    bool derivatives(const Mat& eta, Derivatives& out, bool with_hessian, std::size_t* bad = nullptr) const;
    double loss_at(const Mat& eta, std::size_t* bad = nullptr) const;

    Vec gradient_from(const Derivatives& d) const;
    Mat dense_hessian_from(const Derivatives& d) const;
    Vec diagonal_hessian_from(const Derivatives& d) const;
    /// Rows of M with M^T M equal to the loss Hessian (n*m_r rows).
    Mat woodbury_factor_from(const Derivatives& d) const;

    /// Equality constraints on the flat parameter (rows), empty when the family has none.
    const Mat& equality() const { return equality_; }

    /// Map from (a, j) (row a of W, covariate j) to the flat index.
    std::size_t flat_index(int a, int j) const { return flat_index_[static_cast<std::size_t>(a * q_ + j)]; }

   private:
    GraphSchema schema_;
    ParamLayout layout_;
    FamilySpec family_;
    std::size_t n_ = 0;
    int m_ = 0;
    int q_ = 0;
    Mat z_;   ///< n x q covariates
    Mat br_;  ///< m x n statistics of node r
    Mat equality_;
    std::vector<std::size_t> flat_index_;
};

double node_loss(const NodeParamVector& theta, const Dataset& data, std::size_t r);
Vec node_loss_grad(const NodeParamVector& theta, const Dataset& data, std::size_t r);
Mat node_loss_hessian(const NodeParamVector& theta, const Dataset& data, std::size_t r);

double penalty(const Vec& flat, const ParamLayout& layout, const PenaltyWeights& w);

/// Solves the theta-subproblem from `theta_prev` by damped Newton steps.
NodeParamVector theta_update(const NodeParamVector& theta_prev, const Vec& z, const Vec& u, const Dataset& data,
                             std::size_t r, const AdmmConfig& cfg, ThetaUpdateReport* report = nullptr);
/// In-place form on a prebuilt problem.
ThetaUpdateReport theta_update(const NodeProblem& prob, Vec& theta, const Vec& z, const Vec& u, double alpha,
                               const AdmmConfig& cfg);

/// prox of penalty/alpha at y: bias passes through; each block is
/// soft-thresholded by lambda2/alpha and then group-shrunk by sqrt(nu) lambda1/alpha.
Vec z_update(const Vec& y, const ParamLayout& layout, const PenaltyWeights& w, const AdmmConfig& cfg);
Vec u_update(const Vec& u, const Vec& theta, const Vec& z);

NodeFit fit_node(const Dataset& data, std::size_t r, const PenaltyWeights& w, const AdmmConfig& cfg,
                 AdmmState* warm = nullptr);
NodeFit fit_node(const NodeProblem& prob, const PenaltyWeights& w, const AdmmConfig& cfg, AdmmState* warm = nullptr);

/// Fits over the Cartesian grid, lambda1 in the outer loop and lambda2 in the
/// inner loop, both descending. With warm starts every fit starts from the
/// previous fit's ADMM state.
std::vector<NodeFit> regularization_path(const Dataset& data, std::size_t r, const std::vector<double>& lambda1_grid,
                                         const std::vector<double>& lambda2_grid, const AdmmConfig& cfg,
                                         bool warm_start = true);

/// Paths for every node, fanned across `jobs` worker threads. Results do not
/// depend on `jobs`.
std::vector<std::vector<NodeFit>> fit_all_nodes(const Dataset& data, const std::vector<double>& lambda1_grid,
                                                const std::vector<double>& lambda2_grid, const AdmmConfig& cfg,
                                                unsigned jobs = 1, bool warm_start = true);

/// `count` log-spaced values from hi down to lo.
std::vector<double> log_spaced_grid(double hi, double lo, int count);
/// 20 log-spaced lambda1 values over [1e-4, 0.5], descending.
std::vector<double> default_lambda1_grid();
inline constexpr double kDefaultLambda2 = 1e-4;

}  // namespace vsmrf
