#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <optional>

#include "vsmrf/kernels.hpp"
#include "vsmrf/solver.hpp"

namespace vsmrf {

std::string_view hessian_mode_name(HessianMode m) {
    switch (m) {
        case HessianMode::automatic: return "auto";
        case HessianMode::exact: return "exact";
        case HessianMode::woodbury: return "woodbury";
        case HessianMode::dense: return "dense";
        case HessianMode::diagonal: return "diagonal";
    }
    return "auto";
}

HessianMode parse_hessian_mode(std::string_view s) {
    for (auto m : {HessianMode::automatic, HessianMode::exact, HessianMode::woodbury, HessianMode::dense,
                   HessianMode::diagonal}) {
        if (hessian_mode_name(m) == s) return m;
    }
    throw std::invalid_argument("unknown hessian mode '" + std::string(s) + "'");
}

void AdmmConfig::validate() const {
    if (!(alpha > 0.0) || !(eps_abs > 0.0) || !(eps_rel > 0.0) || !(newton_tol > 0.0)) {
        throw std::invalid_argument("ADMM penalty and tolerances must be positive");
    }
    if (max_iter < 1 || newton_max < 1) throw std::invalid_argument("iteration limits must be positive");
}

PenaltyWeights PenaltyWeights::for_node(const GraphSchema& schema, std::size_t r, double lambda1, double lambda2) {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw std::invalid_argument("penalty weights must be nonnegative");
    PenaltyWeights w{lambda1, lambda2, {}};
    for (std::size_t t = 0; t < schema.size(); ++t) {
        if (t != r) w.group_sizes.push_back(static_cast<double>(schema.stat_dim(r) * schema.stat_dim(t)));
    }
    return w;
}

namespace {

void check_weights(const ParamLayout& layout, const PenaltyWeights& w) {
    if (w.group_sizes.size() != layout.neighbors.size()) {
        throw std::invalid_argument("penalty group sizes do not match the node's pseudo-edges");
    }
    if (!(w.lambda1 >= 0.0) || !(w.lambda2 >= 0.0)) throw std::invalid_argument("penalty weights must be nonnegative");
}

Vec prox(const Vec& y, const ParamLayout& layout, const PenaltyWeights& w, double alpha) {
    Vec z = y;
    const double thr1 = w.lambda2 / alpha;
    for (std::size_t s = 0; s < layout.neighbors.size(); ++s) {
        const auto off = static_cast<Eigen::Index>(layout.block_offset[s]);
        const auto len = static_cast<Eigen::Index>(layout.block_size(s));
        std::span<double> out(z.data() + off, static_cast<std::size_t>(len));
        kernels::soft_threshold(std::span<const double>(y.data() + off, static_cast<std::size_t>(len)), thr1, out);
        const double norm = std::sqrt(kernels::sumsq(out));
        const double thr2 = std::sqrt(w.group_sizes[s]) * w.lambda1 / alpha;
        if (norm <= thr2) {
            z.segment(off, len).setZero();
        } else if (thr2 > 0.0) {
            z.segment(off, len) *= 1.0 - thr2 / norm;
        }
    }
    return z;
}

HessianMode resolve_mode(HessianMode mode, const NodeProblem& prob) {
    const std::size_t n = prob.samples();
    const std::size_t tau = prob.tau();
    if (mode == HessianMode::automatic) {
        mode = (2 * n < tau || tau <= 512) ? HessianMode::exact : HessianMode::diagonal;
    }
    if (mode == HessianMode::exact) {
        mode = n * static_cast<std::size_t>(prob.m()) < tau ? HessianMode::woodbury : HessianMode::dense;
    }
    return mode;
}

// Solves (H + alpha I) x = b for one of the Hessian representations.
class CurvatureSolver {
   public:
    CurvatureSolver(const NodeProblem& prob, const NodeProblem::Derivatives& d, HessianMode mode, double alpha)
        : mode_(mode), alpha_(alpha) {
        switch (mode) {
            case HessianMode::dense: {
                Mat h = prob.dense_hessian_from(d);
                h.diagonal().array() += alpha;
                llt_.compute(h);
                break;
            }
            case HessianMode::diagonal:
                diag_ = prob.diagonal_hessian_from(d).array() + alpha;
                break;
            case HessianMode::woodbury: {
                factor_ = prob.woodbury_factor_from(d);
                Mat small = factor_ * factor_.transpose();
                small.diagonal().array() += alpha;
                llt_.compute(small);
                break;
            }
            default:
                throw std::logic_error("unresolved hessian mode");
        }
    }

    Vec solve(const Vec& b) const {
        switch (mode_) {
            case HessianMode::dense: return llt_.solve(b);
            case HessianMode::diagonal: return b.cwiseQuotient(diag_);
            default: {
                const Vec mb = factor_ * b;
                return (b - factor_.transpose() * llt_.solve(mb)) / alpha_;
            }
        }
    }

   private:
    HessianMode mode_;
    double alpha_;
    Eigen::LLT<Mat> llt_;
    Vec diag_;
    Mat factor_;
};

// Newton direction, with the KKT correction when the flat parameter carries
// equality constraints C theta = 0.
Vec newton_direction(const CurvatureSolver& k, const Mat& c, const Vec& g) {
    const Vec kg = k.solve(g);
    if (c.rows() == 0) return -kg;
    Mat kc(c.cols(), c.rows());
    for (Eigen::Index j = 0; j < c.rows(); ++j) kc.col(j) = k.solve(c.row(j).transpose());
    const Mat schur = c * kc;
    const Vec nu = schur.ldlt().solve(-(c * kg));
    return -kg - kc * nu;
}

double projected_norm(const Mat& c, const Eigen::LDLT<Mat>& cct, const Vec& g) {
    if (c.rows() == 0) return g.norm();
    return (g - c.transpose() * cct.solve(c * g)).norm();
}

}  // namespace

namespace {

// State kept between consecutive theta-updates of one fit. theta does not
// change between them, so eta and the per-sample derivatives carry over, and
// the curvature factorization is reused until a step contracts the gradient
// poorly or needs backtracking.
struct NewtonWorkspace {
    bool primed = false;
    int incremental = 0;
    Mat eta;
    NodeProblem::Derivatives d;
    NodeProblem::Derivatives trial;
    std::optional<CurvatureSolver> curvature;
    double curvature_alpha = 0.0;
    bool stale = true;
    bool cct_ready = false;
    Eigen::LDLT<Mat> cct;
};

constexpr double kRefreshRatio = 0.25;
constexpr int kEtaRefreshSteps = 32;

ThetaUpdateReport newton_solve(const NodeProblem& prob, Vec& theta, const Vec& v, double alpha, const AdmmConfig& cfg,
                               HessianMode mode, NewtonWorkspace& ws) {
    ThetaUpdateReport rep;
    const Mat& c = prob.equality();
    if (c.rows() > 0 && !ws.cct_ready) {
        ws.cct.compute(c * c.transpose());
        ws.cct_ready = true;
    }
    if (!ws.primed || ws.incremental >= kEtaRefreshSteps) {
        ws.eta = prob.eta(theta);
        if (!prob.derivatives(ws.eta, ws.d, true)) (void)prob.loss_checked(theta);
        ws.primed = true;
        ws.incremental = 0;
    }
    if (ws.curvature && ws.curvature_alpha != alpha) ws.stale = true;

    double f = ws.d.loss + 0.5 * alpha * (theta - v).squaredNorm();
    rep.objective_trace.push_back(f);
    const double slack = 8.0 * std::numeric_limits<double>::epsilon();
    double prev_norm = std::numeric_limits<double>::infinity();

    for (int step = 0;; ++step) {
        const Vec g = prob.gradient_from(ws.d) + alpha * (theta - v);
        rep.grad_norm = projected_norm(c, ws.cct, g);
        if (rep.grad_norm <= cfg.newton_tol) {
            rep.converged = true;
            break;
        }
        if (step == cfg.newton_max) break;
        if (rep.grad_norm > kRefreshRatio * prev_norm) ws.stale = true;
        prev_norm = rep.grad_norm;

        bool accepted = false;
        bool stuck = false;
        double last_slope = 0.0;
        for (int attempt = 0; attempt < 2 && !accepted && !stuck; ++attempt) {
            const bool fresh = ws.stale || !ws.curvature;
            if (fresh) {
                ws.curvature.emplace(prob, ws.d, mode, alpha);
                ws.curvature_alpha = alpha;
                ws.stale = false;
            }
            const Vec dir = newton_direction(*ws.curvature, c, g);
            const double slope = g.dot(dir);
            last_slope = slope;
            if (!(slope < 0.0)) {
                ws.stale = true;
                stuck = fresh;
                continue;
            }
            const Mat eta_dir = prob.eta(dir);
            const double noise = slack * (std::fabs(f) + 1.0);
            for (double t = 1.0; t >= 1e-12; t *= 0.5) {
                Mat eta_t = ws.eta + t * eta_dir;
                if (!prob.derivatives(eta_t, ws.trial, true)) continue;
                const double ft = ws.trial.loss + 0.5 * alpha * (theta + t * dir - v).squaredNorm();
                bool ok = ft < f && ft <= f + 1e-4 * t * slope;
                if (!ok && ft <= f + noise && -t * slope <= noise) {
                    // below the resolution of f, progress is judged by the gradient instead
                    const Vec gt = prob.gradient_from(ws.trial) + alpha * (theta + t * dir - v);
                    ok = projected_norm(c, ws.cct, gt) < rep.grad_norm;
                }
                if (ok) {
                    theta += t * dir;
                    ws.eta = std::move(eta_t);
                    std::swap(ws.d, ws.trial);
                    ++ws.incremental;
                    f = ft;
                    accepted = true;
                    if (t < 1.0) ws.stale = true;
                    break;
                }
            }
            if (!accepted) {
                ws.stale = true;
                stuck = fresh;
            }
        }
        if (!accepted) {
            if (-last_slope <= slack * (std::fabs(f) + 1.0)) {
                rep.precision_limited = true;
            } else {
                rep.line_search_failed = true;
            }
            break;
        }
        ++rep.steps;
        rep.objective_trace.push_back(f);
    }
    return rep;
}

}  // namespace

ThetaUpdateReport theta_update(const NodeProblem& prob, Vec& theta, const Vec& z, const Vec& u, double alpha,
                               const AdmmConfig& cfg) {
    NewtonWorkspace ws;
    return newton_solve(prob, theta, z - u, alpha, cfg, resolve_mode(cfg.hessian_mode, prob), ws);
}

NodeParamVector theta_update(const NodeParamVector& theta_prev, const Vec& z, const Vec& u, const Dataset& data,
                             std::size_t r, const AdmmConfig& cfg, ThetaUpdateReport* report) {
    cfg.validate();
    const NodeProblem prob(data, r);
    Vec theta = flatten(theta_prev);
    const auto rep = theta_update(prob, theta, z, u, cfg.alpha, cfg);
    if (report) *report = rep;
    return unflatten(data.schema(), r, as_span(theta));
}

Vec z_update(const Vec& y, const ParamLayout& layout, const PenaltyWeights& w, const AdmmConfig& cfg) {
    check_weights(layout, w);
    if (static_cast<std::size_t>(y.size()) != layout.tau) throw std::invalid_argument("z_update: length mismatch");
    return prox(y, layout, w, cfg.alpha);
}

Vec u_update(const Vec& u, const Vec& theta, const Vec& z) {
    if (u.size() != theta.size() || u.size() != z.size()) throw std::invalid_argument("u_update: length mismatch");
    return u + theta - z;
}

double penalty(const Vec& flat, const ParamLayout& layout, const PenaltyWeights& w) {
    check_weights(layout, w);
    double total = 0.0;
    for (std::size_t s = 0; s < layout.neighbors.size(); ++s) {
        const auto blk = flat.segment(static_cast<Eigen::Index>(layout.block_offset[s]),
                                      static_cast<Eigen::Index>(layout.block_size(s)));
        total += w.lambda1 * std::sqrt(w.group_sizes[s]) * blk.norm() + w.lambda2 * blk.lpNorm<1>();
    }
    return total;
}

NodeFit fit_node(const NodeProblem& prob, const PenaltyWeights& w, const AdmmConfig& cfg, AdmmState* warm) {
    cfg.validate();
    const auto& layout = prob.layout();
    check_weights(layout, w);
    if (prob.samples() == 0) throw std::invalid_argument("fit_node: empty dataset");
    const auto tau = static_cast<Eigen::Index>(layout.tau);

    Vec theta, z, u;
    if (warm && warm->theta.size() == tau && warm->z.size() == tau && warm->u.size() == tau &&
        std::isfinite(prob.loss(warm->theta))) {
        theta = warm->theta;
        z = warm->z;
        u = warm->u;
    } else {
        theta = Vec::Zero(tau);
        theta.head(prob.m()) = prob.family().feasible_point();
        z = theta;
        u = Vec::Zero(tau);
    }

    const HessianMode mode = resolve_mode(cfg.hessian_mode, prob);
    NewtonWorkspace ws;
    NodeFit fit;
    fit.lambda1 = w.lambda1;
    fit.lambda2 = w.lambda2;
    fit.status = "max_iter";
    double alpha = cfg.alpha;
    const double sqrt_tau = std::sqrt(static_cast<double>(tau));

    for (int k = 1; k <= cfg.max_iter; ++k) {
        fit.iterations = k;
        const auto rep = newton_solve(prob, theta, z - u, alpha, cfg, mode, ws);
        fit.newton_steps += rep.steps;
        if (rep.line_search_failed) {
            fit.status = "line search failed in iteration " + std::to_string(k);
            break;
        }
        const Vec z_old = z;
        z = prox(theta + u, layout, w, alpha);
        u += theta - z;

        fit.primal_residual = (theta - z).norm();
        fit.dual_residual = alpha * (z - z_old).norm();
        const double eps_pri = sqrt_tau * cfg.eps_abs + cfg.eps_rel * std::max(theta.norm(), z.norm());
        const double eps_dual = sqrt_tau * cfg.eps_abs + cfg.eps_rel * alpha * u.norm();
        if (fit.primal_residual <= eps_pri && fit.dual_residual <= eps_dual) {
            fit.converged = true;
            fit.status = "converged";
            break;
        }
        if (cfg.residual_balancing) {
            if (fit.primal_residual > 10.0 * fit.dual_residual) {
                alpha *= 2.0;
                u *= 0.5;
            } else if (fit.dual_residual > 10.0 * fit.primal_residual) {
                alpha *= 0.5;
                u *= 2.0;
            }
        }
    }

    const double loss_z = prob.loss(z);
    fit.objective = std::isfinite(loss_z) ? loss_z + penalty(z, layout, w) : prob.loss(theta) + penalty(theta, layout, w);
    fit.params = unflatten(prob.schema(), layout.node, as_span(z));
    if (warm) {
        warm->theta = theta;
        warm->z = z;
        warm->u = u * (alpha / cfg.alpha);
    }
    return fit;
}

}  // namespace vsmrf
