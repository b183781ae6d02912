#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

#include "vsmrf/kernels.hpp"
#include "vsmrf/solver.hpp"

namespace vsmrf {

NodeProblem::NodeProblem(const Dataset& data, std::size_t r)
    : schema_(data.schema()), layout_(ParamLayout::make(data.schema(), r)), family_(data.schema().family(r)), n_(data.size()) {
    const auto& schema = data.schema();
    m_ = schema.stat_dim(r);
    q_ = 1;
    for (int c : layout_.block_cols) q_ += c;

    z_.resize(static_cast<Eigen::Index>(n_), q_);
    z_.col(0).setOnes();
    int col = 1;
    for (std::size_t s = 0; s < layout_.neighbors.size(); ++s) {
        const std::size_t t = layout_.neighbors[s];
        for (int c = 0; c < layout_.block_cols[s]; ++c, ++col) {
            const auto src = data.stat_column(static_cast<std::size_t>(schema.stat_offset(t) + c));
            std::copy(src.begin(), src.end(), z_.col(col).data());
        }
    }
    br_.resize(m_, static_cast<Eigen::Index>(n_));
    for (int a = 0; a < m_; ++a) {
        const auto src = data.stat_column(static_cast<std::size_t>(schema.stat_offset(r) + a));
        for (std::size_t i = 0; i < n_; ++i) br_(a, static_cast<Eigen::Index>(i)) = src[i];
    }

    flat_index_.resize(static_cast<std::size_t>(m_ * q_));
    for (int a = 0; a < m_; ++a) {
        flat_index_[static_cast<std::size_t>(a * q_)] = static_cast<std::size_t>(a);
        int j = 1;
        for (std::size_t s = 0; s < layout_.neighbors.size(); ++s) {
            const int mt = layout_.block_cols[s];
            for (int c = 0; c < mt; ++c, ++j) {
                flat_index_[static_cast<std::size_t>(a * q_ + j)] =
                    layout_.block_offset[s] + static_cast<std::size_t>(a * mt + c);
            }
        }
    }

    const Mat& e = family_.constraints().equality;
    if (e.rows() > 0) {
        equality_ = Mat::Zero(e.rows() * q_, static_cast<Eigen::Index>(layout_.tau));
        for (Eigen::Index k = 0; k < e.rows(); ++k) {
            for (int j = 0; j < q_; ++j) {
                for (int a = 0; a < m_; ++a) {
                    equality_(k * q_ + j, static_cast<Eigen::Index>(flat_index(a, j))) = e(k, a);
                }
            }
        }
    }
}

Mat NodeProblem::eta(const Vec& theta) const {
    if (static_cast<std::size_t>(theta.size()) != layout_.tau) {
        throw std::invalid_argument("parameter length " + std::to_string(theta.size()) + " does not match tau " +
                                    std::to_string(layout_.tau));
    }
    Mat w(m_, q_);
    for (int a = 0; a < m_; ++a) {
        for (int j = 0; j < q_; ++j) w(a, j) = theta[static_cast<Eigen::Index>(flat_index(a, j))];
    }
    Mat e(m_, static_cast<Eigen::Index>(n_));
    e.noalias() = w * z_.transpose();
    return e;
}

bool NodeProblem::derivatives(const Mat& eta, Derivatives& out, bool with_hessian, std::size_t* bad) const {
    const Eigen::Index n = static_cast<Eigen::Index>(n_);
    const int pairs = m_ * (m_ + 1) / 2;
    out.residual.resize(m_, n);
    if (with_hessian) out.weights.resize(pairs, n);
    Vec hess(m_ * m_);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::span<const double> e(eta.col(i).data(), static_cast<std::size_t>(m_));
        if (!family_.is_feasible(e)) {
            if (bad) *bad = static_cast<std::size_t>(i);
            return false;
        }
        const double a = family_.evaluate(e, out.residual.col(i).data(), with_hessian ? hess.data() : nullptr);
        total += a - br_.col(i).dot(eta.col(i));
        out.residual.col(i) -= br_.col(i);
        if (with_hessian) {
            int k = 0;
            for (int p = 0; p < m_; ++p) {
                for (int s = p; s < m_; ++s) out.weights(k++, i) = hess[p + s * m_];
            }
        }
    }
    out.loss = total / static_cast<double>(n_);
    return true;
}

double NodeProblem::loss_at(const Mat& eta, std::size_t* bad) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.cols(); ++i) {
        const std::span<const double> e(eta.col(i).data(), static_cast<std::size_t>(m_));
        if (!family_.is_feasible(e)) {
            if (bad) *bad = static_cast<std::size_t>(i);
            return std::numeric_limits<double>::infinity();
        }
        total += family_.evaluate(e, nullptr, nullptr) - br_.col(i).dot(eta.col(i));
    }
    return total / static_cast<double>(n_);
}

double NodeProblem::loss(const Vec& theta, std::size_t* bad) const { return loss_at(eta(theta), bad); }

double NodeProblem::loss_checked(const Vec& theta) const {
    const Mat e = eta(theta);
    std::size_t bad = 0;
    const double v = loss_at(e, &bad);
    if (!std::isfinite(v)) {
        try {
            family_.check_feasible(std::span<const double>(e.col(static_cast<Eigen::Index>(bad)).data(),
                                                           static_cast<std::size_t>(m_)));
        } catch (const ConstraintViolation& cv) {
            throw cv.at_sample(bad);
        }
        throw std::domain_error("non-finite loss at sample " + std::to_string(bad));
    }
    return v;
}

Vec NodeProblem::gradient_from(const Derivatives& d) const {
    const Mat g = d.residual * z_ / static_cast<double>(n_);
    Vec out(static_cast<Eigen::Index>(layout_.tau));
    for (int a = 0; a < m_; ++a) {
        for (int j = 0; j < q_; ++j) out[static_cast<Eigen::Index>(flat_index(a, j))] = g(a, j);
    }
    return out;
}

Mat NodeProblem::dense_hessian_from(const Derivatives& d) const {
    const Eigen::Index tau = static_cast<Eigen::Index>(layout_.tau);
    Mat h(tau, tau);
    Mat scaled(static_cast<Eigen::Index>(n_), q_);
    Mat block(q_, q_);
    const double inv_n = 1.0 / static_cast<double>(n_);
    int k = 0;
    for (int a = 0; a < m_; ++a) {
        for (int b = a; b < m_; ++b, ++k) {
            scaled.noalias() = d.weights.row(k).transpose().asDiagonal() * z_;
            block.noalias() = z_.transpose() * scaled;
            block *= inv_n;
            for (int j = 0; j < q_; ++j) {
                const auto fj = static_cast<Eigen::Index>(flat_index(a, j));
                for (int l = 0; l < q_; ++l) {
                    const auto fl = static_cast<Eigen::Index>(flat_index(b, l));
                    h(fj, fl) = block(j, l);
                    h(fl, fj) = block(j, l);
                }
            }
        }
    }
    return h;
}

Vec NodeProblem::diagonal_hessian_from(const Derivatives& d) const {
    Vec out(static_cast<Eigen::Index>(layout_.tau));
    const double inv_n = 1.0 / static_cast<double>(n_);
    int k = 0;
    for (int a = 0; a < m_; ++a) {
        const auto w = d.weights.row(k);
        const Vec wv = w.transpose();
        for (int j = 0; j < q_; ++j) {
            out[static_cast<Eigen::Index>(flat_index(a, j))] =
                kernels::weighted_sumsq(as_span(wv), std::span<const double>(z_.col(j).data(), n_)) * inv_n;
        }
        k += m_ - a;
    }
    return out;
}

Mat NodeProblem::woodbury_factor_from(const Derivatives& d) const {
    const Eigen::Index n = static_cast<Eigen::Index>(n_);
    Mat m = Mat::Zero(n * m_, static_cast<Eigen::Index>(layout_.tau));
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
    Mat h(m_, m_);
    for (Eigen::Index i = 0; i < n; ++i) {
        int k = 0;
        for (int a = 0; a < m_; ++a) {
            for (int b = a; b < m_; ++b, ++k) h(a, b) = h(b, a) = d.weights(k, i);
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(h);
        const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        const Mat l = es.eigenvectors() * root.asDiagonal();
        for (int c = 0; c < m_; ++c) {
            for (int a = 0; a < m_; ++a) {
                const double f = l(a, c) * scale;
                if (f == 0.0) continue;
                for (int j = 0; j < q_; ++j) m(i * m_ + c, static_cast<Eigen::Index>(flat_index(a, j))) = f * z_(i, j);
            }
        }
    }
    return m;
}

Vec NodeProblem::gradient(const Vec& theta) const {
    Derivatives d;
    std::size_t bad = 0;
    if (!derivatives(eta(theta), d, false, &bad)) (void)loss_checked(theta);
    return gradient_from(d);
}

Mat NodeProblem::hessian(const Vec& theta) const {
    Derivatives d;
    std::size_t bad = 0;
    if (!derivatives(eta(theta), d, true, &bad)) (void)loss_checked(theta);
    return dense_hessian_from(d);
}

double node_loss(const NodeParamVector& theta, const Dataset& data, std::size_t r) {
    return NodeProblem(data, r).loss_checked(flatten(theta));
}

Vec node_loss_grad(const NodeParamVector& theta, const Dataset& data, std::size_t r) {
    return NodeProblem(data, r).gradient(flatten(theta));
}

Mat node_loss_hessian(const NodeParamVector& theta, const Dataset& data, std::size_t r) {
    return NodeProblem(data, r).hessian(flatten(theta));
}

}  // namespace vsmrf
