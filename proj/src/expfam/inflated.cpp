// Point-inflated wrapper around a scalar-valued base family.

#include <algorithm>
#include <cmath>

#include "family_impl.hpp"
#include "vsmrf/numeric_format.hpp"

namespace vsmrf {

namespace {

class Inflated final : public FamilyImpl {
   public:
    Inflated(FamilySpec base, std::vector<InflationPoint> points)
        : FamilyImpl(static_cast<int>(points.size()) + base.stat_dim(), 1),
          base_(std::move(base)),
          points_(std::move(points)) {
        const int k = num_points();
        const int mb = base_.stat_dim();
        constraints_.bounds.assign(k, OpenInterval{});
        const auto& bc = base_.constraints();
        constraints_.bounds.insert(constraints_.bounds.end(), bc.bounds.begin(), bc.bounds.end());
        if (bc.has_equality()) {
            constraints_.equality = Mat::Zero(bc.equality.rows(), k + mb);
            constraints_.equality.rightCols(mb) = bc.equality;
        }
        for (const auto& p : points_) {
            if (p.in_base_domain && base_.is_discrete()) {
                const double v = p.value;
                atom_stats_.push_back(base_.sufficient_statistics(std::span<const double>(&v, 1)));
            }
        }
    }

    FamilyKind kind() const override { return FamilyKind::inflated; }

    std::string tag() const override {
        std::string t = "inflated:" + base_.tag() + ":";
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (i) t += ",";
            t += format_double(points_[i].value);
        }
        return t;
    }

    StatRange stat_range(int j) const override {
        const int k = num_points();
        if (j < k) return {0.0, 1.0};
        StatRange r = base_.stat_range(j - k);
        return {std::min(r.lo, 0.0), std::max(r.hi, 0.0)};
    }

    bool is_discrete() const override { return base_.is_discrete(); }

    std::vector<std::vector<double>> enumerate_domain() const override {
        auto dom = base_.enumerate_domain();
        for (const auto& p : points_) {
            if (!p.in_base_domain) dom.push_back({p.value});
        }
        return dom;
    }

    std::optional<std::string> domain_problem(const double* x) const override {
        if (atom_index(x[0]) >= 0) return std::nullopt;
        if (base_.contains(std::span<const double>(x, 1))) return std::nullopt;
        return "value " + format_double(x[0]) + " is neither an inflation point nor in the " +
               base_.tag() + " domain";
    }

    void stats(const double* x, double* out) const override {
        const int k = num_points();
        std::fill(out, out + stat_dim_, 0.0);
        const int atom = atom_index(x[0]);
        if (atom >= 0) {
            out[atom] = 1.0;
            return;
        }
        base_.sufficient_statistics(std::span<const double>(x, 1),
                                    std::span<double>(out + k, stat_dim_ - k));
    }

    double evaluate(const double* eta, double* grad, double* hess) const override {
        const int k = num_points();
        const int mb = base_.stat_dim();
        const double* eta1 = eta + k;

        Vec base_grad(mb);
        Mat base_hess(mb, mb);
        const double base_a = base_.evaluate(std::span<const double>(eta1, mb),
                                             (grad || hess) ? base_grad.data() : nullptr,
                                             hess ? base_hess.data() : nullptr);

        // Terms of the normalizer: atoms (+), removed base atoms (-), base (+).
        const Eigen::Map<const Vec> e1(eta1, mb);
        std::vector<double> removed(atom_stats_.size());
        for (std::size_t s = 0; s < atom_stats_.size(); ++s) removed[s] = e1.dot(atom_stats_[s]);

        double mx = base_a;
        for (int i = 0; i < k; ++i) mx = std::max(mx, eta[i]);
        double z = std::exp(base_a - mx);
        for (int i = 0; i < k; ++i) z += std::exp(eta[i] - mx);
        for (double f : removed) z -= std::exp(f - mx);
        const double value = mx + std::log(z);

        if (!grad && !hess) return value;

        const double w_base = std::exp(base_a - value);
        Vec g = Vec::Zero(stat_dim_);
        for (int i = 0; i < k; ++i) g[i] = std::exp(eta[i] - value);
        g.tail(mb) = w_base * base_grad;
        std::vector<double> w_removed(removed.size());
        for (std::size_t s = 0; s < removed.size(); ++s) {
            w_removed[s] = -std::exp(removed[s] - value);
            g.tail(mb) += w_removed[s] * atom_stats_[s];
        }
        if (grad) std::copy(g.data(), g.data() + stat_dim_, grad);
        if (hess) {
            Eigen::Map<Mat> h(hess, stat_dim_, stat_dim_);
            h.setZero();
            for (int i = 0; i < k; ++i) h(i, i) = g[i];
            h.bottomRightCorner(mb, mb) = w_base * (base_hess + base_grad * base_grad.transpose());
            for (std::size_t s = 0; s < removed.size(); ++s) {
                h.bottomRightCorner(mb, mb) +=
                    w_removed[s] * atom_stats_[s] * atom_stats_[s].transpose();
            }
            h -= g * g.transpose();
        }
        return value;
    }

    void sample(const double* eta, Rng& rng, double* out) const override {
        const int k = num_points();
        const double a = evaluate(eta, nullptr, nullptr);
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        for (int i = 0; i < k; ++i) {
            const double p = std::exp(eta[i] - a);
            if (u < p) {
                out[0] = points_[i].value;
                return;
            }
            u -= p;
        }
        const std::span<const double> eta1(eta + k, base_.stat_dim());
        if (!base_.is_discrete()) {
            base_.sample(eta1, rng, std::span<double>(out, 1));
            return;
        }
        // Discrete base with atoms removed: draw exactly from the remaining states.
        std::vector<double> states;
        std::vector<double> logw;
        Vec s(base_.stat_dim());
        for (const auto& v : base_.enumerate_domain()) {
            if (atom_index(v[0]) >= 0) continue;
            base_.sufficient_statistics(v, std::span<double>(s.data(), s.size()));
            states.push_back(v[0]);
            logw.push_back(Eigen::Map<const Vec>(eta1.data(), s.size()).dot(s));
        }
        const double mx = *std::max_element(logw.begin(), logw.end());
        double z = 0.0;
        for (auto& w : logw) z += (w = std::exp(w - mx));
        double r = std::uniform_real_distribution<double>(0.0, z)(rng);
        for (std::size_t i = 0; i < states.size(); ++i) {
            if (r < logw[i] || i + 1 == states.size()) {
                out[0] = states[i];
                return;
            }
            r -= logw[i];
        }
    }

    Vec feasible_point() const override {
        Vec fp = Vec::Zero(stat_dim_);
        fp.tail(base_.stat_dim()) = base_.feasible_point();
        return fp;
    }

    const std::vector<InflationPoint>& points() const override { return points_; }
    const FamilySpec* base_family() const override { return &base_; }

   private:
    int num_points() const { return static_cast<int>(points_.size()); }

    int atom_index(double x) const {
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (points_[i].value == x) return static_cast<int>(i);
        }
        return -1;
    }

    FamilySpec base_;
    std::vector<InflationPoint> points_;
    std::vector<Vec> atom_stats_;  ///< B(j) for atoms inside a discrete base domain
};

}  // namespace

FamilySpec inflate(const FamilySpec& base, const std::vector<InflationPoint>& points) {
    if (points.empty()) throw std::invalid_argument("inflate: no inflation points");
    FamilySpec root = base.base();
    if (root.value_dim() != 1) {
        throw std::invalid_argument("inflate: base family " + root.tag() + " is not scalar-valued");
    }
    std::vector<InflationPoint> all = points;
    for (const auto& p : base.inflation_points()) all.push_back(p);
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (!std::isfinite(all[i].value)) throw std::invalid_argument("inflate: point must be finite");
        const bool inside = root.contains(std::span<const double>(&all[i].value, 1));
        if (inside != all[i].in_base_domain) {
            throw std::invalid_argument("inflate: point " + format_double(all[i].value) +
                                        (inside ? " lies in" : " lies outside") + " the " +
                                        root.tag() + " domain");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (all[j].value == all[i].value) {
                throw std::invalid_argument("inflate: duplicate inflation point " +
                                            format_double(all[i].value));
            }
        }
    }
    return FamilySpec(std::make_shared<Inflated>(root, std::move(all)));
}

FamilySpec inflate(const FamilySpec& base, const std::vector<double>& point_values) {
    const FamilySpec root = base.base();
    std::vector<InflationPoint> points;
    for (double v : point_values) {
        points.push_back({v, std::isfinite(v) && root.contains(std::span<const double>(&v, 1))});
    }
    return inflate(base, points);
}

}  // namespace vsmrf
