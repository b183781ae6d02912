#pragma once

// Catalog of minimal finite-dimensional exponential families
//
//   p(x | eta) = exp(<eta, B(x)> + C(x) - A(eta))
//
// with vector sufficient statistics B, and the point-inflated wrapper that adds
// atoms at chosen values. Every catalog family uses C == 0; normalizing
// constants such as 1/2 log(2 pi) or log Gamma terms are part of A.

#include <Eigen/Core>

#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vsmrf/errors.hpp"

namespace vsmrf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

enum class FamilyKind { bernoulli, gaussian, gamma, dirichlet, categorical, inflated };

/// Open interval (lower, upper); infinite ends mean unbounded.
struct OpenInterval {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();

    bool bounded_below() const { return lower > -std::numeric_limits<double>::infinity(); }
    bool bounded_above() const { return upper < std::numeric_limits<double>::infinity(); }
};

/// Closed range [lo, hi] of a sufficient statistic over the family domain.
struct StatRange {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

struct ConstraintDescriptor {
    std::vector<OpenInterval> bounds;  ///< one per natural-parameter coordinate
    Mat equality;                      ///< rows e with e . eta == 0; zero rows when absent

    bool has_equality() const { return equality.rows() > 0; }
};

struct InflationPoint {
    double value = 0.0;
    bool in_base_domain = false;

    friend bool operator==(const InflationPoint&, const InflationPoint&) = default;
};

class FamilyImpl;

/// Immutable handle to an exponential family; cheap to copy and safe to share
/// across threads.
class FamilySpec {
   public:
    static FamilySpec bernoulli();
    static FamilySpec gaussian();
    static FamilySpec gamma();
    static FamilySpec dirichlet(int k);
    /// Minimal form drops the indicator of category 0. The overcomplete form
    /// keeps all k indicators and carries the equality constraint sum(eta) = 0.
    static FamilySpec categorical(int k, bool overcomplete = false);

    /// Parses a catalog tag: "bernoulli", "gaussian", "gamma", "dirichlet:k",
    /// "categorical:k", "categorical:k:overcomplete", "inflated:<base>:<v1,v2,...>".
    static FamilySpec parse(std::string_view tag);

    FamilyKind kind() const;
    std::string tag() const;
    int stat_dim() const;
    /// Number of raw columns a value occupies (k for dirichlet(k), else 1).
    int value_dim() const;
    const ConstraintDescriptor& constraints() const;
    StatRange stat_range(int j) const;

    bool is_discrete() const;
    /// All domain values of a discrete family, in a fixed order.
    std::vector<std::vector<double>> enumerate_domain() const;
    bool contains(std::span<const double> x) const;
    void validate(std::span<const double> x) const;

    void sufficient_statistics(std::span<const double> x, std::span<double> out) const;
    Vec sufficient_statistics(std::span<const double> x) const;
    double base_measure(std::span<const double> x) const;

    bool is_feasible(std::span<const double> eta) const;
    /// Throws ConstraintViolation naming the first violated bound.
    void check_feasible(std::span<const double> eta) const;

    double log_partition(std::span<const double> eta) const;
    Vec grad_log_partition(std::span<const double> eta) const;
    Mat hessian_log_partition(std::span<const double> eta) const;
    /// Fused evaluation for hot loops. `grad` (length m) and `hess` (m*m,
    /// column-major) may be null. Does not check feasibility.
    double evaluate(std::span<const double> eta, double* grad, double* hess) const;

    void sample(std::span<const double> eta, Rng& rng, std::span<double> out) const;
    std::vector<double> sample(std::span<const double> eta, Rng& rng) const;

    Vec feasible_point() const;

    /// Inflation points of an inflated family (empty otherwise).
    const std::vector<InflationPoint>& inflation_points() const;
    /// Base family of an inflated family; *this otherwise.
    FamilySpec base() const;

    friend bool operator==(const FamilySpec& a, const FamilySpec& b) { return a.tag() == b.tag(); }

    explicit FamilySpec(std::shared_ptr<const FamilyImpl> impl);

   private:
    std::shared_ptr<const FamilyImpl> impl_;
};

/// Wraps `base` with atoms at `points`. The statistic vector becomes
/// (1[x = j_1], ..., 1[x = j_K], B_base(x)) where B_base is zeroed at the
/// atoms, so an atom's unnormalized mass is exp(eta0_k) and
///   A_infl = log(sum_k exp(eta0_k) - sum_{k: j_k in a discrete base} exp(eta1 . B(j_k))
///                + exp(A(eta1))).
/// Inflating an inflated family prepends the new points.
FamilySpec inflate(const FamilySpec& base, const std::vector<InflationPoint>& points);
FamilySpec inflate(const FamilySpec& base, const std::vector<double>& point_values);

/// 99.5th percentile of the strictly positive entries (linear interpolation);
/// the winsorization cap for an outlier bucket.
double outlier_cap(std::span<const double> values, double quantile = 0.995);

// Free-function forms of the core operations.
inline Vec sufficient_statistics(const FamilySpec& f, std::span<const double> x) {
    return f.sufficient_statistics(x);
}
inline double base_measure(const FamilySpec& f, std::span<const double> x) { return f.base_measure(x); }
inline double log_partition(const FamilySpec& f, std::span<const double> eta) { return f.log_partition(eta); }
inline Vec grad_log_partition(const FamilySpec& f, std::span<const double> eta) {
    return f.grad_log_partition(eta);
}
inline Mat hessian_log_partition(const FamilySpec& f, std::span<const double> eta) {
    return f.hessian_log_partition(eta);
}
inline Vec feasible_point(const FamilySpec& f) { return f.feasible_point(); }

inline std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace vsmrf
