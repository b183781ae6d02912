// Closed-form catalog families.

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "family_impl.hpp"
#include "vsmrf/numeric_format.hpp"

namespace vsmrf {

namespace {

using FastPolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSimplexTol = 1e-9;

std::vector<OpenInterval> unbounded(int m) { return std::vector<OpenInterval>(m); }

// ---------------------------------------------------------------------------

class Bernoulli final : public FamilyImpl {
   public:
    Bernoulli() : FamilyImpl(1, 1) { constraints_.bounds = unbounded(1); }

    FamilyKind kind() const override { return FamilyKind::bernoulli; }
    std::string tag() const override { return "bernoulli"; }
    StatRange stat_range(int) const override { return {0.0, 1.0}; }
    bool is_discrete() const override { return true; }
    std::vector<std::vector<double>> enumerate_domain() const override { return {{0.0}, {1.0}}; }

    std::optional<std::string> domain_problem(const double* x) const override {
        if (x[0] == 0.0 || x[0] == 1.0) return std::nullopt;
        return "bernoulli value must be 0 or 1, got " + format_double(x[0]);
    }

    void stats(const double* x, double* out) const override { out[0] = x[0]; }

    double evaluate(const double* eta, double* grad, double* hess) const override {
        const double mu = 1.0 / (1.0 + std::exp(-eta[0]));
        if (grad) grad[0] = mu;
        if (hess) hess[0] = mu * (1.0 - mu);
        return softplus(eta[0]);
    }

    void sample(const double* eta, Rng& rng, double* out) const override {
        const double mu = 1.0 / (1.0 + std::exp(-eta[0]));
        out[0] = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < mu ? 1.0 : 0.0;
    }

    Vec feasible_point() const override { return Vec::Zero(1); }
};

// ---------------------------------------------------------------------------
// Statistics (x, x^2); eta = (mu / s2, -1 / (2 s2)).

class Gaussian final : public FamilyImpl {
   public:
    Gaussian() : FamilyImpl(2, 1) {
        constraints_.bounds = unbounded(2);
        constraints_.bounds[1].upper = 0.0;
    }

    FamilyKind kind() const override { return FamilyKind::gaussian; }
    std::string tag() const override { return "gaussian"; }
    StatRange stat_range(int j) const override {
        return j == 0 ? StatRange{-kInf, kInf} : StatRange{0.0, kInf};
    }

    std::optional<std::string> domain_problem(const double* x) const override {
        if (std::isfinite(x[0])) return std::nullopt;
        return "gaussian value must be finite";
    }

    void stats(const double* x, double* out) const override {
        out[0] = x[0];
        out[1] = x[0] * x[0];
    }

    double evaluate(const double* eta, double* grad, double* hess) const override {
        const double var = -0.5 / eta[1];
        const double mu = eta[0] * var;
        if (grad) {
            grad[0] = mu;
            grad[1] = mu * mu + var;
        }
        if (hess) {
            hess[0] = var;
            hess[1] = hess[2] = 2.0 * mu * var;
            hess[3] = 2.0 * var * var + 4.0 * mu * mu * var;
        }
        return -eta[0] * eta[0] / (4.0 * eta[1]) - 0.5 * std::log(-2.0 * eta[1]) +
               0.5 * std::log(2.0 * std::numbers::pi);
    }

    void sample(const double* eta, Rng& rng, double* out) const override {
        const double var = -0.5 / eta[1];
        out[0] = std::normal_distribution<double>(eta[0] * var, std::sqrt(var))(rng);
    }

    Vec feasible_point() const override { return Vec{{0.0, -0.5}}; }
};

// ---------------------------------------------------------------------------
// Statistics (log x, x); shape = eta1 + 1, rate = -eta2.

class Gamma final : public FamilyImpl {
   public:
    Gamma() : FamilyImpl(2, 1) {
        constraints_.bounds = unbounded(2);
        constraints_.bounds[0].lower = -1.0;
        constraints_.bounds[1].upper = 0.0;
    }

    FamilyKind kind() const override { return FamilyKind::gamma; }
    std::string tag() const override { return "gamma"; }
    StatRange stat_range(int j) const override {
        return j == 0 ? StatRange{-kInf, kInf} : StatRange{0.0, kInf};
    }

    std::optional<std::string> domain_problem(const double* x) const override {
        if (x[0] > 0.0 && std::isfinite(x[0])) return std::nullopt;
        return "gamma value must be positive and finite, got " + format_double(x[0]);
    }

    void stats(const double* x, double* out) const override {
        out[0] = std::log(x[0]);
        out[1] = x[0];
    }

    double evaluate(const double* eta, double* grad, double* hess) const override {
        const double shape = eta[0] + 1.0;
        const double rate = -eta[1];
        const double log_rate = std::log(rate);
        if (grad) {
            grad[0] = digamma(shape) - log_rate;
            grad[1] = shape / rate;
        }
        if (hess) {
            hess[0] = trigamma(shape);
            hess[1] = hess[2] = 1.0 / rate;
            hess[3] = shape / (rate * rate);
        }
        return log_gamma(shape) - shape * log_rate;
    }

    void sample(const double* eta, Rng& rng, double* out) const override {
        const double shape = eta[0] + 1.0;
        const double rate = -eta[1];
        double g = std::gamma_distribution<double>(shape, 1.0)(rng);
        out[0] = std::max(g / rate, std::numeric_limits<double>::min());
    }

    Vec feasible_point() const override { return Vec{{0.0, -1.0}}; }
};

// ---------------------------------------------------------------------------
// Statistics (log x_1, ..., log x_k) on the open simplex; alpha_j = eta_j + 1.

class Dirichlet final : public FamilyImpl {
   public:
    explicit Dirichlet(int k) : FamilyImpl(k, k) {
        if (k < 2) throw std::invalid_argument("dirichlet requires k >= 2");
        constraints_.bounds = unbounded(k);
        for (auto& b : constraints_.bounds) b.lower = -1.0;
    }

    FamilyKind kind() const override { return FamilyKind::dirichlet; }
    std::string tag() const override { return "dirichlet:" + std::to_string(stat_dim_); }
    StatRange stat_range(int) const override { return {-kInf, 0.0}; }

    std::optional<std::string> domain_problem(const double* x) const override {
        double sum = 0.0;
        for (int j = 0; j < stat_dim_; ++j) {
            if (!(x[j] > 0.0) || !std::isfinite(x[j])) {
                return "dirichlet coordinate " + std::to_string(j) + " must be positive, got " +
                       format_double(x[j]);
            }
            sum += x[j];
        }
        if (std::fabs(sum - 1.0) > kSimplexTol) {
            return "dirichlet coordinates must sum to 1, got " + format_double(sum);
        }
        return std::nullopt;
    }

    void stats(const double* x, double* out) const override {
        for (int j = 0; j < stat_dim_; ++j) out[j] = std::log(x[j]);
    }

    double evaluate(const double* eta, double* grad, double* hess) const override {
        const int k = stat_dim_;
        double a0 = 0.0;
        double value = 0.0;
        for (int j = 0; j < k; ++j) {
            const double a = eta[j] + 1.0;
            a0 += a;
            value += log_gamma(a);
        }
        value -= log_gamma(a0);
        if (grad) {
            const double d0 = digamma(a0);
            for (int j = 0; j < k; ++j) grad[j] = digamma(eta[j] + 1.0) - d0;
        }
        if (hess) {
            const double t0 = trigamma(a0);
            for (int c = 0; c < k; ++c) {
                for (int r = 0; r < k; ++r) hess[c * k + r] = -t0;
                hess[c * k + c] += trigamma(eta[c] + 1.0);
            }
        }
        return value;
    }

    void sample(const double* eta, Rng& rng, double* out) const override {
        // Log-space gamma draws so that small concentrations do not underflow.
        const int k = stat_dim_;
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double max_log = -kInf;
        for (int j = 0; j < k; ++j) {
            const double a = eta[j] + 1.0;
            double lg;
            if (a >= 1.0) {
                lg = std::log(std::gamma_distribution<double>(a, 1.0)(rng));
            } else {
                const double g = std::gamma_distribution<double>(a + 1.0, 1.0)(rng);
                double u = unif(rng);
                while (u == 0.0) u = unif(rng);
                lg = std::log(g) + std::log(u) / a;
            }
            out[j] = lg;
            max_log = std::max(max_log, lg);
        }
        double total = 0.0;
        for (int j = 0; j < k; ++j) {
            out[j] = std::exp(out[j] - max_log);
            total += out[j];
        }
        for (int j = 0; j < k; ++j) {
            out[j] = std::max(out[j] / total, std::numeric_limits<double>::min());
        }
    }

    Vec feasible_point() const override { return Vec::Zero(stat_dim_); }
};

// ---------------------------------------------------------------------------
// Values are integer codes 0..k-1. Minimal form: indicators of 1..k-1.
// Overcomplete form: indicators of 0..k-1 with sum(eta) = 0.

class Categorical final : public FamilyImpl {
   public:
    Categorical(int k, bool overcomplete)
        : FamilyImpl(overcomplete ? k : k - 1, 1), k_(k), overcomplete_(overcomplete) {
        if (k < 2) throw std::invalid_argument("categorical requires k >= 2");
        constraints_.bounds = unbounded(stat_dim_);
        if (overcomplete_) constraints_.equality = Mat::Ones(1, k);
    }

    FamilyKind kind() const override { return FamilyKind::categorical; }
    std::string tag() const override {
        return "categorical:" + std::to_string(k_) + (overcomplete_ ? ":overcomplete" : "");
    }
    StatRange stat_range(int) const override { return {0.0, 1.0}; }
    bool is_discrete() const override { return true; }
    std::vector<std::vector<double>> enumerate_domain() const override {
        std::vector<std::vector<double>> out;
        for (int c = 0; c < k_; ++c) out.push_back({static_cast<double>(c)});
        return out;
    }

    std::optional<std::string> domain_problem(const double* x) const override {
        const double v = x[0];
        if (v >= 0.0 && v < k_ && std::floor(v) == v) return std::nullopt;
        return "categorical:" + std::to_string(k_) + " value must be an integer in [0, " +
               std::to_string(k_ - 1) + "], got " + format_double(v);
    }

    void stats(const double* x, double* out) const override {
        std::fill(out, out + stat_dim_, 0.0);
        const int c = static_cast<int>(x[0]);
        const int slot = overcomplete_ ? c : c - 1;
        if (slot >= 0) out[slot] = 1.0;
    }

    double evaluate(const double* eta, double* grad, double* hess) const override {
        const int m = stat_dim_;
        double mx = overcomplete_ ? -kInf : 0.0;
        for (int j = 0; j < m; ++j) mx = std::max(mx, eta[j]);
        double z = overcomplete_ ? 0.0 : std::exp(-mx);
        for (int j = 0; j < m; ++j) z += std::exp(eta[j] - mx);
        if (grad || hess) {
            std::vector<double> p(m);
            for (int j = 0; j < m; ++j) p[j] = std::exp(eta[j] - mx) / z;
            if (grad) std::copy(p.begin(), p.end(), grad);
            if (hess) {
                for (int c = 0; c < m; ++c) {
                    for (int r = 0; r < m; ++r) hess[c * m + r] = -p[r] * p[c];
                    hess[c * m + c] += p[c];
                }
            }
        }
        return mx + std::log(z);
    }

    void sample(const double* eta, Rng& rng, double* out) const override {
        std::vector<double> p(m_probs(eta));
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        double acc = 0.0;
        for (int c = 0; c < k_; ++c) {
            acc += p[c];
            if (u < acc) {
                out[0] = c;
                return;
            }
        }
        out[0] = k_ - 1;
    }

    Vec feasible_point() const override { return Vec::Zero(stat_dim_); }

   private:
    std::vector<double> m_probs(const double* eta) const {
        std::vector<double> logits(k_, 0.0);
        for (int c = 0; c < k_; ++c) {
            const int slot = overcomplete_ ? c : c - 1;
            logits[c] = slot >= 0 ? eta[slot] : 0.0;
        }
        const double mx = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (auto& l : logits) z += (l = std::exp(l - mx));
        for (auto& l : logits) l /= z;
        return logits;
    }

    int k_;
    bool overcomplete_;
};

}  // namespace

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double digamma(double x) { return boost::math::digamma(x, FastPolicy()); }
double trigamma(double x) { return boost::math::trigamma(x, FastPolicy()); }
double log_gamma(double x) { return boost::math::lgamma(x, FastPolicy()); }

std::vector<std::vector<double>> FamilyImpl::enumerate_domain() const {
    throw std::logic_error(tag() + " has a continuous domain");
}

const std::vector<InflationPoint>& FamilyImpl::points() const {
    static const std::vector<InflationPoint> none;
    return none;
}

FamilySpec FamilySpec::bernoulli() { return FamilySpec(std::make_shared<Bernoulli>()); }
FamilySpec FamilySpec::gaussian() { return FamilySpec(std::make_shared<Gaussian>()); }
FamilySpec FamilySpec::gamma() { return FamilySpec(std::make_shared<Gamma>()); }
FamilySpec FamilySpec::dirichlet(int k) { return FamilySpec(std::make_shared<Dirichlet>(k)); }
FamilySpec FamilySpec::categorical(int k, bool overcomplete) {
    return FamilySpec(std::make_shared<Categorical>(k, overcomplete));
}

}  // namespace vsmrf
