#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vsmrf/expfam.hpp"

namespace vsmrf {

class FamilyImpl {
   public:
    FamilyImpl(int stat_dim, int value_dim) : stat_dim_(stat_dim), value_dim_(value_dim) {}
    virtual ~FamilyImpl() = default;

    virtual FamilyKind kind() const = 0;
    virtual std::string tag() const = 0;
    virtual StatRange stat_range(int j) const = 0;
    virtual bool is_discrete() const { return false; }
    virtual std::vector<std::vector<double>> enumerate_domain() const;
    /// Reason the value is outside the domain, or nullopt.
    virtual std::optional<std::string> domain_problem(const double* x) const = 0;
    virtual void stats(const double* x, double* out) const = 0;
    virtual double evaluate(const double* eta, double* grad, double* hess) const = 0;
    virtual void sample(const double* eta, Rng& rng, double* out) const = 0;
    virtual Vec feasible_point() const = 0;
    virtual const std::vector<InflationPoint>& points() const;
    virtual const FamilySpec* base_family() const { return nullptr; }

    int stat_dim() const { return stat_dim_; }
    int value_dim() const { return value_dim_; }
    const ConstraintDescriptor& constraints() const { return constraints_; }

   protected:
    int stat_dim_;
    int value_dim_;
    ConstraintDescriptor constraints_;
};

/// log(1 + exp(x)) without overflow.
double softplus(double x);
double digamma(double x);
double trigamma(double x);
double log_gamma(double x);

}  // namespace vsmrf
