#pragma once

#include <span>
#include <vector>

#include "vsmrf/model.hpp"

namespace vsmrf {

/// n heterogeneous samples. Raw values are stored row-major (one full sample
/// per row); the stacked sufficient statistics are stored column-major so each
/// statistic is a contiguous length-n column for the solver kernels.
class Dataset {
   public:
    /// Validates every row against the schema; throws DomainError naming the
    /// offending sample and node.
    Dataset(GraphSchema schema, std::vector<double> values);

    const GraphSchema& schema() const { return schema_; }
    std::size_t size() const { return n_; }

    std::span<const double> row(std::size_t i) const;
    std::span<const double> value(std::size_t i, std::size_t r) const;
    const std::vector<double>& values() const { return values_; }

    /// Column j of the stacked statistic matrix (length n).
    std::span<const double> stat_column(std::size_t j) const;
    double stat(std::size_t i, std::size_t j) const { return stats_[j * n_ + i]; }

    Vec stat_means() const;

   private:
    GraphSchema schema_;
    std::size_t n_ = 0;
    std::vector<double> values_;
    std::vector<double> stats_;
};

}  // namespace vsmrf
