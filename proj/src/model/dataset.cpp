#include "vsmrf/dataset.hpp"

#include <string>

namespace vsmrf {

Dataset::Dataset(GraphSchema schema, std::vector<double> values)
    : schema_(std::move(schema)), values_(std::move(values)) {
    const std::size_t d = schema_.total_value_dim();
    if (values_.size() % d != 0) {
        throw std::invalid_argument("dataset: value count is not a multiple of the row width");
    }
    n_ = values_.size() / d;
    const std::size_t m = schema_.total_stat_dim();
    stats_.assign(n_ * m, 0.0);
    std::vector<double> buf(schema_.max_stat_dim());
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t t = 0; t < schema_.size(); ++t) {
            const int mt = schema_.stat_dim(t);
            try {
                schema_.family(t).sufficient_statistics(value(i, t), std::span<double>(buf.data(), mt));
            } catch (const DomainError& e) {
                throw DomainError("sample " + std::to_string(i) + ", node '" + schema_.node(t).name +
                                  "': " + e.what());
            }
            const std::size_t off = schema_.stat_offset(t);
            for (int c = 0; c < mt; ++c) stats_[(off + c) * n_ + i] = buf[c];
        }
    }
}

std::span<const double> Dataset::row(std::size_t i) const {
    const std::size_t d = schema_.total_value_dim();
    return std::span<const double>(values_).subspan(i * d, d);
}

std::span<const double> Dataset::value(std::size_t i, std::size_t r) const {
    return row(i).subspan(schema_.value_offset(r), schema_.value_dim(r));
}

std::span<const double> Dataset::stat_column(std::size_t j) const {
    return std::span<const double>(stats_).subspan(j * n_, n_);
}

Vec Dataset::stat_means() const {
    const std::size_t m = schema_.total_stat_dim();
    Vec out = Vec::Zero(m);
    if (n_ == 0) return out;
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (double v : stat_column(j)) s += v;
        out[j] = s / static_cast<double>(n_);
    }
    return out;
}

}  // namespace vsmrf
