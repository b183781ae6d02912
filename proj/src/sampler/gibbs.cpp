#include "vsmrf/sampler.hpp"

namespace vsmrf {

namespace {

struct NeighborTerm {
    std::size_t t;
    Mat block;  // theta_rt, m_r x m_t
};

}  // namespace

Dataset gibbs_sample(const JointModel& model, std::size_t n, const SamplerConfig& cfg, GibbsReport* report) {
    if (cfg.thin == 0) throw std::invalid_argument("thin must be positive");
    const auto& schema = model.schema();
    const std::size_t p = schema.size();

    std::vector<std::vector<NeighborTerm>> terms(p);
    for (const auto& [key, block] : model.edges()) {
        terms[key.first].push_back({key.second, block});
        terms[key.second].push_back({key.first, block.transpose()});
    }

    Rng rng(cfg.seed);
    std::vector<double> x(schema.total_value_dim());
    Vec stats(schema.total_stat_dim());
    auto set_node = [&](std::size_t r, std::span<const double> v) {
        std::copy(v.begin(), v.end(), x.begin() + schema.value_offset(r));
        schema.family(r).sufficient_statistics(
            v, std::span<double>(stats.data() + schema.stat_offset(r), schema.stat_dim(r)));
    };

    std::vector<double> draw(schema.total_value_dim());
    for (std::size_t r = 0; r < p; ++r) {
        const auto& fam = schema.family(r);
        const Vec& b = model.bias(r);
        fam.check_feasible(as_span(b));
        std::span<double> out(draw.data(), fam.value_dim());
        fam.sample(as_span(b), rng, out);
        set_node(r, out);
    }

    std::vector<Vec> eta(p);
    for (std::size_t r = 0; r < p; ++r) eta[r].resize(schema.stat_dim(r));

    std::size_t scans = 0;
    auto scan = [&]() {
        for (std::size_t r = 0; r < p; ++r) {
            const auto& fam = schema.family(r);
            Vec& e = eta[r];
            e = model.bias(r);
            for (const auto& term : terms[r]) {
                e.noalias() += term.block * stats.segment(schema.stat_offset(term.t), schema.stat_dim(term.t));
            }
            try {
                fam.check_feasible(as_span(e));
            } catch (const ConstraintViolation& cv) {
                throw cv.at_sample(scans);
            }
            std::span<double> out(draw.data(), fam.value_dim());
            fam.sample(as_span(e), rng, out);
            set_node(r, out);
        }
        ++scans;
    };

    for (std::size_t s = 0; s < cfg.burn_in; ++s) scan();
    std::vector<double> values;
    values.reserve(n * x.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < cfg.thin; ++s) scan();
        values.insert(values.end(), x.begin(), x.end());
    }
    if (report) report->scans = scans;
    return Dataset(schema, std::move(values));
}

}  // namespace vsmrf
