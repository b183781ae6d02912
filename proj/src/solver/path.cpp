#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "vsmrf/solver.hpp"

namespace vsmrf {

NodeFit fit_node(const Dataset& data, std::size_t r, const PenaltyWeights& w, const AdmmConfig& cfg,
                 AdmmState* warm) {
    return fit_node(NodeProblem(data, r), w, cfg, warm);
}

namespace {

void check_grid(const std::vector<double>& grid, const char* name) {
    if (grid.empty()) throw std::invalid_argument(std::string(name) + " grid is empty");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] >= 0.0) || !std::isfinite(grid[k])) {
            throw std::invalid_argument(std::string(name) + " grid values must be finite and nonnegative");
        }
        if (k > 0 && grid[k] > grid[k - 1]) throw std::invalid_argument(std::string(name) + " grid must be descending");
    }
}

std::vector<NodeFit> path_on(const NodeProblem& prob, const std::vector<double>& l1, const std::vector<double>& l2,
                             const AdmmConfig& cfg, bool warm_start) {
    std::vector<NodeFit> fits;
    fits.reserve(l1.size() * l2.size());
    AdmmState state;
    for (double a : l1) {
        for (double b : l2) {
            const auto w = PenaltyWeights::for_node(prob.schema(), prob.node(), a, b);
            if (warm_start) {
                fits.push_back(fit_node(prob, w, cfg, &state));
            } else {
                fits.push_back(fit_node(prob, w, cfg, nullptr));
            }
        }
    }
    return fits;
}

}  // namespace

std::vector<NodeFit> regularization_path(const Dataset& data, std::size_t r, const std::vector<double>& lambda1_grid,
                                         const std::vector<double>& lambda2_grid, const AdmmConfig& cfg,
                                         bool warm_start) {
    check_grid(lambda1_grid, "lambda1");
    check_grid(lambda2_grid, "lambda2");
    cfg.validate();
    return path_on(NodeProblem(data, r), lambda1_grid, lambda2_grid, cfg, warm_start);
}

std::vector<std::vector<NodeFit>> fit_all_nodes(const Dataset& data, const std::vector<double>& lambda1_grid,
                                                const std::vector<double>& lambda2_grid, const AdmmConfig& cfg,
                                                unsigned jobs, bool warm_start) {
    check_grid(lambda1_grid, "lambda1");
    check_grid(lambda2_grid, "lambda2");
    cfg.validate();
    const std::size_t p = data.schema().size();
    std::vector<std::vector<NodeFit>> out(p);
    std::vector<std::exception_ptr> errors(p);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t r = next++; r < p; r = next++) {
            try {
                out[r] = path_on(NodeProblem(data, r), lambda1_grid, lambda2_grid, cfg, warm_start);
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(p)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < workers; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::vector<double> log_spaced_grid(double hi, double lo, int count) {
    if (count < 1 || !(hi > 0.0) || !(lo > 0.0) || lo > hi) {
        throw std::invalid_argument("log grid needs count >= 1 and 0 < lo <= hi");
    }
    std::vector<double> g(static_cast<std::size_t>(count));
    if (count == 1) return {hi};
    const double a = std::log(hi), b = std::log(lo);
    for (int k = 0; k < count; ++k) g[static_cast<std::size_t>(k)] = std::exp(a + (b - a) * k / (count - 1));
    g.front() = hi;
    g.back() = lo;
    return g;
}

std::vector<double> default_lambda1_grid() { return log_spaced_grid(0.5, 1e-4, 20); }

}  // namespace vsmrf
