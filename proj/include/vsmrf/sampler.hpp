#pragma once

// Synthetic ground truth: random sparse pairwise models and a systematic-scan
// Gibbs sampler over their node conditionals.

#include <cstdint>

#include "vsmrf/dataset.hpp"
#include "vsmrf/model.hpp"

namespace vsmrf {

struct SparsityProfile {
    double edge_sparsity = 0.9;   ///< probability that a node pair has no edge
    double param_sparsity = 0.5;  ///< probability that an entry of an edge block is zero

    static SparsityProfile high() { return {0.9, 0.5}; }
    static SparsityProfile low() { return {0.5, 0.1}; }
    void validate() const;
};

struct GeneratorOptions {
    double weight_scale = 1.0;
    int max_block_redraws = 100;
};

/// Random model with independent edges and entries drawn uniformly from
/// +-[0.5, 1] * weight_scale.
///
/// Entries whose sign would let a node conditional leave its family's natural
/// parameter domain for some reachable configuration are flipped, or zeroed
/// when neither sign is safe for both endpoints. Biases start at each family's
/// feasible point and are shifted so the worst case over the statistic ranges
/// lands on that point; a gaussian's quadratic coefficient additionally keeps
/// half the absolute sum of its gaussian-gaussian couplings as margin, so the
/// joint precision stays diagonally dominant. The result passes
/// validate_joint_feasibility.
JointModel random_model(const GraphSchema& schema, const SparsityProfile& profile, Rng& rng,
                        const GeneratorOptions& options = {});

struct SamplerConfig {
    std::size_t burn_in = 2000;
    std::size_t thin = 10;
    std::uint64_t seed = 0;
};

struct GibbsReport {
    std::size_t scans = 0;
};

/// Systematic-scan Gibbs chain (nodes in schema order). The initial state draws
/// every node from its family at the bias. After burn_in full scans, every
/// thin-th scan is emitted until n samples are collected, so exactly
/// burn_in + n * thin scans run. Throws ConstraintViolation (with the scan
/// index) if a conditional natural parameter leaves its domain.
Dataset gibbs_sample(const JointModel& model, std::size_t n, const SamplerConfig& cfg,
                     GibbsReport* report = nullptr);

}  // namespace vsmrf
