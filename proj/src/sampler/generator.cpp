#include <cmath>
#include <limits>

#include "vsmrf/sampler.hpp"

namespace vsmrf {

void SparsityProfile::validate() const {
    if (!(edge_sparsity >= 0.0 && edge_sparsity <= 1.0) || !(param_sparsity >= 0.0 && param_sparsity <= 1.0)) {
        throw std::invalid_argument("sparsity fractions must lie in [0, 1]");
    }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Can w * s, s in `range`, be added to a natural parameter with bounds `b`
// without an unbounded excursion toward a finite bound?
bool sign_safe(const OpenInterval& b, const StatRange& range, int sign) {
    const double lo = sign > 0 ? range.lo : -range.hi;
    const double hi = sign > 0 ? range.hi : -range.lo;
    if (b.bounded_below() && lo == -kInf) return false;
    if (b.bounded_above() && hi == kInf) return false;
    return true;
}

struct SignOptions {
    bool pos = false;
    bool neg = false;
};

std::vector<SignOptions> safe_signs(const GraphSchema& schema, std::size_t r, std::size_t t) {
    const auto& fr = schema.family(r);
    const auto& ft = schema.family(t);
    std::vector<SignOptions> out(static_cast<std::size_t>(fr.stat_dim() * ft.stat_dim()));
    for (int a = 0; a < fr.stat_dim(); ++a) {
        for (int c = 0; c < ft.stat_dim(); ++c) {
            auto& o = out[static_cast<std::size_t>(a * ft.stat_dim() + c)];
            for (int s : {1, -1}) {
                const bool ok = sign_safe(fr.constraints().bounds[a], ft.stat_range(c), s) &&
                                sign_safe(ft.constraints().bounds[c], fr.stat_range(a), s);
                (s > 0 ? o.pos : o.neg) = ok;
            }
        }
    }
    return out;
}

Mat draw_block(int rows, int cols, const std::vector<SignOptions>& signs, const SparsityProfile& profile,
               double scale, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> mag(0.5, 1.0);
    Mat b = Mat::Zero(rows, cols);
    for (int a = 0; a < rows; ++a) {
        for (int c = 0; c < cols; ++c) {
            const bool zero = unit(rng) < profile.param_sparsity;
            const double m = mag(rng) * scale;
            const int sign = unit(rng) < 0.5 ? 1 : -1;
            if (zero) continue;
            const auto& o = signs[static_cast<std::size_t>(a * cols + c)];
            if ((sign > 0 && o.pos) || (sign < 0 && o.neg)) {
                b(a, c) = sign * m;
            } else if (o.pos || o.neg) {
                b(a, c) = o.pos ? m : -m;
            }
        }
    }
    return b;
}

}  // namespace

JointModel random_model(const GraphSchema& schema, const SparsityProfile& profile, Rng& rng,
                        const GeneratorOptions& options) {
    profile.validate();
    if (!(options.weight_scale > 0.0)) throw std::invalid_argument("weight_scale must be positive");
    JointModel model(schema);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t p = schema.size();

    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t t = r + 1; t < p; ++t) {
            if (!(unit(rng) < 1.0 - profile.edge_sparsity)) continue;
            const auto signs = safe_signs(schema, r, t);
            bool any = false;
            for (const auto& o : signs) any = any || o.pos || o.neg;
            if (!any) {
                throw ValidationError("no coupling between '" + schema.node(r).name + "' and '" +
                                      schema.node(t).name + "' keeps both conditionals proper");
            }
            Mat block;
            int attempt = 0;
            do {
                if (attempt++ == options.max_block_redraws) {
                    throw ValidationError("edge ('" + schema.node(r).name + "', '" + schema.node(t).name +
                                          "') stayed all-zero after bounded redraws");
                }
                block = draw_block(schema.stat_dim(r), schema.stat_dim(t), signs, profile, options.weight_scale, rng);
            } while (block.isZero(0.0));
            model.set_edge(r, t, block);
        }
    }

    for (std::size_t r = 0; r < p; ++r) {
        const auto& fam = schema.family(r);
        Vec bias = fam.feasible_point();
        JointModel coupling_only = model;
        coupling_only.set_bias(r, Vec::Zero(fam.stat_dim()));
        for (int a = 0; a < fam.stat_dim(); ++a) {
            const auto& b = fam.constraints().bounds[a];
            const StatRange range = conditional_eta_range(coupling_only, r, a);
            if (b.bounded_below()) bias[a] -= range.lo;
            if (b.bounded_above()) bias[a] -= range.hi;
        }
        if (fam.kind() == FamilyKind::gaussian) {
            double off = 0.0;
            for (std::size_t t : model.neighbors(r)) {
                if (schema.family(t).kind() == FamilyKind::gaussian) off += std::fabs(model.edge(r, t)(0, 0));
            }
            bias[1] -= 0.5 * off;
        }
        model.set_bias(r, bias);
    }
    validate_joint_feasibility(model);
    return model;
}

}  // namespace vsmrf
