#include "panogs/errors.hpp"
#include "panogs/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace panogs {

void OptimizationSchedule::validate() const
{
    if (pre_pcd_iters < 0 || pre_pano_iters <= 0 || transfer_iters <= 0) {
        throw ConfigError("schedule iteration counts must be positive (pre_pcd_iters may be 0)");
    }
    if (densify_interval < 1) {
        throw ConfigError("densify_interval must be at least 1");
    }
    if (!(lambda_dssim >= 0.0 && lambda_dssim <= 1.0)) {
        throw ConfigError("lambda_dssim must lie in [0, 1]");
    }
    if (!(densify_grad_threshold > 0.0) || !(prune_opacity >= 0.0 && prune_opacity < 1.0)) {
        throw ConfigError("densify threshold must be positive and prune opacity in [0, 1)");
    }
    if (sh_degree < 0 || sh_degree > 3) {
        throw ConfigError("sh_degree must lie in [0, 3]");
    }
}

AdamOptimizer::AdamOptimizer(std::size_t n, int rest_width)
{
    m_.resize_zero(n, rest_width);
    v_.resize_zero(n, rest_width);
}

void AdamOptimizer::step(GaussianField& field, const GaussianParams& grads, const LearningRates& lr, double position_lr)
{
    constexpr double b1 = 0.9;
    constexpr double b2 = 0.999;
    constexpr double eps = 1e-15;
    ++steps_;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    using G = GaussianParams::Group;
    for (auto g : GaussianParams::kGroups) {
        double rate = 0.0;
        switch (g) {
        case G::position:
            rate = position_lr;
            break;
        case G::log_scale:
            rate = lr.scale;
            break;
        case G::rotation:
            rate = lr.rotation;
            break;
        case G::opacity:
            rate = lr.opacity;
            break;
        case G::sh_dc:
            rate = lr.sh_dc;
            break;
        case G::sh_rest:
            rate = lr.sh_rest;
            break;
        }
        auto& p = field.params.group(g);
        const auto& d = grads.group(g);
        auto& m = m_.group(g);
        auto& v = v_.group(g);
        if (d.size() != p.size() || m.size() != p.size()) {
            throw ContractError("Adam state does not match the field size");
        }
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * d[k];
            v[k] = b2 * v[k] + (1.0 - b2) * d[k] * d[k];
            p[k] -= rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
        }
    }
    field.project_to_valid();
}

void AdamOptimizer::remap(const std::vector<int>& rows, int rest_width)
{
    m_ = GaussianParams::gather(m_, rows, rest_width);
    v_ = GaussianParams::gather(v_, rows, rest_width);
}

void DensifyStats::reset(std::size_t n)
{
    grad_sum.assign(n, 0.0);
    count.assign(n, 0);
}

void DensifyStats::accumulate(const RasterGradients& g)
{
    if (g.visible.size() != grad_sum.size()) {
        throw ContractError("densify statistics do not match the field size");
    }
    for (std::size_t i = 0; i < grad_sum.size(); ++i) {
        if (g.visible[i]) {
            grad_sum[i] += g.screen_grad_norm[i];
            ++count[i];
        }
    }
}

void TrainingAudit::check_opacity(const GaussianField& field)
{
    if (field.size() < 2) {
        return;
    }
    const double first = field.params.opacity_logit[0];
    for (double o : field.params.opacity_logit) {
        if (o != first) {
            return;
        }
    }
    ++opacity_reset_events;
}

DensifyOutcome densify_and_prune(GaussianField& field, AdamOptimizer& adam, const DensifyStats& stats,
                                 const OptimizationSchedule& schedule, double scene_extent, bool grow,
                                 std::uint64_t seed)
{
    const std::size_t n = field.size();
    if (stats.grad_sum.size() != n) {
        throw ContractError("densify statistics do not match the field size");
    }
    DensifyOutcome outcome;
    std::vector<int> field_rows;
    std::vector<int> adam_rows;
    std::vector<bool> removed(n, false);
    struct Child {
        int source;
        Vec3 position;
        Vec3 log_scale;
    };
    std::vector<int> clones;
    std::vector<Child> children;

    if (grow) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::size_t budget = schedule.max_gaussians > n ? schedule.max_gaussians - n : 0;
        for (std::size_t i = 0; i < n && budget > 0; ++i) {
            if (stats.count[i] == 0 || stats.grad_sum[i] / stats.count[i] < schedule.densify_grad_threshold) {
                continue;
            }
            const Vec3 s = field.scale(i);
            if (s.maxCoeff() <= schedule.clone_extent_fraction * scene_extent) {
                clones.push_back(static_cast<int>(i));
                --budget;
            } else {
                const Mat3 R = field.rotation(i).toRotationMatrix();
                const Vec3 shrunk = (s / 1.6).array().log();
                for (int c = 0; c < 2; ++c) {
                    const Vec3 offset(normal(rng) * s.x(), normal(rng) * s.y(), normal(rng) * s.z());
                    children.push_back({static_cast<int>(i), field.position(i) + R * offset, shrunk});
                }
                removed[i] = true;
                budget = budget > 0 ? budget - 1 : 0;
            }
        }
    }
    outcome.cloned = clones.size();
    outcome.split = children.size() / 2;

    for (std::size_t i = 0; i < n; ++i) {
        if (!removed[i]) {
            field_rows.push_back(static_cast<int>(i));
            adam_rows.push_back(static_cast<int>(i));
        }
    }
    for (int c : clones) {
        field_rows.push_back(c);
        adam_rows.push_back(-1);
    }
    const std::size_t first_child = field_rows.size();
    for (const auto& c : children) {
        field_rows.push_back(c.source);
        adam_rows.push_back(-1);
    }
    const int rw = field.sh_rest_width();
    GaussianParams grown = GaussianParams::gather(field.params, field_rows, rw);
    for (std::size_t k = 0; k < children.size(); ++k) {
        const std::size_t row = first_child + k;
        for (int a = 0; a < 3; ++a) {
            grown.position[3 * row + a] = children[k].position[a];
            grown.log_scale[3 * row + a] = children[k].log_scale[a];
        }
    }

    // Prune on the grown set.
    std::vector<int> keep;
    for (std::size_t r = 0; r < field_rows.size(); ++r) {
        if (sigmoid(grown.opacity_logit[r]) >= schedule.prune_opacity) {
            keep.push_back(static_cast<int>(r));
        }
    }
    outcome.pruned = field_rows.size() - keep.size();
    std::vector<int> adam_final;
    adam_final.reserve(keep.size());
    for (int r : keep) {
        adam_final.push_back(adam_rows[static_cast<std::size_t>(r)]);
    }
    field.params = GaussianParams::gather(grown, keep, rw);
    field.project_to_valid();
    adam.remap(adam_final, rw);
    return outcome;
}

}  // namespace panogs
