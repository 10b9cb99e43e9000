#pragma once

// Deterministic, model-free stand-ins for the external adapters. Each stub is a pure
// function of its inputs and seed.

#include "panogs/adapters.hpp"
#include "panogs/synthetic_scene.hpp"

#include <cstdint>

namespace panogs {

/// Fill `missing` pixels: push-pull pyramid initialisation followed by Gauss-Seidel
/// relaxation of the discrete Laplace equation. Filled values are convex combinations of
/// the known pixels bordering each hole. Known pixels are returned bit-identical.
Image push_pull_fill(const Image& image, const Mask& missing, int relax_iterations = 400);

class ProceduralGeneratorStub final : public GeneratorClient {
public:
    Image stage(const GenerationRequest& request) override;
};

class ConstantDepthStub final : public DepthClient {
public:
    explicit ConstantDepthStub(double depth_m) : depth_(depth_m) {}
    Image disparity(const Image& image, const ViewHint& hint) override;

private:
    double depth_;
};

class ConstantMetricStub final : public MetricDepthClient {
public:
    explicit ConstantMetricStub(double depth_m) : depth_(depth_m) {}
    Image depth(const Image& image, const ViewHint& hint) override;

private:
    double depth_;
};

/// Ray-casts the scene through each pixel of the hinted camera and returns
/// scale_f / distance + offset_f, with (scale_f, offset_f) a fixed per-face corruption
/// drawn from the seed: scale in [0.5, 2], offset in [-0.2, 0.2].
class AnalyticDepthStub final : public DepthClient {
public:
    AnalyticDepthStub(SyntheticScene scene, std::uint64_t seed, bool corrupt = true);
    Image disparity(const Image& image, const ViewHint& hint) override;

    /// The (scale, offset) corruption applied to a given face index.
    [[nodiscard]] std::pair<double, double> corruption(int face_index) const;

private:
    SyntheticScene scene_;
    std::uint64_t seed_;
    bool corrupt_;
};

/// Exact ray-cast distance, optionally with seeded multiplicative Gaussian noise.
class AnalyticMetricStub final : public MetricDepthClient {
public:
    explicit AnalyticMetricStub(SyntheticScene scene, double relative_noise = 0.0, std::uint64_t seed = 0);
    Image depth(const Image& image, const ViewHint& hint) override;

private:
    SyntheticScene scene_;
    double noise_;
    std::uint64_t seed_;
};

class DiffusionFreeInpaintStub final : public InpaintClient {
public:
    Image fill(const Image& image, const Mask& missing) override { return push_pull_fill(image, missing); }
};

/// Returns its input untouched; masked pixels keep whatever the render had.
class IdentityInpaintStub final : public InpaintClient {
public:
    Image fill(const Image& image, const Mask&) override { return image; }
};

/// Ray-cast distance per pixel of a camera (helper shared by the analytic stubs).
Image analytic_view_depth(const SyntheticScene& scene, const Intrinsics& K, const Pose& pose);

}  // namespace panogs
