#pragma once

// Contracts for the external models the pipeline depends on (panorama generator, relative
// depth, metric depth, inpainting). Every transport implements these interfaces; the
// checked_* helpers enforce the response contracts regardless of transport.

#include "panogs/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace panogs {

/// Optional side information about the view an image was taken from. Remote transports
/// ignore it; analytic stubs use it to ray-cast their scene.
struct ViewHint {
    int face_index = -1;
    std::optional<Intrinsics> intrinsics;
    std::optional<Pose> pose;
};

class DepthClient {
public:
    virtual ~DepthClient() = default;
    /// Relative, affine-ambiguous disparity at the input resolution.
    virtual Image disparity(const Image& image, const ViewHint& hint) = 0;
};

class MetricDepthClient {
public:
    virtual ~MetricDepthClient() = default;
    /// Metric depth in meters at the input resolution.
    virtual Image depth(const Image& image, const ViewHint& hint) = 0;
};

class InpaintClient {
public:
    virtual ~InpaintClient() = default;
    /// Fill pixels where `missing` is true. Pixels outside the mask must come back unchanged.
    virtual Image fill(const Image& image, const Mask& missing) = 0;
};

enum class GenerationStage { base, stylize, superres, tile };

const char* to_string(GenerationStage stage);
GenerationStage generation_stage_from_string(const std::string& name);

struct GenerationRequest {
    GenerationStage stage = GenerationStage::base;
    std::string prompt;
    std::uint64_t seed = 0;
    std::optional<Image> image;
    int width = 0;
    int height = 0;
};

class GeneratorClient {
public:
    virtual ~GeneratorClient() = default;
    virtual Image stage(const GenerationRequest& request) = 0;
};

// Contract-enforcing front doors; all pipeline code goes through these.
Image checked_disparity(DepthClient& client, const Image& image, const ViewHint& hint);
Image checked_metric_depth(MetricDepthClient& client, const Image& image, const ViewHint& hint);
Image checked_fill(InpaintClient& client, const Image& image, const Mask& missing);
Image checked_stage(GeneratorClient& client, const GenerationRequest& request);

}  // namespace panogs
