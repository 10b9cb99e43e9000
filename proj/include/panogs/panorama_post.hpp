#pragma once

#include "panogs/adapters.hpp"
#include "panogs/geometry.hpp"

#include <string>
#include <vector>

namespace panogs {

struct GenerationLadderConfig {
    PanoDims base_dims{1024, 512};
    PanoDims stylized_dims{1536, 768};
    PanoDims detailed_dims{6144, 3072};
    int blend_width = 32;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Ramp the seam offset across the last `blend_width` columns so that the right edge
/// meets the left edge: out[:, W-b+k] = f[:, W-b+k] + (k+1)/b * (f[:, 0] - f[:, W-1]).
/// Columns 0..W-b-1 are untouched and the operation is idempotent.
Image circular_blend(const Image& field, int blend_width);

/// max over rows and channels of |f[:, 0] - f[:, W-1]|.
double seam_discontinuity(const Image& field);

struct StageRecord {
    GenerationStage stage;
    int width = 0;
    int height = 0;
    double seam_before_blend = 0;
    double seam_after_blend = 0;
};

struct GenerationResult {
    Panorama panorama;
    std::vector<StageRecord> stages;
};

/// base -> stylize -> superres -> tile, circular blend after every stage.
GenerationResult run_generation_ladder(const std::string& prompt, GeneratorClient& generator,
                                       const GenerationLadderConfig& cfg);

}  // namespace panogs
