#pragma once

#include "panogs/camera_rig.hpp"
#include "panogs/depth_fusion.hpp"
#include "panogs/panorama_post.hpp"
#include "panogs/synthetic_scene.hpp"
#include "panogs/training.hpp"
#include "panogs/transport.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>

namespace panogs {

enum class RunScale { desk, full };
RunScale run_scale_from_string(const std::string& name);

struct PointCloudConfig {
    double filter_threshold = 0.4;
    PanoDims init_dims{2048, 1024};    // source of the filtered initialization cloud
    PanoDims sparse_dims{1024, 512};  // source of the cloud projected into supplementary views
    double point_radius = 1.0;       // pixels
};

struct PipelineConfig {
    std::string prompt = "a sunlit living room";
    GenerationLadderConfig ladder;
    PanoDims depth_dims{4096, 2048};
    DepthFusionConfig depth;
    PointCloudConfig pointcloud;
    RigConfig rig;
    OptimizationSchedule schedule;
    std::array<AdapterEndpoint, 4> adapters;  // generator, depth, metric_depth, inpaint
    SyntheticScene scene = SyntheticScene::occluder_room();
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";

    /// Full: the published settings. Desk: the same pipeline shrunk to run on one CPU core.
    static PipelineConfig defaults(RunScale scale);

    void validate() const;
    /// Propagate the run seed into every seeded sub-configuration.
    void set_seed(std::uint64_t s);
    [[nodiscard]] const AdapterEndpoint& adapter(AdapterKind kind) const;
    AdapterEndpoint& adapter(AdapterKind kind);
};

nlohmann::json config_to_json(const PipelineConfig& cfg);
/// Keys absent from `j` keep the values of `base`; unknown keys and wrong types are ConfigErrors.
PipelineConfig config_from_json(const nlohmann::json& j, const PipelineConfig& base);

PipelineConfig load_config(const std::filesystem::path& path, RunScale scale);
void save_config(const std::filesystem::path& path, const PipelineConfig& cfg);

}  // namespace panogs
