#pragma once

// Stage drivers shared by the command-line tool and the acceptance harness.

#include "panogs/config.hpp"
#include "panogs/point_cloud.hpp"

#include <filesystem>
#include <memory>

namespace panogs {

struct AdapterSet {
    std::unique_ptr<GeneratorClient> generator;
    std::unique_ptr<DepthClient> depth;
    std::unique_ptr<MetricDepthClient> metric;
    std::unique_ptr<InpaintClient> inpaint;
};

/// Stub endpoints get the analytic stubs of `cfg.scene`; http and directory endpoints get wire clients.
AdapterSet make_adapters(const PipelineConfig& cfg);

/// Fixture panorama of `cfg.scene` at the depth working resolution, with exact depth.
Panorama synth_stage(const PipelineConfig& cfg);

GenerationResult generate_stage(const PipelineConfig& cfg, AdapterSet& adapters);

/// Fused, calibrated depth for an RGB panorama, resampled to the working dims first if needed.
DepthFusionResult depth_stage(const Image& pano_rgb, AdapterSet& adapters, const PipelineConfig& cfg);

struct PointClouds {
    PointCloud initial;   // every pixel at init_dims
    PointCloud filtered;  // initial minus depth-gradient outliers
    PointCloud sparse;    // every pixel at sparse_dims
    Mask keep;            // filter result at init_dims
};

PointClouds pointcloud_stage(const Panorama& pano, const PipelineConfig& cfg);

enum class Ablation { none, no_filter, no_pcd_init };
const char* to_string(Ablation a);
Ablation ablation_from_string(const std::string& name);

struct ReconstructionRun {
    SupervisionSet pano_set;
    SupervisionSet pcd_set;
    ReconstructionResult result;
};

/// no_filter initializes both stages from the unfiltered cloud; no_pcd_init drops the PCD phase.
ReconstructionRun reconstruct_stage(const Panorama& pano, const PointClouds& clouds, const CameraRig& rig,
                                    AdapterSet& adapters, const PipelineConfig& cfg, Ablation ablation,
                                    const TrainingContext& ctx);

struct FieldEvaluation {
    double pano_psnr = 0;  // mean over base views
    double pano_ssim = 0;
    double supp_zero_alpha = 0;  // fraction of supplementary-view pixels with alpha < 1/255
};

FieldEvaluation evaluate_field(const GaussianField& field, const SupervisionSet& pano_set, const CameraRig& rig,
                               const RasterSettings& settings = {});

nlohmann::json loss_record_json(const LossRecord& r);
void write_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log);
std::vector<LossRecord> read_loss_log(const std::filesystem::path& path);

}  // namespace panogs
