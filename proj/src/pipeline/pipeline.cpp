#include "panogs/pipeline.hpp"

#include "panogs/errors.hpp"
#include "panogs/metrics.hpp"
#include "panogs/stubs.hpp"
#include "panogs/tangent_faces.hpp"

#include <algorithm>
#include <fstream>

namespace panogs {

using nlohmann::json;

AdapterSet make_adapters(const PipelineConfig& cfg)
{
    AdapterSet set;
    const auto wire = [](const AdapterEndpoint& e) { return make_transport(e); };

    const auto& gen = cfg.adapter(AdapterKind::generator);
    if (gen.transport == TransportKind::stub) {
        set.generator = std::make_unique<ProceduralGeneratorStub>();
    } else {
        set.generator = std::make_unique<WireGeneratorClient>(wire(gen));
    }
    const auto& depth = cfg.adapter(AdapterKind::depth);
    if (depth.transport == TransportKind::stub) {
        set.depth = std::make_unique<AnalyticDepthStub>(cfg.scene, cfg.seed);
    } else {
        set.depth = std::make_unique<WireDepthClient>(wire(depth));
    }
    const auto& metric = cfg.adapter(AdapterKind::metric_depth);
    if (metric.transport == TransportKind::stub) {
        set.metric = std::make_unique<AnalyticMetricStub>(cfg.scene);
    } else {
        set.metric = std::make_unique<WireMetricDepthClient>(wire(metric));
    }
    const auto& inpaint = cfg.adapter(AdapterKind::inpaint);
    if (inpaint.transport == TransportKind::stub) {
        set.inpaint = std::make_unique<DiffusionFreeInpaintStub>();
    } else {
        set.inpaint = std::make_unique<WireInpaintClient>(wire(inpaint));
    }
    return set;
}

Panorama synth_stage(const PipelineConfig& cfg)
{
    return synth_scene_panorama(cfg.scene, cfg.depth_dims);
}

GenerationResult generate_stage(const PipelineConfig& cfg, AdapterSet& adapters)
{
    return run_generation_ladder(cfg.prompt, *adapters.generator, cfg.ladder);
}

DepthFusionResult depth_stage(const Image& pano_rgb, AdapterSet& adapters, const PipelineConfig& cfg)
{
    const auto& d = cfg.depth_dims;
    Panorama pano(d, pano_rgb.width() == d.width() && pano_rgb.height() == d.height()
                         ? pano_rgb
                         : resample_bicubic_wrap(pano_rgb, d.width(), d.height()));
    for (auto& v : pano.rgb.data()) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return estimate_panorama_depth(pano, *adapters.depth, *adapters.metric, cfg.depth);
}

PointClouds pointcloud_stage(const Panorama& pano, const PipelineConfig& cfg)
{
    if (!pano.depth) {
        throw ContractError("pointcloud stage needs a panorama with depth");
    }
    PointClouds out;
    const Panorama init = downsample_panorama(pano, cfg.pointcloud.init_dims);
    out.initial = reverse_erp_project(init);
    out.keep = depth_gradient_filter(*init.depth, {cfg.pointcloud.filter_threshold, true});
    out.filtered = filter_points(out.initial, out.keep);
    out.sparse = reverse_erp_project(downsample_panorama(pano, cfg.pointcloud.sparse_dims));
    if (out.filtered.empty()) {
        throw PipelineError("the depth filter removed every point");
    }
    return out;
}

const char* to_string(Ablation a)
{
    switch (a) {
    case Ablation::none:
        return "full";
    case Ablation::no_filter:
        return "no-filter";
    case Ablation::no_pcd_init:
        return "no-pcd-init";
    }
    return "unknown";
}

Ablation ablation_from_string(const std::string& name)
{
    for (auto a : {Ablation::none, Ablation::no_filter, Ablation::no_pcd_init}) {
        if (name == to_string(a)) {
            return a;
        }
    }
    throw ConfigError("unknown ablation '" + name + "' (expected no-filter or no-pcd-init)");
}

ReconstructionRun reconstruct_stage(const Panorama& pano, const PointClouds& clouds, const CameraRig& rig,
                                    AdapterSet& adapters, const PipelineConfig& cfg, Ablation ablation,
                                    const TrainingContext& ctx)
{
    ReconstructionRun run;
    run.pano_set = build_pano_set(pano, rig);
    ProjectionOptions proj;
    proj.point_radius = cfg.pointcloud.point_radius;
    run.pcd_set = build_pcd_set(clouds.sparse, rig, proj);
    OptimizationSchedule schedule = cfg.schedule;
    if (ablation == Ablation::no_pcd_init) {
        schedule.pre_pcd_iters = 0;
    }
    const PointCloud& init = ablation == Ablation::no_filter ? clouds.initial : clouds.filtered;
    run.result = two_stage_reconstruct(init, run.pano_set, run.pcd_set, *adapters.inpaint, rig, schedule, ctx);
    return run;
}

FieldEvaluation evaluate_field(const GaussianField& field, const SupervisionSet& pano_set, const CameraRig& rig,
                               const RasterSettings& settings)
{
    if (pano_set.items.empty()) {
        throw ContractError("evaluate_field: empty PANO set");
    }
    FieldEvaluation ev;
    for (const auto& item : pano_set.items) {
        Image render = rasterize(field, item.intrinsics, item.pose, settings).rgb;
        for (auto& v : render.data()) {
            v = std::clamp(v, 0.0, 1.0);
        }
        ev.pano_psnr += psnr(render, item.rgb);
        ev.pano_ssim += ssim(render, item.rgb);
    }
    ev.pano_psnr /= static_cast<double>(pano_set.items.size());
    ev.pano_ssim /= static_cast<double>(pano_set.items.size());
    ev.supp_zero_alpha = zero_alpha_fraction(field, rig, CameraKind::supp, settings);
    return ev;
}

json loss_record_json(const LossRecord& r)
{
    return json{{"stage", r.stage},   {"phase", r.phase}, {"iteration", r.iteration},
                {"camera", r.camera_id}, {"loss", r.loss},   {"gaussians", r.gaussians}};
}

void write_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    for (const auto& r : log) {
        out << loss_record_json(r).dump() << '\n';
    }
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
}

std::vector<LossRecord> read_loss_log(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<LossRecord> log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = json::parse(line);
            log.push_back({j.at("stage"), j.at("phase"), j.at("iteration"), j.at("camera"), j.at("loss"),
                           j.at("gaussians")});
        } catch (const json::exception& e) {
            throw IoError("bad loss log line in " + path.string() + ": " + e.what());
        }
    }
    return log;
}

}  // namespace panogs
