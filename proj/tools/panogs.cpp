// panogs: panorama to Gaussian-field pipeline driver.

#include "panogs/codecs.hpp"
#include "panogs/errors.hpp"
#include "panogs/metrics.hpp"
#include "panogs/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace panogs;
using nlohmann::json;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string adapters;
    std::string out;
    std::string scale = "full";
    std::string record;
};

PipelineConfig resolve_config(const CommonOptions& o)
{
    const RunScale scale = run_scale_from_string(o.scale);
    PipelineConfig cfg = o.config.empty() ? PipelineConfig::defaults(scale) : load_config(o.config, scale);
    if (o.seed) {
        cfg.set_seed(*o.seed);
    }
    if (!o.out.empty()) {
        cfg.output_dir = o.out;
    }
    if (!o.adapters.empty()) {
        const TransportKind t = transport_kind_from_string(o.adapters);
        for (auto& a : cfg.adapters) {
            a.transport = t;
            if (t == TransportKind::directory && a.path.empty()) {
                a.path = cfg.output_dir / "adapter_results";
            }
        }
    }
    cfg.validate();
    return cfg;
}

AdapterSet adapters_for(const PipelineConfig& cfg, const CommonOptions& o)
{
    if (o.record.empty()) {
        return make_adapters(cfg);
    }
    // Record every http exchange so a later run can replay it with --adapters dir.
    AdapterSet set = make_adapters(cfg);
    const auto recorded = [&](AdapterKind kind) -> std::shared_ptr<WireTransport> {
        const auto& e = cfg.adapter(kind);
        if (e.transport != TransportKind::http) {
            return nullptr;
        }
        return std::make_shared<RecordingTransport>(make_transport(e), o.record);
    };
    if (auto t = recorded(AdapterKind::generator)) {
        set.generator = std::make_unique<WireGeneratorClient>(t);
    }
    if (auto t = recorded(AdapterKind::depth)) {
        set.depth = std::make_unique<WireDepthClient>(t);
    }
    if (auto t = recorded(AdapterKind::metric_depth)) {
        set.metric = std::make_unique<WireMetricDepthClient>(t);
    }
    if (auto t = recorded(AdapterKind::inpaint)) {
        set.inpaint = std::make_unique<WireInpaintClient>(t);
    }
    return set;
}

void write_json(const fs::path& path, const json& j)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    out << j.dump(2) << '\n';
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
}

json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

fs::path or_default(const std::string& given, const fs::path& fallback)
{
    return given.empty() ? fallback : fs::path(given);
}

Image clamped(Image img)
{
    for (auto& v : img.data()) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return img;
}

Image depth_preview(const Image& depth)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double d : depth.data()) {
        lo = std::min(lo, 1.0 / d);
        hi = std::max(hi, 1.0 / d);
    }
    Image out(depth.width(), depth.height(), 1);
    for (std::size_t k = 0; k < out.data().size(); ++k) {
        out.data()[k] = hi > lo ? (1.0 / depth.data()[k] - lo) / (hi - lo) : 0.5;
    }
    return out;
}

Panorama load_panorama(const fs::path& rgb_path, const fs::path& depth_path)
{
    Image rgb = read_png(rgb_path);
    if (rgb.channels() != 3) {
        throw ContractError(rgb_path.string() + " is not an RGB image");
    }
    Panorama pano(PanoDims(rgb.width(), rgb.height()), std::move(rgb));
    if (!depth_path.empty()) {
        Image depth = read_pfm(depth_path);
        if (depth.width() != pano.dims.width() || depth.height() != pano.dims.height()) {
            throw ContractError("depth map dims differ from the panorama");
        }
        pano.depth = std::move(depth);
    }
    return pano;
}

PointClouds load_clouds(const fs::path& dir)
{
    PointClouds c;
    c.initial = read_point_cloud_ply(dir / "points_initial.ply");
    c.filtered = read_point_cloud_ply(dir / "points_filtered.ply");
    c.sparse = read_point_cloud_ply(dir / "points_sparse.ply");
    return c;
}

CameraRig load_or_build_rig(const PipelineConfig& cfg, const std::string& given)
{
    const fs::path path = or_default(given, cfg.output_dir / "rig.json");
    if (fs::exists(path)) {
        return rig_from_json(read_json(path));
    }
    return build_rig(cfg.rig);
}

json evaluation_json(const FieldEvaluation& e)
{
    return json{{"pano_psnr", e.pano_psnr}, {"pano_ssim", e.pano_ssim}, {"supp_zero_alpha", e.supp_zero_alpha}};
}

json audit_json(const TrainingAudit& audit)
{
    json events = json::array();
    for (const auto& e : audit.densify_events) {
        events.push_back({{"phase", e.phase},
                          {"iteration", e.iteration},
                          {"before", e.before},
                          {"cloned", e.cloned},
                          {"split", e.split},
                          {"pruned", e.pruned},
                          {"after", e.after}});
    }
    return json{{"opacity_reset_events", audit.opacity_reset_events}, {"densify_events", events}};
}

TrainingContext progress_context(bool quiet)
{
    TrainingContext ctx;
    if (!quiet) {
        ctx.on_iteration = [](const LossRecord& r) {
            if (r.iteration % 100 == 0) {
                std::cerr << r.stage << "/" << r.phase << " " << r.iteration << " loss " << r.loss << " gaussians "
                          << r.gaussians << "\n";
            }
        };
    }
    return ctx;
}

json schedule_json(const OptimizationSchedule& s)
{
    return json{{"pre_pcd_iters", s.pre_pcd_iters},
                {"pre_pano_iters", s.pre_pano_iters},
                {"transfer_iters", s.transfer_iters},
                {"densify_interval", s.densify_interval},
                {"densify_grad_threshold", s.densify_grad_threshold},
                {"lambda_dssim", s.lambda_dssim},
                {"sh_degree", s.sh_degree},
                {"seed", s.seed}};
}

// Writes the reconstruction outputs of one run into `dir` and returns its evaluation.
FieldEvaluation save_run(const fs::path& dir, const ReconstructionRun& run, const CameraRig& rig)
{
    fs::create_directories(dir);
    write_gaussian_ply(dir / "gaussians_pre.ply", run.result.pre_field);
    write_gaussian_ply(dir / "gaussians.ply", run.result.final_field);
    write_loss_log(dir / "loss.jsonl", run.result.log);
    write_json(dir / "audit.json", audit_json(run.result.audit));
    for (const auto& item : run.result.inp_set.items) {
        write_png(dir / "inp" / (std::to_string(item.camera_id) + ".png"), clamped(item.rgb));
    }
    const auto ev = evaluate_field(run.result.final_field, run.pano_set, rig);
    const auto pre = evaluate_field(run.result.pre_field, run.pano_set, rig);
    write_json(dir / "metrics.json", json{{"pre", evaluation_json(pre)}, {"final", evaluation_json(ev)}});
    return ev;
}

int cmd_synth(const PipelineConfig& cfg)
{
    const auto pano = synth_stage(cfg);
    write_png(cfg.output_dir / "panorama.png", pano.rgb);
    write_pfm(cfg.output_dir / "depth_analytic.pfm", *pano.depth);
    write_json(cfg.output_dir / "scene.json", json(cfg.scene));
    std::cout << "synthetic panorama " << pano.dims.width() << "x" << pano.dims.height() << " -> "
              << (cfg.output_dir / "panorama.png").string() << "\n";
    return 0;
}

int cmd_generate(const PipelineConfig& cfg, AdapterSet& adapters)
{
    const auto result = generate_stage(cfg, adapters);
    write_png(cfg.output_dir / "panorama.png", clamped(result.panorama.rgb));
    json stages = json::array();
    for (const auto& s : result.stages) {
        stages.push_back({{"stage", to_string(s.stage)},
                          {"width", s.width},
                          {"height", s.height},
                          {"seam_before_blend", s.seam_before_blend},
                          {"seam_after_blend", s.seam_after_blend}});
    }
    write_json(cfg.output_dir / "generation.json", json{{"prompt", cfg.prompt}, {"stages", stages}});
    std::cout << "panorama " << result.panorama.dims.width() << "x" << result.panorama.dims.height() << "\n";
    return 0;
}

int cmd_depth(const PipelineConfig& cfg, AdapterSet& adapters, const std::string& pano_path)
{
    const Image rgb = read_png(or_default(pano_path, cfg.output_dir / "panorama.png"));
    const auto fused = depth_stage(rgb, adapters, cfg);
    write_pfm(cfg.output_dir / "depth.pfm", fused.calibration.depth);
    write_png(cfg.output_dir / "depth_preview.png", depth_preview(fused.calibration.depth));
    write_json(cfg.output_dir / "depth_report.json",
               json{{"alignment_rms_before", fused.alignment.residual_rms_before},
                    {"alignment_rms_after", fused.alignment.residual_rms_after},
                    {"overlap_samples", fused.alignment.n_samples},
                    {"calibration_scale", fused.calibration.fit.scale},
                    {"calibration_offset", fused.calibration.fit.offset},
                    {"calibration_rms", fused.calibration.fit.residual_rms},
                    {"calibration_faces", fused.calibration.faces_used}});
    std::cout << "depth " << fused.calibration.depth.width() << "x" << fused.calibration.depth.height() << " -> "
              << (cfg.output_dir / "depth.pfm").string() << "\n";
    return 0;
}

int cmd_pointcloud(const PipelineConfig& cfg, const std::string& pano_path, const std::string& depth_path)
{
    auto pano = load_panorama(or_default(pano_path, cfg.output_dir / "panorama.png"),
                              or_default(depth_path, cfg.output_dir / "depth.pfm"));
    if (pano.dims != cfg.depth_dims) {
        throw ContractError("panorama dims differ from the configured depth working dims");
    }
    const auto clouds = pointcloud_stage(pano, cfg);
    write_point_cloud_ply(cfg.output_dir / "points_initial.ply", clouds.initial);
    write_point_cloud_ply(cfg.output_dir / "points_filtered.ply", clouds.filtered);
    write_point_cloud_ply(cfg.output_dir / "points_sparse.ply", clouds.sparse);
    std::cout << "points: initial " << clouds.initial.size() << ", filtered " << clouds.filtered.size()
              << ", sparse " << clouds.sparse.size() << "\n";
    return 0;
}

int cmd_rig(const PipelineConfig& cfg)
{
    const auto rig = build_rig(cfg.rig);
    write_json(cfg.output_dir / "rig.json", rig_to_json(rig));
    std::cout << "rig: " << rig.of_kind(CameraKind::base).size() << " base, " << rig.of_kind(CameraKind::supp).size()
              << " supplementary cameras\n";
    return 0;
}

int cmd_dry_run(const PipelineConfig& cfg)
{
    std::cout << schedule_json(cfg.schedule).dump(2) << "\n";
    return 0;
}

int cmd_reconstruct(const PipelineConfig& cfg, AdapterSet& adapters, const std::string& rig_path, Ablation ablation,
                    const fs::path& dir, bool quiet)
{
    const auto pano = load_panorama(cfg.output_dir / "panorama.png", {});
    const auto clouds = load_clouds(cfg.output_dir);
    const auto rig = load_or_build_rig(cfg, rig_path);
    const auto start = std::chrono::steady_clock::now();
    const auto run = reconstruct_stage(pano, clouds, rig, adapters, cfg, ablation, progress_context(quiet));
    const auto ev = save_run(dir, run, rig);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << to_string(ablation) << ": PANO PSNR " << std::fixed << std::setprecision(2) << ev.pano_psnr
              << " dB, SSIM " << std::setprecision(4) << ev.pano_ssim << ", supplementary zero-alpha "
              << ev.supp_zero_alpha << ", " << std::setprecision(0) << seconds << " s -> "
              << (dir / "gaussians.ply").string() << "\n";
    return 0;
}

int cmd_render(const PipelineConfig& cfg, const std::string& field_path, const std::string& poses,
               const std::string& kind, const fs::path& dir)
{
    const auto field = read_gaussian_ply(or_default(field_path, cfg.output_dir / "gaussians.ply"));
    const auto rig = load_or_build_rig(cfg, poses);
    int n = 0;
    for (const auto& cam : rig.cameras) {
        if ((kind == "base" && cam.kind != CameraKind::base) || (kind == "supp" && cam.kind != CameraKind::supp)) {
            continue;
        }
        const auto r = rasterize(field, rig.intrinsics, cam.pose);
        write_png(dir / (std::to_string(cam.id) + ".png"), clamped(r.rgb));
        write_png(dir / (std::to_string(cam.id) + "_alpha.png"), clamped(r.alpha));
        ++n;
    }
    std::cout << "rendered " << n << " views -> " << dir.string() << "\n";
    return 0;
}

void write_table(const fs::path& dir, const json& rows, const json& summary)
{
    write_json(dir / "evaluation.json", json{{"views", rows}, {"mean", summary}});
    std::ofstream md(dir / "evaluation.md");
    md << "| view | PSNR (dB) | SSIM |\n|---|---:|---:|\n";
    md << std::fixed;
    for (const auto& r : rows) {
        md << "| " << r["view"].get<std::string>() << " | " << std::setprecision(2) << r["psnr"].get<double>()
           << " | " << std::setprecision(4) << r["ssim"].get<double>() << " |\n";
    }
    md << "| **mean** | " << std::setprecision(2) << summary["psnr"].get<double>() << " | " << std::setprecision(4)
       << summary["ssim"].get<double>() << " |\n";
    if (summary.contains("supp_zero_alpha")) {
        md << "\nSupplementary-view zero-alpha fraction: " << std::setprecision(5)
           << summary["supp_zero_alpha"].get<double>() << "\n";
    }
}

int cmd_evaluate(const PipelineConfig& cfg, const std::string& renders, const std::string& targets,
                 const std::string& field_path, const fs::path& dir)
{
    json rows = json::array();
    json summary;
    double psnr_sum = 0.0;
    double ssim_sum = 0.0;
    if (!renders.empty() || !targets.empty()) {
        if (renders.empty() || targets.empty()) {
            throw ConfigError("evaluate needs both --renders and --targets");
        }
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(renders)) {
            if (e.path().extension() == ".png") {
                files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            throw IoError("no PNG renders in " + renders);
        }
        for (const auto& f : files) {
            const Image a = read_png(f);
            const Image b = read_png(fs::path(targets) / f.filename());
            const double p = psnr(a, b);
            const double s = ssim(a, b);
            rows.push_back({{"view", f.filename().string()}, {"psnr", p}, {"ssim", s}});
            psnr_sum += p;
            ssim_sum += s;
        }
        summary = {{"psnr", psnr_sum / rows.size()}, {"ssim", ssim_sum / rows.size()}};
    } else {
        const auto field = read_gaussian_ply(or_default(field_path, cfg.output_dir / "gaussians.ply"));
        const auto rig = load_or_build_rig(cfg, {});
        const auto pano = load_panorama(cfg.output_dir / "panorama.png", {});
        const auto pano_set = build_pano_set(pano, rig);
        for (const auto& item : pano_set.items) {
            const Image r = clamped(rasterize(field, item.intrinsics, item.pose).rgb);
            const double p = psnr(r, item.rgb);
            const double s = ssim(r, item.rgb);
            rows.push_back({{"view", std::to_string(item.camera_id)}, {"psnr", p}, {"ssim", s}});
            psnr_sum += p;
            ssim_sum += s;
        }
        summary = {{"psnr", psnr_sum / rows.size()},
                   {"ssim", ssim_sum / rows.size()},
                   {"supp_zero_alpha", zero_alpha_fraction(field, rig, CameraKind::supp, {})}};
    }
    fs::create_directories(dir);
    write_table(dir, rows, summary);
    std::cout << "PSNR " << std::fixed << std::setprecision(2) << summary["psnr"].get<double>() << " dB, SSIM "
              << std::setprecision(4) << summary["ssim"].get<double>() << " over " << rows.size() << " views -> "
              << (dir / "evaluation.md").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Panorama to Gaussian-field reconstruction pipeline"};
    app.require_subcommand(1);
    app.fallthrough();
    CommonOptions common;
    app.add_option("--config", common.config, "JSON config; absent keys take the --scale defaults");
    app.add_option("--seed", common.seed, "Run seed (overrides the config)");
    app.add_option("--adapters", common.adapters, "Adapter transport for every model: stub, http or dir");
    app.add_option("--out", common.out, "Output directory (overrides the config)");
    app.add_option("--scale", common.scale, "Default settings: desk or full")->check(CLI::IsMember({"desk", "full"}));
    app.add_option("--record", common.record, "Store every http adapter response here for later --adapters dir");

    auto* synth = app.add_subcommand("synth", "Render the synthetic fixture scene to panorama + analytic depth");
    auto* generate = app.add_subcommand("generate", "Run the panorama generation ladder through the adapters");
    auto* depth = app.add_subcommand("depth", "Fuse tangent-face depth into a calibrated panorama depth map");
    std::string pano_path;
    std::string depth_path;
    depth->add_option("--pano", pano_path, "Panorama PNG (default <out>/panorama.png)");
    auto* pointcloud = app.add_subcommand("pointcloud", "Build the initialization and sparse point clouds");
    pointcloud->add_option("--pano", pano_path, "Panorama PNG (default <out>/panorama.png)");
    pointcloud->add_option("--depth", depth_path, "Depth PFM (default <out>/depth.pfm)");
    auto* rig = app.add_subcommand("rig", "Write the camera rig");
    auto* reconstruct = app.add_subcommand("reconstruct", "Two-stage Gaussian-field optimization");
    bool dry_run = false;
    bool quiet = false;
    std::string rig_path;
    reconstruct->add_flag("--dry-run", dry_run, "Print the resolved schedule and exit");
    reconstruct->add_option("--rig", rig_path, "Rig JSON (default <out>/rig.json, built if missing)");
    reconstruct->add_flag("--quiet", quiet, "No progress output");
    auto* render = app.add_subcommand("render", "Render a Gaussian field from the rig poses");
    std::string field_path;
    std::string poses;
    std::string kind = "all";
    std::string render_dir;
    render->add_option("--field", field_path, "Gaussian PLY (default <out>/gaussians.ply)");
    render->add_option("--poses", poses, "Rig JSON with the poses (default <out>/rig.json)");
    render->add_option("--kind", kind, "base, supp or all")->check(CLI::IsMember({"base", "supp", "all"}));
    render->add_option("--dir", render_dir, "Output directory (default <out>/renders)");
    auto* evaluate = app.add_subcommand("evaluate", "PSNR/SSIM table as JSON and markdown");
    std::string renders;
    std::string targets;
    std::string eval_dir;
    evaluate->add_option("--renders", renders, "Directory of rendered PNGs");
    evaluate->add_option("--targets", targets, "Directory of reference PNGs with matching names");
    evaluate->add_option("--field", field_path, "Gaussian PLY evaluated against the panorama views");
    evaluate->add_option("--dir", eval_dir, "Output directory (default <out>)");
    auto* ablate = app.add_subcommand("ablate", "Reconstruction with one component removed");
    std::string variant;
    ablate->add_option("variant", variant, "no-filter or no-pcd-init")
        ->required()
        ->check(CLI::IsMember({"no-filter", "no-pcd-init"}));
    ablate->add_flag("--quiet", quiet, "No progress output");

    CLI11_PARSE(app, argc, argv);

    try {
        const PipelineConfig cfg = resolve_config(common);
        fs::create_directories(cfg.output_dir);
        save_config(cfg.output_dir / "config.json", cfg);
        if (synth->parsed()) {
            return cmd_synth(cfg);
        }
        if (rig->parsed()) {
            return cmd_rig(cfg);
        }
        if (pointcloud->parsed()) {
            return cmd_pointcloud(cfg, pano_path, depth_path);
        }
        if (render->parsed()) {
            return cmd_render(cfg, field_path, poses, kind, or_default(render_dir, cfg.output_dir / "renders"));
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(cfg, renders, targets, field_path, or_default(eval_dir, cfg.output_dir));
        }
        if (reconstruct->parsed() && dry_run) {
            return cmd_dry_run(cfg);
        }
        AdapterSet adapters = adapters_for(cfg, common);
        if (generate->parsed()) {
            return cmd_generate(cfg, adapters);
        }
        if (depth->parsed()) {
            return cmd_depth(cfg, adapters, pano_path);
        }
        if (reconstruct->parsed()) {
            return cmd_reconstruct(cfg, adapters, rig_path, Ablation::none, cfg.output_dir, quiet);
        }
        if (ablate->parsed()) {
            const Ablation a = ablation_from_string(variant);
            const fs::path dir = cfg.output_dir / ("ablate-" + variant);
            cmd_reconstruct(cfg, adapters, rig_path, a, dir, quiet);
            const fs::path full = cfg.output_dir / "metrics.json";
            if (fs::exists(full)) {
                const double base = read_json(full)["final"]["supp_zero_alpha"];
                const double here = read_json(dir / "metrics.json")["final"]["supp_zero_alpha"];
                std::cout << "supplementary zero-alpha: full " << base << ", " << variant << " " << here
                          << (here > base ? " (coverage degraded)" : " (coverage not degraded)") << "\n";
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
