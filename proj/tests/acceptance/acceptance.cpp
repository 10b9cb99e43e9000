// Acceptance gate: one PASS/FAIL line per criterion, tolerances fixed below.

#include "support/erp_oracle.hpp"
#include "support/metric_oracle.hpp"
#include "support/reference_raster.hpp"

#include "panogs/depth_fusion.hpp"
#include "panogs/metrics.hpp"
#include "panogs/panorama_post.hpp"
#include "panogs/pipeline.hpp"
#include "panogs/stubs.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

using namespace panogs;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

Vec3 random_unit(std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    return Vec3(n(rng), n(rng), n(rng)).normalized();
}

Image random_image(int w, int h, int c, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(w, h, c);
    for (auto& v : img.data()) {
        v = u(rng);
    }
    return img;
}

// ---------------------------------------------------------------- projection

Outcome projection()
{
    const PanoDims d(4096, 2048);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(0.0, 4096.0), V(1e-3, 2048.0 - 1e-3);
    double px_err = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double u = U(rng);
        const double v = V(rng);
        const Vec2 back = direction_to_pixel(pixel_to_direction(u, v, d), d);
        const double du = std::abs(back.x() - u);
        px_err = std::max({px_err, std::min(du, 4096.0 - du), std::abs(back.y() - v)});
    }

    const auto pano = synth_scene_panorama(SyntheticScene::occluder_room(1), PanoDims(512, 256));
    const auto K = Intrinsics::from_fov(64, 48, 90.0);
    double ray_err = 0.0;
    for (int t = 0; t < 8; ++t) {
        const Pose pose = Pose::look_at(random_unit(rng), Vec3::UnitY());
        const Image img = erp_to_perspective(pano.rgb, K, pose);
        for (int y = 0; y < K.height; ++y) {
            for (int x = 0; x < K.width; ++x) {
                const auto [u, v] = oracle::erp_uv(oracle::world_ray(K, pose, x + 0.5, y + 0.5), 512, 256);
                for (int c = 0; c < 3; ++c) {
                    ray_err = std::max(ray_err, std::abs(img.at(x, y, c) - oracle::erp_bilinear(pano.rgb, u, v, c)));
                }
            }
        }
    }
    return {px_err < 1e-9 && ray_err < 1e-6,
            fmt("round-trip max %.2e px (< 1e-9), ray oracle max %.2e (< 1e-6)", px_err, ray_err)};
}

// ---------------------------------------------------------------- seam

Outcome seam()
{
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> width(1, 16);
    double idem = 0.0;
    bool local = true;
    bool monotone = true;
    for (int t = 0; t < 100; ++t) {
        const Image f = random_image(64, 8, 3, rng);
        const int b = width(rng);
        const Image once = circular_blend(f, b);
        idem = std::max(idem, max_abs_difference(circular_blend(once, b), once));
        monotone = monotone && seam_discontinuity(once) <= seam_discontinuity(f);
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 64 - b; ++x) {
                for (int c = 0; c < 3; ++c) {
                    local = local && once.at(x, y, c) == f.at(x, y, c);
                }
            }
        }
    }
    ProceduralGeneratorStub gen;
    const auto ladder = run_generation_ladder("a reading room with tall windows", gen,
                                              PipelineConfig::defaults(RunScale::desk).ladder);
    const double gap = seam_discontinuity(ladder.panorama.rgb);
    return {idem <= 1e-12 && local && monotone && gap <= 1e-6,
            fmt("idempotence %.1e (<= 1e-12), locality %s, monotone %s, ladder seam %.1e (<= 1e-6)", idem,
                local ? "ok" : "broken", monotone ? "ok" : "broken", gap)};
}

// ---------------------------------------------------------------- depth fusion

Outcome depth_fusion()
{
    const auto cfg = PipelineConfig::defaults(RunScale::desk);
    const auto pano = synth_stage(cfg);
    AnalyticDepthStub depth(cfg.scene, 17);
    AnalyticMetricStub metric(cfg.scene);
    const auto out = estimate_panorama_depth(pano, depth, metric, cfg.depth);
    std::vector<double> rel;
    for (std::size_t k = 0; k < pano.depth->data().size(); ++k) {
        const double t = pano.depth->data()[k];
        rel.push_back(std::abs(out.calibration.depth.data()[k] - t) / t);
    }
    const double within = static_cast<double>(std::count_if(rel.begin(), rel.end(), [](double e) { return e < 0.03; })) /
                          static_cast<double>(rel.size());
    std::nth_element(rel.begin(), rel.begin() + rel.size() / 2, rel.end());
    const double med = rel[rel.size() / 2];

    std::vector<double> obs, ref;
    for (int k = 0; k < 500; ++k) {
        obs.push_back(0.05 + 0.01 * k);
        ref.push_back(2.0 * obs.back() + 1.0);
    }
    const auto fit = fit_scale_offset(obs, ref);
    const bool exact = std::abs(fit.scale - 2.0) < 1e-9 && std::abs(fit.offset - 1.0) < 1e-9 && fit.residual_rms < 1e-9;
    return {med < 0.01 && within >= 0.9 && exact,
            fmt("%dx%d: median abs-rel %.4f (< 0.01), within 3%% %.3f (>= 0.9), exact-affine residual %.1e (< 1e-9)",
                pano.dims.width(), pano.dims.height(), med, within, fit.residual_rms)};
}

// ---------------------------------------------------------------- point cloud

Outcome point_cloud()
{
    const auto pano = synth_scene_panorama(SyntheticScene::occluder_room(3), PanoDims(1024, 512));
    const auto pc = reverse_erp_project(pano);
    double prov = 0.0;
    for (std::size_t i = 0; i < pc.size(); ++i) {
        const auto [u, v] = pc.source_pixels[i];
        const Vec2 px = direction_to_pixel(pc.positions[i].normalized(), pano.dims);
        prov = std::max({prov, std::abs(pc.positions[i].norm() - pano.depth->at(u, v)), std::abs(px.x() - (u + 0.5)),
                         std::abs(px.y() - (v + 0.5))});
    }

    bool monotone = true;
    Mask prev = depth_gradient_filter(*pano.depth, {0.05, true});
    for (double t : {0.1, 0.2, 0.4, 0.8}) {
        const Mask next = depth_gradient_filter(*pano.depth, {t, true});
        for (int y = 0; y < 512; ++y) {
            for (int x = 0; x < 1024; ++x) {
                monotone = monotone && (!prev.at(x, y) || next.at(x, y));
            }
        }
        prev = next;
    }

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    PointCloud cloud;
    for (int i = 0; i < 1000; ++i) {
        cloud.positions.emplace_back(1.2 * U(rng), 0.9 * U(rng), 1.0 + std::round(2.0 * (U(rng) + 1.0)));
        cloud.colors.emplace_back(0.5 + 0.5 * U(rng), 0.5 + 0.5 * U(rng), i / 1000.0);
        cloud.source_pixels.push_back({i, 0});
    }
    const auto K = Intrinsics::from_fov(40, 30, 70.0);
    const auto got = project_points(cloud, K, Pose{}, {1.5, 0.05});
    bool zbuf = true;
    for (int y = 0; y < K.height; ++y) {
        for (int x = 0; x < K.width; ++x) {
            double best = std::numeric_limits<double>::infinity();
            int who = -1;
            for (std::size_t i = 0; i < cloud.size(); ++i) {
                const Vec3& p = cloud.positions[i];
                const double pu = K.cx + K.fx * p.x() / p.z();
                const double pv = K.cy - K.fy * p.y() / p.z();
                const double d2 = (x + 0.5 - pu) * (x + 0.5 - pu) + (y + 0.5 - pv) * (y + 0.5 - pv);
                if (d2 <= 1.5 * 1.5 && p.z() < best) {
                    best = p.z();
                    who = static_cast<int>(i);
                }
            }
            zbuf = zbuf && got.mask.at(x, y) == (who < 0);
            if (who >= 0) {
                zbuf = zbuf && got.rgb.at(x, y, 2) == cloud.colors[static_cast<std::size_t>(who)].z();
            }
        }
    }

    const auto full = PipelineConfig::defaults(RunScale::full).pointcloud;
    const bool constants = full.filter_threshold == 0.4 && full.sparse_dims == PanoDims(1024, 512) &&
                           full.init_dims == PanoDims(2048, 1024);
    return {prov < 1e-6 && monotone && zbuf && constants,
            fmt("provenance %.1e (< 1e-6), monotone %s, z-buffer oracle %s, defaults threshold %.1f sparse %dx%d",
                prov, monotone ? "ok" : "broken", zbuf ? "equal" : "differs", full.filter_threshold,
                full.sparse_dims.width(), full.sparse_dims.height())};
}

// ---------------------------------------------------------------- rig

Outcome rig()
{
    const auto r = build_rig(RigConfig{});
    const auto base = r.of_kind(CameraKind::base);
    const bool at_origin = std::all_of(base.begin(), base.end(), [](const RigCamera* c) { return c->pose.position.norm() == 0.0; });
    const auto pano = synth_scene_panorama(SyntheticScene::occluder_room(0), PanoDims(256, 128));
    RigConfig small;
    small.image_size = 16;
    const auto pcd = build_pcd_set(reverse_erp_project(pano), build_rig(small), {});
    const double cov = base_coverage(r, 100000, 5);
    return {base.size() == 38 && at_origin && r.of_kind(CameraKind::supp).size() == 152 && pcd.items.size() == 152 &&
                cov == 1.0,
            fmt("base %zu at origin %s, supplementary %zu, PCD items %zu, coverage %.6f", base.size(),
                at_origin ? "yes" : "no", r.of_kind(CameraKind::supp).size(), pcd.items.size(), cov)};
}

// ---------------------------------------------------------------- rasterizer

Outcome rasterizer()
{
    const auto K = Intrinsics::from_fov(32, 32, 70.0);
    double fwd = 0.0;
    for (std::uint64_t seed = 1; seed <= 16; ++seed) {
        GaussianField f = oracle::random_scene(1 + static_cast<int>(seed % 8), static_cast<int>(seed % 4), seed);
        f.background = Vec3(0.1, 0.0, 0.3);
        const Pose pose = Pose::look_at(Vec3(0.05 * (seed % 3), 0.02, 1.0), Vec3::UnitY(), Vec3(0.1, -0.05, 0.2));
        const auto r = rasterize(f, K, pose);
        const auto ref = oracle::reference_render(f, K, pose);
        for (std::size_t k = 0; k < ref.rgb.size(); ++k) {
            fwd = std::max(fwd, std::abs(r.rgb.data()[k] - ref.rgb[k]));
        }
        for (std::size_t k = 0; k < ref.alpha.size(); ++k) {
            fwd = std::max(fwd, std::abs(r.alpha.data()[k] - ref.alpha[k]));
        }
    }

    const Pose pose = Pose::look_at(Vec3(0.03, 0.02, 1.0), Vec3::UnitY(), Vec3(0.05, 0.0, 0.1));
    const double h = 1e-4;
    int total = 0;
    int good = 0;
    std::mt19937_64 rng(6);
    for (std::uint64_t seed : {21ULL, 22ULL, 23ULL}) {
        GaussianField f = oracle::random_scene(8, 1, seed);
        f.background = Vec3(0.3, 0.2, 0.1);
        Image w = random_image(32, 32, 3, rng);
        for (auto& v : w.data()) {
            v = 2.0 * v - 1.0;
        }
        const auto weighted = [&](const Image& img) {
            double s = 0.0;
            for (std::size_t k = 0; k < img.data().size(); ++k) {
                s += img.data()[k] * w.data()[k];
            }
            return s;
        };
        const auto g = rasterize_backward(f, K, pose, rasterize(f, K, pose), w);
        for (auto grp : GaussianParams::kGroups) {
            auto& values = f.params.group(grp);
            for (std::size_t k = 0; k < values.size(); ++k) {
                const double keep = values[k];
                values[k] = keep + h;
                const double up = weighted(rasterize(f, K, pose).rgb);
                values[k] = keep - h;
                const double down = weighted(rasterize(f, K, pose).rgb);
                values[k] = keep;
                const double numeric = (up - down) / (2 * h);
                const double analytic = g.params.group(grp)[k];
                ++total;
                good += std::abs(numeric - analytic) <= 1e-3 * std::max(std::abs(numeric), std::abs(analytic)) + 1e-7;
            }
        }
    }
    const double frac = static_cast<double>(good) / total;
    return {fwd <= 1e-10 && frac >= 0.95,
            fmt("reference max %.1e (<= 1e-10), finite differences %d/%d = %.3f (>= 0.95)", fwd, good, total, frac)};
}

// ---------------------------------------------------------------- metrics

Outcome metrics()
{
    std::mt19937_64 rng(7);
    double dp = 0.0;
    double ds = 0.0;
    for (int t = 0; t < 5; ++t) {
        const Image a = random_image(37, 29, 3, rng);
        Image b = a;
        std::normal_distribution<double> n(0.0, 0.05 * (t + 1));
        for (auto& v : b.data()) {
            v = std::clamp(v + n(rng), 0.0, 1.0);
        }
        dp = std::max(dp, std::abs(psnr(a, b) - oracle::naive_psnr(a, b)));
        ds = std::max(ds, std::abs(ssim(a, b) - oracle::naive_ssim(a, b)));
    }
    const Image a = random_image(32, 32, 3, rng);
    const double p = psnr(a, a);
    const double s = ssim(a, a);
    return {dp <= 1e-9 && ds <= 1e-9 && p == kPsnrCap && std::abs(s - 1.0) <= 1e-12,
            fmt("PSNR vs direct %.1e, SSIM vs direct %.1e (<= 1e-9), identical images %.0f dB / %.12f", dp, ds, p, s)};
}

// ---------------------------------------------------------------- reconstruction

struct DeskRuns {
    double init_psnr = 0;
    double init_zero_alpha = 0;
    FieldEvaluation full;
    FieldEvaluation baseline;
    FieldEvaluation no_filter;
    FieldEvaluation no_pcd_init;
    TrainingAudit audit;
    double full_seconds = 0;
    int schedule[3] = {0, 0, 0};
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class DeskHarness {
public:
    explicit DeskHarness(bool verbose) : verbose_(verbose) {}

    const DeskRuns& runs()
    {
        if (!runs_) {
            runs_ = compute();
        }
        return *runs_;
    }

private:
    void note(const std::string& s) const
    {
        if (verbose_) {
            std::cerr << "  .. " << s << std::endl;
        }
    }

    DeskRuns compute()
    {
        DeskRuns out;
        const auto cfg = PipelineConfig::defaults(RunScale::desk);
        out.schedule[0] = cfg.schedule.pre_pcd_iters;
        out.schedule[1] = cfg.schedule.pre_pano_iters;
        out.schedule[2] = cfg.schedule.transfer_iters;
        auto adapters = make_adapters(cfg);
        auto pano = synth_stage(cfg);

        const auto t0 = std::chrono::steady_clock::now();
        pano.depth = depth_stage(pano.rgb, adapters, cfg).calibration.depth;
        const auto clouds = pointcloud_stage(pano, cfg);
        const auto rig = build_rig(cfg.rig);
        TrainingContext ctx;
        auto full = reconstruct_stage(pano, clouds, rig, adapters, cfg, Ablation::none, ctx);
        out.full_seconds = seconds_since(t0);
        out.full = evaluate_field(full.result.final_field, full.pano_set, rig);
        out.audit = full.result.audit;
        const auto init = evaluate_field(init_from_point_cloud(clouds.filtered, cfg.schedule.sh_degree), full.pano_set, rig);
        out.init_psnr = init.pano_psnr;
        out.init_zero_alpha = init.supp_zero_alpha;
        note(fmt("full run %.0f s, G1 PSNR %.2f, zero-alpha %.4f", out.full_seconds, out.full.pano_psnr,
                 out.full.supp_zero_alpha));

        std::vector<LossRecord> log;
        TrainingAudit audit;
        const int total = cfg.schedule.pre_pcd_iters + cfg.schedule.pre_pano_iters + cfg.schedule.transfer_iters;
        const auto base = single_stage_reconstruct(clouds.filtered, {&full.pano_set}, total, cfg.schedule, ctx, log, audit);
        out.baseline = evaluate_field(base, full.pano_set, rig);
        note(fmt("PANO-only baseline zero-alpha %.4f", out.baseline.supp_zero_alpha));

        for (auto a : {Ablation::no_filter, Ablation::no_pcd_init}) {
            const auto run = reconstruct_stage(pano, clouds, rig, adapters, cfg, a, ctx);
            (a == Ablation::no_filter ? out.no_filter : out.no_pcd_init) =
                evaluate_field(run.result.final_field, run.pano_set, rig);
            note(fmt("%s zero-alpha %.4f", to_string(a), (a == Ablation::no_filter ? out.no_filter : out.no_pcd_init).supp_zero_alpha));
        }
        return out;
    }

    bool verbose_;
    std::optional<DeskRuns> runs_;
};

// Values pinned from the first green run; later runs must reproduce them.
struct Locks {
    std::optional<json> values;
    std::string path;
    bool record = false;

    json current(const DeskRuns& r) const
    {
        return json{{"g1_pano_psnr", r.full.pano_psnr},          {"g1_supp_zero_alpha", r.full.supp_zero_alpha},
                    {"init_pano_psnr", r.init_psnr},             {"baseline_supp_zero_alpha", r.baseline.supp_zero_alpha},
                    {"no_filter_supp_zero_alpha", r.no_filter.supp_zero_alpha},
                    {"no_pcd_init_supp_zero_alpha", r.no_pcd_init.supp_zero_alpha}};
    }

    std::string check(const DeskRuns& r, bool& ok) const
    {
        const json now = current(r);
        if (record) {
            std::ofstream(path) << now.dump(2) << "\n";
            return "locked values recorded";
        }
        if (!values) {
            ok = false;
            return "no locked values at " + path;
        }
        std::ostringstream msg;
        bool all = true;
        for (const auto& [key, want] : values->items()) {
            const double tol = key.find("psnr") != std::string::npos ? 0.5 : 0.005;
            const double got = now.at(key).get<double>();
            if (std::abs(got - want.get<double>()) > tol) {
                all = false;
                msg << key << " " << got << " vs locked " << want.get<double>() << "; ";
            }
        }
        ok = ok && all;
        return all ? "matches locked values" : "drift: " + msg.str();
    }
};

Outcome reconstruction(DeskHarness& h, const Locks& locks, double budget)
{
    const auto& r = h.runs();
    bool interval = true;
    for (const auto& e : r.audit.densify_events) {
        interval = interval && e.iteration % 100 == 0;
    }
    bool ok = r.schedule[0] == 400 && r.schedule[1] == 400 && r.schedule[2] == 1000 &&
              r.full.pano_psnr >= r.init_psnr + 5.0 && r.full.pano_psnr >= 25.0 && r.full.supp_zero_alpha < 0.01 &&
              r.baseline.supp_zero_alpha >= 0.05 && r.audit.opacity_reset_events == 0 && interval &&
              r.full_seconds < budget;
    const std::string lock = locks.check(r, ok);
    return {ok, fmt("G1 PSNR %.2f dB vs init %.2f dB (>= +5, >= 25); zero-alpha full %.4f (< 0.01) vs PANO-only %.4f "
                    "(>= 0.05); opacity resets %d; %zu densify events on multiples of 100: %s; two-stage run %.0f s; ",
                    r.full.pano_psnr, r.init_psnr, r.full.supp_zero_alpha, r.baseline.supp_zero_alpha,
                    r.audit.opacity_reset_events, r.audit.densify_events.size(), interval ? "yes" : "no",
                    r.full_seconds) +
                lock};
}

Outcome ablations(DeskHarness& h)
{
    const auto& r = h.runs();
    const bool ok = r.no_filter.supp_zero_alpha > r.full.supp_zero_alpha &&
                    r.no_pcd_init.supp_zero_alpha > r.full.supp_zero_alpha;
    return {ok, fmt("zero-alpha full %.4f, no-filter %.4f, no-pcd-init %.4f (both must exceed full)",
                    r.full.supp_zero_alpha, r.no_filter.supp_zero_alpha, r.no_pcd_init.supp_zero_alpha)};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"panogs acceptance gate"};
    std::vector<std::string> only;
    bool record = false;
    bool quiet = false;
    app.add_option("--only", only, "run only the named criteria");
    app.add_flag("--record-locks", record, "write the desk-run values to the lock file");
    app.add_flag("--quiet", quiet, "no progress notes");
    CLI11_PARSE(app, argc, argv);

    Locks locks;
    locks.path = PANOGS_ACCEPTANCE_LOCKS;
    locks.record = record;
    if (std::ifstream in(locks.path); in) {
        locks.values = json::parse(in);
    }
    DeskHarness desk(!quiet);
    const double desk_budget = 30 * 60;

    const std::vector<Criterion> criteria = {
        {"projection-round-trips", 5, projection},
        {"seam-continuity", 10, seam},
        {"depth-fusion-oracle", 60, depth_fusion},
        {"point-cloud", 30, point_cloud},
        {"camera-rig", 10, rig},
        {"rasterizer-correctness", 120, rasterizer},
        {"desk-two-stage-reconstruction", desk_budget + 30 * 60, [&] { return reconstruction(desk, locks, desk_budget); }},
        {"ablations", 1e9, [&] { return ablations(desk); }},
        {"metrics", 5, metrics},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double dt = seconds_since(t0);
        const bool in_time = dt < c.budget_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("%s  %-30s %s  [%.1f s%s]\n", pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(), dt,
                    in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    std::printf("%d criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
