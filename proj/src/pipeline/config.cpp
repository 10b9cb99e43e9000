#include "panogs/config.hpp"

#include "panogs/errors.hpp"

#include <fstream>
#include <set>

namespace panogs {

using nlohmann::json;

RunScale run_scale_from_string(const std::string& name)
{
    if (name == "desk") {
        return RunScale::desk;
    }
    if (name == "full") {
        return RunScale::full;
    }
    throw ConfigError("scale must be desk or full, got '" + name + "'");
}

PipelineConfig PipelineConfig::defaults(RunScale scale)
{
    PipelineConfig cfg;
    cfg.adapters = {AdapterEndpoint{AdapterKind::generator}, AdapterEndpoint{AdapterKind::depth},
                    AdapterEndpoint{AdapterKind::metric_depth}, AdapterEndpoint{AdapterKind::inpaint}};
    if (scale == RunScale::desk) {
        cfg.ladder.base_dims = PanoDims(256, 128);
        cfg.ladder.stylized_dims = PanoDims(512, 256);
        cfg.ladder.detailed_dims = PanoDims(1024, 512);
        cfg.ladder.blend_width = 8;
        cfg.depth_dims = PanoDims(1024, 512);
        cfg.depth.face_res = 192;
        cfg.pointcloud.init_dims = PanoDims(512, 256);
        cfg.pointcloud.sparse_dims = PanoDims(256, 128);
        cfg.pointcloud.point_radius = 1.5;
        cfg.rig.image_size = 128;
        cfg.schedule.pre_pcd_iters = 400;
        cfg.schedule.pre_pano_iters = 400;
        cfg.schedule.transfer_iters = 1000;
    }
    cfg.set_seed(0);
    return cfg;
}

void PipelineConfig::set_seed(std::uint64_t s)
{
    seed = s;
    ladder.seed = s;
    depth.seed = s;
    schedule.seed = s;
}

const AdapterEndpoint& PipelineConfig::adapter(AdapterKind kind) const
{
    for (const auto& a : adapters) {
        if (a.kind == kind) {
            return a;
        }
    }
    throw ConfigError(std::string("no endpoint configured for the ") + to_string(kind) + " adapter");
}

AdapterEndpoint& PipelineConfig::adapter(AdapterKind kind)
{
    return const_cast<AdapterEndpoint&>(std::as_const(*this).adapter(kind));
}

void PipelineConfig::validate() const
{
    ladder.validate();
    depth.validate();
    rig.validate();
    schedule.validate();
    scene.validate();
    std::set<AdapterKind> kinds;
    for (const auto& a : adapters) {
        a.validate();
        kinds.insert(a.kind);
    }
    if (kinds.size() != adapters.size()) {
        throw ConfigError("each adapter kind must be configured exactly once");
    }
    if (!(pointcloud.filter_threshold > 0.0)) {
        throw ConfigError("pointcloud.filter_threshold must be positive");
    }
    if (!(pointcloud.point_radius >= 0.5)) {
        throw ConfigError("pointcloud.point_radius must be at least 0.5 px");
    }
    for (const auto& d : {pointcloud.init_dims, pointcloud.sparse_dims}) {
        if (depth_dims.width() % d.width() != 0) {
            throw ConfigError("point cloud dims must divide the depth working dims " +
                              std::to_string(depth_dims.width()) + "x" + std::to_string(depth_dims.height()));
        }
    }
    if (depth_dims.width() > ladder.detailed_dims.width()) {
        throw ConfigError("depth working dims exceed the detailed panorama dims");
    }
}

namespace {

json dims_json(const PanoDims& d)
{
    return json::array({d.width(), d.height()});
}

// Strict object reader: every key must be consumed, types must match.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) {
            throw ConfigError(path_ + " must be an object");
        }
    }

    template <typename T>
    void read(const char* key, T& out)
    {
        if (!j_.contains(key)) {
            return;
        }
        seen_.insert(key);
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where(key) + ": " + e.what());
        }
    }

    void read_dims(const char* key, PanoDims& out)
    {
        if (!j_.contains(key)) {
            return;
        }
        seen_.insert(key);
        const auto& v = j_.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
            throw ConfigError(where(key) + " must be [width, height]");
        }
        try {
            out = PanoDims(v[0].get<int>(), v[1].get<int>());
        } catch (const ConfigError& e) {
            throw ConfigError(where(key) + ": " + e.what());
        }
    }

    const json* child(const char* key)
    {
        if (!j_.contains(key)) {
            return nullptr;
        }
        seen_.insert(key);
        return &j_.at(key);
    }

    [[nodiscard]] std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const
    {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key)) {
                throw ConfigError("unknown config key '" + where(key) + "'");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace

json config_to_json(const PipelineConfig& cfg)
{
    const auto& s = cfg.schedule;
    json rings = json::array();
    for (const auto& r : cfg.rig.ring_layout()) {
        rings.push_back({{"elevation_deg", r.elevation_deg}, {"count", r.count}, {"half_step", r.half_step}});
    }
    json adapters = json::array();
    for (const auto& a : cfg.adapters) {
        adapters.push_back(a);
    }
    return json{
        {"prompt", cfg.prompt},
        {"seed", cfg.seed},
        {"output_dir", cfg.output_dir.string()},
        {"ladder",
         {{"base_dims", dims_json(cfg.ladder.base_dims)},
          {"stylized_dims", dims_json(cfg.ladder.stylized_dims)},
          {"detailed_dims", dims_json(cfg.ladder.detailed_dims)},
          {"blend_width", cfg.ladder.blend_width}}},
        {"depth",
         {{"working_dims", dims_json(cfg.depth_dims)},
          {"face_res", cfg.depth.face_res},
          {"fov_margin_deg", cfg.depth.fov_margin_deg},
          {"n_calibration_faces", cfg.depth.n_calibration_faces},
          {"depth_min", cfg.depth.depth_min},
          {"depth_max", cfg.depth.depth_max},
          {"overlap_stride", cfg.depth.overlap_stride},
          {"min_overlap_samples", cfg.depth.min_overlap_samples},
          {"outlier_sigma", cfg.depth.outlier_sigma}}},
        {"pointcloud",
         {{"filter_threshold", cfg.pointcloud.filter_threshold},
          {"init_dims", dims_json(cfg.pointcloud.init_dims)},
          {"sparse_dims", dims_json(cfg.pointcloud.sparse_dims)},
          {"point_radius", cfg.pointcloud.point_radius}}},
        {"rig",
         {{"n_base", cfg.rig.n_base},
          {"n_supp_per_base", cfg.rig.n_supp_per_base},
          {"image_size", cfg.rig.image_size},
          {"fov_deg", cfg.rig.fov_deg},
          {"supp_translation", cfg.rig.supp_translation},
          {"supp_rotation_deg", cfg.rig.supp_rotation_deg},
          {"rings", rings}}},
        {"schedule",
         {{"pre_pcd_iters", s.pre_pcd_iters},
          {"pre_pano_iters", s.pre_pano_iters},
          {"transfer_iters", s.transfer_iters},
          {"densify_interval", s.densify_interval},
          {"densify_from", s.densify_from},
          {"densify_until", s.densify_until},
          {"densify_grad_threshold", s.densify_grad_threshold},
          {"clone_extent_fraction", s.clone_extent_fraction},
          {"prune_opacity", s.prune_opacity},
          {"max_gaussians", s.max_gaussians},
          {"lambda_dssim", s.lambda_dssim},
          {"sh_degree", s.sh_degree},
          {"lr",
           {{"position_init", s.lr.position_init},
            {"position_final", s.lr.position_final},
            {"sh_dc", s.lr.sh_dc},
            {"sh_rest", s.lr.sh_rest},
            {"opacity", s.lr.opacity},
            {"scale", s.lr.scale},
            {"rotation", s.lr.rotation}}}}},
        {"adapters", adapters},
        {"scene", cfg.scene},
    };
}

PipelineConfig config_from_json(const json& j, const PipelineConfig& base)
{
    PipelineConfig cfg = base;
    Section top(j, "");
    top.read("prompt", cfg.prompt);
    std::uint64_t seed = cfg.seed;
    top.read("seed", seed);
    cfg.set_seed(seed);
    std::string out = cfg.output_dir.string();
    top.read("output_dir", out);
    cfg.output_dir = out;

    if (const auto* v = top.child("ladder")) {
        Section s(*v, "ladder");
        s.read_dims("base_dims", cfg.ladder.base_dims);
        s.read_dims("stylized_dims", cfg.ladder.stylized_dims);
        s.read_dims("detailed_dims", cfg.ladder.detailed_dims);
        s.read("blend_width", cfg.ladder.blend_width);
        s.finish();
    }
    if (const auto* v = top.child("depth")) {
        Section s(*v, "depth");
        s.read_dims("working_dims", cfg.depth_dims);
        s.read("face_res", cfg.depth.face_res);
        s.read("fov_margin_deg", cfg.depth.fov_margin_deg);
        s.read("n_calibration_faces", cfg.depth.n_calibration_faces);
        s.read("depth_min", cfg.depth.depth_min);
        s.read("depth_max", cfg.depth.depth_max);
        s.read("overlap_stride", cfg.depth.overlap_stride);
        s.read("min_overlap_samples", cfg.depth.min_overlap_samples);
        s.read("outlier_sigma", cfg.depth.outlier_sigma);
        s.finish();
    }
    if (const auto* v = top.child("pointcloud")) {
        Section s(*v, "pointcloud");
        s.read("filter_threshold", cfg.pointcloud.filter_threshold);
        s.read_dims("init_dims", cfg.pointcloud.init_dims);
        s.read_dims("sparse_dims", cfg.pointcloud.sparse_dims);
        s.read("point_radius", cfg.pointcloud.point_radius);
        s.finish();
    }
    if (const auto* v = top.child("rig")) {
        Section s(*v, "rig");
        s.read("n_base", cfg.rig.n_base);
        s.read("n_supp_per_base", cfg.rig.n_supp_per_base);
        s.read("image_size", cfg.rig.image_size);
        s.read("fov_deg", cfg.rig.fov_deg);
        s.read("supp_translation", cfg.rig.supp_translation);
        s.read("supp_rotation_deg", cfg.rig.supp_rotation_deg);
        if (const auto* r = s.child("rings")) {
            if (!r->is_array()) {
                throw ConfigError("rig.rings must be an array");
            }
            cfg.rig.rings.clear();
            for (std::size_t k = 0; k < r->size(); ++k) {
                Section ring((*r)[k], "rig.rings[" + std::to_string(k) + "]");
                RingSpec spec;
                ring.read("elevation_deg", spec.elevation_deg);
                ring.read("count", spec.count);
                ring.read("half_step", spec.half_step);
                ring.finish();
                cfg.rig.rings.push_back(spec);
            }
        }
        s.finish();
    }
    if (const auto* v = top.child("schedule")) {
        auto& sc = cfg.schedule;
        Section s(*v, "schedule");
        s.read("pre_pcd_iters", sc.pre_pcd_iters);
        s.read("pre_pano_iters", sc.pre_pano_iters);
        s.read("transfer_iters", sc.transfer_iters);
        s.read("densify_interval", sc.densify_interval);
        s.read("densify_from", sc.densify_from);
        s.read("densify_until", sc.densify_until);
        s.read("densify_grad_threshold", sc.densify_grad_threshold);
        s.read("clone_extent_fraction", sc.clone_extent_fraction);
        s.read("prune_opacity", sc.prune_opacity);
        s.read("max_gaussians", sc.max_gaussians);
        s.read("lambda_dssim", sc.lambda_dssim);
        s.read("sh_degree", sc.sh_degree);
        if (const auto* lr = s.child("lr")) {
            Section l(*lr, "schedule.lr");
            l.read("position_init", sc.lr.position_init);
            l.read("position_final", sc.lr.position_final);
            l.read("sh_dc", sc.lr.sh_dc);
            l.read("sh_rest", sc.lr.sh_rest);
            l.read("opacity", sc.lr.opacity);
            l.read("scale", sc.lr.scale);
            l.read("rotation", sc.lr.rotation);
            l.finish();
        }
        s.finish();
    }
    if (const auto* v = top.child("adapters")) {
        if (!v->is_array()) {
            throw ConfigError("adapters must be an array");
        }
        for (const auto& item : *v) {
            AdapterEndpoint e;
            try {
                e = item.get<AdapterEndpoint>();
            } catch (const json::exception& ex) {
                throw ConfigError(std::string("adapters: ") + ex.what());
            }
            cfg.adapter(e.kind) = e;
        }
    }
    if (const auto* v = top.child("scene")) {
        try {
            cfg.scene = v->get<SyntheticScene>();
        } catch (const json::exception& ex) {
            throw ConfigError(std::string("scene: ") + ex.what());
        }
    }
    top.finish();
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path, RunScale scale)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j, PipelineConfig::defaults(scale));
}

void save_config(const std::filesystem::path& path, const PipelineConfig& cfg)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    out << config_to_json(cfg).dump(2) << '\n';
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
}

}  // namespace panogs
