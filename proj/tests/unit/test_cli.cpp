#include "panogs/codecs.hpp"
#include "panogs/gaussian_field.hpp"
#include "panogs/pipeline.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>

namespace fs = std::filesystem;
using namespace panogs;
using nlohmann::json;

namespace {

struct Outcome {
    int status = -1;
    std::string output;
};

Outcome run(const std::string& args)
{
    const std::string cmd = std::string(PANOGS_CLI) + " " + args + " 2>&1";
    Outcome o;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        return o;
    }
    std::array<char, 512> buf{};
    while (fgets(buf.data(), buf.size(), pipe) != nullptr) {
        o.output += buf.data();
    }
    const int raw = pclose(pipe);
    o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return o;
}

json read_json(const fs::path& p)
{
    std::ifstream in(p);
    return json::parse(in);
}

class CliPipeline : public ::testing::Test {
protected:
    static fs::path dir() { return fs::temp_directory_path() / "panogs_cli_test"; }
    static std::string opts()
    {
        return "--scale desk --config " + std::string(PANOGS_FIXTURES) + "/cli/tiny.json --out " + dir().string();
    }

    static void SetUpTestSuite()
    {
        fs::remove_all(dir());
        for (const char* step : {"synth", "depth", "pointcloud", "rig", "reconstruct --quiet", "render --kind base"}) {
            const auto o = run(opts() + " " + step);
            ASSERT_EQ(o.status, 0) << step << ": " << o.output;
        }
    }
};

}  // namespace

TEST(Cli, DryRunPrintsPublishedSchedule)
{
    const auto o = run("reconstruct --dry-run --out " + (fs::temp_directory_path() / "panogs_cli_dry").string());
    ASSERT_EQ(o.status, 0) << o.output;
    const auto j = json::parse(o.output);
    EXPECT_EQ(j["pre_pcd_iters"], 2000);
    EXPECT_EQ(j["pre_pano_iters"], 2000);
    EXPECT_EQ(j["transfer_iters"], 5000);
}

TEST(Cli, ErrorsExitNonzeroWithMessage)
{
    const auto unknown = run("frobnicate");
    EXPECT_NE(unknown.status, 0);
    const auto bad_config = run("synth --config /nonexistent/panogs.json");
    EXPECT_NE(bad_config.status, 0);
    EXPECT_NE(bad_config.output.find("error:"), std::string::npos);
    const auto bad_http = run("synth --adapters http --out " + (fs::temp_directory_path() / "panogs_cli_http").string());
    EXPECT_NE(bad_http.status, 0);
    EXPECT_NE(bad_http.output.find("uri"), std::string::npos);
}

TEST_F(CliPipeline, DepthMatchesAnalyticDepth)
{
    const Image fused = read_pfm(dir() / "depth.pfm");
    const Image exact = read_pfm(dir() / "depth_analytic.pfm");
    ASSERT_TRUE(fused.same_shape(exact));
    std::vector<double> rel;
    for (std::size_t k = 0; k < fused.data().size(); ++k) {
        rel.push_back(std::abs(fused.data()[k] - exact.data()[k]) / exact.data()[k]);
    }
    std::nth_element(rel.begin(), rel.begin() + static_cast<long>(rel.size() / 2), rel.end());
    EXPECT_LT(rel[rel.size() / 2], 0.03);
}

TEST_F(CliPipeline, ArtifactsReload)
{
    const auto cfg = load_config(dir() / "config.json", RunScale::full);
    EXPECT_EQ(cfg.rig.image_size, 32);
    EXPECT_EQ(cfg.schedule.transfer_iters, 40);
    const auto rig = rig_from_json(read_json(dir() / "rig.json"));
    EXPECT_EQ(rig.cameras.size(), 190u);
    const auto field = read_gaussian_ply(dir() / "gaussians.ply");
    EXPECT_GT(field.size(), 0u);
    const auto log = read_loss_log(dir() / "loss.jsonl");
    EXPECT_EQ(log.size(), 20u + 20u + 40u);
    EXPECT_EQ(log.back().stage, "transfer");
    const auto audit = read_json(dir() / "audit.json");
    EXPECT_EQ(audit["opacity_reset_events"], 0);
    EXPECT_EQ(read_point_cloud_ply(dir() / "points_sparse.ply").size(), 128u * 64u);
    EXPECT_TRUE(fs::exists(dir() / "renders" / "0.png"));
    EXPECT_TRUE(fs::exists(dir() / "depth_preview.png"));
}

TEST_F(CliPipeline, EvaluateIdenticalRendersHitsSentinels)
{
    const auto out = dir() / "same";
    const auto renders = (dir() / "renders").string();
    const auto o = run(opts() + " evaluate --renders " + renders + " --targets " + renders + " --dir " + out.string());
    ASSERT_EQ(o.status, 0) << o.output;
    const auto j = read_json(out / "evaluation.json");
    EXPECT_EQ(j["mean"]["psnr"].get<double>(), 99.0);
    EXPECT_NEAR(j["mean"]["ssim"].get<double>(), 1.0, 1e-12);
    EXPECT_TRUE(fs::exists(out / "evaluation.md"));
}

TEST_F(CliPipeline, EvaluateFieldWritesTable)
{
    const auto o = run(opts() + " evaluate");
    ASSERT_EQ(o.status, 0) << o.output;
    const auto j = read_json(dir() / "evaluation.json");
    EXPECT_EQ(j["views"].size(), 38u);
    EXPECT_TRUE(j["mean"].contains("supp_zero_alpha"));
}

TEST_F(CliPipeline, AblationsComplete)
{
    for (const char* v : {"no-filter", "no-pcd-init"}) {
        const auto o = run(opts() + " ablate " + v + " --quiet");
        ASSERT_EQ(o.status, 0) << o.output;
        EXPECT_TRUE(fs::exists(dir() / (std::string("ablate-") + v) / "gaussians.ply"));
    }
    const auto log = read_loss_log(dir() / "ablate-no-pcd-init" / "loss.jsonl");
    for (const auto& r : log) {
        EXPECT_NE(r.phase, "pcd");
    }
}
