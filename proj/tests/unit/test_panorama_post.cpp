#include "panogs/errors.hpp"
#include "panogs/panorama_post.hpp"
#include "panogs/stubs.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace panogs;

namespace {

Image random_field(int w, int h, int c, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Image img(w, h, c);
    for (auto& v : img.data()) {
        v = U(rng);
    }
    return img;
}

// Closed-form cross-fade: column W-b+k moves by (k+1)/b of the seam offset.
Image crossfade_oracle(const Image& f, int b)
{
    Image out = f;
    const int w = f.width();
    for (int y = 0; y < f.height(); ++y) {
        for (int c = 0; c < f.channels(); ++c) {
            const double gap = f.at(0, y, c) - f.at(w - 1, y, c);
            for (int k = 0; k < b; ++k) {
                out.at(w - b + k, y, c) += (k + 1.0) / b * gap;
            }
        }
    }
    return out;
}

class WrongSizeGenerator final : public GeneratorClient {
public:
    Image stage(const GenerationRequest& r) override { return Image(r.width / 2, r.height, 3, 0.5); }
};

class FailingGenerator final : public GeneratorClient {
public:
    Image stage(const GenerationRequest& r) override
    {
        if (r.stage == GenerationStage::superres) {
            throw std::runtime_error("backend unavailable");
        }
        return inner_.stage(r);
    }

private:
    ProceduralGeneratorStub inner_;
};

GenerationLadderConfig small_ladder(int blend)
{
    GenerationLadderConfig cfg;
    cfg.base_dims = PanoDims(64, 32);
    cfg.stylized_dims = PanoDims(96, 48);
    cfg.detailed_dims = PanoDims(192, 96);
    cfg.blend_width = blend;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST(CircularBlend, RampFieldMatchesClosedForm)
{
    Image ramp(8, 1, 1);
    for (int x = 0; x < 8; ++x) {
        ramp.at(x, 0) = x;
    }
    const Image out = circular_blend(ramp, 2);
    EXPECT_EQ(max_abs_difference(out, crossfade_oracle(ramp, 2)), 0.0);
    EXPECT_DOUBLE_EQ(out.at(6, 0), 2.5);
    EXPECT_LE(seam_discontinuity(out), 1e-15);
    EXPECT_DOUBLE_EQ(seam_discontinuity(ramp), 7.0);
}

TEST(CircularBlend, IdentityCases)
{
    std::mt19937_64 rng(1);
    const Image f = random_field(32, 8, 3, rng);
    EXPECT_EQ(max_abs_difference(circular_blend(f, 0), f), 0.0);
    const Image flat(32, 8, 3, 0.25);
    EXPECT_EQ(max_abs_difference(circular_blend(flat, 8), flat), 0.0);
    EXPECT_THROW(circular_blend(f, 9), ConfigError);
    EXPECT_EQ(seam_discontinuity(flat), 0.0);
    Image two(2, 1, 1);
    two.at(1, 0) = 1.0;
    EXPECT_EQ(seam_discontinuity(two), 1.0);
}

TEST(CircularBlend, RandomFieldProperties)
{
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> width(1, 16);
    for (int trial = 0; trial < 100; ++trial) {
        const Image f = random_field(64, 6, trial % 2 ? 3 : 1, rng);
        const int b = width(rng);
        const Image once = circular_blend(f, b);
        EXPECT_LT(max_abs_difference(circular_blend(once, b), once), 1e-12);
        EXPECT_LT(max_abs_difference(once, crossfade_oracle(f, b)), 1e-14);
        EXPECT_LE(seam_discontinuity(once), seam_discontinuity(f));
        for (int y = 0; y < 6; ++y) {
            for (int x = 0; x < 64 - b; ++x) {
                for (int c = 0; c < f.channels(); ++c) {
                    ASSERT_EQ(once.at(x, y, c), f.at(x, y, c));
                }
            }
        }
    }
}

TEST(GenerationLadder, StubLadderIsSeamlessAndDeterministic)
{
    ProceduralGeneratorStub gen;
    const auto a = run_generation_ladder("a quiet library", gen, small_ladder(4));
    const auto b = run_generation_ladder("a quiet library", gen, small_ladder(4));
    EXPECT_EQ(a.panorama.dims.width(), 192);
    EXPECT_EQ(a.panorama.dims.height(), 96);
    EXPECT_LE(seam_discontinuity(a.panorama.rgb), 1e-6);
    EXPECT_EQ(max_abs_difference(a.panorama.rgb, b.panorama.rgb), 0.0);
    ASSERT_EQ(a.stages.size(), 4u);
    const GenerationStage order[] = {GenerationStage::base, GenerationStage::stylize, GenerationStage::superres,
                                     GenerationStage::tile};
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(a.stages[k].stage, order[k]);
        EXPECT_LE(a.stages[k].seam_after_blend, 1e-6);
    }
}

TEST(GenerationLadder, ZeroBlendIsPlainComposition)
{
    ProceduralGeneratorStub gen;
    const auto cfg = small_ladder(0);
    const auto out = run_generation_ladder("dunes", gen, cfg);

    ProceduralGeneratorStub direct;
    std::optional<Image> img;
    const std::pair<GenerationStage, PanoDims> steps[] = {{GenerationStage::base, cfg.base_dims},
                                                          {GenerationStage::stylize, cfg.stylized_dims},
                                                          {GenerationStage::superres, cfg.detailed_dims},
                                                          {GenerationStage::tile, cfg.detailed_dims}};
    for (const auto& [stage, dims] : steps) {
        GenerationRequest r;
        r.stage = stage;
        r.prompt = "dunes";
        r.seed = cfg.seed;
        r.image = img;
        r.width = dims.width();
        r.height = dims.height();
        img = direct.stage(r);
    }
    EXPECT_EQ(max_abs_difference(out.panorama.rgb, *img), 0.0);
}

TEST(GenerationLadder, AdapterFailures)
{
    WrongSizeGenerator wrong;
    EXPECT_THROW(run_generation_ladder("x", wrong, small_ladder(4)), ContractError);
    FailingGenerator failing;
    try {
        run_generation_ladder("x", failing, small_ladder(4));
        FAIL() << "expected a pipeline error";
    } catch (const PipelineError& e) {
        EXPECT_NE(std::string(e.what()).find("superres"), std::string::npos);
    }
}
