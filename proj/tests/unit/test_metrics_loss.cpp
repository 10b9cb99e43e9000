#include "panogs/errors.hpp"
#include "panogs/metrics.hpp"
#include "panogs/training.hpp"

#include "support/metric_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace panogs;

namespace {

Image random_image(int w, int h, int c, unsigned seed)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(w, h, c);
    for (auto& v : img.data()) {
        v = u(rng);
    }
    return img;
}

}  // namespace

TEST(Metrics, PsnrMatchesDirectFormula)
{
    const auto a = random_image(20, 13, 3, 1);
    const auto b = random_image(20, 13, 3, 2);
    EXPECT_NEAR(psnr(a, b), oracle::naive_psnr(a, b), 1e-9);
}

TEST(Metrics, PsnrHalfOffsetAndCap)
{
    const Image a(8, 8, 3, 0.25);
    const Image b(8, 8, 3, 0.75);
    EXPECT_NEAR(psnr(a, b), 20.0 * std::log10(2.0), 1e-9);
    EXPECT_EQ(psnr(a, a), kPsnrCap);
}

TEST(Metrics, SsimMatchesDirectWindows)
{
    for (unsigned seed = 0; seed < 3; ++seed) {
        const auto a = random_image(23, 17, 3, 10 + seed);
        auto b = a;
        std::mt19937 rng(seed);
        std::normal_distribution<double> n(0.0, 0.1);
        for (auto& v : b.data()) {
            v = std::clamp(v + n(rng), 0.0, 1.0);
        }
        EXPECT_NEAR(ssim(a, b), oracle::naive_ssim(a, b), 1e-9);
    }
}

TEST(Metrics, SsimConstantImagesClosedForm)
{
    const Image zero(16, 16, 1, 0.0);
    const Image one(16, 16, 1, 1.0);
    EXPECT_NEAR(ssim(zero, one), 1e-4 / (1.0 + 1e-4), 1e-12);
    EXPECT_NEAR(ssim(one, one), 1.0, 1e-12);
}

TEST(Metrics, InputValidation)
{
    EXPECT_THROW(psnr(Image(4, 4, 3), Image(4, 5, 3)), ContractError);
    EXPECT_THROW(psnr(Image(4, 4, 3, 1.5), Image(4, 4, 3)), DomainError);
    EXPECT_THROW(ssim(Image(10, 20, 3), Image(10, 20, 3)), ContractError);
}

TEST(Loss, ZeroForIdenticalImages)
{
    const auto t = random_image(16, 16, 3, 3);
    const auto r = compute_loss(t, t, std::nullopt, 0.2);
    EXPECT_NEAR(r.value, 0.0, 1e-12);
}

TEST(Loss, PureL1IsMeanAbsoluteDifference)
{
    const Image r(9, 7, 3, 0.8);
    const Image t(9, 7, 3, 0.3);
    const auto out = compute_loss(r, t, std::nullopt, 0.0);
    EXPECT_NEAR(out.value, 0.5, 1e-12);
    EXPECT_NEAR(out.grad.at(0, 0, 0), 1.0 / (9 * 7 * 3), 1e-15);
}

TEST(Loss, MaskedPixelsAreIgnored)
{
    Image r(12, 12, 3, 0.5);
    const Image t(12, 12, 3, 0.5);
    Mask m(12, 12);
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 12; ++x) {
            r.at(x, y, 1) = 0.0;
            m.set(x, y, true);
        }
    }
    const auto out = compute_loss(r, t, m, 0.2);
    EXPECT_NEAR(out.value, 0.0, 1e-12);
    EXPECT_EQ(out.grad.at(3, 3, 1), 0.0);
    EXPECT_FALSE(out.skipped);

    const auto all = compute_loss(r, t, Mask(12, 12, true), 0.2);
    EXPECT_TRUE(all.skipped);
    EXPECT_EQ(all.value, 0.0);
}

TEST(Loss, GradientMatchesFiniteDifferences)
{
    const auto target = random_image(14, 12, 3, 4);
    auto render = random_image(14, 12, 3, 5);
    Mask m(14, 12);
    for (int x = 0; x < 5; ++x) {
        m.set(x, 2, true);
    }
    for (const auto& mask : {std::optional<Mask>{}, std::optional<Mask>{m}}) {
        const auto base = compute_loss(render, target, mask, 0.2);
        std::mt19937 rng(7);
        std::uniform_int_distribution<int> px(0, 13), py(0, 11), pc(0, 2);
        for (int trial = 0; trial < 40; ++trial) {
            const int x = px(rng), y = py(rng), c = pc(rng);
            const double h = 1e-6;
            const double keep = render.at(x, y, c);
            render.at(x, y, c) = keep + h;
            const double up = compute_loss(render, target, mask, 0.2).value;
            render.at(x, y, c) = keep - h;
            const double down = compute_loss(render, target, mask, 0.2).value;
            render.at(x, y, c) = keep;
            EXPECT_NEAR((up - down) / (2 * h), base.grad.at(x, y, c), 1e-6) << x << "," << y << "," << c;
        }
    }
}
