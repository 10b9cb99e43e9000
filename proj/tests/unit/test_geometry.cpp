#include "panogs/errors.hpp"
#include "panogs/geometry.hpp"
#include "panogs/synthetic_scene.hpp"
#include "panogs/tangent_faces.hpp"

#include "support/erp_oracle.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace panogs;

namespace {

Vec3 random_unit(std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 v(n(rng), n(rng), n(rng));
    return v.normalized();
}

double wrapped_du(double a, double b, double w)
{
    const double d = std::abs(a - b);
    return std::min(d, w - d);
}

}  // namespace

TEST(SphereGeometry, CardinalDirections)
{
    const PanoDims d(64, 32);
    EXPECT_LT((pixel_to_direction(32, 16, d) - Vec3(0, 0, 1)).norm(), 1e-12);
    EXPECT_LT((pixel_to_direction(32, 0, d) - Vec3(0, 1, 0)).norm(), 1e-12);
    const Vec2 back = direction_to_pixel(Vec3(0, 0, -1), d);
    EXPECT_TRUE(std::abs(back.x()) < 1e-9 || std::abs(back.x() - 64) < 1e-9);
    EXPECT_NEAR(back.y(), 16.0, 1e-9);
    EXPECT_NEAR(direction_to_pixel(Vec3(0, -1, 0), d).y(), 32.0, 1e-9);
    EXPECT_THROW(pixel_to_direction(-0.5, 3, d), DomainError);
    EXPECT_THROW(pixel_to_direction(3, 32.5, d), DomainError);
    EXPECT_THROW(direction_to_pixel(Vec3::Zero(), d), DomainError);
    EXPECT_THROW(PanoDims(64, 30), ConfigError);
}

TEST(SphereGeometry, PixelDirectionRoundTrip)
{
    const PanoDims d(4096, 2048);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 4096.0), v(1e-3, 2048.0 - 1e-3);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double pu = u(rng);
        const double pv = v(rng);
        const Vec3 dir = pixel_to_direction(pu, pv, d);
        EXPECT_NEAR(dir.norm(), 1.0, 1e-12);
        const Vec2 back = direction_to_pixel(dir, d);
        const auto [ou, ov] = oracle::erp_uv(dir, 4096, 2048);
        worst = std::max({worst, wrapped_du(back.x(), pu, 4096), std::abs(back.y() - pv)});
        EXPECT_LT(wrapped_du(ou, pu, 4096), 1e-6);
    }
    EXPECT_LT(worst, 1e-9);

    double worst_dir = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const Vec3 dir = random_unit(rng);
        const Vec2 px = direction_to_pixel(dir, d);
        worst_dir = std::max(worst_dir, (pixel_to_direction(px.x(), px.y(), d) - dir).norm());
    }
    EXPECT_LT(worst_dir, 1e-12);
}

TEST(SphereGeometry, PerspectiveMatchesRayOracle)
{
    const auto pano = synth_scene_panorama(SyntheticScene::occluder_room(2), PanoDims(256, 128));
    const auto K = Intrinsics::from_fov(40, 30, 90.0);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 6; ++trial) {
        const Pose pose = Pose::look_at(random_unit(rng), Vec3::UnitY());
        const Image img = erp_to_perspective(pano.rgb, K, pose);
        double worst = 0.0;
        for (int y = 0; y < K.height; ++y) {
            for (int x = 0; x < K.width; ++x) {
                const auto [u, v] = oracle::erp_uv(oracle::world_ray(K, pose, x + 0.5, y + 0.5), 256, 128);
                for (int c = 0; c < 3; ++c) {
                    worst = std::max(worst, std::abs(img.at(x, y, c) - oracle::erp_bilinear(pano.rgb, u, v, c)));
                }
            }
        }
        EXPECT_LT(worst, 1e-6);
    }
}

TEST(SphereGeometry, PerspectiveSimpleCases)
{
    Image constant(64, 32, 3, 0.3);
    const auto K = Intrinsics::from_fov(33, 33, 70.0);
    const auto pose = Pose::look_at(Vec3(1, 0.5, -0.2), Vec3::UnitY());
    for (double v : erp_to_perspective(constant, K, pose).data()) {
        EXPECT_NEAR(v, 0.3, 1e-15);
    }
    Image ramp(64, 32, 1);
    for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 64; ++x) {
            ramp.at(x, y) = std::sin(0.3 * x) + 0.1 * y;
        }
    }
    const Image fwd = erp_to_perspective(ramp, K, Pose{});
    EXPECT_NEAR(fwd.at(16, 16), sample_erp(ramp, 32.0, 16.0, 0), 1e-12);
    Pose moved;
    moved.position = Vec3(0.1, 0, 0);
    EXPECT_THROW(erp_to_perspective(ramp, K, moved), ContractError);
}

TEST(SphereGeometry, RotationEquivariance)
{
    const auto pano = synth_scene_panorama(SyntheticScene::occluder_room(4), PanoDims(128, 64));
    const Quat q(Eigen::AngleAxisd(2.0 * kPi * 11.0 / 128.0, Vec3::UnitY()));
    const Image rotated = rotate_panorama(pano.rgb, q);
    const auto K = Intrinsics::from_fov(24, 24, 80.0);
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 4; ++trial) {
        Pose e = Pose::look_at(random_unit(rng), Vec3::UnitY());
        Pose qe = e;
        qe.rotation = (q * e.rotation).normalized();
        EXPECT_LT(max_abs_difference(erp_to_perspective(rotated, K, e), erp_to_perspective(pano.rgb, K, qe)), 1e-5);
    }
}

TEST(TangentFaces, TwentyDistinctAxes)
{
    const auto cams = icosahedron_cameras(32, 12.0);
    ASSERT_EQ(cams.size(), 20u);
    for (std::size_t a = 0; a < cams.size(); ++a) {
        EXPECT_LT(cams[a].pose.position.norm(), 1e-15);
        for (std::size_t b = a + 1; b < cams.size(); ++b) {
            const double cosang = cams[a].pose.forward().dot(cams[b].pose.forward());
            EXPECT_GE(rad_to_deg(std::acos(std::clamp(cosang, -1.0, 1.0))), 40.0);
        }
    }
    EXPECT_THROW(icosahedron_cameras(32, 0.0), ConfigError);
    EXPECT_THROW(icosahedron_cameras(4, 12.0), ConfigError);
}

TEST(TangentFaces, MonteCarloCoverage)
{
    const auto cams = icosahedron_cameras(32, 12.0);
    std::mt19937_64 rng(11);
    int covered = 0;
    for (int k = 0; k < 100000; ++k) {
        const Vec3 d = random_unit(rng);
        covered += std::any_of(cams.begin(), cams.end(),
                               [&](const TangentCamera& c) { return in_frustum(c.intrinsics, c.pose, d); });
    }
    EXPECT_EQ(covered, 100000);
}

TEST(TangentFaces, ConstantPanoramaGivesConstantFaces)
{
    Panorama pano(PanoDims(64, 32), Image(64, 32, 3, 0.6));
    for (const auto& f : icosahedron_tangent_project(pano, 16, 12.0)) {
        for (double v : f.image.data()) {
            EXPECT_NEAR(v, 0.6, 1e-15);
        }
    }
}

TEST(TangentFaces, AccumulatorCases)
{
    const PanoDims dims(128, 64);
    const auto cams = icosahedron_cameras(24, 12.0);
    const Image face(24, 24, 1, 0.7);

    ErpAccumulator zero(dims, 1);
    tangent_to_erp_accumulate(face, cams[3].intrinsics, cams[3].pose, Image(24, 24, 1, 0.0), zero);
    for (double v : zero.weight_sum().data()) {
        EXPECT_EQ(v, 0.0);
    }

    ErpAccumulator one(dims, 1);
    tangent_to_erp_accumulate(face, cams[3].intrinsics, cams[3].pose, Image(24, 24, 1, 1.0), one);
    const Image single = one.normalized();
    const Mask seen = one.covered();
    ASSERT_GT(seen.count(), 0u);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 128; ++x) {
            if (seen.at(x, y)) {
                EXPECT_NEAR(single.at(x, y), 0.7, 1e-12);
            }
        }
    }

    ErpAccumulator all(dims, 1);
    const Image w = frustum_weights(24, 24);
    for (const auto& c : cams) {
        tangent_to_erp_accumulate(face, c.intrinsics, c.pose, w, all);
    }
    EXPECT_EQ(all.covered().count(), dims.pixel_count());
    for (double v : all.normalized().data()) {
        EXPECT_NEAR(v, 0.7, 1e-6);
    }
}

TEST(TangentFaces, FrustumWeightsVanishAtBorders)
{
    EXPECT_NEAR(frustum_weight(0.0, 12.0, 24, 24), 0.0, 1e-15);
    EXPECT_NEAR(frustum_weight(12.0, 24.0, 24, 24), 0.0, 1e-15);
    EXPECT_NEAR(frustum_weight(12.0, 12.0, 24, 24), 1.0, 1e-15);
}
