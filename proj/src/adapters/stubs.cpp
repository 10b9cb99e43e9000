#include "panogs/stubs.hpp"

#include "panogs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <string_view>

namespace panogs {

namespace {

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed)
{
    std::uint64_t h = 1469598103934665603ULL ^ seed;
    for (const char ch : text) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ULL;
    }
    return h;
}

double hash_unit(std::uint64_t a, std::uint64_t b, std::uint64_t c)
{
    std::uint64_t h = a * 0x9E3779B97F4A7C15ULL ^ (b + 0x632BE59BD9B4E019ULL) * 0xBF58476D1CE4E5B9ULL ^
                      (c + 0x94D049BB133111EBULL) * 0x94D049BB133111EBULL;
    h ^= h >> 31;
    h *= 0xD6E8FEB86659FD93ULL;
    h ^= h >> 32;
    return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

double clamp01(double v)
{
    return std::clamp(v, 0.0, 1.0);
}

Image sobel_magnitude(const Image& image)
{
    Image out(image.width(), image.height(), 1);
    const int w = image.width();
    const int h = image.height();
    const auto lum = [&](int x, int y) {
        x = ((x % w) + w) % w;
        y = std::clamp(y, 0, h - 1);
        return (image.at(x, y, 0) + image.at(x, y, 1) + image.at(x, y, 2)) / 3.0;
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gx = (lum(x + 1, y - 1) + 2 * lum(x + 1, y) + lum(x + 1, y + 1)) -
                              (lum(x - 1, y - 1) + 2 * lum(x - 1, y) + lum(x - 1, y + 1));
            const double gy = (lum(x - 1, y + 1) + 2 * lum(x, y + 1) + lum(x + 1, y + 1)) -
                              (lum(x - 1, y - 1) + 2 * lum(x, y - 1) + lum(x + 1, y - 1));
            out.at(x, y) = std::hypot(gx, gy);
        }
    }
    return out;
}

}  // namespace

Image ProceduralGeneratorStub::stage(const GenerationRequest& request)
{
    const std::uint64_t key = fnv1a(request.prompt, request.seed);
    const int w = request.width;
    const int h = request.height;
    switch (request.stage) {
    case GenerationStage::base: {
        Image out(w, h, 3);
        const double p0 = 2.0 * kPi * hash_unit(key, 1, 0);
        const double p1 = 2.0 * kPi * hash_unit(key, 2, 0);
        for (int y = 0; y < h; ++y) {
            const double lat = 0.5 * kPi - kPi * (y + 0.5) / h;
            for (int x = 0; x < w; ++x) {
                const double lon = 2.0 * kPi * (x + 0.5) / w - kPi;
                const double ramp = static_cast<double>(x) / w;  // deliberately not periodic
                for (int c = 0; c < 3; ++c) {
                    const double v = 0.5 + 0.2 * std::sin(3.0 * lon + p0 + c) * std::cos(2.0 * lat) +
                                     0.1 * std::cos(5.0 * lat + p1 * c) + 0.15 * (ramp - 0.5);
                    out.at(x, y, c) = clamp01(v);
                }
            }
        }
        return out;
    }
    case GenerationStage::stylize: {
        if (!request.image) {
            throw AdapterError("stylize stage needs the base panorama");
        }
        const Image lineart = sobel_magnitude(*request.image);
        const Image up = resample_bicubic_wrap(*request.image, w, h);
        const Image lines = resample_bicubic_wrap(lineart, w, h);
        const double tint[3] = {hash_unit(key, 3, 0), hash_unit(key, 3, 1), hash_unit(key, 3, 2)};
        Image out(w, h, 3);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    out.at(x, y, c) = clamp01(0.8 * up.at(x, y, c) + 0.2 * tint[c] - 0.3 * lines.at(x, y));
                }
            }
        }
        return out;
    }
    case GenerationStage::superres: {
        if (!request.image) {
            throw AdapterError("superres stage needs an input image");
        }
        Image out = resample_bicubic_wrap(*request.image, w, h);
        for (double& v : out.data()) {
            v = clamp01(v);
        }
        return out;
    }
    case GenerationStage::tile: {
        if (!request.image) {
            throw AdapterError("tile stage needs an input image");
        }
        if (request.image->width() != w || request.image->height() != h) {
            throw AdapterError("tile stage refines in place; input dims must equal the target dims");
        }
        Image out = *request.image;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double detail = 0.02 * (hash_unit(key, static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(y)) - 0.5);
                for (int c = 0; c < 3; ++c) {
                    out.at(x, y, c) = clamp01(out.at(x, y, c) + detail);
                }
            }
        }
        return out;
    }
    }
    throw ContractError("unknown generation stage");
}

Image ConstantDepthStub::disparity(const Image& image, const ViewHint&)
{
    return Image(image.width(), image.height(), 1, 1.0 / depth_);
}

Image ConstantMetricStub::depth(const Image& image, const ViewHint&)
{
    return Image(image.width(), image.height(), 1, depth_);
}

Image analytic_view_depth(const SyntheticScene& scene, const Intrinsics& K, const Pose& pose)
{
    Image out(K.width, K.height, 1);
    const Mat3 R = pose.world_from_camera();
    for (int y = 0; y < K.height; ++y) {
        for (int x = 0; x < K.width; ++x) {
            const auto hit = scene.cast(pose.position, R * camera_ray(K, x + 0.5, y + 0.5));
            if (!hit) {
                throw AdapterError("analytic stub: ray escaped the synthetic scene");
            }
            out.at(x, y) = hit->distance;
        }
    }
    return out;
}

namespace {

void require_camera(const Image& image, const ViewHint& hint, const char* who)
{
    if (!hint.intrinsics || !hint.pose) {
        throw AdapterError(std::string(who) + " needs the view camera in the request hint");
    }
    if (hint.intrinsics->width != image.width() || hint.intrinsics->height != image.height()) {
        throw AdapterError(std::string(who) + ": hint camera does not match the image size");
    }
}

}  // namespace

AnalyticDepthStub::AnalyticDepthStub(SyntheticScene scene, std::uint64_t seed, bool corrupt)
    : scene_(std::move(scene)), seed_(seed), corrupt_(corrupt)
{
}

std::pair<double, double> AnalyticDepthStub::corruption(int face_index) const
{
    if (!corrupt_) {
        return {1.0, 0.0};
    }
    const auto idx = static_cast<std::uint64_t>(face_index + 1);
    // log-uniform scale in [0.5, 2]
    const double scale = std::exp(std::log(0.5) + hash_unit(seed_, idx, 11) * (std::log(2.0) - std::log(0.5)));
    const double offset = -0.2 + 0.4 * hash_unit(seed_, idx, 13);
    return {scale, offset};
}

Image AnalyticDepthStub::disparity(const Image& image, const ViewHint& hint)
{
    require_camera(image, hint, "AnalyticDepthStub");
    const auto [s, o] = corruption(hint.face_index);
    Image out = analytic_view_depth(scene_, *hint.intrinsics, *hint.pose);
    for (double& v : out.data()) {
        v = s / v + o;
    }
    return out;
}

AnalyticMetricStub::AnalyticMetricStub(SyntheticScene scene, double relative_noise, std::uint64_t seed)
    : scene_(std::move(scene)), noise_(relative_noise), seed_(seed)
{
}

Image AnalyticMetricStub::depth(const Image& image, const ViewHint& hint)
{
    require_camera(image, hint, "AnalyticMetricStub");
    Image out = analytic_view_depth(scene_, *hint.intrinsics, *hint.pose);
    if (noise_ > 0.0) {
        std::mt19937_64 rng(seed_ * 31ULL + static_cast<std::uint64_t>(hint.face_index + 7));
        std::normal_distribution<double> n(0.0, noise_);
        for (double& v : out.data()) {
            v *= std::max(0.5, 1.0 + n(rng));
        }
    }
    return out;
}

Image push_pull_fill(const Image& image, const Mask& missing, int relax_iterations)
{
    if (missing.width() != image.width() || missing.height() != image.height()) {
        throw ContractError("push_pull_fill: mask dims do not match the image");
    }
    const int ch = image.channels();
    if (missing.count() == 0) {
        return image;
    }

    // Pull: weighted pyramid with weights capped at 1.
    struct Level {
        Image values;
        Image weights;
    };
    std::vector<Level> pyramid;
    {
        Level l0{image, Image(image.width(), image.height(), 1)};
        for (int y = 0; y < image.height(); ++y) {
            for (int x = 0; x < image.width(); ++x) {
                l0.weights.at(x, y) = missing.at(x, y) ? 0.0 : 1.0;
            }
        }
        pyramid.push_back(std::move(l0));
    }
    while (pyramid.back().values.width() > 1 || pyramid.back().values.height() > 1) {
        const Level& fine = pyramid.back();
        const int w = (fine.values.width() + 1) / 2;
        const int h = (fine.values.height() + 1) / 2;
        Level coarse{Image(w, h, ch), Image(w, h, 1)};
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double wsum = 0.0;
                std::vector<double> vsum(static_cast<std::size_t>(ch), 0.0);
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int fx = 2 * x + dx;
                        const int fy = 2 * y + dy;
                        if (fx >= fine.values.width() || fy >= fine.values.height()) {
                            continue;
                        }
                        const double wt = fine.weights.at(fx, fy);
                        wsum += wt;
                        for (int c = 0; c < ch; ++c) {
                            vsum[static_cast<std::size_t>(c)] += wt * fine.values.at(fx, fy, c);
                        }
                    }
                }
                if (wsum > 0.0) {
                    for (int c = 0; c < ch; ++c) {
                        coarse.values.at(x, y, c) = vsum[static_cast<std::size_t>(c)] / wsum;
                    }
                }
                coarse.weights.at(x, y) = std::min(1.0, wsum);
            }
        }
        pyramid.push_back(std::move(coarse));
    }
    // Entirely unknown image: nothing to propagate.
    if (pyramid.back().weights.at(0, 0) <= 0.0) {
        Image out = image;
        for (int y = 0; y < image.height(); ++y) {
            for (int x = 0; x < image.width(); ++x) {
                for (int c = 0; c < ch; ++c) {
                    out.at(x, y, c) = 0.5;
                }
            }
        }
        return out;
    }

    // Push: blend each level's partial data over its parent.
    for (int level = static_cast<int>(pyramid.size()) - 2; level >= 0; --level) {
        Level& fine = pyramid[static_cast<std::size_t>(level)];
        const Level& coarse = pyramid[static_cast<std::size_t>(level) + 1];
        for (int y = 0; y < fine.values.height(); ++y) {
            for (int x = 0; x < fine.values.width(); ++x) {
                const double wt = fine.weights.at(x, y);
                if (wt >= 1.0) {
                    continue;
                }
                for (int c = 0; c < ch; ++c) {
                    fine.values.at(x, y, c) = wt * fine.values.at(x, y, c) + (1.0 - wt) * coarse.values.at(x / 2, y / 2, c);
                }
                fine.weights.at(x, y) = 1.0;
            }
        }
    }

    Image out = image;
    const int w = image.width();
    const int h = image.height();
    const Image& init = pyramid.front().values;

    // Per hole component: clamp the initial guess into the range of its bordering ring, so
    // the relaxation below only ever forms convex combinations of ring values.
    std::vector<int> component(static_cast<std::size_t>(w) * h, -1);
    std::vector<std::vector<int>> holes;
    const int dx4[4] = {1, -1, 0, 0};
    const int dy4[4] = {0, 0, 1, -1};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int idx = y * w + x;
            if (!missing.at(x, y) || component[static_cast<std::size_t>(idx)] >= 0) {
                continue;
            }
            const int id = static_cast<int>(holes.size());
            holes.emplace_back();
            std::queue<int> q;
            q.push(idx);
            component[static_cast<std::size_t>(idx)] = id;
            while (!q.empty()) {
                const int cur = q.front();
                q.pop();
                holes.back().push_back(cur);
                const int cx = cur % w;
                const int cy = cur / w;
                for (int k = 0; k < 4; ++k) {
                    const int nx = cx + dx4[k];
                    const int ny = cy + dy4[k];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h || !missing.at(nx, ny)) {
                        continue;
                    }
                    const int nidx = ny * w + nx;
                    if (component[static_cast<std::size_t>(nidx)] < 0) {
                        component[static_cast<std::size_t>(nidx)] = id;
                        q.push(nidx);
                    }
                }
            }
        }
    }

    for (const auto& hole : holes) {
        std::vector<double> lo(static_cast<std::size_t>(ch), std::numeric_limits<double>::infinity());
        std::vector<double> hi(static_cast<std::size_t>(ch), -std::numeric_limits<double>::infinity());
        bool has_ring = false;
        for (const int idx : hole) {
            const int x = idx % w;
            const int y = idx / w;
            for (int k = 0; k < 4; ++k) {
                const int nx = x + dx4[k];
                const int ny = y + dy4[k];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h || missing.at(nx, ny)) {
                    continue;
                }
                has_ring = true;
                for (int c = 0; c < ch; ++c) {
                    lo[static_cast<std::size_t>(c)] = std::min(lo[static_cast<std::size_t>(c)], image.at(nx, ny, c));
                    hi[static_cast<std::size_t>(c)] = std::max(hi[static_cast<std::size_t>(c)], image.at(nx, ny, c));
                }
            }
        }
        for (const int idx : hole) {
            const int x = idx % w;
            const int y = idx / w;
            for (int c = 0; c < ch; ++c) {
                double v = init.at(x, y, c);
                if (has_ring) {
                    v = std::clamp(v, lo[static_cast<std::size_t>(c)], hi[static_cast<std::size_t>(c)]);
                }
                out.at(x, y, c) = v;
            }
        }
    }

    // Gauss-Seidel on the Laplace equation inside the holes (Neumann at the image border).
    for (int it = 0; it < relax_iterations; ++it) {
        double max_change = 0.0;
        for (const auto& hole : holes) {
            for (const int idx : hole) {
                const int x = idx % w;
                const int y = idx / w;
                for (int c = 0; c < ch; ++c) {
                    double sum = 0.0;
                    int n = 0;
                    for (int k = 0; k < 4; ++k) {
                        const int nx = x + dx4[k];
                        const int ny = y + dy4[k];
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
                            continue;
                        }
                        sum += out.at(nx, ny, c);
                        ++n;
                    }
                    const double v = sum / n;
                    max_change = std::max(max_change, std::abs(v - out.at(x, y, c)));
                    out.at(x, y, c) = v;
                }
            }
        }
        if (max_change < 1e-9) {
            break;
        }
    }
    return out;
}

}  // namespace panogs
