#include "panogs/adapters.hpp"

#include "panogs/errors.hpp"

#include <cmath>
#include <string>

namespace panogs {

const char* to_string(GenerationStage stage)
{
    switch (stage) {
    case GenerationStage::base:
        return "base";
    case GenerationStage::stylize:
        return "stylize";
    case GenerationStage::superres:
        return "superres";
    case GenerationStage::tile:
        return "tile";
    }
    return "unknown";
}

GenerationStage generation_stage_from_string(const std::string& name)
{
    if (name == "base") {
        return GenerationStage::base;
    }
    if (name == "stylize") {
        return GenerationStage::stylize;
    }
    if (name == "superres") {
        return GenerationStage::superres;
    }
    if (name == "tile") {
        return GenerationStage::tile;
    }
    throw ContractError("unknown generation stage '" + name + "'");
}

namespace {

void require_map(const Image& out, const Image& in, const char* what)
{
    if (out.width() != in.width() || out.height() != in.height() || out.channels() != 1) {
        throw ContractError(std::string(what) + ": adapter returned " + std::to_string(out.width()) + "x" +
                            std::to_string(out.height()) + "x" + std::to_string(out.channels()) + ", expected " +
                            std::to_string(in.width()) + "x" + std::to_string(in.height()) + "x1");
    }
    for (double v : out.data()) {
        if (!std::isfinite(v)) {
            throw ContractError(std::string(what) + ": adapter returned non-finite values");
        }
    }
}

void require_image(const Image& image, const char* what)
{
    if (image.empty()) {
        throw ContractError(std::string(what) + ": empty input image");
    }
}

}  // namespace

Image checked_disparity(DepthClient& client, const Image& image, const ViewHint& hint)
{
    require_image(image, "disparity");
    Image out = client.disparity(image, hint);
    require_map(out, image, "disparity");
    return out;
}

Image checked_metric_depth(MetricDepthClient& client, const Image& image, const ViewHint& hint)
{
    require_image(image, "metric_depth");
    Image out = client.depth(image, hint);
    require_map(out, image, "metric_depth");
    return out;
}

Image checked_fill(InpaintClient& client, const Image& image, const Mask& missing)
{
    require_image(image, "inpaint");
    if (missing.width() != image.width() || missing.height() != image.height()) {
        throw ContractError("inpaint: mask dims do not match the image");
    }
    Image out = client.fill(image, missing);
    if (!out.same_shape(image)) {
        throw ContractError("inpaint: adapter changed the image shape");
    }
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            for (int c = 0; c < image.channels(); ++c) {
                const double v = out.at(x, y, c);
                if (missing.at(x, y)) {
                    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                        throw ContractError("inpaint: filled pixel outside [0, 1]");
                    }
                } else if (v != image.at(x, y, c)) {
                    throw ContractError("inpaint: adapter modified unmasked pixel (" + std::to_string(x) + ", " +
                                        std::to_string(y) + ")");
                }
            }
        }
    }
    return out;
}

Image checked_stage(GeneratorClient& client, const GenerationRequest& request)
{
    if (request.width <= 0 || request.height <= 0) {
        throw ContractError("generation request needs positive dims");
    }
    if (request.stage != GenerationStage::base && !request.image) {
        throw ContractError(std::string("generation stage '") + to_string(request.stage) + "' needs an input image");
    }
    Image out = client.stage(request);
    if (out.width() != request.width || out.height() != request.height || out.channels() != 3) {
        throw ContractError(std::string("generation stage '") + to_string(request.stage) + "' returned " +
                            std::to_string(out.width()) + "x" + std::to_string(out.height()) + ", expected " +
                            std::to_string(request.width) + "x" + std::to_string(request.height));
    }
    return out;
}

}  // namespace panogs
