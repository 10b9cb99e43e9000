#include "panogs/panorama_post.hpp"

#include "panogs/errors.hpp"

#include <algorithm>
#include <cmath>

namespace panogs {

void GenerationLadderConfig::validate() const
{
    const auto grows = [](const PanoDims& a, const PanoDims& b) { return b.width() > a.width(); };
    if (!grows(base_dims, stylized_dims) || !grows(stylized_dims, detailed_dims)) {
        throw ConfigError("generation ladder dims must strictly increase stage to stage");
    }
    for (const auto& d : {base_dims, stylized_dims, detailed_dims}) {
        if (blend_width < 0 || 4 * blend_width >= d.width()) {
            throw ConfigError("blend_width must be non-negative and below width/4 at every stage");
        }
    }
}

Image circular_blend(const Image& field, int blend_width)
{
    const int w = field.width();
    if (blend_width < 0 || 4 * blend_width > w) {
        throw ConfigError("circular_blend: blend_width " + std::to_string(blend_width) + " exceeds width/4");
    }
    Image out = field;
    if (blend_width == 0) {
        return out;
    }
    const int start = w - blend_width;
    for (int y = 0; y < field.height(); ++y) {
        for (int c = 0; c < field.channels(); ++c) {
            const double gap = field.at(0, y, c) - field.at(w - 1, y, c);
            for (int k = 0; k < blend_width; ++k) {
                const double t = static_cast<double>(k + 1) / blend_width;
                out.at(start + k, y, c) = field.at(start + k, y, c) + t * gap;
            }
            // Exact at the seam column regardless of rounding in t * gap.
            out.at(w - 1, y, c) = field.at(0, y, c);
        }
    }
    return out;
}

double seam_discontinuity(const Image& field)
{
    if (field.width() < 2) {
        throw ContractError("seam_discontinuity needs at least two columns");
    }
    double worst = 0.0;
    const int last = field.width() - 1;
    for (int y = 0; y < field.height(); ++y) {
        for (int c = 0; c < field.channels(); ++c) {
            worst = std::max(worst, std::abs(field.at(0, y, c) - field.at(last, y, c)));
        }
    }
    return worst;
}

GenerationResult run_generation_ladder(const std::string& prompt, GeneratorClient& generator,
                                       const GenerationLadderConfig& cfg)
{
    cfg.validate();
    struct Step {
        GenerationStage stage;
        PanoDims dims;
    };
    const Step steps[] = {
        {GenerationStage::base, cfg.base_dims},
        {GenerationStage::stylize, cfg.stylized_dims},
        {GenerationStage::superres, cfg.detailed_dims},
        {GenerationStage::tile, cfg.detailed_dims},
    };

    std::vector<StageRecord> records;
    std::optional<Image> current;
    for (const auto& step : steps) {
        GenerationRequest req;
        req.stage = step.stage;
        req.prompt = prompt;
        req.seed = cfg.seed;
        req.image = current;
        req.width = step.dims.width();
        req.height = step.dims.height();
        Image out;
        try {
            out = checked_stage(generator, req);
        } catch (const ContractError&) {
            throw;
        } catch (const std::exception& e) {
            throw PipelineError(std::string("generation stage '") + to_string(step.stage) + "' failed: " + e.what());
        }
        StageRecord rec{step.stage, out.width(), out.height(), seam_discontinuity(out), 0.0};
        out = circular_blend(out, cfg.blend_width);
        rec.seam_after_blend = seam_discontinuity(out);
        records.push_back(rec);
        current = std::move(out);
    }
    return {Panorama(cfg.detailed_dims, std::move(*current)), std::move(records)};
}

}  // namespace panogs
