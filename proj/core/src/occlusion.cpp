#include "corrnoise/occlusion.hpp"

#include "corrnoise/errors.hpp"

namespace corrnoise::data {

std::string to_string(OcclusionKind kind) {
    switch (kind) {
        case OcclusionKind::CentralOcclusion: return "centralOcclusion";
        case OcclusionKind::CheckerBoard: return "checkerBoard";
        case OcclusionKind::HorizontalBars: return "horizontalBars";
        case OcclusionKind::VerticalBars: return "verticalBars";
        case OcclusionKind::HorizontalHalf: return "horizontalHalf";
        case OcclusionKind::VerticalHalf: return "verticalHalf";
    }
    return "centralOcclusion";
}

std::string display_name(OcclusionKind kind) {
    switch (kind) {
        case OcclusionKind::CentralOcclusion: return "Central Occlusion";
        case OcclusionKind::CheckerBoard: return "Checker Board";
        case OcclusionKind::HorizontalBars: return "Horizontal Bars";
        case OcclusionKind::VerticalBars: return "Vertical Bars";
        case OcclusionKind::HorizontalHalf: return "Horizontal Half";
        case OcclusionKind::VerticalHalf: return "Vertical Half";
    }
    return "Central Occlusion";
}

OcclusionKind occlusion_kind_from_string(const std::string& s) {
    if (s == "centralOcclusion") return OcclusionKind::CentralOcclusion;
    if (s == "checkerBoard") return OcclusionKind::CheckerBoard;
    if (s == "horizontalBars") return OcclusionKind::HorizontalBars;
    if (s == "verticalBars") return OcclusionKind::VerticalBars;
    if (s == "horizontalHalf") return OcclusionKind::HorizontalHalf;
    if (s == "verticalHalf") return OcclusionKind::VerticalHalf;
    throw ConfigError("unknown occlusion kind '" + s + "'");
}

void OcclusionSpec::validate() const {
    if (block_size == 0 || kImageSide % block_size != 0)
        throw ConfigError("occlusion blockSize must divide " + std::to_string(kImageSide));
    if (central_extent > kImageSide || central_extent % 2 != 0)
        throw ConfigError("occlusion centralExtent must be even and <= " +
                          std::to_string(kImageSide));
}

std::array<bool, kImagePixels> occlusion_mask(const OcclusionSpec& spec) {
    spec.validate();
    std::array<bool, kImagePixels> mask{};
    for (std::size_t y = 0; y < kImageSide; ++y) {
        for (std::size_t x = 0; x < kImageSide; ++x) {
            bool occluded = false;
            switch (spec.kind) {
                case OcclusionKind::CentralOcclusion: {
                    const std::size_t lo = (kImageSide - spec.central_extent) / 2;
                    const std::size_t hi = lo + spec.central_extent;
                    occluded = y >= lo && y < hi && x >= lo && x < hi;
                    break;
                }
                case OcclusionKind::CheckerBoard:
                    occluded = ((y / spec.block_size) + (x / spec.block_size)) % 2 == 1;
                    break;
                case OcclusionKind::HorizontalBars:
                    occluded = (y / spec.block_size) % 2 == 1;
                    break;
                case OcclusionKind::VerticalBars:
                    occluded = (x / spec.block_size) % 2 == 1;
                    break;
                case OcclusionKind::HorizontalHalf:
                    occluded = y >= kImageSide / 2;
                    break;
                case OcclusionKind::VerticalHalf:
                    occluded = x >= kImageSide / 2;
                    break;
            }
            mask[y * kImageSide + x] = occluded;
        }
    }
    return mask;
}

ImageRecord occlude(const ImageRecord& image, const OcclusionSpec& spec) {
    const std::array<bool, kImagePixels> mask = occlusion_mask(spec);
    ImageRecord out = image;
    for (std::size_t ch = 0; ch < 3; ++ch) {
        std::uint8_t* plane = out.pixels.data() + ch * kImagePixels;
        for (std::size_t p = 0; p < kImagePixels; ++p)
            if (mask[p]) plane[p] = spec.fill_value;
    }
    return out;
}

std::vector<ImageRecord> occlude_all(const std::vector<ImageRecord>& images,
                                     const OcclusionSpec& spec) {
    const std::array<bool, kImagePixels> mask = occlusion_mask(spec);
    std::vector<ImageRecord> out = images;
    for (ImageRecord& rec : out)
        for (std::size_t ch = 0; ch < 3; ++ch) {
            std::uint8_t* plane = rec.pixels.data() + ch * kImagePixels;
            for (std::size_t p = 0; p < kImagePixels; ++p)
                if (mask[p]) plane[p] = spec.fill_value;
        }
    return out;
}

const std::vector<OcclusionSpec>& standard_occlusions() {
    static const std::vector<OcclusionSpec> specs = {
        {OcclusionKind::CentralOcclusion, 4, 16, 0}, {OcclusionKind::CheckerBoard, 4, 16, 0},
        {OcclusionKind::HorizontalBars, 4, 16, 0},   {OcclusionKind::VerticalBars, 4, 16, 0},
        {OcclusionKind::HorizontalHalf, 4, 16, 0},   {OcclusionKind::VerticalHalf, 4, 16, 0},
    };
    return specs;
}

}  // namespace corrnoise::data
