#pragma once

#include <array>
#include <string>
#include <vector>

#include "corrnoise/cifar.hpp"

namespace corrnoise::data {

enum class OcclusionKind {
    CentralOcclusion,
    CheckerBoard,
    HorizontalBars,
    VerticalBars,
    HorizontalHalf,
    VerticalHalf,
};

std::string to_string(OcclusionKind kind);
std::string display_name(OcclusionKind kind);  // results-table column label
OcclusionKind occlusion_kind_from_string(const std::string& s);

struct OcclusionSpec {
    OcclusionKind kind = OcclusionKind::CentralOcclusion;
    std::size_t block_size = 4;      // checker / bars
    std::size_t central_extent = 16;  // central square
    std::uint8_t fill_value = 0;      // applied pre-normalization

    void validate() const;

    friend bool operator==(const OcclusionSpec&, const OcclusionSpec&) = default;
};

// Per-pixel mask over the 32x32 grid; true = occluded. Depends only on the
// spec, never on image content.
std::array<bool, kImagePixels> occlusion_mask(const OcclusionSpec& spec);

ImageRecord occlude(const ImageRecord& image, const OcclusionSpec& spec);
std::vector<ImageRecord> occlude_all(const std::vector<ImageRecord>& images,
                                     const OcclusionSpec& spec);

// The six standard evaluation occlusions, in the results-table column order.
const std::vector<OcclusionSpec>& standard_occlusions();

}  // namespace corrnoise::data
