#pragma once

namespace corrnoise {

/// Version string embedded in every output artifact. Must stay stable within
/// a release so identical configs produce byte-identical outputs.
const char* version_string();

}  // namespace corrnoise
