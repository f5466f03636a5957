#include "corrnoise/version.hpp"

namespace corrnoise {

const char* version_string() { return "corrnoise 0.1.0"; }

}  // namespace corrnoise
