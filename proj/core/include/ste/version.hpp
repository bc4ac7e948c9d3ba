#pragma once

#include <string_view>

namespace ste {

/// Library version, "major.minor.patch".
std::string_view version();

}  // namespace ste
