#include "ste/version.hpp"

namespace ste {

std::string_view version() { return STE_VERSION; }

}  // namespace ste
