#include "isa/parallel.hpp"

#include <cstdlib>
#include <string>

namespace isa {

std::size_t default_workers() {
  const char* env = std::getenv("SA_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    const long v = std::stol(env);
    return v > 0 ? static_cast<std::size_t>(v) : 1;
  } catch (const std::exception&) {
    return 1;
  }
}

}  // namespace isa
