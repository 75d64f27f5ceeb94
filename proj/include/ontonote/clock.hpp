#pragma once

#include <functional>
#include <string>

namespace ontonote {

/// Produces ISO-8601 UTC timestamps with microsecond precision
/// (`2026-10-15T09:30:00.000123Z`). Lexicographic order equals time order.
using Clock = std::function<std::string()>;

/// Wall clock, strictly increasing within one process.
std::string utc_now();

}  // namespace ontonote
