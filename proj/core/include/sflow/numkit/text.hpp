#pragma once

#include <string>

namespace sflow::numkit {

/// Shortest decimal text that round-trips to the same double. Locale-free,
/// so artifacts written with it are byte-stable across runs.
std::string format_double(double v);

}  // namespace sflow::numkit
