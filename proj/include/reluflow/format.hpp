#pragma once

#include <string>

namespace reluflow {

/// Shortest decimal that parses back to the same double ("." separator).
std::string format_double(double v);

} // namespace reluflow
