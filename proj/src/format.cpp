#include "reluflow/format.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

namespace reluflow {

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return res.ec == std::errc{} ? std::string(buf, res.ptr) : std::string("nan");
}

} // namespace reluflow
