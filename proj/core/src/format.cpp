#include "zzaloha/format.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace zzaloha {

std::string format_number(double value, int significant_digits) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) return "0";  // also folds -0
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general,
                                   significant_digits);
    return {buf.data(), res.ptr};
}

}  // namespace zzaloha
