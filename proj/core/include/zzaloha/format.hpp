#pragma once

#include <string>

namespace zzaloha {

/// `%.12g`-style formatting that ignores the C locale.
std::string format_number(double value, int significant_digits = 12);

}  // namespace zzaloha
