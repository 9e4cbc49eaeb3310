#pragma once

#include <cmath>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

#include <fmt/format.h>

namespace nlmod::csv {

/// Fixed-format real: scientific notation with 9 decimals, '.' radix, "inf"/"-inf"/"nan".
inline std::string real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) x = 0.0;  // drop the sign of -0
    return fmt::format("{:.9e}", x);
}

inline void row(std::ostream& os, std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& c : cells) {
        if (!first) os << ',';
        os << c;
        first = false;
    }
    os << '\n';
}

inline void comment(std::ostream& os, std::string_view key, std::string_view value) {
    os << "# " << key << '=' << value << '\n';
}

}  // namespace nlmod::csv
