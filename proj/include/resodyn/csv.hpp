// csv.hpp — Shortest-round-trip float formatting and CSV row assembly

#pragma once

#include <charconv>
#include <ostream>
#include <string>
#include <vector>

namespace resodyn {

// shortest decimal representation that parses back to the same double
inline std::string format_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << fields[i];
    }
    os << '\n';
}

} // namespace resodyn
