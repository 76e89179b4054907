#pragma once

// CSV and JSON report emission. Reals carry 12 significant digits in both
// formats; probabilities are clamped to [0, 1].

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace mdf::cli {

using Json = nlohmann::ordered_json;

class IoError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 12 significant digits; NaN prints as an empty field.
inline std::string format_real(double x) {
    if (std::isnan(x)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline double round12(double x) {
    if (!std::isfinite(x)) return x;
    return std::stod(format_real(x));
}

inline double clamp_prob(double p) { return std::isnan(p) ? p : std::clamp(p, 0.0, 1.0); }

/// JSON value of a real rounded to 12 digits; NaN becomes null.
inline Json json_real(double x) { return std::isnan(x) ? Json(nullptr) : Json(round12(x)); }
inline Json json_prob(double p) { return json_real(clamp_prob(p)); }

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::string csv() const {
        std::string out;
        const auto line = [&out](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += cells[i];
            }
            out += '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
        return out;
    }
};

/// Writes `text` to `path`, or to stdout when `path` is empty.
inline void write_text(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text << std::flush;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.close();
    if (!out) throw IoError("write to '" + path + "' failed");
}

/// Emits the report in the requested format ("csv" or "json").
inline void emit_report(const Table& table, const Json& json, const std::string& format, const std::string& path) {
    if (format == "json") {
        write_text(json.dump(2) + "\n", path);
    } else {
        write_text(table.csv(), path);
    }
}

}  // namespace mdf::cli
