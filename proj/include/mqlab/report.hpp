#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>

#include "mqlab/errors.hpp"

namespace mqlab {

inline constexpr const char* kToolVersion = "0.1.0";

/// Whole-file atomic replacement: write a sibling temp file, then rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[40];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::stod(buf) == v) break;
    }
    return buf;
}

/// Minimal CSV assembly with a metadata comment line. Cells are written in
/// fixed order; doubles use the shortest round-tripping form so equal inputs
/// yield byte-identical bodies.
class CsvBuilder {
public:
    CsvBuilder& comment(const std::string& text) {
        body_ += "# " + text + "\n";
        return *this;
    }
    CsvBuilder& header(std::initializer_list<const char*> columns) {
        bool first = true;
        for (const char* c : columns) {
            if (!first) body_ += ",";
            body_ += c;
            first = false;
        }
        body_ += "\n";
        return *this;
    }
    CsvBuilder& cell(const std::string& v) {
        start_cell();
        bool quote = v.find_first_of(",\"\n") != std::string::npos;
        if (!quote) {
            body_ += v;
        } else {
            body_ += '"';
            for (char c : v) {
                if (c == '"') body_ += '"';
                body_ += c;
            }
            body_ += '"';
        }
        return *this;
    }
    CsvBuilder& cell(const char* v) { return cell(std::string(v)); }
    CsvBuilder& cell(double v) { return cell(format_double(v)); }
    CsvBuilder& cell(bool v) { return cell(std::string(v ? "true" : "false")); }
    CsvBuilder& cell(long long v) { return cell(std::to_string(v)); }
    CsvBuilder& cell(std::size_t v) { return cell(std::to_string(v)); }
    CsvBuilder& end_row() {
        body_ += "\n";
        in_row_ = false;
        return *this;
    }
    const std::string& str() const { return body_; }

private:
    void start_cell() {
        if (in_row_) body_ += ",";
        in_row_ = true;
    }
    std::string body_;
    bool in_row_ = false;
};

}  // namespace mqlab
