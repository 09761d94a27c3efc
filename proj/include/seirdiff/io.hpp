#pragma once

// Deterministic emission: JSON written from ordered trees with doubles
// formatted via %.17g, CSV rows with the same formatting. Identical inputs
// produce byte-identical files.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "seirdiff/errors.hpp"

namespace seirdiff {

using ordered_json = nlohmann::ordered_json;

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace detail {

inline void escape_into(const std::string& s, std::string& out) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

inline void dump_into(const ordered_json& j, std::string& out, int indent) {
    const std::string pad(2 * indent, ' ');
    const std::string pad_in(2 * (indent + 1), ' ');
    switch (j.type()) {
        case ordered_json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in;
                escape_into(it.key(), out);
                out += ": ";
                dump_into(it.value(), out, indent + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case ordered_json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            bool scalars_only = true;
            for (const auto& v : j)
                if (v.is_structured()) scalars_only = false;
            if (scalars_only) {
                out += "[";
                bool first = true;
                for (const auto& v : j) {
                    if (!first) out += ", ";
                    first = false;
                    dump_into(v, out, indent);
                }
                out += "]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in;
                dump_into(v, out, indent + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case ordered_json::value_t::string:
            escape_into(j.get_ref<const std::string&>(), out);
            return;
        case ordered_json::value_t::boolean:
            out += j.get<bool>() ? "true" : "false";
            return;
        case ordered_json::value_t::number_integer:
            out += std::to_string(j.get<std::int64_t>());
            return;
        case ordered_json::value_t::number_unsigned:
            out += std::to_string(j.get<std::uint64_t>());
            return;
        case ordered_json::value_t::number_float:
            out += format_double(j.get<double>());
            return;
        case ordered_json::value_t::null:
        default:
            out += "null";
            return;
    }
}

} // namespace detail

inline std::string dump_json(const ordered_json& j) {
    std::string out;
    detail::dump_into(j, out, 0);
    out += '\n';
    return out;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw solver_error("cannot open output file: " + path);
    f << content;
    if (!f) throw solver_error("failed writing output file: " + path);
}

inline void write_json_file(const std::string& path, const ordered_json& j) {
    write_file(path, dump_json(j));
}

// CSV with leading '#' metadata lines, then a header row.
class CsvWriter {
public:
    void comment(const std::string& line) { buf_ += "# " + line + "\n"; }
    void header(const std::string& columns) { buf_ += columns + "\n"; }

    void begin_row() { first_ = true; }
    void cell(double v) {
        sep();
        buf_ += format_double(v);
    }
    void cell(const std::string& v) {
        sep();
        buf_ += v;
    }
    void cell(int v) {
        sep();
        buf_ += std::to_string(v);
    }
    void end_row() { buf_ += "\n"; }

    const std::string& str() const { return buf_; }
    void save(const std::string& path) const { write_file(path, buf_); }

private:
    void sep() {
        if (!first_) buf_ += ",";
        first_ = false;
    }
    std::string buf_;
    bool first_ = true;
};

} // namespace seirdiff
