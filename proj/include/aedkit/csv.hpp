#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aedkit/common.hpp"

namespace aedkit::csv {

// Shortest decimal form that parses back to the same double. This is what
// makes CSV round-trips value-exact.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view field, const std::string& file, std::size_t line) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw ParseError(file, line, "bad number '" + std::string(field) + "'");
    return v;
}

inline std::int64_t parse_i64(std::string_view field, const std::string& file, std::size_t line) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError(file, line, "bad integer '" + std::string(field) + "'");
    return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(pos));
            break;
        }
        out.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return out;
}

// Rows of a headered CSV file. Strips a trailing '\r' so CRLF inputs load.
class Reader {
public:
    Reader(const std::filesystem::path& path, const std::string& expected_header)
        : file_(path.string()), text_(read_text_file(path)) {
        next_line(header_);
        if (header_ != expected_header)
            throw ParseError(file_, 1, "expected header '" + expected_header + "', got '" + header_ + "'");
    }

    // Returns false at end of input. Blank lines are skipped.
    bool next_row(std::vector<std::string_view>& fields) {
        std::string_view line;
        while (next_line_view(line)) {
            if (line.empty()) continue;
            fields = split_fields(line);
            return true;
        }
        return false;
    }

    const std::string& file() const { return file_; }
    std::size_t line_number() const { return line_no_; }

private:
    bool next_line_view(std::string_view& out) {
        if (pos_ >= text_.size()) return false;
        ++line_no_;
        std::size_t nl = text_.find('\n', pos_);
        if (nl == std::string::npos) nl = text_.size();
        out = std::string_view(text_).substr(pos_, nl - pos_);
        if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
        pos_ = nl + 1;
        return true;
    }

    void next_line(std::string& out) {
        std::string_view v;
        if (!next_line_view(v)) throw ParseError(file_, 1, "empty file");
        out.assign(v);
    }

    std::string file_;
    std::string text_;
    std::string header_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

class Writer {
public:
    explicit Writer(std::string header) { out_ << header << '\n'; }

    Writer& field(const std::string& s) {
        sep();
        out_ << s;
        return *this;
    }
    Writer& field(double v) { return field(format_double(v)); }
    Writer& field(std::int64_t v) { return field(std::to_string(v)); }
    Writer& field(int v) { return field(std::to_string(static_cast<std::int64_t>(v))); }

    void end_row() {
        out_ << '\n';
        row_open_ = false;
    }

    std::string str() const { return out_.str(); }

    void save(const std::filesystem::path& path) const { write_text_file(path, str()); }

private:
    void sep() {
        if (row_open_) out_ << ',';
        row_open_ = true;
    }

    std::ostringstream out_;
    bool row_open_ = false;
};

} // namespace aedkit::csv
