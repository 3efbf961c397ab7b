#include "acam/io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "acam/errors.hpp"

namespace acam::io {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_double(std::string_view token, const std::string& source, std::size_t line) {
    token = trim(token);
    if (token.empty()) throw ParseError(source, line, "empty numeric field");
    // from_chars rejects a leading '+', strtod-style inputs are otherwise accepted
    if (token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ParseError(source, line, "not a number: '" + std::string(token) + "'");
    }
    return value;
}

long long parse_int(std::string_view token, const std::string& source, std::size_t line) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ParseError(source, line, "not an integer: '" + std::string(token) + "'");
    }
    return value;
}

KeyValueMap parse_key_values(std::string_view text, const std::string& source) {
    KeyValueMap out;
    std::size_t line_no = 0;
    for (std::string_view raw : split(text, '\n')) {
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw ParseError(source, line_no, "missing key");
        if (value.empty()) throw ParseError(source, line_no, "missing value for '" + key + "'");
        if (!out.emplace(key, KeyValue{value, line_no}).second) {
            throw ParseError(source, line_no, "duplicate key '" + key + "'");
        }
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool LineReader::next(std::string& line) {
    while (std::getline(in_, line)) {
        ++line_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) return true;
    }
    return false;
}

std::vector<std::vector<double>> read_numeric_csv(std::istream& in, const std::string& source,
                                                  bool has_header) {
    LineReader reader(in, source);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool skip = has_header;
    while (reader.next(line)) {
        if (skip) {
            skip = false;
            continue;
        }
        std::vector<double> row;
        for (std::string_view cell : split(line, ',')) {
            row.push_back(parse_double(cell, source, reader.line_number()));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace acam::io
