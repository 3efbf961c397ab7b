#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace acam::io {

struct KeyValue {
    std::string value;
    std::size_t line = 0;
};

using KeyValueMap = std::map<std::string, KeyValue, std::less<>>;

/// `key = value` per line, `#` comments, blank lines ignored. Duplicate keys
/// are a ParseError.
KeyValueMap parse_key_values(std::string_view text, const std::string& source = {});

std::string read_file(const std::filesystem::path& path);

/// Strict double parse of a trimmed token; throws ParseError on junk.
double parse_double(std::string_view token, const std::string& source, std::size_t line);
long long parse_int(std::string_view token, const std::string& source, std::size_t line);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

/// Line reader that tracks 1-based line numbers and skips blank lines.
class LineReader {
public:
    LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    bool next(std::string& line);
    std::size_t line_number() const noexcept { return line_; }
    const std::string& source() const noexcept { return source_; }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_ = 0;
};

/// Every row of a numeric CSV, optionally skipping one header line.
std::vector<std::vector<double>> read_numeric_csv(std::istream& in, const std::string& source,
                                                  bool has_header);

}  // namespace acam::io
