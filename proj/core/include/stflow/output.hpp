#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace stflow {

/// Rows of text cells under a fixed header.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    explicit Table(std::vector<std::string> cols = {}) : columns(std::move(cols)) {}
    /// Throws Domain when the width does not match the header.
    void add(std::vector<std::string> row);
};

std::string cell(double v);
std::string cell(int v);
std::string cell(long long v);
std::string cell(unsigned long long v);
std::string cell(std::size_t v);
std::string cell(const char* v);
std::string cell(std::string v);

/// RFC 4180 quoting: fields with a comma, quote, CR or LF are wrapped and quotes doubled.
std::string csv_field(const std::string& s);

/**
 * CSV text with LF line endings. A non-empty hash adds a leading "# config-hash: <hash>"
 * line before the header.
 */
std::string to_csv(const Table& t, const std::string& config_hash = {});

/// Inverse of to_csv; comment lines starting with '#' before the header are skipped.
Table parse_csv(const std::string& text);

/// Writes bytes verbatim, creating parent directories. Failures throw Io.
void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace stflow
