#include "stflow/output.hpp"

#include "stflow/config.hpp"
#include "stflow/errors.hpp"

#include <fstream>
#include <sstream>

namespace stflow {

void Table::add(std::vector<std::string> row) {
    if (row.size() != columns.size())
        fail(ErrorKind::Domain, "row has " + std::to_string(row.size()) + " cells, header has " +
                                    std::to_string(columns.size()));
    rows.push_back(std::move(row));
}

std::string cell(double v) { return format_number(v); }
std::string cell(int v) { return std::to_string(v); }
std::string cell(long long v) { return std::to_string(v); }
std::string cell(unsigned long long v) { return std::to_string(v); }
std::string cell(std::size_t v) { return std::to_string(v); }
std::string cell(const char* v) { return v; }
std::string cell(std::string v) { return v; }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string to_csv(const Table& t, const std::string& config_hash) {
    std::string out;
    if (!config_hash.empty()) out += "# config-hash: " + config_hash + "\n";
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_field(cells[i]);
        }
        out += '\n';
    };
    line(t.columns);
    for (const auto& r : t.rows) line(r);
    return out;
}

Table parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::size_t i = 0;
    // Skip leading comment lines.
    while (i < text.size() && text[i] == '#') {
        const auto nl = text.find('\n', i);
        i = nl == std::string::npos ? text.size() : nl + 1;
    }
    std::vector<std::string> rec;
    std::string field;
    bool quoted = false, any = false;
    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        any = true;
        if (c == '"') quoted = true;
        else if (c == ',') {
            rec.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            rec.push_back(std::move(field));
            field.clear();
            records.push_back(std::move(rec));
            rec.clear();
            any = false;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (quoted) fail(ErrorKind::Parse, "unterminated quoted CSV field");
    if (any) {
        rec.push_back(std::move(field));
        records.push_back(std::move(rec));
    }
    if (records.empty()) fail(ErrorKind::Parse, "CSV has no header");
    Table t(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != t.columns.size()) fail(ErrorKind::Parse, "CSV row " + std::to_string(r) + " has the wrong width");
        t.rows.push_back(std::move(records[r]));
    }
    return t;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorKind::Io, "cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail(ErrorKind::Io, "write to '" + path.string() + "' failed");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot read '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace stflow
