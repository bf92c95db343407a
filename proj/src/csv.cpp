#include "nestmix/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nestmix {

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == EOF) break;
        // a record with an odd number of quotes continues on the next line
        auto quote_count = [](const std::string& s) {
            return std::count(s.begin(), s.end(), '"');
        };
        long quotes = quote_count(line);
        std::string extra;
        while (quotes % 2 == 1 && std::getline(in, extra)) {
            if (!extra.empty() && extra.back() == '\r') extra.pop_back();
            line += '\n';
            line += extra;
            quotes += quote_count(extra);
        }
        auto fields = split_record(line);
        if (first) {
            t.header = std::move(fields);
            first = false;
        } else {
            if (fields.size() != t.header.size())
                throw std::runtime_error(path + ": row " + std::to_string(t.rows.size() + 2) +
                                         " has " + std::to_string(fields.size()) + " fields, expected " +
                                         std::to_string(t.header.size()));
            t.rows.push_back(std::move(fields));
        }
    }
    if (first) throw std::runtime_error(path + ": missing header row");
    return t;
}

GroupedData load_dataset(const std::string& path, const std::string& y_col,
                         const std::string& group_col) {
    const CsvTable t = read_csv(path);
    const int yi = t.column(y_col);
    const int gi = t.column(group_col);
    if (yi < 0) throw std::runtime_error(path + ": no column named '" + y_col + "'");
    if (gi < 0) throw std::runtime_error(path + ": no column named '" + group_col + "'");

    std::vector<double> y(t.rows.size());
    std::vector<std::string> g(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string& s = t.rows[r][yi];
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw ValidationError(ValidationError::Code::NonFinite,
                                  path + ": cannot parse '" + s + "' as a number (row " +
                                      std::to_string(r + 2) + ")");
        y[r] = v;
        g[r] = t.rows[r][gi];
    }
    return validate_dataset(y, g);
}

std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

std::string escape_field(const std::string& f) {
    if (f.find_first_of(",\"\n") == std::string::npos) return f;
    std::string out = "\"";
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << escape_field(header[i]);
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << escape_field(row[i]);
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failure on " + path);
}

}  // namespace nestmix
