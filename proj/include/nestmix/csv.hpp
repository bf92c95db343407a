#pragma once

#include <string>
#include <vector>

#include "nestmix/data.hpp"

namespace nestmix {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 if missing
};

// Minimal RFC-4180-ish reader: header row required, quoted fields with
// doubled quotes supported, LF or CRLF line endings.
CsvTable read_csv(const std::string& path);

// Loads a dataset from named columns; y parsed as decimal (locale-free),
// group kept as an opaque string label.
GroupedData load_dataset(const std::string& path, const std::string& y_col,
                         const std::string& group_col);

// Locale-independent number formatting (shortest round-trip form).
std::string format_double(double x);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace nestmix
