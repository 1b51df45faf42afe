#pragma once

#include <string>
#include <vector>

namespace ccm {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 when absent
};

/// Reads a delimited text file with a header row. Empty lines are skipped,
/// fields are trimmed, a UTF-8 BOM on the first line is dropped.
Table read_table(const std::string& path, char delimiter = ',');

/// Writes a delimited text file; fields are emitted verbatim.
void write_table(const std::string& path, const Table& table, char delimiter = ',');

std::vector<std::string> split_fields(const std::string& line, char delimiter);

/// Full-precision decimal rendering (round-trips a double).
std::string format_full(double v);

/// 6-significant-digit rendering for reports.
std::string format_report(double v);

/// True for strict YYYY-MM-DD.
bool is_iso_date(const std::string& s);

}  // namespace ccm
