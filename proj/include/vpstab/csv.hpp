#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace vpstab::csv {

/// Shortest round-trip decimal form; identical bytes on every run.
std::string num(double v);

/// Writes `# vpstab <version> config_hash=<hash>` when hash is non-empty.
void write_provenance(std::ostream& os, std::string_view config_hash);

/// Rows of numeric fields. Lines starting with '#' are skipped; the first
/// non-comment line is returned as the header.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
Table read_numeric(std::istream& is);

}  // namespace vpstab::csv
