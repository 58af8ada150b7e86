#include "vpstab/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "vpstab/error.hpp"
#include "vpstab/version.hpp"

namespace vpstab::csv {

std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_provenance(std::ostream& os, std::string_view config_hash) {
    os << "# vpstab " << kVersion;
    if (!config_hash.empty()) os << " config_hash=" << config_hash;
    os << '\n';
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    return out;
}

}  // namespace

Table read_numeric(std::istream& is) {
    Table t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = split(line);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw PreconditionError("csv line " + std::to_string(lineno) + ": expected " +
                                    std::to_string(t.header.size()) + " fields");
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            double v = 0.0;
            auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
                throw PreconditionError("csv line " + std::to_string(lineno) + ": bad number '" + f + "'");
            }
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw PreconditionError("csv input has no header line");
    return t;
}

}  // namespace vpstab::csv
