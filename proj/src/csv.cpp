#include "ddlab/csv.hpp"

#include "ddlab/errors.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace ddlab {

void CsvTable::add_row(std::vector<std::string> row)
{
    if (row.size() != header.size())
        throw NumericError("csv row width does not match the header");
    rows.push_back(std::move(row));
}

std::string fmt_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_number(long long v) { return std::to_string(v); }
std::string fmt_number(int v) { return std::to_string(v); }
std::string fmt_number(std::size_t v) { return std::to_string(v); }
std::string fmt_bool(bool v) { return v ? "true" : "false"; }

std::string render_csv(const CsvTable& table, const CsvMetadata& meta)
{
    std::string out;
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i)
                out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    emit(table.header);
    for (const auto& r : table.rows)
        emit(r);
    char buf[160];
    std::snprintf(buf, sizeof buf, "# tool_version=%s config_hash=%016" PRIx64 " master_seed=%" PRIu64 "\n",
                  kToolVersion, meta.config_hash, meta.master_seed);
    out += buf;
    return out;
}

void write_file_atomic(const std::string& path, const std::string& contents)
{
    const std::string tmp = path + ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ConfigError("cannot open output '" + path + "' for writing");
        out << contents;
        if (!out) {
            std::filesystem::remove(tmp);
            throw ConfigError("failed writing output '" + path + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace ddlab
