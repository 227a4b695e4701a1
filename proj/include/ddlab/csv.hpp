#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ddlab {

inline constexpr const char* kToolVersion = "1.0.0";

/// Header plus preformatted cells. Numbers go through fmt_number so that
/// output is bit-identical across platforms.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
};

/// 17 significant digits, '.' separator, "nan"/"inf"/"-inf" for non-finite.
std::string fmt_number(double v);
std::string fmt_number(long long v);
std::string fmt_number(int v);
std::string fmt_number(std::size_t v);
std::string fmt_bool(bool v);

struct CsvMetadata {
    std::uint64_t config_hash = 0;
    std::uint64_t master_seed = 0;
};

/// Header row, data rows, then one trailing "# tool_version=..." comment line. LF endings.
std::string render_csv(const CsvTable& table, const CsvMetadata& meta);

/// Writes to a sibling temporary file and renames it into place, so a failed
/// run never leaves a partial file behind.
void write_file_atomic(const std::string& path, const std::string& contents);

} // namespace ddlab
