#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace qdetect {

/// Locale-independent number formatting: 17 significant digits, '.' decimal
/// point, "nan"/"inf" for non-finite values.
std::string format_double(double value);

using CsvCell = std::variant<double, std::int64_t, std::uint64_t, std::string>;

/// Writes a header row on construction, then rows with exactly as many cells.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

    void row(const std::vector<CsvCell>& cells);
    std::size_t columns() const { return header_.size(); }

private:
    std::ofstream out_;
    std::vector<std::string> header_;
};

}  // namespace qdetect
