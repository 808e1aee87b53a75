#include "qdetect/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace qdetect {

std::string format_double(double value)
{
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::general, 17);
    return std::string(buffer, result.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : out_(path, std::ios::binary), header_(std::move(header))
{
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < header_.size(); ++i) out_ << (i ? "," : "") << header_[i];
    out_ << '\n';
}

void CsvWriter::row(const std::vector<CsvCell>& cells)
{
    if (cells.size() != header_.size()) throw std::logic_error("csv row width does not match header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        std::visit(
            [this](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, double>) {
                    out_ << format_double(v);
                } else if constexpr (std::is_same_v<T, std::string>) {
                    out_ << v;
                } else {
                    char buffer[32];
                    const auto result = std::to_chars(buffer, buffer + sizeof buffer, v);
                    out_.write(buffer, result.ptr - buffer);
                }
            },
            cells[i]);
    }
    out_ << '\n';
    if (!out_) throw std::runtime_error("csv write failed");
}

}  // namespace qdetect
