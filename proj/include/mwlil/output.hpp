#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mwlil {

/// Bumped whenever a column of the result CSV changes.
inline constexpr int kResultSchemaVersion = 1;

std::string_view result_csv_header();

struct ResultRow {
    std::string experiment_id;
    std::string metric;
    std::optional<std::int64_t> n;
    double value = 0.0;
    double std_error = 0.0;
    std::string method;
};

/// Round-trip formatting ("%.17g"); non-finite values print as nan, inf, -inf.
std::string format_double(double v);

std::string results_csv(const std::vector<ResultRow>& rows);

/// A CSV table with its own header; cells are written verbatim.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string csv() const;
};

/// Writes the file in one piece; throws std::runtime_error on I/O failure.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace mwlil
