#ifndef SCOS_IO_HPP
#define SCOS_IO_HPP

#include "scos/types.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace scos::io {

// Matrix file: one text header line "rows cols\n" followed by row-major
// little-endian float64 payload.
void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

// One integer label per line.
void write_labels_csv(const std::filesystem::path& path,
                      const std::vector<int>& labels);
std::vector<int> read_labels_csv(const std::filesystem::path& path);

// Comma-separated integer grid, one row per line (label maps).
void write_int_grid_csv(const std::filesystem::path& path,
                        const std::vector<int>& grid, Index rows, Index cols);
std::vector<int> read_int_grid_csv(const std::filesystem::path& path,
                                   Index rows, Index cols);

// Flat key=value record, one pair per line, order preserved.
void write_kv(const std::filesystem::path& path,
              const std::vector<std::pair<std::string, std::string>>& kv);
std::vector<std::pair<std::string, std::string>> read_kv(
    const std::filesystem::path& path);

// Shortest representation that round-trips the exact double ("%.17g" with a
// trim pass); "inf" spells the positive-infinity sentinel.
std::string format_double(double value);
double parse_double(const std::string& text);

}  // namespace scos::io

#endif
