#include "scos/io.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace scos::io {

namespace {

static_assert(sizeof(double) == 8, "payload format assumes 8-byte doubles");

inline std::uint64_t to_little_endian(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::little) {
    return x;
  } else {
    return __builtin_bswap64(x);
  }
}

[[noreturn]] void format_fail(const std::filesystem::path& path,
                              std::size_t byte_offset, const std::string& what) {
  raise(ErrorCode::FormatError, path.string() + " at byte " +
                                    std::to_string(byte_offset) + ": " + what);
}

std::ifstream open_for_read(const std::filesystem::path& path,
                            std::ios::openmode mode) {
  if (!std::filesystem::exists(path))
    raise(ErrorCode::FileNotFound, path.string());
  std::ifstream f(path, mode);
  if (!f) raise(ErrorCode::IoError, "cannot open " + path.string());
  return f;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) raise(ErrorCode::IoError, "cannot open " + path.string());
  f << m.rows() << " " << m.cols() << "\n";
  std::vector<std::uint64_t> row(static_cast<std::size_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::uint64_t bits;
      double v = m(i, j);
      std::memcpy(&bits, &v, 8);
      row[static_cast<std::size_t>(j)] = to_little_endian(bits);
    }
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * 8));
  }
  if (!f) raise(ErrorCode::IoError, "short write to " + path.string());
}

Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream f = open_for_read(path, std::ios::binary);
  std::string header;
  if (!std::getline(f, header)) format_fail(path, 0, "missing header line");
  long long rows = -1, cols = -1;
  int consumed = -1;
  if (std::sscanf(header.c_str(), "%lld %lld%n", &rows, &cols, &consumed) != 2 ||
      consumed != static_cast<int>(header.size()) || rows < 0 || cols < 0 ||
      rows * cols > (1ll << 31))
    format_fail(path, 0, "header must be \"rows cols\"");
  std::size_t header_bytes = header.size() + 1;
  Matrix m(rows, cols);
  std::vector<std::uint64_t> row(static_cast<std::size_t>(cols));
  for (long long i = 0; i < rows; ++i) {
    f.read(reinterpret_cast<char*>(row.data()),
           static_cast<std::streamsize>(row.size() * 8));
    if (f.gcount() != static_cast<std::streamsize>(row.size() * 8))
      format_fail(path,
                  header_bytes + static_cast<std::size_t>(i) *
                                     static_cast<std::size_t>(cols) * 8 +
                      static_cast<std::size_t>(f.gcount()),
                  "payload shorter than header claims");
    for (long long j = 0; j < cols; ++j) {
      std::uint64_t bits = to_little_endian(row[static_cast<std::size_t>(j)]);
      double v;
      std::memcpy(&v, &bits, 8);
      m(i, j) = v;
    }
  }
  if (f.peek() != std::ifstream::traits_type::eof())
    format_fail(path,
                header_bytes +
                    static_cast<std::size_t>(rows) *
                        static_cast<std::size_t>(cols) * 8,
                "trailing bytes after payload");
  return m;
}

void write_labels_csv(const std::filesystem::path& path,
                      const std::vector<int>& labels) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) raise(ErrorCode::IoError, "cannot open " + path.string());
  for (int v : labels) f << v << "\n";
}

std::vector<int> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream f = open_for_read(path, std::ios::in);
  std::vector<int> labels;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(f, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    int value = 0;
    int consumed = -1;
    if (std::sscanf(line.c_str(), "%d%n", &value, &consumed) != 1 ||
        consumed != static_cast<int>(line.size()))
      format_fail(path, offset, "expected one integer per line");
    labels.push_back(value);
    offset += line.size() + 1;
  }
  return labels;
}

void write_int_grid_csv(const std::filesystem::path& path,
                        const std::vector<int>& grid, Index rows, Index cols) {
  require(grid.size() == static_cast<std::size_t>(rows * cols),
          ErrorCode::LengthMismatch, "grid size does not match rows*cols");
  std::ofstream f(path, std::ios::trunc);
  if (!f) raise(ErrorCode::IoError, "cannot open " + path.string());
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (j) f << ",";
      f << grid[static_cast<std::size_t>(i * cols + j)];
    }
    f << "\n";
  }
}

std::vector<int> read_int_grid_csv(const std::filesystem::path& path,
                                   Index rows, Index cols) {
  std::ifstream f = open_for_read(path, std::ios::in);
  std::vector<int> grid;
  grid.reserve(static_cast<std::size_t>(rows * cols));
  std::string line;
  std::size_t offset = 0;
  Index row_count = 0;
  while (std::getline(f, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    Index col_count = 0;
    const char* p = line.c_str();
    for (;;) {
      char* end = nullptr;
      long v = std::strtol(p, &end, 10);
      if (end == p)
        format_fail(path, offset + static_cast<std::size_t>(p - line.c_str()),
                    "expected integer");
      grid.push_back(static_cast<int>(v));
      ++col_count;
      p = end;
      if (*p == ',') {
        ++p;
      } else if (*p == '\0' || *p == '\r') {
        break;
      } else {
        format_fail(path, offset + static_cast<std::size_t>(p - line.c_str()),
                    "expected comma or end of line");
      }
    }
    if (col_count != cols)
      raise(ErrorCode::ShapeMismatch,
            path.string() + ": row " + std::to_string(row_count) + " has " +
                std::to_string(col_count) + " columns, expected " +
                std::to_string(cols));
    ++row_count;
    offset += line.size() + 1;
  }
  if (row_count != rows)
    raise(ErrorCode::ShapeMismatch,
          path.string() + ": has " + std::to_string(row_count) +
              " rows, expected " + std::to_string(rows));
  return grid;
}

void write_kv(const std::filesystem::path& path,
              const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) raise(ErrorCode::IoError, "cannot open " + path.string());
  for (const auto& [k, v] : kv) f << k << "=" << v << "\n";
}

std::vector<std::pair<std::string, std::string>> read_kv(
    const std::filesystem::path& path) {
  std::ifstream f = open_for_read(path, std::ios::in);
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') {
      offset += line.size() + 1;
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      format_fail(path, offset, "expected key=value");
    kv.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    offset += line.size() + 1;
  }
  return kv;
}

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) return buf;
  }
  return buf;
}

double parse_double(const std::string& text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  require(end == text.c_str() + text.size() && !text.empty(),
          ErrorCode::FormatError, "cannot parse number: " + text);
  return v;
}

}  // namespace scos::io
