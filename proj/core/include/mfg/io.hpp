#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mfg::io {

// Writes to a sibling temporary file and renames it over `path`, so readers
// see either the old file or the complete new one.
void write_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_atomic(const std::filesystem::path& path, std::string_view text);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

// Accumulates CSV rows in memory; numbers use format_double.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& row();
  CsvTable& cell(double value);
  CsvTable& cell(std::size_t value);
  CsvTable& cell(std::string_view value);

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t columns_;
  std::string text_;
  std::size_t filled_ = 0;
  bool open_ = false;
};

}  // namespace mfg::io
