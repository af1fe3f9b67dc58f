#include "mfg/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace mfg::io {

void write_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + ": " + ec.message());
  }
}

void write_atomic(const std::filesystem::path& path, std::string_view text) {
  write_atomic(path, std::span<const std::uint8_t>(
                         reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), end);
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) text_ += ',';
    text_ += header[i];
  }
  text_ += '\n';
}

CsvTable& CsvTable::row() {
  if (open_ && filled_ != columns_) throw std::logic_error("CsvTable: incomplete row");
  if (open_) text_ += '\n';
  open_ = true;
  filled_ = 0;
  return *this;
}

CsvTable& CsvTable::cell(std::string_view value) {
  if (!open_ || filled_ == columns_) throw std::logic_error("CsvTable: too many cells");
  if (filled_) text_ += ',';
  text_ += value;
  ++filled_;
  return *this;
}

CsvTable& CsvTable::cell(double value) { return cell(std::string_view(format_double(value))); }

CsvTable& CsvTable::cell(std::size_t value) {
  return cell(std::string_view(std::to_string(value)));
}

std::string CsvTable::str() const {
  if (open_ && filled_ != columns_) throw std::logic_error("CsvTable: incomplete row");
  return open_ ? text_ + '\n' : text_;
}

void CsvTable::save(const std::filesystem::path& path) const { write_atomic(path, str()); }

}  // namespace mfg::io
