#include "mfg/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>

namespace {

namespace fs = std::filesystem;
using namespace mfg::io;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mfg_io_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Io, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::exp(-1.0),
                   std::numeric_limits<double>::denorm_min()}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(3.0), "3");
}

TEST(Io, AtomicWriteReplacesFile) {
  const fs::path p = scratch("atomic.txt");
  write_atomic(p, std::string_view("first"));
  write_atomic(p, std::string_view("second"));
  EXPECT_EQ(read_text(p), "second");
  EXPECT_FALSE(fs::exists(p.string() + ".tmp"));
}

TEST(Io, BytesRoundTrip) {
  const fs::path p = scratch("bytes.bin");
  const std::vector<std::uint8_t> data = {0, 255, 10, 13, 7};
  write_atomic(p, data);
  EXPECT_EQ(read_bytes(p), data);
}

TEST(Io, MissingFileThrows) {
  EXPECT_THROW(read_text(scratch("does_not_exist")), std::runtime_error);
  EXPECT_THROW(write_atomic(fs::path("/nonexistent_dir/x"), std::string_view("x")), std::runtime_error);
}

TEST(Io, CsvTable) {
  CsvTable t({"a", "b"});
  t.row().cell(std::size_t{1}).cell(0.25);
  t.row().cell(std::string_view("x")).cell(-1.0);
  EXPECT_EQ(t.str(), "a,b\n1,0.25\nx,-1\n");
  EXPECT_THROW(t.row().cell(1.0).row(), std::logic_error);
  CsvTable u({"a"});
  EXPECT_THROW(u.row().cell(1.0).cell(2.0), std::logic_error);
}

}  // namespace
