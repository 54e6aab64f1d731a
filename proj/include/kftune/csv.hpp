#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace kftune {

/// Locale-independent "%.17g" rendering through std::to_chars.
std::string format_double(double v);

/// Minimal CSV writer: fixed header, comma separated, '\n' line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& field(double v);
  CsvWriter& field(long v);
  CsvWriter& field(int v) { return field(static_cast<long>(v)); }
  CsvWriter& field(std::uint64_t v);
  CsvWriter& field(std::string_view v);
  void end_row();

 private:
  void sep();
  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

}  // namespace kftune
