#include "kftune/csv.hpp"

#include <charconv>
#include <cmath>

#include "kftune/error.hpp"

namespace kftune {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
  if (!out_) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& h : header) field(std::string_view(h));
  end_row();
}

void CsvWriter::sep() {
  if (in_row_ > 0) out_ << ',';
  ++in_row_;
}

CsvWriter& CsvWriter::field(double v) {
  sep();
  out_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::field(long v) {
  sep();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::field(std::uint64_t v) {
  sep();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::field(std::string_view v) {
  sep();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw Error("CSV row has " + std::to_string(in_row_) + " fields, expected " +
                std::to_string(columns_));
  out_ << '\n';
  in_row_ = 0;
  if (!out_) throw Error("CSV write failed");
}

}  // namespace kftune
