#include "csv.hpp"

#include "rwlab/potential.hpp"

namespace rwlab::app {

std::string csv_quote(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  q += '"';
  return q;
}

CsvWriter::CsvWriter(std::ostream& out, std::initializer_list<std::string_view> header)
    : out_(out) {
  for (auto h : header) *this << h;
  end_row();
}

void CsvWriter::sep() {
  if (!fresh_) out_ << ',';
  fresh_ = false;
}

CsvWriter& CsvWriter::operator<<(std::string_view s) {
  sep();
  out_ << csv_quote(s);
  return *this;
}

CsvWriter& CsvWriter::operator<<(double x) {
  sep();
  out_ << format_double(x);
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::int64_t x) {
  sep();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::uint64_t x) {
  sep();
  out_ << x;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  fresh_ = true;
}

}  // namespace rwlab::app
