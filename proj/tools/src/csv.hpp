#pragma once

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

namespace rwlab::app {

// Minimal RFC 4180 writer. Doubles use the shortest round-trip form so equal
// values always print identically.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::initializer_list<std::string_view> header);

  CsvWriter& operator<<(std::string_view s);
  CsvWriter& operator<<(const char* s) { return *this << std::string_view(s); }
  CsvWriter& operator<<(const std::string& s) { return *this << std::string_view(s); }
  CsvWriter& operator<<(double x);
  CsvWriter& operator<<(std::int64_t x);
  CsvWriter& operator<<(std::uint64_t x);
  CsvWriter& operator<<(int x) { return *this << static_cast<std::int64_t>(x); }
  void end_row();

 private:
  void sep();
  std::ostream& out_;
  bool fresh_ = true;
};

std::string csv_quote(std::string_view s);

}  // namespace rwlab::app
