#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nagflow::cli {

/// Shortest decimal string that parses back to the same double.
std::string format_number(double x);

/// Comma-separated writer; numbers use format_number.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);

  CsvWriter& operator<<(double x);
  CsvWriter& operator<<(long long x);
  void endRow();

  std::size_t rows() const { return rows_; }

 private:
  void separator();

  std::ostream& out_;
  std::size_t columns_;
  std::size_t column_ = 0;
  std::size_t rows_ = 0;
};

}  // namespace nagflow::cli
