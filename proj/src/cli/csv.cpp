#include "nagflow/cli/csv.hpp"

#include <charconv>
#include <stdexcept>
#include <system_error>

namespace nagflow::cli {

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  if (res.ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::separator() {
  if (column_ >= columns_) throw std::logic_error("CsvWriter: too many columns in row");
  if (column_ > 0) out_ << ',';
  ++column_;
}

CsvWriter& CsvWriter::operator<<(double x) {
  separator();
  out_ << format_number(x);
  return *this;
}

CsvWriter& CsvWriter::operator<<(long long x) {
  separator();
  out_ << x;
  return *this;
}

void CsvWriter::endRow() {
  if (column_ != columns_) throw std::logic_error("CsvWriter: incomplete row");
  out_ << '\n';
  column_ = 0;
  ++rows_;
}

}  // namespace nagflow::cli
