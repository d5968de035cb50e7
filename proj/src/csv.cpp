#include "kss/csv.hpp"

#include <cstdio>

#include "kss/errors.hpp"

namespace kss {

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& schema_comment)
    : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw io_error("cannot open CSV file for writing: " + path);
  line("# " + schema_comment);
}

void CsvWriter::line(const std::string& s) {
  out_ << s << '\n';  // binary mode: '\n' stays LF on every platform
  if (!out_) throw io_error("write failure on CSV file: " + path_);
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  columns_ = columns.size();
  std::string h;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) h += ',';
    h += columns[i];
  }
  line(h);
}

void CsvWriter::row(const std::vector<double>& values) {
  if (columns_ && values.size() != columns_)
    throw contract_error("CSV row width does not match header in " + path_);
  std::string r;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) r += ',';
    r += format_g17(values[i]);
  }
  line(r);
}

void CsvWriter::row_mixed(const std::vector<std::string>& cells) {
  if (columns_ && cells.size() != columns_)
    throw contract_error("CSV row width does not match header in " + path_);
  std::string r;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) r += ',';
    r += cells[i];
  }
  line(r);
}

void CsvWriter::close() {
  if (out_.is_open()) {
    out_.flush();
    if (!out_) throw io_error("flush failure on CSV file: " + path_);
    out_.close();
  }
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
    // Destructors must not throw; explicit close() reports flush failures.
  }
}

}  // namespace kss
