#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace kss {

// 17 significant digits, shortest form (%.17g): parses back to the same bits.
std::string format_g17(double x);

// Comma-separated, LF line endings, one '#' comment line carrying the schema
// name/version, then a header row, then data rows.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& schema_comment);
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  void row_mixed(const std::vector<std::string>& cells);  // pre-formatted cells
  void close();  // flush + error check; also done by the destructor
  ~CsvWriter();

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t columns_ = 0;
  void line(const std::string& s);
};

}  // namespace kss
