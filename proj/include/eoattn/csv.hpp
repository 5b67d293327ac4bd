#pragma once

#include <span>
#include <string>
#include <vector>

namespace eoattn::io {

/// Doubles formatted at 17 significant digits: enough to round-trip any
/// binary64 value through text losslessly.
std::string fmt(double v);
std::string fmt(long long v);

double parse_double(const std::string& field, const std::string& path, size_t line);
long long parse_int(const std::string& field, const std::string& path, size_t line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a comma-separated table. When `expected_header` is nonempty the
/// header must match it exactly; every row must have the header's width.
/// Lines starting with '#' are skipped.
CsvTable read_csv(const std::string& path, std::span<const std::string> expected_header);

/// Buffered writer with atomic commit (write temp file, rename into place).
/// Destroying an uncommitted writer leaves a "<path>.partial" file behind so
/// interrupted sweeps keep the rows produced so far.
class CsvWriter {
 public:
  CsvWriter(std::string path, std::span<const std::string> header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(std::span<const std::string> fields);
  void raw_line(const std::string& line);  // e.g. trailing summary comment
  void flush();
  void commit();

 private:
  std::string path_;
  std::string tmp_path_;
  void* file_ = nullptr;  // FILE*
  bool committed_ = false;
};

/// write_text_atomic writes `content` to `path` via temp file + rename.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

}  // namespace eoattn::io
