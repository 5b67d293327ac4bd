#include "eoattn/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "eoattn/errors.hpp"

namespace eoattn::io {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(long long v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld", v);
  return buf;
}

double parse_double(const std::string& field, const std::string& path, size_t line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || (end && *end != '\0') || errno == ERANGE) {
    throw Error(ErrorCode::ParseError,
                path + ":" + std::to_string(line) + ": expected a number, got '" + field + "'");
  }
  return v;
}

long long parse_int(const std::string& field, const std::string& path, size_t line) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(field.c_str(), &end, 10);
  if (end == field.c_str() || (end && *end != '\0') || errno == ERANGE) {
    throw Error(ErrorCode::ParseError,
                path + ":" + std::to_string(line) + ": expected an integer, got '" + field + "'");
  }
  return v;
}

namespace {
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}
}  // namespace

CsvTable read_csv(const std::string& path, std::span<const std::string> expected_header) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  }
  CsvTable table;
  std::string line;
  size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields = split_fields(line);
    if (!header_seen) {
      header_seen = true;
      table.header = fields;
      if (!expected_header.empty()) {
        bool ok = fields.size() == expected_header.size();
        for (size_t i = 0; ok && i < fields.size(); ++i) ok = fields[i] == expected_header[i];
        if (!ok) {
          throw Error(ErrorCode::ParseError,
                      path + ":" + std::to_string(line_no) + ": unexpected header '" + line + "'");
        }
      }
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) +
                                             ": expected " + std::to_string(table.header.size()) +
                                             " fields, got " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!header_seen) {
    throw Error(ErrorCode::ParseError, path + ": empty file");
  }
  return table;
}

CsvWriter::CsvWriter(std::string path, std::span<const std::string> header)
    : path_(std::move(path)), tmp_path_(path_ + ".partial") {
  FILE* f = std::fopen(tmp_path_.c_str(), "wb");
  if (!f) {
    throw Error(ErrorCode::ConfigError, "cannot write '" + tmp_path_ + "': " + std::strerror(errno));
  }
  file_ = f;
  std::string line;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) line += ',';
    line += header[i];
  }
  line += '\n';
  std::fwrite(line.data(), 1, line.size(), f);
}

CsvWriter::~CsvWriter() {
  if (file_) std::fclose(static_cast<FILE*>(file_));
  // Uncommitted: the .partial file stays on disk for inspection.
}

void CsvWriter::row(std::span<const std::string> fields) {
  std::string line;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += fields[i];
  }
  line += '\n';
  std::fwrite(line.data(), 1, line.size(), static_cast<FILE*>(file_));
}

void CsvWriter::raw_line(const std::string& line) {
  std::fwrite(line.data(), 1, line.size(), static_cast<FILE*>(file_));
  std::fputc('\n', static_cast<FILE*>(file_));
}

void CsvWriter::flush() { std::fflush(static_cast<FILE*>(file_)); }

void CsvWriter::commit() {
  std::fclose(static_cast<FILE*>(file_));
  file_ = nullptr;
  if (std::rename(tmp_path_.c_str(), path_.c_str()) != 0) {
    throw Error(ErrorCode::ConfigError, "cannot rename '" + tmp_path_ + "' to '" + path_ + "'");
  }
  committed_ = true;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) {
      throw Error(ErrorCode::ConfigError, "cannot write '" + tmp + "'");
    }
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw Error(ErrorCode::ConfigError, "cannot rename '" + tmp + "' to '" + path + "'");
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace eoattn::io
