#pragma once

// Constellation interchange file and small CSV helpers.
//
// Constellation file:
//   M=<int> m=<int>
//   <index> <re> <im> <label as m-character binary string>     (M lines)
// Coordinates are written with 17 significant digits so that a parse/write
// round trip is byte-identical.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "constellation.hpp"

namespace gsopt {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string label_to_string(unsigned label, int m) {
  std::string s(static_cast<std::size_t>(m), '0');
  for (int p = 0; p < m; ++p) s[static_cast<std::size_t>(p)] = label_bit(label, m, p) ? '1' : '0';
  return s;
}

inline std::string write_constellation(const LabeledConstellation& lc) {
  const std::size_t M = lc.size();
  const int m = lc.bits();
  std::string out = "M=" + std::to_string(M) + " m=" + std::to_string(m) + "\n";
  for (std::size_t i = 0; i < M; ++i) {
    const auto& x = lc.constellation[i];
    out += std::to_string(i) + " " + format_double(x.real()) + " " + format_double(x.imag()) + " " +
           label_to_string(lc.labeling[i], m) + "\n";
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

[[noreturn]] inline void parse_fail(std::size_t line_no, const std::string& what) {
  throw InputError("line " + std::to_string(line_no) + ": " + what);
}

template <class T>
T parse_number(std::string_view tok, std::size_t line_no, const char* field) {
  T v{};
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end) parse_fail(line_no, std::string("bad ") + field + " '" + std::string(tok) + "'");
  return v;
}

}  // namespace detail

// Parses the constellation file format. Structural problems raise InputError
// naming the offending line; semantic checks (energy, bijection) are left to
// validate().
inline LabeledConstellation parse_constellation(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    lines.push_back(text.substr(pos, end - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  while (!lines.empty() && detail::split_ws(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw InputError("line 1: empty constellation file");

  const auto head = detail::split_ws(lines[0]);
  if (head.size() != 2 || !head[0].starts_with("M=") || !head[1].starts_with("m=")) {
    detail::parse_fail(1, "expected header 'M=<int> m=<int>'");
  }
  const auto M = detail::parse_number<std::size_t>(head[0].substr(2), 1, "M");
  const auto m = detail::parse_number<int>(head[1].substr(2), 1, "m");
  if (!is_power_of_two(M) || log2_exact(M) != m) detail::parse_fail(1, "m must equal log2(M)");
  if (M > kMaxPoints) detail::parse_fail(1, "M exceeds 1024");
  if (lines.size() - 1 != M) {
    detail::parse_fail(lines.size() < M + 1 ? lines.size() + 1 : M + 2,
                       "expected " + std::to_string(M) + " point lines, found " + std::to_string(lines.size() - 1));
  }

  std::vector<cdouble> pts(M);
  std::vector<unsigned> labels(M);
  std::vector<bool> seen(M, false);
  for (std::size_t i = 0; i < M; ++i) {
    const std::size_t line_no = i + 2;
    const auto tok = detail::split_ws(lines[i + 1]);
    if (tok.size() != 4) detail::parse_fail(line_no, "expected '<index> <re> <im> <label>'");
    const auto idx = detail::parse_number<std::size_t>(tok[0], line_no, "index");
    if (idx >= M) detail::parse_fail(line_no, "index out of range");
    if (seen[idx]) detail::parse_fail(line_no, "duplicate index " + std::to_string(idx));
    seen[idx] = true;
    const double re = detail::parse_number<double>(tok[1], line_no, "real part");
    const double im = detail::parse_number<double>(tok[2], line_no, "imaginary part");
    if (tok[3].size() != static_cast<std::size_t>(m)) {
      detail::parse_fail(line_no, "label '" + std::string(tok[3]) + "' must have " + std::to_string(m) + " bits");
    }
    unsigned label = 0;
    for (char c : tok[3]) {
      if (c != '0' && c != '1') detail::parse_fail(line_no, "label '" + std::string(tok[3]) + "' is not binary");
      label = (label << 1) | static_cast<unsigned>(c - '0');
    }
    pts[idx] = {re, im};
    labels[idx] = label;
  }
  return {Constellation(std::move(pts)), Labeling(std::move(labels))};
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

inline LabeledConstellation load_constellation(const std::filesystem::path& path) {
  return parse_constellation(read_file(path));
}

inline void save_constellation(const std::filesystem::path& path, const LabeledConstellation& lc) {
  write_file(path, write_constellation(lc));
}

// Minimal CSV builder: header then rows of already-formatted cells.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { add(header); }

  void add(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::logic_error("CsvWriter: wrong column count");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  const std::string& str() const noexcept { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

}  // namespace gsopt
