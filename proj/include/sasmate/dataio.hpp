#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sasmate/dataset.hpp"
#include "sasmate/error.hpp"

namespace sasmate {

enum class Delimiter { Whitespace, Comma, Semicolon };

constexpr std::string_view to_string(Delimiter d) {
  switch (d) {
    case Delimiter::Whitespace: return "whitespace";
    case Delimiter::Comma: return "comma";
    case Delimiter::Semicolon: return "semicolon";
  }
  return "whitespace";
}

struct ParsedFile {
  Dataset dataset;
  std::size_t skipped_lines = 0;  // headers, comments, blank and non-finite rows
  std::size_t total_lines = 0;
  std::size_t data_rows = 0;      // rows that produced a point (before duplicate merging)
  Delimiter delimiter = Delimiter::Whitespace;
  int column_count = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, Delimiter d) {
  std::vector<std::string_view> out;
  if (d == Delimiter::Whitespace) {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      if (j > i) out.push_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  }
  const char sep = d == Delimiter::Comma ? ',' : ';';
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find(sep, start);
    std::string_view field = line.substr(start, end == std::string_view::npos ? line.size() - start : end - start);
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
    out.push_back(field);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

/// strtod over the whole field; accepts "nan"/"inf" so they can be counted as non-finite.
inline bool parse_number(std::string_view field, double& value) {
  if (field.empty()) return false;
  const std::string s(field);
  char* end = nullptr;
  value = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

inline bool starts_with_number(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  if (i >= line.size()) return false;
  const std::string rest(line.substr(i, std::min<std::size_t>(64, line.size() - i)));
  char* end = nullptr;
  std::strtod(rest.c_str(), &end);
  return end != rest.c_str();
}

inline Delimiter detect_delimiter(const std::vector<std::string_view>& data_lines) {
  std::size_t semis = 0, commas = 0;
  for (auto line : data_lines) {
    semis += std::count(line.begin(), line.end(), ';');
    commas += std::count(line.begin(), line.end(), ',');
  }
  if (semis > 0 && semis >= commas) return Delimiter::Semicolon;
  if (commas > 0) return Delimiter::Comma;
  return Delimiter::Whitespace;
}

}  // namespace detail

/// Reads q, I, [dI, [dq]] columns. Comment ('#', '%') and non-numeric lines are
/// skipped, rows with non-finite values are dropped and counted, rows are
/// sorted by q and duplicate q values are averaged. A dq column is read and
/// discarded with a warning.
inline ParsedFile load_ascii(std::string_view text, std::string_view filename = {}) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!(end == text.size() && line.empty() && start == text.size())) lines.push_back(line);
      if (end == text.size()) break;
      start = end + 1;
    }
  }

  ParsedFile out;
  out.total_lines = lines.size();

  std::vector<std::string_view> candidates;
  for (auto line : lines) {
    auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    if (line[first] == '#' || line[first] == '%') continue;
    if (!detail::starts_with_number(line)) continue;
    candidates.push_back(line);
  }
  if (candidates.empty()) throw Error(ErrorCode::NoNumericRows, "no numeric data rows found");

  out.delimiter = detail::detect_delimiter(candidates);

  struct Row {
    double q, i, di;
  };
  std::vector<Row> rows;
  int columns = 0;
  for (auto line : candidates) {
    const auto fields = detail::split_fields(line, out.delimiter);
    std::vector<double> values;
    for (auto f : fields) {
      double v = 0.0;
      if (!detail::parse_number(f, v)) break;
      values.push_back(v);
    }
    // A leading number followed by text is a header such as "1 sample".
    if (values.size() < 2 || values.size() != fields.size()) continue;
    if (values.size() > 4) values.resize(4);
    const int n = static_cast<int>(values.size());
    if (columns == 0) columns = n;
    if (n != columns)
      throw Error(ErrorCode::InconsistentColumnCount,
                  "row has " + std::to_string(n) + " columns, expected " + std::to_string(columns));
    const bool finite = std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
    if (!finite) continue;
    if (columns >= 3 && !(values[2] > 0.0)) continue;
    rows.push_back({values[0], values[1], columns >= 3 ? values[2] : 0.0});
  }
  if (columns == 0) throw Error(ErrorCode::NoNumericRows, "no rows with at least two numeric columns");
  out.column_count = columns;
  if (columns == 4) out.warnings.push_back("dq resolution column ignored (resolution smearing not supported)");

  const std::size_t before = rows.size();
  rows.erase(std::remove_if(rows.begin(), rows.end(), [](const Row& r) { return !(r.q > 0.0); }),
             rows.end());
  if (rows.empty())
    throw Error(before == 0 ? ErrorCode::NoNumericRows : ErrorCode::NonPositiveQ,
                before == 0 ? "no finite data rows" : "all q values are <= 0");
  if (rows.size() != before)
    out.warnings.push_back(std::to_string(before - rows.size()) + " rows with q <= 0 dropped");

  out.data_rows = rows.size();
  out.skipped_lines = out.total_lines - out.data_rows;

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.q < b.q; });

  Dataset& d = out.dataset;
  std::vector<double> di;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    double sum_i = 0.0, sum_di2 = 0.0;
    while (j < rows.size() && rows[j].q == rows[i].q) {
      sum_i += rows[j].i;
      sum_di2 += rows[j].di * rows[j].di;
      ++j;
    }
    const double n = static_cast<double>(j - i);
    d.q.push_back(rows[i].q);
    d.intensity.push_back(sum_i / n);
    // quadrature sum of the errors divided by n: error of the mean
    di.push_back(std::sqrt(sum_di2) / n);
    i = j;
  }
  if (d.q.size() != rows.size())
    out.warnings.push_back(std::to_string(rows.size() - d.q.size()) + " duplicate q rows averaged");
  if (columns >= 3) d.d_intensity = std::move(di);
  d.source.kind = "file";
  d.source.filename = std::string(filename);
  d.validate();
  return out;
}

/// "# q I dI" header and 9 significant digits per value.
inline std::string save_ascii(const Dataset& d) {
  d.validate();
  std::string out = d.has_errors() ? "# q I dI\n" : "# q I\n";
  char buf[96];
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.has_errors())
      std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", d.q[i], d.intensity[i], (*d.d_intensity)[i]);
    else
      std::snprintf(buf, sizeof buf, "%.9g %.9g\n", d.q[i], d.intensity[i]);
    out += buf;
  }
  return out;
}

}  // namespace sasmate
