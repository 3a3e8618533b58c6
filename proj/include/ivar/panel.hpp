#ifndef IVAR_PANEL_HPP
#define IVAR_PANEL_HPP

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ivar/linalg.hpp"

namespace ivar {

/// T x n observation matrix with series labels. Rows before `t0` are
/// unusable (e.g. the warm-up of a temporal aggregate).
struct Panel {
  Mat values;
  std::vector<std::string> names;
  Index t0 = 0;

  Panel() = default;
  explicit Panel(Mat v, std::vector<std::string> labels = {}, Index first_usable = 0)
      : values(std::move(v)), names(std::move(labels)), t0(first_usable) {
    if (names.empty()) {
      for (Index j = 0; j < values.cols(); ++j) names.push_back("y" + std::to_string(j + 1));
    }
    if (static_cast<Index>(names.size()) != values.cols())
      throw InvalidInput("Panel: number of names does not match number of columns");
    if (!values.allFinite()) throw InvalidInput("Panel: all entries must be finite");
  }

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  Panel demeaned() const {
    Mat c = values.rowwise() - values.colwise().mean();
    return Panel(std::move(c), names, t0);
  }

  /// First differences; row i holds Y_{i+1} - Y_i.
  Panel differenced() const {
    if (rows() < 2) throw InvalidInput("Panel: need at least two rows to difference");
    Mat d = values.bottomRows(rows() - 1) - values.topRows(rows() - 1);
    return Panel(std::move(d), names, t0 > 0 ? t0 - 1 : 0);
  }

  Panel head(Index t) const {
    if (t < 1 || t > rows()) throw InvalidInput("Panel::head: bad row count");
    return Panel(values.topRows(t), names, std::min(t0, t));
  }
};

namespace io {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Shortest text that round-trips the double exactly (at most 17 digits).
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

/// Header row of series names, then one row per time point.
inline Panel parse_csv(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(source + ": empty file");
  std::vector<std::string> names;
  for (auto f : detail::split(line)) names.emplace_back(f);
  const size_t n = names.size();
  std::vector<double> data;
  Index rows = 0;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line);
    if (fields.size() != n)
      throw InvalidInput(source + ": row " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                         " fields, expected " + std::to_string(n));
    for (size_t j = 0; j < n; ++j) {
      double v = 0.0;
      const auto f = fields[j];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
        throw InvalidInput(source + ": cannot parse value at row " + std::to_string(lineno) + ", column " +
                           std::to_string(j + 1) + " ('" + std::string(f) + "')");
      data.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw InvalidInput(source + ": no data rows");
  Mat values(rows, static_cast<Index>(n));
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < static_cast<Index>(n); ++j) values(i, j) = data[static_cast<size_t>(i) * n + static_cast<size_t>(j)];
  return Panel(std::move(values), std::move(names));
}

inline Panel read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return parse_csv(in, path);
}

inline void write_matrix_csv(std::ostream& out, const Mat& values, const std::vector<std::string>& header) {
  for (size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const Panel& p) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  write_matrix_csv(out, p.values, p.names);
}

}  // namespace io
}  // namespace ivar

#endif  // IVAR_PANEL_HPP
