#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace convexlab {

/// Shortest text that round-trips the double (17 significant digits).
std::string format_double(double v);

/// Header plus rows of already formatted cells.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  /// Throws std::invalid_argument if the width differs from the header.
  void add_row(std::vector<std::string> cells);
  std::size_t column(const std::string& name) const;
  /// Column values parsed as doubles.
  std::vector<double> numeric_column(const std::string& name) const;

  void write(std::ostream& out) const;
  void save(const std::string& path) const;
  static CsvTable read(std::istream& in);
  static CsvTable load(const std::string& path);

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Log-log line plot; non-positive points are skipped.
std::string loglog_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<PlotSeries>& series);
void save_text(const std::string& path, const std::string& text);

/// Slope of log(e) between consecutive levels: log(e[i-1]/e[i]) / log(h[i-1]/h[i]).
std::vector<double> observed_orders(const std::vector<double>& h, const std::vector<double>& e);

}  // namespace convexlab
