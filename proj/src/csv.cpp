#include "plasso/csv.hpp"

#include "plasso/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace plasso {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view cell, std::size_t line_no) {
  if (cell == "NA" || cell == "nan" || cell == "NaN") return std::nan("");
  double v = 0;
  const auto* first = cell.data();
  if (!cell.empty() && cell.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty())
    throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": cannot parse '" + std::string(cell) + "'");
  return v;
}

}  // namespace

std::optional<std::size_t> CsvTable::find(std::string_view name) const {
  for (std::size_t c = 0; c < names.size(); ++c)
    if (names[c] == name) return c;
  return std::nullopt;
}

const std::vector<double>& CsvTable::column(std::string_view name) const {
  const auto c = find(name);
  if (!c) throw Error(Errc::MissingColumn, "missing column '" + std::string(name) + "'");
  return columns[*c];
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t line_no = 0;
  bool header = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    const auto cells = split(line);
    if (header) {
      if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
      for (auto c : split(line)) table.names.emplace_back(c);
      table.columns.resize(table.names.size());
      header = false;
      continue;
    }
    if (cells.size() != table.names.size())
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(table.names.size()) + " fields, got " +
                                        std::to_string(cells.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) table.columns[c].push_back(parse_number(cells[c], line_no));
  }
  if (header) throw Error(Errc::ParseError, "empty CSV input (a header row is required)");
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

SurvivalDataset dataset_from_table(const CsvTable& table) {
  SurvivalDataset data;
  const auto n = static_cast<Index>(table.rows());
  const auto& time = table.column("time");
  const auto& status = table.column("status");
  data.time = Eigen::Map<const VectorXd>(time.data(), n);
  data.status.resize(n);
  for (Index j = 0; j < n; ++j) {
    const double s = status[static_cast<std::size_t>(j)];
    if (s != 0.0 && s != 1.0)
      throw Error(Errc::InvalidArgument, "status must be 0 or 1 (row " + std::to_string(j) + ")");
    data.status(j) = static_cast<int>(s);
  }
  if (const auto w = table.find("weight"))
    data.weight = Eigen::Map<const VectorXd>(table.columns[*w].data(), n);
  else
    data.weight = VectorXd::Ones(n);
  for (const auto& name : table.names) {
    if (name.rfind("x_", 0) == 0) data.x_names.push_back(name);
    if (name.rfind("z_", 0) == 0) data.z_names.push_back(name);
  }
  data.x = columns_by_name(table, data.x_names);
  data.z = columns_by_name(table, data.z_names);
  return data;
}

MatrixXd columns_by_name(const CsvTable& table, const std::vector<std::string>& names) {
  const auto n = static_cast<Index>(table.rows());
  MatrixXd m(n, static_cast<Index>(names.size()));
  for (std::size_t c = 0; c < names.size(); ++c)
    m.col(static_cast<Index>(c)) = Eigen::Map<const VectorXd>(table.column(names[c]).data(), n);
  return m;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

}  // namespace plasso
