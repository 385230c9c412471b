#pragma once

#include "plasso/survival.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace plasso {

/// Numeric CSV with a required header row.
struct CsvTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  std::optional<std::size_t> find(std::string_view name) const;
  const std::vector<double>& column(std::string_view name) const;  // throws MissingColumn
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::string& path);

/// Columns `time`, `status`, optional `weight`, covariates prefixed `x_` and
/// modifiers prefixed `z_`, in header order.
SurvivalDataset dataset_from_table(const CsvTable& table);

/// Covariate/modifier matrices only, by name; used when predicting on new rows.
MatrixXd columns_by_name(const CsvTable& table, const std::vector<std::string>& names);

std::string format_double(double v);

}  // namespace plasso
