#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bpa/errors.hpp"

namespace bpa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class VarKind { Discrete, Continuous };

struct VariableSpec {
  std::string name;
  VarKind kind = VarKind::Continuous;
  std::vector<std::string> levels;  // discrete only; codes index this list
  int index = 0;

  bool is_discrete() const { return kind == VarKind::Discrete; }
  int level_count() const { return static_cast<int>(levels.size()); }
};

/// Column-typed sample matrix over mixed discrete/continuous variables.
/// Immutable after construction; shared concurrent reads are safe.
class MixedDataTable {
 public:
  using Column = std::variant<Vector, std::vector<int>>;

  MixedDataTable(std::vector<VariableSpec> specs, std::vector<Column> columns,
                 int dropped_rows = 0);

  int n_rows() const { return n_rows_; }
  int n_vars() const { return static_cast<int>(specs_.size()); }
  int dropped_rows() const { return dropped_rows_; }

  const std::vector<VariableSpec>& specs() const { return specs_; }
  const VariableSpec& spec(int j) const { return specs_.at(j); }
  bool is_discrete(int j) const { return spec(j).is_discrete(); }

  const Vector& continuous(int j) const;
  const std::vector<int>& codes(int j) const;

  /// Discrete codes as a real vector (used where a numeric embedding of a
  /// factor is required).
  Vector numeric_view(int j) const;

  int find(const std::string& name) const;          // -1 when absent
  int require(const std::string& name) const;       // throws UnknownVariable

 private:
  std::vector<VariableSpec> specs_;
  std::vector<Column> columns_;
  int n_rows_ = 0;
  int dropped_rows_ = 0;
};

/// Cross-tabulation of two discrete variables, with cached margins.
struct CellCounts {
  Eigen::MatrixXi counts;            // |D_u| x |D_v|
  Eigen::VectorXi row_margin;
  Eigen::VectorXi col_margin;
  int total = 0;
};

CellCounts cross_tabulate(const MixedDataTable& table, int u, int v);

/// Per-level count/mean/variance of a continuous variable within the cells
/// of a discrete one. Variances are maximum-likelihood (denominator n).
struct GroupStats {
  std::vector<int> n;
  std::vector<double> mean;
  std::vector<double> variance;
  double grand_mean = 0.0;
  double grand_variance = 0.0;  // s0, denominator N
  int total = 0;
  std::vector<int> empty_levels;       // observed nowhere
  std::vector<int> degenerate_levels;  // n_i == 1
};

GroupStats group_stats(const MixedDataTable& table, int u_discrete,
                       int v_continuous);

enum class NaPolicy { DropRow };

struct LoadReport {
  int dropped_rows = 0;
};

/// Loads an RFC-4180 CSV with a header row. Columns named in `schema` are
/// typed as given; the rest are inferred: all-numeric columns with more than
/// max(10, sqrt(n)) distinct values become Continuous, anything else becomes
/// Discrete with levels in order of first appearance. Rows with missing
/// cells ("", "NA", "N/A", "?") are dropped.
MixedDataTable load_csv(const std::string& path,
                        const std::vector<VariableSpec>& schema = {},
                        NaPolicy na = NaPolicy::DropRow,
                        LoadReport* report = nullptr);

void write_csv(const MixedDataTable& table, const std::string& path);

/// Schema file: JSON list of {"name", "kind", "levels"?}.
std::vector<VariableSpec> load_schema(const std::string& path);

}  // namespace bpa
