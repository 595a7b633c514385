#include "bpa/data_table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace bpa {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::MixedTypesInColumn: return "MixedTypesInColumn";
    case ErrorCode::DuplicateHeader: return "DuplicateHeader";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownLevel: return "UnknownLevel";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::NotDiscrete: return "NotDiscrete";
    case ErrorCode::NotContinuous: return "NotContinuous";
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::DegenerateCorrelation: return "DegenerateCorrelation";
    case ErrorCode::SameNode: return "SameNode";
    case ErrorCode::IsolatedTarget: return "IsolatedTarget";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::AllTied: return "AllTied";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::FoldTooSmall: return "FoldTooSmall";
    case ErrorCode::SingletonPathStep: return "SingletonPathStep";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

MixedDataTable::MixedDataTable(std::vector<VariableSpec> specs,
                               std::vector<Column> columns, int dropped_rows)
    : specs_(std::move(specs)),
      columns_(std::move(columns)),
      dropped_rows_(dropped_rows) {
  if (specs_.size() != columns_.size()) {
    throw Error(ErrorCode::InvalidArgument, "specs/columns size mismatch");
  }
  if (specs_.empty()) throw Error(ErrorCode::EmptyTable, "no columns");

  std::set<std::string> names;
  for (size_t j = 0; j < specs_.size(); ++j) {
    specs_[j].index = static_cast<int>(j);
    if (!names.insert(specs_[j].name).second) {
      throw Error(ErrorCode::DuplicateHeader,
                  "duplicate variable name '" + specs_[j].name + "'");
    }
    int len;
    if (std::holds_alternative<Vector>(columns_[j])) {
      if (specs_[j].is_discrete()) {
        throw Error(ErrorCode::InvalidArgument,
                    "discrete spec with continuous storage: " + specs_[j].name);
      }
      const Vector& v = std::get<Vector>(columns_[j]);
      len = static_cast<int>(v.size());
      for (int i = 0; i < len; ++i) {
        if (!std::isfinite(v[i])) {
          throw Error(ErrorCode::ParseError,
                      "non-finite value in column '" + specs_[j].name + "'");
        }
      }
    } else {
      if (!specs_[j].is_discrete()) {
        throw Error(ErrorCode::InvalidArgument,
                    "continuous spec with coded storage: " + specs_[j].name);
      }
      if (specs_[j].levels.empty()) {
        throw Error(ErrorCode::InvalidArgument,
                    "discrete variable without levels: " + specs_[j].name);
      }
      std::set<std::string> lv(specs_[j].levels.begin(),
                               specs_[j].levels.end());
      if (lv.size() != specs_[j].levels.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "duplicate level labels in " + specs_[j].name);
      }
      const auto& codes = std::get<std::vector<int>>(columns_[j]);
      len = static_cast<int>(codes.size());
      for (int c : codes) {
        if (c < 0 || c >= specs_[j].level_count()) {
          throw Error(ErrorCode::UnknownLevel,
                      "code out of range in column '" + specs_[j].name + "'");
        }
      }
    }
    if (j == 0) {
      n_rows_ = len;
    } else if (len != n_rows_) {
      throw Error(ErrorCode::InvalidArgument, "ragged columns");
    }
  }
  if (n_rows_ < 2) {
    throw Error(ErrorCode::EmptyTable, "fewer than 2 usable rows");
  }
}

const Vector& MixedDataTable::continuous(int j) const {
  if (is_discrete(j)) {
    throw Error(ErrorCode::NotContinuous, spec(j).name);
  }
  return std::get<Vector>(columns_.at(j));
}

const std::vector<int>& MixedDataTable::codes(int j) const {
  if (!is_discrete(j)) {
    throw Error(ErrorCode::NotDiscrete, spec(j).name);
  }
  return std::get<std::vector<int>>(columns_.at(j));
}

Vector MixedDataTable::numeric_view(int j) const {
  if (!is_discrete(j)) return continuous(j);
  const auto& c = codes(j);
  Vector v(c.size());
  for (size_t i = 0; i < c.size(); ++i) v[i] = static_cast<double>(c[i]);
  return v;
}

int MixedDataTable::find(const std::string& name) const {
  for (size_t j = 0; j < specs_.size(); ++j) {
    if (specs_[j].name == name) return static_cast<int>(j);
  }
  return -1;
}

int MixedDataTable::require(const std::string& name) const {
  int j = find(name);
  if (j < 0) {
    throw Error(ErrorCode::UnknownVariable, "no variable named '" + name + "'");
  }
  return j;
}

CellCounts cross_tabulate(const MixedDataTable& table, int u, int v) {
  const auto& cu = table.codes(u);
  const auto& cv = table.codes(v);
  int lu = table.spec(u).level_count();
  int lv = table.spec(v).level_count();
  CellCounts out;
  out.counts = Eigen::MatrixXi::Zero(lu, lv);
  for (int i = 0; i < table.n_rows(); ++i) out.counts(cu[i], cv[i]) += 1;
  out.row_margin = out.counts.rowwise().sum();
  out.col_margin = out.counts.colwise().sum().transpose();
  out.total = table.n_rows();
  return out;
}

GroupStats group_stats(const MixedDataTable& table, int u_discrete,
                       int v_continuous) {
  const auto& codes = table.codes(u_discrete);
  const Vector& x = table.continuous(v_continuous);
  int levels = table.spec(u_discrete).level_count();
  int n = table.n_rows();

  GroupStats out;
  out.n.assign(levels, 0);
  out.mean.assign(levels, 0.0);
  out.variance.assign(levels, 0.0);
  out.total = n;
  out.grand_mean = x.mean();
  out.grand_variance = (x.array() - out.grand_mean).square().sum() / n;

  for (int i = 0; i < n; ++i) {
    out.n[codes[i]] += 1;
    out.mean[codes[i]] += x[i];
  }
  for (int l = 0; l < levels; ++l) {
    if (out.n[l] > 0) out.mean[l] /= out.n[l];
  }
  for (int i = 0; i < n; ++i) {
    double d = x[i] - out.mean[codes[i]];
    out.variance[codes[i]] += d * d;
  }
  for (int l = 0; l < levels; ++l) {
    if (out.n[l] == 0) {
      out.empty_levels.push_back(l);
    } else {
      out.variance[l] /= out.n[l];
      if (out.n[l] == 1) out.degenerate_levels.push_back(l);
    }
  }
  return out;
}

namespace {

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "N/A" || cell == "?";
}

// RFC-4180 record reader; handles quoted fields, doubled quotes, CRLF, and
// embedded newlines inside quotes. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string cell;
  bool in_quotes = false;
  bool any = false;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          cell.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(cell);
      cell.clear();
    } else if (c == '\r') {
      // swallow; newline handled next
    } else if (c == '\n') {
      fields.push_back(cell);
      return true;
    } else {
      cell.push_back(c);
    }
  }
  if (in_quotes) throw Error(ErrorCode::ParseError, "unterminated quote");
  if (!any) return false;
  fields.push_back(cell);
  return true;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t') ++end;
  return *end == '\0';
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace

MixedDataTable load_csv(const std::string& path,
                        const std::vector<VariableSpec>& schema, NaPolicy,
                        LoadReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");

  std::vector<std::string> header;
  if (!read_record(in, header) || header.empty()) {
    throw Error(ErrorCode::EmptyTable, "missing header row");
  }
  for (auto& h : header) h = trim(h);
  {
    std::set<std::string> seen;
    for (const auto& h : header) {
      if (!seen.insert(h).second) {
        throw Error(ErrorCode::DuplicateHeader, "'" + h + "'");
      }
    }
  }
  const size_t p = header.size();

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> rec;
  int dropped = 0;
  size_t line = 1;
  while (read_record(in, rec)) {
    ++line;
    if (rec.size() == 1 && trim(rec[0]).empty()) continue;  // blank line
    if (rec.size() != p) {
      throw Error(ErrorCode::ParseError,
                  "row " + std::to_string(line) + " has " +
                      std::to_string(rec.size()) + " cells, expected " +
                      std::to_string(p));
    }
    bool missing = false;
    for (auto& c : rec) {
      c = trim(c);
      if (is_missing(c)) missing = true;
    }
    if (missing) {
      ++dropped;
      continue;
    }
    rows.push_back(rec);
  }
  if (report) report->dropped_rows = dropped;
  const int n = static_cast<int>(rows.size());
  if (n < 2) throw Error(ErrorCode::EmptyTable, "fewer than 2 usable rows");

  std::map<std::string, const VariableSpec*> schema_by_name;
  for (const auto& s : schema) schema_by_name[s.name] = &s;

  std::vector<VariableSpec> specs(p);
  std::vector<MixedDataTable::Column> columns(p);
  const double distinct_threshold = std::max(10.0, std::sqrt(double(n)));

  for (size_t j = 0; j < p; ++j) {
    VariableSpec spec;
    spec.name = header[j];
    const VariableSpec* given = nullptr;
    if (auto it = schema_by_name.find(spec.name); it != schema_by_name.end()) {
      given = it->second;
    }

    std::vector<double> numeric(n);
    int n_numeric = 0;
    std::set<std::string> distinct;
    for (int i = 0; i < n; ++i) {
      double v;
      if (parse_double(rows[i][j], v) && std::isfinite(v)) {
        numeric[i] = v;
        ++n_numeric;
      }
      distinct.insert(rows[i][j]);
    }

    VarKind kind;
    if (given) {
      kind = given->kind;
    } else if (n_numeric == n) {
      kind = distinct.size() > distinct_threshold ? VarKind::Continuous
                                                  : VarKind::Discrete;
    } else if (n_numeric == 0) {
      kind = VarKind::Discrete;
    } else {
      throw Error(ErrorCode::MixedTypesInColumn,
                  "column '" + spec.name + "' mixes numeric and non-numeric");
    }

    if (kind == VarKind::Continuous) {
      if (n_numeric != n) {
        throw Error(ErrorCode::MixedTypesInColumn,
                    "column '" + spec.name +
                        "' declared continuous but holds non-numeric cells");
      }
      spec.kind = VarKind::Continuous;
      Vector col(n);
      for (int i = 0; i < n; ++i) col[i] = numeric[i];
      columns[j] = std::move(col);
    } else {
      spec.kind = VarKind::Discrete;
      std::map<std::string, int> code_of;
      if (given && !given->levels.empty()) {
        spec.levels = given->levels;
        for (size_t l = 0; l < spec.levels.size(); ++l) {
          code_of[spec.levels[l]] = static_cast<int>(l);
        }
      }
      std::vector<int> col(n);
      for (int i = 0; i < n; ++i) {
        const std::string& cell = rows[i][j];
        auto it = code_of.find(cell);
        if (it == code_of.end()) {
          if (given && !given->levels.empty()) {
            throw Error(ErrorCode::UnknownLevel,
                        "'" + cell + "' not a level of " + spec.name);
          }
          int code = static_cast<int>(spec.levels.size());
          spec.levels.push_back(cell);
          it = code_of.emplace(cell, code).first;
        }
        col[i] = it->second;
      }
      columns[j] = std::move(col);
    }
    specs[j] = std::move(spec);
  }

  return MixedDataTable(std::move(specs), std::move(columns), dropped);
}

namespace {

// Quote only when RFC-4180 requires it.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_csv(const MixedDataTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write '" + path + "'");
  for (int j = 0; j < table.n_vars(); ++j) {
    if (j) out << ',';
    out << csv_field(table.spec(j).name);
  }
  out << '\n';
  for (int i = 0; i < table.n_rows(); ++i) {
    for (int j = 0; j < table.n_vars(); ++j) {
      if (j) out << ',';
      if (table.is_discrete(j)) {
        out << csv_field(table.spec(j).levels[table.codes(j)[i]]);
      } else {
        out << format_real(table.continuous(j)[i]);
      }
    }
    out << '\n';
  }
}

std::vector<VariableSpec> load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("schema: ") + e.what());
  }
  if (!doc.is_array()) {
    throw Error(ErrorCode::ParseError, "schema must be a JSON list");
  }
  std::vector<VariableSpec> out;
  for (const auto& item : doc) {
    VariableSpec s;
    s.name = item.at("name").get<std::string>();
    std::string kind = item.at("kind").get<std::string>();
    if (kind == "discrete") {
      s.kind = VarKind::Discrete;
    } else if (kind == "continuous") {
      s.kind = VarKind::Continuous;
    } else {
      throw Error(ErrorCode::ParseError, "schema kind must be discrete|continuous");
    }
    if (item.contains("levels")) {
      for (const auto& l : item["levels"]) {
        s.levels.push_back(l.get<std::string>());
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace bpa
