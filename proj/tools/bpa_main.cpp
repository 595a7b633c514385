#include <CLI11.hpp>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpa/baselines.hpp"
#include "bpa/parallel.hpp"
#include "bpa/selection.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw bpa::Error(bpa::ErrorCode::ParseError, "cannot open " + path);
  uint64_t h = 1469598103934665603ull;
  char buf[8192];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)v);
  return buf;
}

// Honors SOURCE_DATE_EPOCH so reruns can be byte-identical.
std::string timestamp_utc() {
  std::time_t t;
  if (const char* e = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(e, nullptr, 10));
  } else {
    t = std::time(nullptr);
  }
  char buf[32];
  std::tm tm_utc;
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

struct ManifestBuilder {
  nlohmann::ordered_json doc;

  ManifestBuilder(const std::string& command, const std::string& data_path,
                  uint64_t seed) {
    doc["command"] = command;
    doc["tool_version"] = kVersion;
    doc["input"] = {{"path", data_path},
                    {"digest_fnv1a64", hex64(fnv1a64_file(data_path))}};
    doc["seed"] = seed;
    doc["timestamp_utc"] = timestamp_utc();
    doc["config"] = nlohmann::ordered_json::object();
    doc["outputs"] = nlohmann::ordered_json::array();
  }

  void write(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    out << doc.dump(2) << "\n";
  }
};

bpa::MixedDataTable load_table(const std::string& data,
                               const std::string& schema) {
  std::vector<bpa::VariableSpec> specs;
  if (!schema.empty()) specs = bpa::load_schema(schema);
  return bpa::load_csv(data, specs);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw bpa::Error(bpa::ErrorCode::ParseError, "cannot write " + path);
  }
  out << text;
}

std::string strip_ext(const std::string& path) {
  size_t slash = path.find_last_of('/');
  size_t dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path;
  return path.substr(0, dot);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forest-based feature selection for mixed data"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  unsigned threads = 0;
  app.add_option("--threads", threads, "cap worker threads (0 = all cores)");

  std::string data, schema;
  uint64_t seed = 0;

  // ---- forest ----
  auto* cmd_forest = app.add_subcommand("forest", "build the penalized-MI forest");
  std::string criterion = "bic", variance = "hom";
  std::string out_dot, out_json, out_scores;
  cmd_forest->add_option("--data", data, "input CSV")->required();
  cmd_forest->add_option("--schema", schema, "JSON column schema");
  cmd_forest->add_option("--criterion", criterion, "bic|aic");
  cmd_forest->add_option("--variance", variance, "hom|het");
  cmd_forest->add_option("--out-dot", out_dot, "DOT output path");
  cmd_forest->add_option("--out-json", out_json, "JSON output path")->required();
  cmd_forest->add_option("--out-scores", out_scores, "edge-score CSV path");
  cmd_forest->add_option("--seed", seed, "RNG seed");

  // ---- select ----
  auto* cmd_select = app.add_subcommand("select", "run the path-step selection");
  std::string target, method = "ec", out_report;
  double alpha = 0.05;
  int folds = 10;
  int kraskov_k = 3, permutations = 99;
  cmd_select->add_option("--data", data, "input CSV")->required();
  cmd_select->add_option("--schema", schema, "JSON column schema");
  cmd_select->add_option("--target", target, "variable of interest")->required();
  cmd_select->add_option("--method", method, "ec|r2");
  cmd_select->add_option("--criterion", criterion, "bic|aic");
  cmd_select->add_option("--variance", variance, "hom|het");
  cmd_select->add_option("--alpha", alpha, "significance level");
  cmd_select->add_option("--folds", folds, "CV folds (r2 method)");
  cmd_select->add_option("--kraskov-k", kraskov_k, "kNN order (ec method)");
  cmd_select->add_option("--permutations", permutations,
                         "independence-test permutations");
  cmd_select->add_option("--seed", seed, "RNG seed");
  cmd_select->add_option("--out", out_report, "report JSON path")->required();

  // ---- compare ----
  auto* cmd_compare = app.add_subcommand("compare", "baseline comparison");
  std::string baseline = "enet", out_prefix, compare_method = "auto";
  int repeats = 100, varrank_m = 0;
  cmd_compare->add_option("--data", data, "input CSV")->required();
  cmd_compare->add_option("--schema", schema, "JSON column schema");
  cmd_compare->add_option("--target", target, "variable of interest")->required();
  cmd_compare->add_option("--baseline", baseline, "enet|varrank");
  cmd_compare->add_option("--method", compare_method,
                          "ec|r2 (selection method; default fits the baseline)");
  cmd_compare->add_option("--criterion", criterion, "bic|aic");
  cmd_compare->add_option("--repeats", repeats, "random splits (enet)");
  cmd_compare->add_option("--picks", varrank_m,
                          "ranking length (varrank; 0 = all)");
  cmd_compare->add_option("--seed", seed, "RNG seed");
  cmd_compare->add_option("--out-prefix", out_prefix, "output path prefix")
      ->required();

  // ---- density ----
  auto* cmd_density = app.add_subcommand("density", "conditional density curves");
  std::string conditioners_arg, out_curves;
  bool emit = false;
  cmd_density->add_option("--data", data, "input CSV")->required();
  cmd_density->add_option("--schema", schema, "JSON column schema");
  cmd_density->add_option("--target", target, "variable of interest")->required();
  cmd_density->add_option("--conditioners", conditioners_arg,
                          "comma-separated variable names")->required();
  cmd_density->add_flag("--emit", emit, "write the curve CSV");
  cmd_density->add_option("--out", out_curves, "curve CSV path")->required();
  cmd_density->add_option("--seed", seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 64;  // usage errors
  }

  bpa::set_max_threads(threads);

  auto parse_criterion = [&]() {
    if (criterion == "bic") return bpa::Criterion::BIC;
    if (criterion == "aic") return bpa::Criterion::AIC;
    throw bpa::Error(bpa::ErrorCode::InvalidArgument,
                     "--criterion must be bic or aic");
  };
  auto parse_variance = [&]() {
    if (variance == "hom") return bpa::VarianceMode::Homogeneous;
    if (variance == "het") return bpa::VarianceMode::Heterogeneous;
    throw bpa::Error(bpa::ErrorCode::InvalidArgument,
                     "--variance must be hom or het");
  };

  try {
    if (*cmd_forest) {
      auto table = load_table(data, schema);
      auto scores = bpa::all_pairwise_scores(table, parse_variance());
      std::vector<bpa::VarKind> kinds;
      std::vector<std::string> names;
      for (const auto& s : table.specs()) {
        kinds.push_back(s.kind);
        names.push_back(s.name);
      }
      auto forest = bpa::build_forest(scores, parse_criterion(), kinds);

      ManifestBuilder manifest("forest", data, seed);
      manifest.doc["config"] = {{"criterion", criterion},
                                {"variance", variance},
                                {"schema", schema}};
      write_text(out_json, bpa::forest_to_json(forest, names));
      manifest.doc["outputs"].push_back(out_json);
      if (!out_dot.empty()) {
        write_text(out_dot, bpa::export_dot(forest, names));
        manifest.doc["outputs"].push_back(out_dot);
      }
      if (!out_scores.empty()) {
        bpa::write_scores_csv(scores, table, out_scores);
        manifest.doc["outputs"].push_back(out_scores);
      }
      manifest.write(out_json + ".manifest.json");
      return 0;
    }

    if (*cmd_select) {
      auto table = load_table(data, schema);
      int target_idx = table.require(target);

      bpa::BpaConfig cfg;
      cfg.method = method == "r2" ? bpa::Method::R2 : bpa::Method::EC;
      if (method != "r2" && method != "ec") {
        throw bpa::Error(bpa::ErrorCode::InvalidArgument,
                         "--method must be ec or r2");
      }
      cfg.criterion = parse_criterion();
      cfg.variance = parse_variance();
      cfg.cv_folds = folds;
      cfg.alpha = alpha;
      cfg.seed = seed;
      cfg.kraskov.k_neighbors = kraskov_k;
      cfg.kraskov.permutations = permutations;
      cfg.kraskov.alpha = alpha;

      auto report = bpa::run_bpa(table, target_idx, cfg);

      ManifestBuilder manifest("select", data, seed);
      manifest.doc["config"] = {{"target", target},   {"method", method},
                                {"criterion", criterion}, {"variance", variance},
                                {"alpha", alpha},     {"folds", folds},
                                {"kraskov_k", kraskov_k},
                                {"permutations", permutations},
                                {"schema", schema}};
      write_text(out_report, bpa::report_to_json(report, table));
      manifest.doc["outputs"].push_back(out_report);

      std::string base = strip_ext(out_report);
      bpa::write_profile_csv(report, base + ".profile.csv");
      manifest.doc["outputs"].push_back(base + ".profile.csv");

      if (cfg.method == bpa::Method::EC && !report.m_wf.empty()) {
        bpa::DensityCvConfig cv;
        cv.seed = bpa::mix_seed(seed, 77);
        auto model = bpa::ConditionalDensityModel::fit(table, target_idx,
                                                       report.m_wf, cv);
        auto curve = bpa::density_curve(model, table, target_idx);
        bpa::write_density_csv(curve, base + ".density.csv");
        manifest.doc["outputs"].push_back(base + ".density.csv");
      }
      manifest.write(out_report + ".manifest.json");
      return report.isolated_target ? 2 : 0;
    }

    if (*cmd_compare) {
      auto table = load_table(data, schema);
      int target_idx = table.require(target);

      if (compare_method == "auto") {
        compare_method = baseline == "varrank" ? "ec" : "r2";
      }
      ManifestBuilder manifest("compare", data, seed);
      manifest.doc["config"] = {{"target", target},
                                {"baseline", baseline},
                                {"method", compare_method},
                                {"criterion", criterion},
                                {"repeats", repeats},
                                {"schema", schema}};

      bpa::BpaConfig cfg;
      cfg.method =
          compare_method == "ec" ? bpa::Method::EC : bpa::Method::R2;
      cfg.criterion = parse_criterion();
      cfg.seed = seed;
      auto report = bpa::run_bpa(table, target_idx, cfg);
      if (report.isolated_target) {
        std::cerr << "target is isolated; no selection to compare\n";
        return 2;
      }

      nlohmann::ordered_json summary;
      summary["target"] = target;
      summary["selected"] = nlohmann::ordered_json::array();
      for (int j : report.m_wf) summary["selected"].push_back(table.spec(j).name);

      if (baseline == "enet") {
        bpa::CompareConfig cc;
        cc.repeats = repeats;
        cc.seed = seed;
        auto result = bpa::compare_predictions(table, target_idx, report.m_wf,
                                               cc);
        bpa::write_compare_csv(result, out_prefix + ".csv");
        manifest.doc["outputs"].push_back(out_prefix + ".csv");
        summary["repeats"] = repeats;
        summary["bpa_wins"] = result.bpa_wins;
        summary["median_mse_bpa"] = result.median_mse_bpa;
        summary["median_mse_enet"] = result.median_mse_enet;
      } else if (baseline == "varrank") {
        int m = varrank_m > 0 ? varrank_m : table.n_vars() - 1;
        auto ranking = bpa::varrank_select(table, target_idx, m,
                                           bpa::VarrankScheme::MIQ);
        bpa::write_varrank_csv(ranking, table, out_prefix + ".csv");
        manifest.doc["outputs"].push_back(out_prefix + ".csv");
        summary["ranking"] = nlohmann::ordered_json::array();
        for (int j : ranking.selected) {
          summary["ranking"].push_back(table.spec(j).name);
        }
      } else {
        throw bpa::Error(bpa::ErrorCode::InvalidArgument,
                         "--baseline must be enet or varrank");
      }

      write_text(out_prefix + ".summary.json", summary.dump(2) + "\n");
      manifest.doc["outputs"].push_back(out_prefix + ".summary.json");
      manifest.write(out_prefix + ".manifest.json");
      return 0;
    }

    if (*cmd_density) {
      auto table = load_table(data, schema);
      int target_idx = table.require(target);
      std::vector<int> conditioners;
      std::stringstream ss(conditioners_arg);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) conditioners.push_back(table.require(item));
      }
      bpa::DensityCvConfig cv;
      cv.seed = seed;
      auto model = bpa::ConditionalDensityModel::fit(table, target_idx,
                                                     conditioners, cv);
      auto curve = bpa::density_curve(model, table, target_idx);
      ManifestBuilder manifest("density", data, seed);
      manifest.doc["config"] = {{"target", target},
                                {"conditioners", conditioners_arg},
                                {"schema", schema}};
      bpa::write_density_csv(curve, out_curves);
      manifest.doc["outputs"].push_back(out_curves);
      manifest.write(out_curves + ".manifest.json");
      return 0;
    }
  } catch (const bpa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == bpa::ErrorCode::IsolatedTarget ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
