// structrates command-line front end.
//
//   structrates rate-experiment  --config exp.json --out results/
//   structrates margin-profile   --config profile.json --out results/
//   structrates simplex-inspect  --config simplex.json --out results/
//   structrates predict          --config predict.json --out results/
//
// Exit status: 0 on success, 2 for a malformed configuration, 1 when a
// contract is violated at run time.

#include "structrates/diagnostics.hpp"
#include "structrates/error.hpp"
#include "structrates/experiment.hpp"
#include "structrates/loss.hpp"
#include "structrates/synthetic.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace structrates;

namespace {

struct ConfigError {
  std::string message;
  std::size_t line = 0;  // 1-based, 0 when unknown
  std::size_t column = 0;
};

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
};

std::string format_double(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

// Best effort: points a semantic error at the first line mentioning the key
// quoted in its message.
ConfigError locate(const std::string& text, const std::string& message) {
  ConfigError error{message};
  static const std::regex quoted(R"re(['"]([A-Za-z_][A-Za-z0-9_]*)['"])re");
  for (auto it = std::sregex_iterator(message.begin(), message.end(), quoted); it != std::sregex_iterator(); ++it) {
    const auto pos = text.find('"' + (*it)[1].str() + '"');
    if (pos != std::string::npos) {
      std::tie(error.line, error.column) = line_column(text, pos);
      break;
    }
  }
  return error;
}

class Config {
public:
  explicit Config(const std::string& path) : path_(path) {
    std::ifstream in(path);
    if (!in) throw ConfigError{"cannot read config file"};
    std::ostringstream buffer;
    buffer << in.rdbuf();
    text_ = buffer.str();
    try {
      json_ = json::parse(text_);
    } catch (const json::parse_error& e) {
      ConfigError error{e.what()};
      std::tie(error.line, error.column) = line_column(text_, e.byte == 0 ? 0 : e.byte - 1);
      throw error;
    }
    if (!json_.is_object()) throw ConfigError{"top level must be a JSON object", 1, 1};
  }

  const json& root() const { return json_; }
  fs::path resolve(const std::string& relative) const {
    const fs::path p(relative);
    return p.is_absolute() ? p : fs::path(path_).parent_path() / p;
  }

  // Runs a parsing step, turning schema errors into located ConfigErrors.
  template <class F>
  auto parse(F&& step) const {
    try {
      return step();
    } catch (const ContractViolation& e) {
      throw locate(text_, e.what());
    } catch (const json::exception& e) {
      throw locate(text_, e.what());
    }
  }

private:
  std::string path_;
  std::string text_;
  json json_;
};

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    require(ok, "unknown key \"" + key + "\" in " + where);
  }
}

std::size_t resolve_workers(const Options& options) {
  if (options.workers) {
    if (*options.workers == 0) throw ConfigError{"--workers must be at least 1"};
    return *options.workers;
  }
  if (const char* env = std::getenv("STRUCTRATES_WORKERS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long value = std::strtoull(env, &end, 10);
    if (*end != '\0' || value == 0) throw ConfigError{std::string("STRUCTRATES_WORKERS must be a positive integer, got '") + env + "'"};
    return static_cast<std::size_t>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  std::ofstream out(dir / name);
  require(static_cast<bool>(out), "cannot write " + (dir / name).string());
  return out;
}

void write_json(const fs::path& dir, const std::string& name, const json& j) {
  auto out = open_output(dir, name);
  out << j.dump(2) << '\n';
}

FiniteLoss loss_from_config(const Config& config, const json& node) {
  if (node.is_string()) return load_loss(config.resolve(node.get<std::string>()));
  return loss_from_json(node);
}

std::vector<double> thresholds_from_json(const json& node, double max_margin) {
  if (node.is_array()) return node.get<std::vector<double>>();
  reject_unknown(node, {"min", "max", "points"}, "thresholds");
  const double lo = node.value("min", 1e-3);
  const double hi = node.value("max", max_margin);
  const std::size_t points = node.value("points", std::size_t{50});
  return log_thresholds(lo, hi, points);
}

FitWindow fit_window_from_json(const json& node) {
  reject_unknown(node, {"drop_fraction", "range"}, "fit_window");
  FitWindow window;
  window.drop_fraction = node.value("drop_fraction", window.drop_fraction);
  if (node.contains("range")) {
    const auto range = node.at("range").get<std::vector<double>>();
    require(range.size() == 2, "fit_window \"range\" must be [lo, hi]");
    window.range = std::make_pair(range[0], range[1]);
  }
  return window;
}

json fit_window_to_json(const FitWindow& window) {
  json j = {{"drop_fraction", window.drop_fraction}};
  if (window.range) j["range"] = {window.range->first, window.range->second};
  return j;
}

// ---------------------------------------------------------------- commands

int rate_experiment_command(const Options& options) {
  const Config file(options.config_path);
  auto config = file.parse([&] { return rate_config_from_json(file.root()); });
  if (options.seed) config.master_seed = *options.seed;
  const std::size_t workers = resolve_workers(options);

  std::printf("rate-experiment: %s, %zu sizes x %zu trials, %zu worker(s)\n",
              config.problem.to_json().dump().c_str(), config.n_grid.size(), config.trials, workers);
  const RateReport report = rate_experiment(config, workers);

  const fs::path out(options.out_dir);
  fs::create_directories(out);
  write_json(out, "report.json", report_to_json(report));
  auto trials = open_output(out, "trials.csv");
  write_trials_csv(trials, report);
  auto summary = open_output(out, "summary.csv");
  write_summary_csv(summary, report);

  std::printf("%10s %14s %14s %12s %6s\n", "n", "k/lambda", "mean", "stderr", "zeros");
  for (const auto& p : report.per_n) {
    std::printf("%10zu %14.6g %14.6e %12.4e %6zu\n", p.n, p.hyperparameter, p.mean, p.std_error, p.zero_count);
  }
  if (report.fit && report.theoretical_slope) {
    const bool pass = *report.slope_within_tolerance();
    std::printf("fitted %.2f vs theory %.3f (tolerance %.2f, n in [%zu, %zu]): %s\n", report.fit->slope,
                *report.theoretical_slope, config.slope_tolerance, report.fit->n_lo, report.fit->n_hi,
                pass ? "PASS" : "FAIL");
  } else if (report.fit) {
    std::printf("fitted %.2f (no theoretical slope for this configuration)\n", report.fit->slope);
  }
  if (!report.regime_note.empty()) std::printf("%s\n", report.regime_note.c_str());
  std::printf("wrote %s/{report.json,trials.csv,summary.csv}\n", out.string().c_str());
  return 0;
}

int margin_profile_command(const Options& options) {
  const Config file(options.config_path);
  const json& root = file.root();

  struct Settings {
    std::optional<SyntheticProblem> problem;
    std::optional<FiniteLoss> loss;
    std::vector<SignedMeasure> targets;
    std::string targets_path;
    MarginMeasure measure = MarginMeasure::frontier_distance;
    std::size_t eval_points = 100000;
    std::string sampling = "grid";
    std::uint64_t seed = 0;
    json thresholds = json::object();
    FitWindow window;
  };
  Settings s = file.parse([&] {
    reject_unknown(root, {"problem", "loss", "targets", "measure", "eval_points", "sampling", "seed", "thresholds",
                          "fit_window"},
                   "margin-profile config");
    Settings out;
    require(root.contains("problem") != root.contains("loss"),
            "margin-profile config needs exactly one of \"problem\" or \"loss\"");
    if (root.contains("problem")) {
      out.problem = SyntheticProblem::from_json(root.at("problem"));
      require(!root.contains("targets") && !root.contains("measure"),
              "\"targets\" and \"measure\" only apply with \"loss\"");
    } else {
      out.loss = loss_from_config(file, root.at("loss"));
      require(root.contains("targets"), "margin-profile with \"loss\" needs \"targets\"");
      out.targets_path = root.at("targets").get<std::string>();
      const std::string measure = root.value("measure", std::string("frontier_distance"));
      require(measure == "frontier_distance" || measure == "margin_gap",
              "\"measure\" must be frontier_distance or margin_gap");
      out.measure = measure == "margin_gap" ? MarginMeasure::margin_gap : MarginMeasure::frontier_distance;
    }
    out.eval_points = root.value("eval_points", out.eval_points);
    out.sampling = root.value("sampling", out.sampling);
    require(out.sampling == "grid" || out.sampling == "random", "\"sampling\" must be grid or random");
    out.seed = root.value("seed", out.seed);
    if (root.contains("thresholds")) out.thresholds = root.at("thresholds");
    if (root.contains("fit_window")) out.window = fit_window_from_json(root.at("fit_window"));
    return out;
  });
  if (options.seed) s.seed = *options.seed;

  std::vector<double> margins;
  json effective;
  if (s.problem) {
    std::vector<double> points;
    if (s.sampling == "grid") {
      points = s.problem->regular_grid(s.eval_points);
    } else {
      const SampleSet draw = s.problem->sample(s.eval_points, s.seed);
      points.assign(draw.inputs().data(), draw.inputs().data() + draw.size());
    }
    for (const double x : points) margins.push_back(s.problem->frontier_distance(x));
    effective = {{"problem", s.problem->to_json()}, {"eval_points", s.eval_points}, {"sampling", s.sampling},
                 {"seed", s.seed}};
  } else {
    const auto rows = [&] {
      std::ifstream in(file.resolve(s.targets_path));
      require(static_cast<bool>(in), "cannot read targets file " + s.targets_path);
      return read_points_csv(in);
    }();
    require(static_cast<std::size_t>(rows.cols()) == s.loss->num_observations(),
            "targets must have one column per y label");
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const SignedMeasure mu{Eigen::VectorXd(rows.row(i).transpose())};
      margins.push_back(s.measure == MarginMeasure::margin_gap ? margin_gap(*s.loss, mu)
                                                              : frontier_distance(*s.loss, mu));
    }
    effective = {{"loss", loss_to_json(*s.loss)}, {"targets", s.targets_path},
                 {"measure", s.measure == MarginMeasure::margin_gap ? "margin_gap" : "frontier_distance"}};
  }
  require(!margins.empty(), "no evaluation points");

  double largest = 0.0;
  for (const double m : margins) largest = std::max(largest, m);
  const auto thresholds = file.parse([&] {
    return s.thresholds.empty() ? default_thresholds(largest) : thresholds_from_json(s.thresholds, largest);
  });
  effective["thresholds"] = thresholds;
  effective["fit_window"] = fit_window_to_json(s.window);

  const MarginProfile profile = margin_profile(margins, thresholds);
  std::optional<AlphaFit> fit;
  std::string fit_note;
  try {
    fit = fit_alpha(profile, s.window);
  } catch (const ProfileDegenerate& e) {
    fit_note = e.what();
  }
  const auto t0 = check_no_density(profile);

  json report = profile_to_json(profile, fit, t0);
  report["config"] = effective;
  if (!fit_note.empty()) report["fit_note"] = fit_note;
  const fs::path out(options.out_dir);
  fs::create_directories(out);
  write_json(out, "profile.json", report);
  auto csv = open_output(out, "profile.csv");
  write_profile_csv(csv, profile);

  std::printf("margin-profile: %zu points, %zu thresholds\n", profile.sample_count, thresholds.size());
  if (fit) {
    std::printf("alpha_hat %.4f, c_alpha_hat %.4f, r^2 %.4f over t in [%.3g, %.3g]\n", fit->alpha_hat,
                fit->c_alpha_hat, fit->r_squared, fit->fit_range.first, fit->fit_range.second);
  } else {
    std::printf("no alpha fit: %s\n", fit_note.c_str());
  }
  if (t0) std::printf("no-density radius t0 >= %.4g\n", *t0);
  std::printf("wrote %s/{profile.json,profile.csv}\n", out.string().c_str());
  return 0;
}

int simplex_inspect_command(const Options& options) {
  const Config file(options.config_path);
  const json& root = file.root();
  struct Settings {
    FiniteLoss loss = FiniteLoss::three_class();
    std::size_t resolution = 12;
  };
  const Settings s = file.parse([&] {
    reject_unknown(root, {"loss", "resolution"}, "simplex-inspect config");
    Settings out;
    if (root.contains("loss")) out.loss = loss_from_config(file, root.at("loss"));
    out.resolution = root.value("resolution", out.resolution);
    require(out.resolution >= 1, "\"resolution\" must be at least 1");
    return out;
  });
  const FiniteLoss& loss = s.loss;
  const std::size_t m = loss.num_observations();

  // Enumerate compositions of `resolution` into m parts, lexicographically.
  double points = 1.0;
  for (std::size_t i = 1; i < m; ++i) points *= static_cast<double>(s.resolution + i) / static_cast<double>(i);
  require(points <= 2e6, "barycentric grid would have " + format_double(points) + " points; lower \"resolution\"");

  const fs::path out(options.out_dir);
  fs::create_directories(out);
  auto csv = open_output(out, "simplex.csv");
  for (const auto& y : loss.y_labels()) csv << "w_" << y << ',';
  csv << "label,gap,distance\n";

  std::vector<std::size_t> counts(loss.num_predictions(), 0);
  std::vector<std::size_t> parts(m, 0);
  parts[m - 1] = s.resolution;
  std::size_t total = 0;
  while (true) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) w[static_cast<Eigen::Index>(i)] = static_cast<double>(parts[i]) / static_cast<double>(s.resolution);
    const SignedMeasure mu{w};
    const std::size_t label = decode(loss, mu);
    ++counts[label];
    ++total;
    for (std::size_t i = 0; i < m; ++i) csv << format_double(w[static_cast<Eigen::Index>(i)]) << ',';
    csv << loss.z_labels()[label] << ',' << format_double(margin_gap(loss, mu)) << ','
        << format_double(frontier_distance(loss, mu)) << '\n';
    // Next composition: move one unit from the last part leftwards.
    if (m == 1) break;
    std::size_t i = m - 1;
    while (i > 0 && parts[i] == 0) --i;
    if (i == 0) break;
    const std::size_t tail = parts[i];
    parts[i] = 0;
    ++parts[i - 1];
    parts[m - 1] = tail - 1;
  }

  json regions = json::object();
  std::printf("simplex-inspect: %zu barycentric points (resolution %zu)\n", total, s.resolution);
  for (std::size_t z = 0; z < counts.size(); ++z) {
    regions[loss.z_labels()[z]] = counts[z];
    std::printf("  %-12s %8zu points\n", loss.z_labels()[z].c_str(), counts[z]);
  }
  const json report = {{"config", {{"loss", loss_to_json(loss)}, {"resolution", s.resolution}}},
                       {"points", total},
                       {"region_counts", regions},
                       {"c", 1.0 / loss.max_pair_distance()},
                       {"c_prime", 1.0 / loss.min_pair_distance()}};
  write_json(out, "report.json", report);
  std::printf("wrote %s/{report.json,simplex.csv}\n", out.string().c_str());
  return 0;
}

int predict_command(const Options& options) {
  const Config file(options.config_path);
  const json& root = file.root();
  struct Settings {
    FiniteLoss loss = FiniteLoss::binary();
    std::string train;
    std::string queries;
    EstimatorConfig estimator;
  };
  const Settings s = file.parse([&] {
    reject_unknown(root, {"loss", "train", "queries", "estimator"}, "predict config");
    for (const char* key : {"loss", "train", "queries", "estimator"}) {
      require(root.contains(key), std::string("predict config needs \"") + key + "\"");
    }
    return Settings{loss_from_config(file, root.at("loss")), root.at("train").get<std::string>(),
                    root.at("queries").get<std::string>(), estimator_from_json(root.at("estimator"))};
  });

  const SampleSet data = load_dataset(file.resolve(s.train), s.loss);
  std::ifstream query_file(file.resolve(s.queries));
  require(static_cast<bool>(query_file), "cannot read queries file " + s.queries);
  const RowMatrix queries = read_points_csv(query_file);
  const auto labels = predict_labels(s.estimator, data, s.loss, queries);

  const fs::path out(options.out_dir);
  fs::create_directories(out);
  auto csv = open_output(out, "predictions.csv");
  for (Eigen::Index j = 0; j < queries.cols(); ++j) csv << "x_" << j << ',';
  csv << "label\n";
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    for (Eigen::Index j = 0; j < queries.cols(); ++j) csv << format_double(queries(i, j)) << ',';
    csv << s.loss.z_labels()[labels[static_cast<std::size_t>(i)]] << '\n';
  }
  const json report = {{"config",
                        {{"loss", loss_to_json(s.loss)},
                         {"train", s.train},
                         {"queries", s.queries},
                         {"estimator", estimator_to_json(s.estimator)}}},
                       {"n", data.size()},
                       {"hyperparameter", resolve_hyperparameter(s.estimator, data.size())},
                       {"query_count", queries.rows()}};
  write_json(out, "report.json", report);
  std::printf("predict: %zu training points, %td queries, hyperparameter %.6g\n", data.size(), queries.rows(),
              resolve_hyperparameter(s.estimator, data.size()));
  std::printf("wrote %s/{report.json,predictions.csv}\n", out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convergence-rate experiments for plug-in structured prediction"};
  app.require_subcommand(1);
  Options options;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", options.config_path, "JSON configuration file")->required();
    sub->add_option("--out", options.out_dir, "output directory")->default_val(".");
    sub->add_option("--workers", options.workers, "worker threads (default: STRUCTRATES_WORKERS, then all cores)");
    sub->add_option("--seed", options.seed, "master seed, overrides the config");
    return sub;
  };
  auto* rate = add_common(app.add_subcommand("rate-experiment", "Monte-Carlo excess-risk rates against n"));
  auto* profile = add_common(app.add_subcommand("margin-profile", "margin CDF and fitted exponent"));
  auto* simplex = add_common(app.add_subcommand("simplex-inspect", "decision regions on a barycentric grid"));
  auto* predict = add_common(app.add_subcommand("predict", "fit an estimator and label query points"));
  CLI11_PARSE(app, argc, argv);

  try {
    if (rate->parsed()) return rate_experiment_command(options);
    if (profile->parsed()) return margin_profile_command(options);
    if (simplex->parsed()) return simplex_inspect_command(options);
    if (predict->parsed()) return predict_command(options);
  } catch (const ConfigError& e) {
    if (e.line > 0) {
      std::fprintf(stderr, "%s:%zu:%zu: error: %s\n", options.config_path.c_str(), e.line, e.column,
                   e.message.c_str());
    } else {
      std::fprintf(stderr, "%s: error: %s\n", options.config_path.c_str(), e.message.c_str());
    }
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
