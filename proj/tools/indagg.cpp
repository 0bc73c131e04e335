// Command-line front end: simulate -> featurize -> rank -> train/explain/eval/curves,
// or everything at once with `reproduce`.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "indagg/evaluation.hpp"
#include "indagg/grid.hpp"
#include "indagg/io.hpp"
#include "indagg/reproduce.hpp"
#include "indagg/selection.hpp"
#include "indagg/signalgen.hpp"
#include "indagg/svg.hpp"

namespace fs = std::filesystem;
using namespace indagg;
using nlohmann::json;

namespace {

std::string default_out_dir() {
  if (const char* env = std::getenv("INDAGG_OUT_DIR"); env && *env) return env;
  return ".";
}

struct Options {
  std::string out = default_out_dir();
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string preset;
  double scale = 1.0;
  std::string signals;
  std::string grid = "AB";
  std::string matrix;
  std::string ranked;
  std::string model_kind;
  std::string model_path;
  std::string k;
  std::size_t train_size = 0;
  int trees = 500;
  int curve_trees = 200;
  int mtry = 0;
  int min_leaf = 1;
  double epsilon = 1.0;
  bool svg = false;
};

std::string prepare_output(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  return (fs::path(o.out) / name).string();
}

/// `<file>.manifest.json` recording what produced `file`.
void write_manifest(const std::string& file, const std::string& command, json args) {
  json m = {{"tool", "indagg"}, {"version", std::string(kToolVersion)}, {"command", command},
            {"output", fs::path(file).filename().string()}, {"args", std::move(args)}};
  io::write_json_file(file + ".manifest.json", m);
}

/// "9" -> {9}; "1:100" -> {1..100}.
std::vector<std::size_t> parse_k(const std::string& text) {
  auto to_size = [&](const std::string& s) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || v < 1) throw InputError("--k must be a positive integer or a range a:b, got " + text);
    return static_cast<std::size_t>(v);
  };
  const auto colon = text.find(':');
  if (colon == std::string::npos) return {to_size(text)};
  const auto lo = to_size(text.substr(0, colon));
  const auto hi = to_size(text.substr(colon + 1));
  if (hi < lo) throw InputError("--k range is empty: " + text);
  std::vector<std::size_t> ks;
  for (auto k = lo; k <= hi; ++k) ks.push_back(k);
  return ks;
}

IndicatorMatrix load_matrix(const std::string& path) {
  auto is = io::open_in(path);
  return io::read_matrix_csv(is);
}

RankedList load_ranked(const std::string& path, std::size_t p) {
  auto is = io::open_in(path);
  auto r = io::read_ranked_csv(is);
  for (auto c : r.order)
    if (c >= p) throw InputError(path + ": column index " + std::to_string(c) + " outside the matrix");
  return r;
}

GridConfig load_grid(const std::string& name_or_path) {
  if (name_or_path == "AB" || name_or_path == "C" || name_or_path == "Cm") return grid_preset(name_or_path);
  if (!fs::exists(name_or_path)) throw InputError("unknown grid preset or missing file: " + name_or_path);
  return grid_from_json(io::read_json_file(name_or_path));
}

struct SplitData {
  IndicatorMatrix train;
  IndicatorMatrix test;
  std::vector<std::vector<std::size_t>> subsets;
};

/// Restricts to the first k ranked columns when --k is given, then applies
/// the seeded stratified split and draws the balanced test subsets.
SplitData split_matrix(const Options& o, IndicatorMatrix m) {
  if (!o.k.empty()) {
    if (o.ranked.empty()) throw InputError("--k requires --ranked");
    const auto ks = parse_k(o.k);
    if (ks.size() != 1) throw InputError("--k must be a single integer here");
    const auto ranked = load_ranked(o.ranked, m.cols());
    if (ks[0] > ranked.order.size()) throw InputError("--k exceeds the ranked list length");
    m = m.select_columns(std::span(ranked.order.data(), ks[0]));
  }
  const std::size_t train_size = o.train_size ? o.train_size : m.rows() / 6;
  if (train_size == 0 || train_size >= m.rows()) throw InputError("matrix too small for the requested split");
  const auto split = stratified_split(m.labels, train_size, derive_seed(o.seed, "split", 0));
  SplitData d;
  d.train = m.select_rows(split.train);
  d.test = m.select_rows(split.test);
  const std::size_t subset_size = std::max<std::size_t>(1, d.test.rows() / 10);
  d.subsets = balanced_subsets(d.test.labels, 10, subset_size, derive_seed(o.seed, "subsets", 0));
  return d;
}

ForestConfig forest_config(const Options& o, int trees) {
  return {trees, o.mtry, o.min_leaf, derive_seed(o.seed, "forest", 0)};
}

void require_model_kind(const Options& o) {
  if (o.model_kind != "nb" && o.model_kind != "rf") throw InputError("--model must be nb or rf");
}

json split_args(const Options& o) {
  return {{"matrix", o.matrix}, {"ranked", o.ranked}, {"k", o.k}, {"seed", o.seed}, {"train_size", o.train_size}};
}

// --- commands -----------------------------------------------------------------

void cmd_simulate(const Options& o) {
  const auto spec = scaled(dataset_preset(o.preset), o.scale);
  std::size_t idx = o.preset == "A" ? 0 : o.preset == "B" ? 1 : 2;
  const auto data = generate_dataset(derive_seed(o.seed, "dataset", idx), spec);
  const auto path = prepare_output(o, "signals_" + o.preset + ".jsonl");
  {
    auto os = io::open_out(path);
    io::write_signals(os, data);
  }
  write_manifest(path, "simulate", {{"preset", o.preset}, {"seed", o.seed}, {"scale", o.scale}});
  std::cout << path << ": " << data.size() << " signals\n";
}

void cmd_featurize(const Options& o) {
  std::vector<SignalRecord> data;
  {
    auto is = io::open_in(o.signals);
    data = io::read_signals(is);
  }
  if (data.empty()) throw InputError(o.signals + ": no signals");
  const auto grid = load_grid(o.grid);
  const auto specs = build_grid(grid);
  const auto m = featurize(data, specs, {o.jobs, true});
  const auto path = prepare_output(o, "matrix.csv");
  {
    auto os = io::open_out(path);
    io::write_matrix_csv(os, m);
  }
  write_manifest(path, "featurize", {{"signals", o.signals}, {"grid", grid_to_json(grid)}});
  std::cout << path << ": " << m.rows() << " x " << m.cols() << '\n';
}

void cmd_rank(const Options& o) {
  Options no_k = o;
  no_k.k.clear();
  const auto d = split_matrix(no_k, load_matrix(o.matrix));
  std::size_t k = d.train.cols();
  if (!o.k.empty()) {
    const auto ks = parse_k(o.k);
    if (ks.size() != 1 || ks[0] > k) throw InputError("--k must be a single integer <= number of indicators");
    k = ks[0];
  }
  const auto ranked = mrmr_rank(d.train, k, o.jobs);
  const auto path = prepare_output(o, "ranked.csv");
  {
    auto os = io::open_out(path);
    io::write_ranked_csv(os, ranked, d.train);
  }
  write_manifest(path, "rank", {{"matrix", o.matrix}, {"seed", o.seed}, {"train_size", o.train_size}, {"k", k}});
  std::cout << path << ": " << k << " ranked indicators\n";
}

void cmd_train(const Options& o) {
  require_model_kind(o);
  const auto d = split_matrix(o, load_matrix(o.matrix));
  const auto path = prepare_output(o, "model_" + o.model_kind + ".json");
  json args = split_args(o);
  if (o.model_kind == "nb") {
    io::write_json_file(path, io::nb_to_json(nb_train(d.train, o.epsilon)));
    args["epsilon"] = o.epsilon;
  } else {
    const auto cfg = forest_config(o, o.trees);
    io::write_json_file(path, io::rf_to_json(rf_train(d.train, cfg, o.jobs)));
    args["trees"] = o.trees;
    args["mtry"] = o.mtry;
    args["min_leaf"] = o.min_leaf;
  }
  write_manifest(path, "train", args);
  std::cout << path << '\n';
}

void cmd_explain(const Options& o) {
  const auto j = io::read_json_file(o.model_path);
  if (j.value("type", std::string()) != "naive_bayes") throw InputError("explain needs a naive_bayes model");
  NaiveBayesModel model;
  try {
    model = io::nb_from_json(j);
  } catch (const json::exception& e) {
    throw InputError(o.model_path + ": " + e.what());
  }
  std::size_t k = model.n_features();
  if (!o.k.empty()) {
    const auto ks = parse_k(o.k);
    if (ks.size() != 1 || ks[0] > k) throw InputError("--k must be a single integer <= model features");
    k = ks[0];
  }
  std::vector<std::size_t> sel(k);
  for (std::size_t i = 0; i < k; ++i) sel[i] = i;
  const auto table = nb_explain(model, sel);
  const auto path = prepare_output(o, "explain.csv");
  {
    auto os = io::open_out(path);
    os << "indicator_id";
    for (auto n : kClassNames) os << ",p_" << n;
    os << '\n';
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
      os << table.ids[i];
      for (double p : table.probs[i]) os << ',' << format_probability(p);
      os << '\n';
    }
  }
  write_manifest(path, "explain", {{"model", o.model_path}, {"k", k}});
  auto is = io::open_in(path);
  std::cout << is.rdbuf();
}

void cmd_eval(const Options& o) {
  require_model_kind(o);
  const auto d = split_matrix(o, load_matrix(o.matrix));
  json args = split_args(o);
  EvalReport rep;
  if (o.model_kind == "nb") {
    rep = evaluate_nb(d.train, d.test, d.subsets, o.epsilon);
    args["epsilon"] = o.epsilon;
  } else {
    rep = evaluate_rf(d.train, d.test, d.subsets, forest_config(o, o.trees), o.jobs);
    args["trees"] = o.trees;
    args["mtry"] = o.mtry;
    args["min_leaf"] = o.min_leaf;
  }
  const auto path = prepare_output(o, "report_" + o.model_kind + ".json");
  io::write_json_file(path, io::report_to_json(rep));
  write_manifest(path, "eval", args);
  std::cout << path << ": test mean " << io::fixed(rep.mean, 4) << " (sd " << io::fixed(rep.std, 4) << ")\n";
}

void cmd_curves(const Options& o) {
  if (o.ranked.empty()) throw InputError("curves needs --ranked");
  Options no_k = o;
  no_k.k.clear();
  no_k.ranked.clear();
  const auto d = split_matrix(no_k, load_matrix(o.matrix));
  const auto ranked = load_ranked(o.ranked, d.train.cols());
  const std::string k_text =
      o.k.empty() ? "1:" + std::to_string(std::min<std::size_t>(100, ranked.order.size())) : o.k;
  const auto ks = parse_k(k_text);
  for (auto k : ks)
    if (k > ranked.order.size()) throw InputError("--k exceeds the ranked list length");
  EvalSettings settings;
  settings.nb_smoothing = o.epsilon;
  settings.forest = forest_config(o, o.curve_trees);
  settings.jobs = o.jobs;
  const auto curve = forward_selection_eval(d.train, d.test, ranked, ks, d.subsets, settings);
  const auto path = prepare_output(o, "curves.csv");
  {
    auto os = io::open_out(path);
    io::write_curves_csv(os, curve);
  }
  json args = {{"matrix", o.matrix}, {"ranked", o.ranked}, {"k", k_text},
               {"seed", o.seed}, {"train_size", o.train_size}, {"trees", o.curve_trees}, {"epsilon", o.epsilon}};
  write_manifest(path, "curves", args);
  if (o.svg) {
    const auto svg_path = prepare_output(o, "curves.svg");
    auto os = io::open_out(svg_path);
    svg::line_chart(os, "Accuracy vs number of indicators", "number of indicators", detail::curve_series(curve), 0.3);
  }
  std::cout << path << ": " << curve.size() << " rows\n";
}

void cmd_reproduce(const Options& o) {
  ReproduceOptions r;
  r.seed = o.seed;
  r.scale = o.scale;
  r.jobs = o.jobs;
  r.trees = o.trees;
  r.curve_trees = o.curve_trees;
  r.svg = o.svg;
  const auto result = reproduce(o.out, r);
  std::cout << "wrote " << result.files.size() << " files to " << o.out << '\n';
  auto is = io::open_in((fs::path(o.out) / "summary.csv").string());
  std::cout << is.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary change indicators, aggregation and classification"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool with_jobs) {
    sub->add_option("--out", o.out, "output directory (default: $INDAGG_OUT_DIR or .)");
    sub->add_option("--seed", o.seed, "master seed");
    if (with_jobs) sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  };
  auto split_opts = [&](CLI::App* sub) {
    sub->add_option("--matrix", o.matrix, "indicator matrix CSV")->required();
    sub->add_option("--train-size", o.train_size, "training rows (default: one sixth)");
  };

  auto* simulate = app.add_subcommand("simulate", "generate a labelled signal set");
  common(simulate, false);
  simulate->add_option("--preset", o.preset, "A, B or C")->required();
  simulate->add_option("--scale", o.scale, "fraction of the default class counts")->check(CLI::Range(1e-6, 1.0));

  auto* featurize_cmd = app.add_subcommand("featurize", "evaluate an indicator grid on signals");
  common(featurize_cmd, true);
  featurize_cmd->add_option("--signals", o.signals, "signals JSON-lines file")->required();
  featurize_cmd->add_option("--grid", o.grid, "AB, C, Cm or a grid JSON file");

  auto* rank = app.add_subcommand("rank", "mRMR ranking over the training rows");
  common(rank, true);
  split_opts(rank);
  rank->add_option("--k", o.k, "number of indicators to rank (default: all)");

  auto* train = app.add_subcommand("train", "train a classifier on the training rows");
  common(train, true);
  split_opts(train);
  train->add_option("--model", o.model_kind, "nb or rf")->required();
  train->add_option("--ranked", o.ranked, "ranked list CSV");
  train->add_option("--k", o.k, "use the first k ranked indicators");
  train->add_option("--trees", o.trees, "forest size")->check(CLI::PositiveNumber);
  train->add_option("--mtry", o.mtry, "features per split (0: floor(sqrt(p)))");
  train->add_option("--min-leaf", o.min_leaf, "minimum rows per leaf")->check(CLI::PositiveNumber);
  train->add_option("--epsilon", o.epsilon, "Laplace smoothing");

  auto* explain = app.add_subcommand("explain", "conditional-probability table of a Naive Bayes model");
  common(explain, false);
  explain->add_option("--model", o.model_path, "model_nb.json")->required();
  explain->add_option("--k", o.k, "first k indicators (default: all)");

  auto* eval = app.add_subcommand("eval", "train and score on the balanced test subsets");
  common(eval, true);
  split_opts(eval);
  eval->add_option("--model", o.model_kind, "nb or rf")->required();
  eval->add_option("--ranked", o.ranked, "ranked list CSV");
  eval->add_option("--k", o.k, "use the first k ranked indicators");
  eval->add_option("--trees", o.trees, "forest size")->check(CLI::PositiveNumber);
  eval->add_option("--mtry", o.mtry, "features per split (0: floor(sqrt(p)))");
  eval->add_option("--min-leaf", o.min_leaf, "minimum rows per leaf")->check(CLI::PositiveNumber);
  eval->add_option("--epsilon", o.epsilon, "Laplace smoothing");

  auto* curves = app.add_subcommand("curves", "forward-selection accuracy curves");
  common(curves, true);
  split_opts(curves);
  curves->add_option("--ranked", o.ranked, "ranked list CSV")->required();
  curves->add_option("--k", o.k, "k values, e.g. 1:100 (default)");
  curves->add_option("--trees", o.curve_trees, "forest size per k")->check(CLI::PositiveNumber);
  curves->add_option("--epsilon", o.epsilon, "Laplace smoothing");
  curves->add_flag("--svg", o.svg, "also write curves.svg");

  auto* repro = app.add_subcommand("reproduce", "run the full experiment and write every table");
  common(repro, true);
  repro->add_option("--scale", o.scale, "fraction of the default class counts")->check(CLI::Range(1e-6, 1.0));
  repro->add_option("--trees", o.trees, "forest size for the all-indicator runs")->check(CLI::PositiveNumber);
  repro->add_option("--curve-trees", o.curve_trees, "forest size for the curves")->check(CLI::PositiveNumber);
  repro->add_flag("--svg", o.svg, "also write SVG charts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) cmd_simulate(o);
    else if (*featurize_cmd) cmd_featurize(o);
    else if (*rank) cmd_rank(o);
    else if (*train) cmd_train(o);
    else if (*explain) cmd_explain(o);
    else if (*eval) cmd_eval(o);
    else if (*curves) cmd_curves(o);
    else if (*repro) cmd_reproduce(o);
    return 0;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
