#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "indagg/core.hpp"
#include "indagg/evaluation.hpp"
#include "indagg/grid.hpp"
#include "indagg/indicators.hpp"
#include "indagg/io.hpp"
#include "indagg/selection.hpp"
#include "indagg/signalgen.hpp"
#include "indagg/svg.hpp"

namespace indagg {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Published reference values the summary file compares against.
struct ReferenceValue {
  std::string quantity;
  double value;
};

inline const std::vector<ReferenceValue>& reference_values() {
  static const std::vector<ReferenceValue> v = {
      {"A.rf.train", 0.9770},       {"A.rf.oob", 0.9228},        {"A.rf.test_mean", 0.9352},
      {"A.rf.test_std", 0.0100},    {"B.rf.train", 0.9709},      {"B.rf.oob", 0.9118},
      {"B.rf.test_mean", 0.9226},   {"B.rf.test_std", 0.0108},   {"A.nb.train", 0.9228},
      {"A.nb.test_mean", 0.8687},   {"A.nb.test_std", 0.0099},   {"B.nb.train", 0.8978},
      {"B.nb.test_mean", 0.8632},   {"B.nb.test_std", 0.0160},   {"A.nb.full_test_accuracy", 0.8715},
      {"A.nb_opt.k", 9},            {"A.nb_opt.train", 0.8487},  {"A.nb_opt.test_mean", 0.8448},
      {"A.nb_opt.test_std", 0.0134}, {"B.nb_opt.k", 13},         {"B.nb_opt.train", 0.9018},
      {"B.nb_opt.test_mean", 0.8935}, {"B.nb_opt.test_std", 0.0130}, {"A.top_u_conf.p_none", 0.0103},
      {"A.top_u_conf.p_variance", 0.011}, {"A.top_u_conf.p_mean", 0.971}, {"A.top_u_conf.p_trend", 0.939},
      {"C.rf.train", 0.9629},       {"C.rf.test_mean", 0.7656},  {"C.rf.test_std", 0.0161},
      {"Cm.rf.train", 0.95298},     {"Cm.rf.test_mean", 0.731513}, {"Cm.rf.test_std", 0.0171},
  };
  return v;
}

struct ReproduceOptions {
  std::uint64_t seed = 1;
  double scale = 1.0;  // fraction of the 6000-signal datasets
  int jobs = 1;
  int trees = 500;
  int curve_trees = 200;
  std::size_t curve_k_max = 100;
  std::size_t optimal_k_max = 20;
  std::size_t n_subsets = 10;
  bool svg = false;
};

/// Everything computed for one dataset (or the Any-only view of set C).
struct DatasetRun {
  std::string name;
  std::size_t n_signals = 0;
  std::vector<std::string> ranked_ids;  // mRMR order over the training rows
  std::vector<IndicatorSpec> ranked_specs;
  EvalReport nb_all;
  EvalReport rf_all;
  NaiveBayesModel nb_model;  // all indicators, columns in ranked order
  std::vector<CurvePoint> curve;
  std::size_t optimal_k = 0;
};

struct ReproduceResult {
  std::map<std::string, DatasetRun> runs;
  std::map<std::string, double> reproduced;  // keyed like reference_values()
  std::vector<std::string> files;            // relative paths, sorted
};

namespace detail {

struct Prepared {
  IndicatorMatrix train;
  IndicatorMatrix test;
  std::vector<std::vector<std::size_t>> subsets;
};

inline std::size_t dataset_index(const std::string& name) {
  if (name == "A") return 0;
  if (name == "B") return 1;
  return 2;
}

/// Ranked evaluation of `cols` (indices into prep's matrices): mRMR over the
/// training rows, then all-indicator NB/RF and the forward curve.
inline DatasetRun evaluate_columns(const std::string& name, const Prepared& prep,
                                   const std::vector<std::size_t>& cols, std::uint64_t forest_seed,
                                   const ReproduceOptions& opt) {
  DatasetRun run;
  run.name = name;
  run.n_signals = prep.train.rows() + prep.test.rows();
  const auto train = prep.train.select_columns(cols);
  const auto test = prep.test.select_columns(cols);
  const auto ranked = mrmr_rank(train, train.cols(), opt.jobs);
  for (auto c : ranked.order) {
    run.ranked_ids.push_back(train.specs[c].id);
    run.ranked_specs.push_back(train.specs[c]);
  }

  const auto tr = train.select_columns(ranked.order);
  const auto te = test.select_columns(ranked.order);
  run.nb_all = evaluate_nb(tr, te, prep.subsets, 1.0, &run.nb_model);
  run.rf_all = evaluate_rf(tr, te, prep.subsets, {opt.trees, 0, 1, forest_seed}, opt.jobs);

  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k <= std::min(opt.curve_k_max, ranked.order.size()); ++k) ks.push_back(k);
  EvalSettings settings;
  settings.forest = {opt.curve_trees, 0, 1, forest_seed};
  settings.jobs = opt.jobs;
  run.curve = forward_selection_eval(train, test, ranked, ks, prep.subsets, settings);
  run.optimal_k = pick_optimal_k(run.curve, std::min(opt.optimal_k_max, ks.size()));
  return run;
}

inline std::vector<svg::Series> curve_series(const std::vector<CurvePoint>& curve) {
  std::vector<svg::Series> s = {{"NB train", "#1f77b4", {}, {}},
                                {"NB test mean", "#aec7e8", {}, {}},
                                {"RF train", "#d62728", {}, {}},
                                {"RF OOB", "#ff9896", {}, {}},
                                {"RF test mean", "#2ca02c", {}, {}}};
  for (const auto& pt : curve) {
    const double k = static_cast<double>(pt.k);
    const double ys[] = {pt.nb.train_accuracy, pt.nb.mean, pt.rf.train_accuracy, pt.rf.oob_accuracy.value_or(0.0),
                         pt.rf.mean};
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i].x.push_back(k);
      s[i].y.push_back(ys[i]);
    }
  }
  return s;
}

}  // namespace detail

/// Runs sets A, B and C end to end plus the Any-only view Cm of set C, and
/// writes the artifact tree under `out_dir`. Output bytes depend only on the
/// options other than `jobs`.
inline ReproduceResult reproduce(const std::filesystem::path& out_dir, const ReproduceOptions& opt) {
  namespace fs = std::filesystem;
  if (!(opt.scale > 0.0 && opt.scale <= 1.0)) throw InputError("scale must be in (0, 1]");
  if (opt.trees < 1 || opt.curve_trees < 1) throw InputError("tree counts must be >= 1");
  fs::create_directories(out_dir);
  fs::create_directories(out_dir / "reports");

  ReproduceResult result;
  auto record = [&](const std::string& rel) {
    result.files.push_back(rel);
    return (out_dir / rel).string();
  };

  for (const std::string name : {"A", "B", "C"}) {
    const auto idx = detail::dataset_index(name);
    const auto spec = scaled(dataset_preset(name), opt.scale);
    const auto data = generate_dataset(derive_seed(opt.seed, "dataset", idx), spec);
    {
      auto os = io::open_out(record("signals_" + name + ".jsonl"));
      io::write_signals(os, data);
    }
    const auto grid = name == "C" ? grid_preset_c() : grid_preset_ab();
    const auto specs = build_grid(grid);
    const auto matrix = featurize(data, specs, {opt.jobs, true});
    {
      auto os = io::open_out(record("matrix_" + name + ".csv"));
      io::write_matrix_csv(os, matrix);
    }

    const std::size_t train_size = matrix.rows() / 6;
    const auto split = stratified_split(matrix.labels, train_size, derive_seed(opt.seed, "split", idx));
    detail::Prepared prep;
    prep.train = matrix.select_rows(split.train);
    prep.test = matrix.select_rows(split.test);
    const std::size_t subset_size = std::max<std::size_t>(1, prep.test.rows() / 10);
    prep.subsets = balanced_subsets(prep.test.labels, opt.n_subsets, subset_size,
                                    derive_seed(opt.seed, "subsets", idx));

    const std::uint64_t forest_seed = derive_seed(opt.seed, "forest", idx);
    std::vector<std::size_t> all(matrix.cols());
    for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
    result.runs[name] = detail::evaluate_columns(name, prep, all, forest_seed, opt);
    if (name == "C")
      result.runs["Cm"] = detail::evaluate_columns("Cm", prep, any_only_columns(matrix), forest_seed, opt);
  }

  for (auto& [name, run] : result.runs) {
    {
      auto os = io::open_out(record("ranked_" + name + ".csv"));
      os << "rank,indicator_id\n";
      for (std::size_t i = 0; i < run.ranked_ids.size(); ++i) os << i + 1 << ',' << run.ranked_ids[i] << '\n';
    }
    {
      auto os = io::open_out(record("curves_" + name + ".csv"));
      io::write_curves_csv(os, run.curve);
    }
    if (opt.svg) {
      auto os = io::open_out(record("curves_" + name + ".svg"));
      svg::line_chart(os, "Set " + name + ": accuracy vs number of indicators", "number of indicators",
                      detail::curve_series(run.curve), 0.3);
    }
    io::write_json_file(record("reports/" + name + "_nb.json"), io::report_to_json(run.nb_all));
    io::write_json_file(record("reports/" + name + "_rf.json"), io::report_to_json(run.rf_all));
  }

  auto& rep = result.reproduced;
  for (const std::string name : {"A", "B", "C", "Cm"}) {
    const auto& run = result.runs.at(name);
    rep[name + ".rf.train"] = run.rf_all.train_accuracy;
    rep[name + ".rf.oob"] = run.rf_all.oob_accuracy.value_or(0.0);
    rep[name + ".rf.test_mean"] = run.rf_all.mean;
    rep[name + ".rf.test_std"] = run.rf_all.std;
    rep[name + ".nb.train"] = run.nb_all.train_accuracy;
    rep[name + ".nb.test_mean"] = run.nb_all.mean;
    rep[name + ".nb.test_std"] = run.nb_all.std;
    const auto& opt_pt = run.curve.at(run.optimal_k - 1);
    rep[name + ".nb_opt.k"] = static_cast<double>(run.optimal_k);
    rep[name + ".nb_opt.train"] = opt_pt.nb.train_accuracy;
    rep[name + ".nb_opt.test_mean"] = opt_pt.nb.mean;
    rep[name + ".nb_opt.test_std"] = opt_pt.nb.std;
    double gap = 0.0;
    for (const auto& pt : run.curve) gap = std::max(gap, std::fabs(pt.nb.train_accuracy - pt.nb.mean));
    rep[name + ".nb.max_train_test_gap"] = gap;
  }
  rep["A.nb.full_test_accuracy"] = score_confusion(result.runs.at("A").nb_all.confusion).accuracy;

  // Top-ranked U-test confirmation indicator on set A.
  const auto& a = result.runs.at("A");
  for (std::size_t i = 0; i < a.ranked_specs.size(); ++i) {
    const auto& s = a.ranked_specs[i];
    if (s.test != TestKind::MannWhitneyU || s.aggregator.kind == Aggregator::Kind::Any) continue;
    rep["A.top_u_conf.rank"] = static_cast<double>(i + 1);
    rep["A.top_u_conf.p_none"] = a.nb_model.cond_p[0][i];
    rep["A.top_u_conf.p_variance"] = a.nb_model.cond_p[1][i];
    rep["A.top_u_conf.p_mean"] = a.nb_model.cond_p[2][i];
    rep["A.top_u_conf.p_trend"] = a.nb_model.cond_p[3][i];
    break;
  }

  using io::fixed;
  {
    auto os = io::open_out(record("table1.csv"));
    os << "dataset,classifier,n_indicators,train_accuracy,oob_accuracy,test_mean,test_std\n";
    for (const std::string clf : {"rf", "nb"})
      for (const std::string name : {"A", "B"}) {
        const auto& r = clf == "rf" ? result.runs.at(name).rf_all : result.runs.at(name).nb_all;
        os << name << ',' << clf << ',' << r.n_indicators << ',' << fixed(r.train_accuracy, 4) << ','
           << (r.oob_accuracy ? fixed(*r.oob_accuracy, 4) : "") << ',' << fixed(r.mean, 4) << ','
           << fixed(r.std, 4) << '\n';
      }
  }
  {
    auto os = io::open_out(record("table2.csv"));
    os << "true_class,pred_0,pred_1,pred_2,pred_3,total\n";
    const auto& cm = result.runs.at("A").nb_all.confusion;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      os << c;
      for (auto v : cm.counts[c]) os << ',' << v;
      os << ',' << cm.row_sum(c) << '\n';
    }
  }
  {
    auto os = io::open_out(record("table3.csv"));
    os << "dataset,k,train_accuracy,test_mean,test_std\n";
    for (const std::string name : {"A", "B"}) {
      const auto& run = result.runs.at(name);
      const auto& pt = run.curve.at(run.optimal_k - 1);
      os << name << ',' << run.optimal_k << ',' << fixed(pt.nb.train_accuracy, 4) << ',' << fixed(pt.nb.mean, 4)
         << ',' << fixed(pt.nb.std, 4) << '\n';
    }
  }
  {
    auto os = io::open_out(record("table4.csv"));
    os << "rank,indicator_id";
    for (auto n : kClassNames) os << ",p_" << n;
    os << '\n';
    for (std::size_t i = 0; i < std::min<std::size_t>(9, a.ranked_ids.size()); ++i) {
      os << i + 1 << ',' << a.ranked_ids[i];
      for (std::size_t c = 0; c < kNumClasses; ++c) os << ',' << format_probability(a.nb_model.cond_p[c][i]);
      os << '\n';
    }
  }
  {
    auto os = io::open_out(record("table5.csv"));
    os << "dataset,n_indicators,train_accuracy,oob_accuracy,test_mean,test_std\n";
    for (const std::string name : {"C", "Cm"}) {
      const auto& r = result.runs.at(name).rf_all;
      os << name << ',' << r.n_indicators << ',' << fixed(r.train_accuracy, 4) << ','
         << fixed(r.oob_accuracy.value_or(0.0), 4) << ',' << fixed(r.mean, 4) << ',' << fixed(r.std, 4) << '\n';
    }
  }
  {
    auto os = io::open_out(record("summary.csv"));
    os << "quantity,reference,reproduced,delta\n";
    for (const auto& pv : reference_values()) {
      const auto it = rep.find(pv.quantity);
      if (it == rep.end()) continue;
      os << pv.quantity << ',' << fixed(pv.value, 4) << ',' << fixed(it->second, 4) << ','
         << fixed(it->second - pv.value, 4) << '\n';
    }
  }

  std::sort(result.files.begin(), result.files.end());
  nlohmann::json manifest = {
      {"tool", "indagg"},
      {"version", std::string(kToolVersion)},
      {"command", "reproduce"},
      {"master_seed", opt.seed},
      {"scale", opt.scale},
      {"datasets", {"A", "B", "C"}},
      {"grids", {{"A", "AB"}, {"B", "AB"}, {"C", "C"}, {"Cm", "Cm"}}},
      {"naive_bayes", {{"epsilon", 1.0}}},
      {"random_forest", {{"n_trees", opt.trees}, {"curve_n_trees", opt.curve_trees}, {"mtry", "floor(sqrt(p))"}, {"min_leaf", 1}}},
      {"split", {{"train_fraction", "1/6"}, {"subsets", opt.n_subsets}}},
      {"curve_k_max", opt.curve_k_max},
      {"optimal_k_max", opt.optimal_k_max},
      {"svg", opt.svg},
      {"files", result.files},
  };
  io::write_json_file((out_dir / "manifest.json").string(), manifest);
  result.files.push_back("manifest.json");
  std::sort(result.files.begin(), result.files.end());
  return result;
}

}  // namespace indagg
