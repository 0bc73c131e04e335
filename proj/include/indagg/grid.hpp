#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "indagg/core.hpp"
#include "indagg/indicators.hpp"

namespace indagg {

/// Declarative description of an indicator grid. Every combination of the
/// listed parameters becomes one indicator.
struct GridConfig {
  std::string name = "custom";
  std::vector<TestKind> tests;
  std::vector<int> windows;           // fixed window lengths
  std::vector<int> adaptive_windows;  // resolved as min(n - 2, len)
  std::vector<double> alphas;
  bool any = true;
  std::vector<double> betas;  // RateAtLeast and RunAtLeast
  bool rate = true;
  bool run = true;
  std::vector<int> overlaps;  // for rate/run; kFullOverlap = window length - 1
  std::vector<int> ks;        // KofN, paired with every n_conf >= k
  std::vector<int> n_confs;
  std::vector<bool> smoothing{false, true};
};

inline GridConfig grid_preset_ab() {
  GridConfig g;
  g.name = "AB";
  g.tests = {TestKind::MannWhitneyU, TestKind::KolmogorovSmirnov, TestKind::FVariance};
  g.windows = {30, 50};
  g.adaptive_windows = {100};
  g.alphas = {0.005, 0.1, 0.5};
  g.betas = {0.1, 0.3, 0.5};
  g.overlaps = {kFullOverlap, 5, 10};
  g.ks = {2, 3, 4};
  g.n_confs = {3, 5};
  return g;
}

inline GridConfig grid_preset_c() {
  GridConfig g = grid_preset_ab();
  g.name = "C";
  g.tests.assign(kAllTests.begin(), kAllTests.end());
  return g;
}

/// Set C tests with base (Any) indicators only.
inline GridConfig grid_preset_cm() {
  GridConfig g = grid_preset_c();
  g.name = "Cm";
  g.betas.clear();
  g.ks.clear();
  return g;
}

inline GridConfig grid_preset(const std::string& name) {
  if (name == "AB") return grid_preset_ab();
  if (name == "C") return grid_preset_c();
  if (name == "Cm") return grid_preset_cm();
  throw InputError("unknown grid preset: " + name);
}

inline std::vector<IndicatorSpec> build_grid(const GridConfig& g) {
  std::vector<WindowSize> sizes;
  for (int w : g.windows) sizes.push_back({w, false});
  for (int w : g.adaptive_windows) sizes.push_back({w, true});
  for (const auto& s : sizes)
    if (s.len < 6) throw std::invalid_argument("window length must be >= 6");

  std::vector<IndicatorSpec> out;
  auto push = [&](TestKind t, double alpha, WindowPlan plan, Aggregator agg) {
    IndicatorSpec s{"", t, alpha, plan, agg};
    s.id = make_indicator_id(s);
    out.push_back(std::move(s));
  };
  for (bool smoothed : g.smoothing) {
    for (TestKind t : g.tests) {
      for (const auto& size : sizes) {
        for (double alpha : g.alphas) {
          if (g.any) push(t, alpha, {size, kFullOverlap, smoothed}, Aggregator::any());
          if (g.rate)
            for (double beta : g.betas)
              for (int o : g.overlaps) push(t, alpha, {size, o, smoothed}, Aggregator::rate(beta));
          if (g.run)
            for (double beta : g.betas)
              for (int o : g.overlaps) push(t, alpha, {size, o, smoothed}, Aggregator::run(beta));
          for (int n_conf : g.n_confs)
            for (int k : g.ks)
              if (k >= 1 && k <= n_conf)
                push(t, alpha, {size, kFullOverlap, smoothed}, Aggregator::k_of_n(k, n_conf));
        }
      }
    }
  }
  std::set<std::string> seen;
  for (const auto& s : out)
    if (!seen.insert(s.id).second) throw std::invalid_argument("duplicate indicator id: " + s.id);
  if (out.empty()) throw std::invalid_argument("grid is empty");
  return out;
}

// ---------------------------------------------------------------------------
// JSON form

inline nlohmann::json grid_to_json(const GridConfig& g) {
  nlohmann::json j;
  j["name"] = g.name;
  auto& tests = j["tests"] = nlohmann::json::array();
  for (auto t : g.tests) tests.push_back(std::string(test_tag(t)));
  j["windows"] = g.windows;
  j["adaptive_windows"] = g.adaptive_windows;
  j["alphas"] = g.alphas;
  j["any"] = g.any;
  j["betas"] = g.betas;
  j["rate"] = g.rate;
  j["run"] = g.run;
  auto& overlaps = j["overlaps"] = nlohmann::json::array();
  for (int o : g.overlaps) {
    if (o == kFullOverlap) overlaps.push_back("full");
    else overlaps.push_back(o);
  }
  j["ks"] = g.ks;
  j["n_conf"] = g.n_confs;
  auto& sm = j["smoothing"] = nlohmann::json::array();
  for (bool b : g.smoothing) sm.push_back(b);
  return j;
}

inline GridConfig grid_from_json(const nlohmann::json& j) {
  try {
    GridConfig g;
    g.name = j.value("name", std::string("custom"));
    for (const auto& t : j.at("tests")) g.tests.push_back(test_from_tag(t.get<std::string>()));
    g.windows = j.value("windows", std::vector<int>{});
    g.adaptive_windows = j.value("adaptive_windows", std::vector<int>{});
    g.alphas = j.at("alphas").get<std::vector<double>>();
    g.any = j.value("any", true);
    g.betas = j.value("betas", std::vector<double>{});
    g.rate = j.value("rate", true);
    g.run = j.value("run", true);
    if (j.contains("overlaps")) {
      for (const auto& o : j["overlaps"]) {
        if (o.is_string()) {
          if (o.get<std::string>() != "full") throw InputError("overlap must be an integer or \"full\"");
          g.overlaps.push_back(kFullOverlap);
        } else {
          g.overlaps.push_back(o.get<int>());
        }
      }
    }
    g.ks = j.value("ks", std::vector<int>{});
    g.n_confs = j.value("n_conf", std::vector<int>{});
    if (j.contains("smoothing")) {
      g.smoothing.clear();
      for (const auto& b : j["smoothing"]) g.smoothing.push_back(b.get<bool>());
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed grid config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("malformed grid config: ") + e.what());
  }
}

}  // namespace indagg
