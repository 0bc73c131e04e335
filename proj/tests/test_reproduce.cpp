#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "indagg/reproduce.hpp"

using namespace indagg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ReproduceOptions small_options(int jobs) {
  ReproduceOptions o;
  o.seed = 7;
  o.scale = 0.05;
  o.jobs = jobs;
  o.trees = 30;
  o.curve_trees = 10;
  o.curve_k_max = 12;
  o.optimal_k_max = 8;
  o.svg = true;
  return o;
}

}  // namespace

TEST_CASE("reproduce writes a complete, deterministic artifact tree", "[reproduce]") {
  const auto base = fs::temp_directory_path() / "indagg_test_reproduce";
  fs::remove_all(base);
  const auto r1 = reproduce(base / "one", small_options(1));
  const auto r2 = reproduce(base / "two", small_options(3));

  for (const std::string f : {"table1.csv", "table2.csv", "table3.csv", "table4.csv", "table5.csv", "summary.csv",
                              "curves_A.csv", "curves_B.csv", "curves_C.csv", "curves_Cm.csv", "manifest.json"})
    CHECK(std::find(r1.files.begin(), r1.files.end(), f) != r1.files.end());

  REQUIRE(r1.files == r2.files);
  for (const auto& f : r1.files) {
    INFO(f);
    CHECK(slurp(base / "one" / f) == slurp(base / "two" / f));
  }

  // Curves cover 1..min(k_max, p); the optimal k respects its cap.
  for (const auto& [name, run] : r1.runs) {
    CHECK(run.curve.size() == std::min<std::size_t>(12, run.ranked_ids.size()));
    CHECK(run.optimal_k >= 1);
    CHECK(run.optimal_k <= 8);
  }

  // Table 1 accuracies lie in [0, 1].
  std::istringstream t1(slurp(base / "one" / "table1.csv"));
  std::string line;
  std::getline(t1, line);
  int rows = 0;
  while (std::getline(t1, line)) {
    ++rows;
    std::istringstream fields(line);
    std::string cell;
    for (int i = 0; std::getline(fields, cell, ','); ++i) {
      if (i < 3 || cell.empty()) continue;
      const double v = std::stod(cell);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK(rows == 4);

  // Cm keeps only Any-aggregator columns of C, on the same signals.
  for (const auto& s : r1.runs.at("Cm").ranked_specs) CHECK(s.aggregator.kind == Aggregator::Kind::Any);
  CHECK(r1.runs.at("Cm").n_signals == r1.runs.at("C").n_signals);
  CHECK(r1.runs.at("Cm").rf_all.confusion.total() == r1.runs.at("C").rf_all.confusion.total());
  fs::remove_all(base);
}

TEST_CASE("reproduce rejects bad options", "[reproduce]") {
  auto o = small_options(1);
  o.scale = 0.0;
  CHECK_THROWS_AS(reproduce(fs::temp_directory_path() / "indagg_bad", o), InputError);
}
