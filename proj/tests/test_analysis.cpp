#include <doctest.h>

#include <numeric>

#include "dataprog/analysis.hpp"
#include "dataprog/errors.hpp"
#include "oracles.hpp"

using namespace dprog;

namespace {

const LabelSpace kSpace({{"spam", 1}, {"ham", 2}});
const std::vector<std::string> kTwo = {"lf1", "lf2"};
const std::vector<LabelId> kGrid = {1, 0, 1, 2, 0, 0, 1, 1};
const std::vector<LabelId> kGold = {1, 1, 2, 1};

}  // namespace

TEST_CASE("four-row worked example") {
  auto s = lf_summary(kTwo, 4, kGrid, kGold);
  REQUIRE(s.size() == 2);
  CHECK(s[0].coverage == 0.75);
  CHECK(s[1].coverage == 0.5);
  CHECK(s[0].overlap == 0.5);
  CHECK(s[1].overlap == 0.5);
  CHECK(s[0].conflict == 0.25);
  CHECK(s[1].conflict == 0.25);
  CHECK(s[0].empirical_accuracy == 1.0);
  CHECK(s[1].empirical_accuracy == 0.5);
  CHECK(s[0].polarity == std::vector<LabelId>{1});
  CHECK(s[1].polarity == std::vector<LabelId>{1, 2});

  auto report = render_report(s);
  auto lines = std::count(report.table.begin(), report.table.end(), '\n');
  CHECK(lines == 3);
  CHECK(report.table.find("0.7500") != std::string::npos);
  CHECK(report.table.find("1.0000") != std::string::npos);
  CHECK(report.record["lfs"][1]["emp_accuracy"] == 0.5);
  CHECK(report.record["lfs"][1]["precision"] == 0.5);
  CHECK(report.record["lfs"][0]["conflict"] == 0.25);
}

TEST_CASE("vote matrix overload agrees with the grid form") {
  VoteMatrix vm(kSpace, {{"a", 1, false}, {"b", 2, false}}, 3, {1, 0, 1, 2, 0, 2});
  std::vector<std::string> names = {"a", "b"};
  auto x = lf_summary(vm);
  auto y = lf_summary(names, 3, vm.values());
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(x[j].coverage == y[j].coverage);
    CHECK(x[j].conflict == y[j].conflict);
    CHECK(x[j].polarity == std::vector<LabelId>{vm.lf(j).target});
  }
}

TEST_CASE("report edge cases") {
  auto empty = render_report({});
  CHECK(std::count(empty.table.begin(), empty.table.end(), '\n') == 1);
  CHECK(empty.table.rfind("lf", 0) == 0);
  CHECK(empty.record["lfs"].empty());

  auto no_gold = render_report(lf_summary(kTwo, 4, kGrid));
  CHECK(no_gold.table.find("—") != std::string::npos);
  CHECK(no_gold.record["lfs"][0]["emp_accuracy"].is_null());

  // Never fired on a gold row: accuracy undefined, not zero.
  auto unfired = lf_summary(std::vector<std::string>{"x"}, 2, std::vector<LabelId>{0, 0},
                            std::vector<LabelId>{1, 2});
  CHECK(unfired[0].coverage == 0.0);
  CHECK_FALSE(unfired[0].empirical_accuracy);

  CHECK_THROWS_AS(lf_summary(kTwo, 4, kGrid, std::vector<LabelId>{1, 2}), DataError);
  CHECK_THROWS_AS(lf_summary(kTwo, 3, kGrid), DataError);
}

TEST_CASE("metric properties on random grids") {
  oracle::Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = rng.index(0, 30), m = rng.index(1, 5), K = rng.index(2, 4);
    std::vector<std::string> names(m);
    for (std::size_t j = 0; j < m; ++j) names[j] = "lf" + std::to_string(j);
    std::vector<LabelId> grid(n * m), gold(n);
    for (auto& v : grid) v = rng.coin(0.4) ? static_cast<LabelId>(rng.index(1, K)) : kAbstain;
    for (auto& g : gold) g = static_cast<LabelId>(rng.index(0, K));

    auto s = lf_summary(names, n, grid, gold);
    for (const auto& x : s) {
      CHECK(0.0 <= x.conflict);
      CHECK(x.conflict <= x.overlap);
      CHECK(x.overlap <= x.coverage);
      CHECK(x.coverage <= 1.0);
      if (m == 1) {
        CHECK(x.overlap == 0.0);
        CHECK(x.conflict == 0.0);
      }
    }

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.gen);
    std::vector<LabelId> pgrid, pgold;
    for (std::size_t i : perm) {
      pgrid.insert(pgrid.end(), grid.begin() + static_cast<long>(i * m),
                   grid.begin() + static_cast<long>((i + 1) * m));
      pgold.push_back(gold[i]);
    }
    auto p = lf_summary(names, n, pgrid, pgold);
    for (std::size_t j = 0; j < m; ++j) {
      CHECK(p[j].coverage == s[j].coverage);
      CHECK(p[j].overlap == s[j].overlap);
      CHECK(p[j].conflict == s[j].conflict);
      CHECK(p[j].empirical_accuracy == s[j].empirical_accuracy);
      CHECK(p[j].polarity == s[j].polarity);
    }
  }
}
