#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "bipolar/metrics.hpp"
#include "support.hpp"

using namespace bipolar;
using Catch::Approx;

namespace {

// Naive JS in bits straight from the definition, with M = (P + Q) / 2.
double naive_js(const std::vector<double>& p, const std::vector<double>& q) {
  double js = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) js += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0) js += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return js;
}

std::vector<double> random_dist(std::mt19937& rng, std::size_t support) {
  std::vector<double> p(kScoreBins, 0.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < support; ++k) p[rng() % kScoreBins] += u(rng);
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= s;
  return p;
}

// Synthetic table builder: one row per score.
struct TableBuilder {
  ScoreTable t;
  int next = 0;
  void add(const std::string& model, const std::string& variant, const std::string& entity, const std::string& cat,
           Polarity pol, int score, std::string id = {}) {
    if (id.empty()) id = "s" + std::to_string(next++);
    t.rows.push_back({model, variant, id, cat, "p", pol, entity, Role::subject, Frame::present, "en", score});
  }
};

Axes axes(std::vector<std::string> cats) { return {"a", "b", std::move(cats)}; }

}  // namespace

TEST_CASE("JS divergence matches the naive definition") {
  std::mt19937 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_dist(rng, 1 + rng() % 30);
    const auto q = random_dist(rng, 1 + rng() % 30);
    const double js = js_divergence(std::span<const double>(p), std::span<const double>(q));
    bool overlap = false;
    for (std::size_t k = 0; k < p.size(); ++k) overlap |= p[k] > 0 && q[k] > 0;
    if (overlap) CHECK(std::abs(js - naive_js(p, q)) <= 1e-12);
    else CHECK(js == 1.0);
    CHECK(js == js_divergence(std::span<const double>(q), std::span<const double>(p)));
    CHECK(js >= 0.0);
    CHECK(js <= 1.0);
  }
}

TEST_CASE("JS divergence edge cases") {
  ScoreDistribution a, b;
  a.add(0);
  b.add(100);
  CHECK(js_divergence(a, b) == 1.0);
  CHECK(js_divergence(a, a) == 0.0);
  ScoreDistribution c;
  c.add(0);
  c.add(100);
  CHECK(js_divergence(a, c) == Approx(naive_js({1, 0}, {0.5, 0.5})).margin(1e-12));
  CHECK_THROWS_AS(js_divergence(a, ScoreDistribution{}), MetricError);
  CHECK(ScoreDistribution::bin_of(72.5) == 15);
  CHECK(ScoreDistribution::bin_of(72.4) == 14);
  CHECK(ScoreDistribution::bin_of(100) == 20);
  CHECK_THROWS_AS(ScoreDistribution::bin_of(101), MetricError);
}

TEST_CASE("cell means and bias against a direct computation") {
  std::mt19937 rng(7);
  TableBuilder tb;
  const std::vector<std::string> cats{"c1", "c2", "c3"};
  std::map<std::tuple<std::string, std::string, std::string, Polarity>, std::vector<int>> raw;
  for (const std::string m : {"m1", "m2", "m3"})
    for (const auto& c : cats)
      for (auto pol : kPolarities)
        for (const std::string e : {"a", "b"}) {
          const int n = 1 + static_cast<int>(rng() % 5);
          for (int k = 0; k < n; ++k) {
            const int s = static_cast<int>(rng() % 101);
            tb.add(m, "vanilla", e, c, pol, s);
            raw[{m, e, c, pol}].push_back(s);
          }
        }
  const auto stats = cell_means(tb.t, axes(cats));
  auto mean_of = [&](const std::string& m, const std::string& e, const std::string& c, Polarity p) {
    const auto& v = raw.at({m, e, c, p});
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const auto grid = bias_grid(stats, "vanilla");
  const auto swapped = bias_grid(cell_means(tb.t, axes(cats).swapped()), "vanilla");
  for (const std::string m : {"m1", "m2", "m3"})
    for (const auto& c : cats)
      for (auto p : kPolarities) {
        const double expected = mean_of(m, "b", c, p) - mean_of(m, "a", c, p);
        CHECK(bias(stats, c, m, p).value == Approx(expected).margin(1e-12));
        CHECK(*grid.get(c, m, p) == Approx(expected).margin(1e-12));
        CHECK(*swapped.get(c, m, p) == Approx(-expected).margin(1e-12));
      }

  for (const auto& c : cats)
    for (auto p : kPolarities) {
      const auto col = grid.column(c, p);
      const double mu = std::accumulate(col.begin(), col.end(), 0.0) / 3;
      double var = 0;
      for (double x : col) var += (x - mu) * (x - mu);
      CHECK(consensus(grid, c, p) == Approx(std::sqrt(var / 3)).margin(1e-9));
      double abs_sum = 0;
      for (double x : col) abs_sum += std::abs(x);
      CHECK(absolute_bias(grid, c, p) == Approx(abs_sum).margin(1e-12));
      CHECK(consensus(grid, c, p) == Approx(consensus(swapped, c, p)).margin(1e-9));
    }
}

TEST_CASE("consensus needs two models and is zero for equal biases") {
  TableBuilder tb;
  for (const std::string m : {"m1", "m2"}) {
    tb.add(m, "vanilla", "a", "c", Polarity::positive, 50);
    tb.add(m, "vanilla", "b", "c", Polarity::positive, 60);
  }
  const auto grid = bias_grid(cell_means(tb.t, axes({"c"})), "vanilla");
  CHECK(consensus(grid, "c", Polarity::positive) == 0.0);

  TableBuilder one;
  one.add("m1", "vanilla", "a", "c", Polarity::positive, 50);
  one.add("m1", "vanilla", "b", "c", Polarity::positive, 50);
  CHECK_THROWS_AS(consensus(bias_grid(cell_means(one.t, axes({"c"})), "vanilla"), "c", Polarity::positive),
                  MetricError);
}

TEST_CASE("empty cells have no mean and bias refuses them") {
  TableBuilder tb;
  tb.add("m", "vanilla", "a", "c1", Polarity::positive, 50);
  const auto stats = cell_means(tb.t, axes({"c1", "c2"}));
  CHECK(stats.at("m", "vanilla", "b", "c1", Polarity::positive).n == 0);
  CHECK_FALSE(stats.at("m", "vanilla", "b", "c1", Polarity::positive).mean);
  CHECK_THROWS_AS(bias(stats, "c1", "m", Polarity::positive), MetricError);
  CHECK(bias_grid(stats, "vanilla").values.empty());
}

TEST_CASE("rankings order by value with category tie-break") {
  TableBuilder tb;
  const std::map<std::string, std::pair<int, int>> per_cat{{"c1", {10, 30}}, {"c2", {0, 0}}, {"c3", {20, -20}},
                                                            {"c0", {10, 30}}};
  for (const auto& [c, d] : per_cat) {
    tb.add("m1", "vanilla", "a", c, Polarity::positive, 50);
    tb.add("m1", "vanilla", "b", c, Polarity::positive, 50 + d.first);
    tb.add("m2", "vanilla", "a", c, Polarity::positive, 50);
    tb.add("m2", "vanilla", "b", c, Polarity::positive, 50 + d.second);
  }
  const auto grid = bias_grid(cell_means(tb.t, axes({"c3", "c2", "c1", "c0"})), "vanilla");
  const auto r = category_rankings(grid).positive;
  auto names = [](const std::vector<RankedCategory>& v) {
    std::vector<std::string> out;
    for (const auto& x : v) out.push_back(x.category);
    return out;
  };
  // absolute: c0 40, c1 40, c2 0, c3 40; consensus: c0 10, c1 10, c2 0, c3 20
  CHECK(names(r.most_biased) == std::vector<std::string>{"c0", "c1", "c3", "c2"});
  CHECK(names(r.least_biased) == std::vector<std::string>{"c2", "c0", "c1", "c3"});
  CHECK(names(r.controversial) == std::vector<std::string>{"c3", "c0", "c1", "c2"});
  CHECK(names(r.consensual) == std::vector<std::string>{"c2", "c0", "c1", "c3"});
  CHECK(r.controversial[0].value == Approx(20));
  CHECK(category_rankings(grid).negative.most_biased.empty());
}

TEST_CASE("pairwise differences match a brute-force search") {
  std::mt19937 rng(31);
  TableBuilder tb;
  const std::vector<std::string> models{"m1", "m2", "m3", "m4"};
  const std::vector<std::string> cats{"c1", "c2"};
  for (const auto& m : models)
    for (const auto& c : cats)
      for (auto p : kPolarities)
        for (const std::string e : {"a", "b"}) tb.add(m, "vanilla", e, c, p, static_cast<int>(rng() % 101));
  const auto grid = bias_grid(cell_means(tb.t, axes(cats)), "vanilla");
  const auto diffs = pairwise_model_differences(grid);
  REQUIRE(diffs.size() == 2);
  for (const auto& d : diffs) {
    double best = -1;
    for (const auto& i : models)
      for (const auto& j : models) {
        const double ci = *grid.get(d.category, i, Polarity::positive) + *grid.get(d.category, i, Polarity::negative);
        const double cj = *grid.get(d.category, j, Polarity::positive) + *grid.get(d.category, j, Polarity::negative);
        best = std::max(best, std::abs(ci - cj));
      }
    CHECK(d.difference == Approx(best).margin(1e-12));
    CHECK(d.difference == Approx(std::abs(d.combined_i - d.combined_j)).margin(1e-12));
  }
  TableBuilder one;
  one.add("m", "vanilla", "a", "c1", Polarity::positive, 1);
  one.add("m", "vanilla", "b", "c1", Polarity::positive, 1);
  CHECK_THROWS_AS(pairwise_model_differences(bias_grid(cell_means(one.t, axes(cats)), "vanilla")), MetricError);
}

TEST_CASE("aggregate weighting") {
  TableBuilder tb;
  // c1 has three scores, c2 one.
  for (int s : {10, 20, 30}) tb.add("m", "vanilla", "a", "c1", Polarity::positive, s);
  tb.add("m", "vanilla", "a", "c2", Polarity::positive, 100);
  const auto stats = cell_means(tb.t, axes({"c1", "c2"}));
  auto find = [](const std::vector<GrandMean>& v, const std::string& e, Polarity p) {
    for (const auto& g : v)
      if (g.entity == e && g.polarity == p) return g;
    FAIL("missing grand mean");
    return GrandMean{};
  };
  const auto cat = aggregate_summary(stats, "vanilla", Weighting::category);
  const auto st = aggregate_summary(stats, "vanilla", Weighting::statement);
  CHECK(*find(cat, "a", Polarity::positive).mean == Approx((20.0 + 100.0) / 2));
  CHECK(*find(st, "a", Polarity::positive).mean == Approx(160.0 / 4));
  CHECK_FALSE(find(cat, "b", Polarity::positive).mean);
  CHECK(find(cat, "a", Polarity::positive).statements == 4);
}

TEST_CASE("prompt shift pairs by statement id") {
  TableBuilder tb;
  tb.add("m", "vanilla", "a", "c", Polarity::positive, 50, "x1");
  tb.add("m", "vanilla", "a", "c", Polarity::positive, 60, "x2");
  tb.add("m", "vanilla", "a", "c", Polarity::positive, 70, "x3");
  tb.add("m", "citizen_a", "a", "c", Polarity::positive, 57, "x1");
  tb.add("m", "citizen_a", "a", "c", Polarity::positive, 68, "x2");
  tb.add("m", "citizen_a", "a", "c", Polarity::positive, 10, "x9");
  const auto s = prompt_shift(tb.t, "m", "citizen_a", "a", Polarity::positive);
  CHECK(s.mean_shift == Approx(7.5));
  CHECK(s.n_pairs == 2);
  CHECK(s.n_dropped == 2);
  CHECK_THROWS_AS(prompt_shift(tb.t, "m", "citizen_a", "b", Polarity::positive), MetricError);

  const auto table = shift_table(tb.t, axes({"c"}), "vanilla");
  CHECK(std::all_of(table.begin(), table.end(), [](const ShiftResult& r) { return r.variant != "vanilla"; }));
  CHECK(shift_table(tb.t, axes({"c"}), "nope").empty());
}

TEST_CASE("baseline choice") {
  CHECK(choose_baseline({"citizen_a", "vanilla"}) == "vanilla");
  CHECK(choose_baseline({"in_context", "citizen_a"}) == "in_context");
}

TEST_CASE("divergence table ranks within model and polarity") {
  TableBuilder tb;
  tb.add("m", "vanilla", "a", "c1", Polarity::positive, 50);
  tb.add("m", "vanilla", "b", "c1", Polarity::positive, 50);
  tb.add("m", "vanilla", "a", "c2", Polarity::positive, 0);
  tb.add("m", "vanilla", "b", "c2", Polarity::positive, 100);
  const auto rows = divergence_table(cell_means(tb.t, axes({"c1", "c2"})), "vanilla");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].category == "c2");
  CHECK(rows[0].js == 1.0);
  CHECK(rows[0].rank == 1);
  CHECK(rows[1].js == 0.0);
}
