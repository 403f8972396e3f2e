#include <catch_amalgamated.hpp>

#include <regex>

#include "bipolar/report.hpp"
#include "support.hpp"

using namespace bipolar;
using Catch::Approx;

namespace {

// Minimal well-formedness check: balanced tags, one root <svg> with a viewBox.
bool well_formed_svg(const std::string& doc) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  bool saw_root = false;
  while ((i = doc.find('<', i)) != std::string::npos) {
    const auto end = doc.find('>', i);
    if (end == std::string::npos) return false;
    std::string tag = doc.substr(i + 1, end - i - 1);
    i = end + 1;
    if (tag.starts_with("?")) continue;
    if (tag.starts_with("/")) {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
    const std::string name = tag.substr(0, tag.find_first_of(" /"));
    if (!saw_root) {
      if (name != "svg" || tag.find("viewBox=\"") == std::string::npos) return false;
      saw_root = true;
    }
    if (!tag.ends_with("/")) stack.push_back(name);
  }
  return saw_root && stack.empty();
}

std::vector<std::string> attr_values(const std::string& doc, const std::string& element_re, const std::string& attr) {
  std::vector<std::string> out;
  const std::regex re(element_re);
  const std::regex attr_re(attr + "=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(doc.begin(), doc.end(), re); it != std::sregex_iterator(); ++it) {
    const std::string el = it->str();
    std::smatch m;
    if (std::regex_search(el, m, attr_re)) out.push_back(m[1]);
  }
  return out;
}

struct MockRun {
  Codebook cb;
  std::vector<StatementRecord> ds;
  ScoreTable table;
};

MockRun mock_run(const std::string& config_yaml, const std::vector<std::string>& variants) {
  testsupport::TempDir dir("report");
  MockRun r{load_codebook(testsupport::cameo15_path()), {}, {}};
  r.ds = testsupport::cameo_dataset(r.cb);
  const auto cfg = parse_backend_config(config_yaml);
  const auto responses = testsupport::mock_responses(r.ds, r.cb, cfg, variants, dir.path());
  r.table = assemble(r.ds, {responses});
  return r;
}

}  // namespace

TEST_CASE("radar has one axis per category and overlapping polygons for equal means") {
  const auto run = mock_run("model: flat\n", {"vanilla"});
  const auto stats = cell_means(run.table, run.cb);
  const auto svg = emit_radar(stats, "flat", "vanilla");
  CHECK(well_formed_svg(svg));
  CHECK(attr_values(svg, "<line [^>]*class=\"axis\"[^>]*>", "data-category").size() == 30);
  const auto polys = attr_values(svg, "<polygon class=\"entity\"[^>]*>", "points");
  REQUIRE(polys.size() == 4);
  CHECK(polys[0] == polys[1]);
  CHECK(polys[2] == polys[3]);

  Axes two{"ru", "ua", {"make_statement", "cooperate"}};
  CHECK_THROWS_AS(emit_radar(cell_means(run.table, two), "flat", "vanilla"), MetricError);
}

TEST_CASE("scatter points sit on or above the diagonal by the planted delta") {
  const auto flat = mock_run("model: flat\n", {"vanilla"});
  const auto planted = mock_run("model: planted\nmock: {delta: 10}\n", {"vanilla"});
  for (auto pol : kPolarities) {
    const auto f = emit_scatter(cell_means(flat.table, flat.cb), pol, "vanilla");
    const auto p = emit_scatter(cell_means(planted.table, planted.cb), pol, "vanilla");
    CHECK(well_formed_svg(f));
    CHECK(well_formed_svg(p));
    const auto fx = attr_values(f, "<[a-z]+ [^>]*class=\"point\"[^>]*>", "data-x");
    const auto fy = attr_values(f, "<[a-z]+ [^>]*class=\"point\"[^>]*>", "data-y");
    REQUIRE(fx.size() == 15);
    CHECK(fx == fy);
    const auto px = attr_values(p, "<[a-z]+ [^>]*class=\"point\"[^>]*>", "data-x");
    const auto py = attr_values(p, "<[a-z]+ [^>]*class=\"point\"[^>]*>", "data-y");
    REQUIRE(px.size() == 15);
    for (std::size_t i = 0; i < px.size(); ++i) CHECK(std::stod(py[i]) - std::stod(px[i]) == Approx(10));
  }
  ScoreTable empty;
  empty.exclusions[{"m", "vanilla"}] = {};
  const auto svg = emit_scatter(cell_means(empty, flat.cb), Polarity::negative, "vanilla");
  CHECK(well_formed_svg(svg));
  CHECK(svg.find("class=\"point\"") == std::string::npos);
}

TEST_CASE("heatmap colours are symmetric around the midpoint") {
  BiasGrid g;
  g.variant = "vanilla";
  g.models = {"m"};
  g.categories = {"up", "down", "zero"};
  g.values[{"up", "m", Polarity::positive}] = 10;
  g.values[{"down", "m", Polarity::positive}] = -10;
  g.values[{"zero", "m", Polarity::positive}] = 0;
  const auto out = emit_heatmap(g, Polarity::positive, "b - a");
  CHECK(well_formed_svg(out.svg));
  const auto up = heatmap_color(10, 10), down = heatmap_color(-10, 10), mid = heatmap_color(0, 10);
  CHECK(mid.hex() == svg::kMid.hex());
  CHECK(std::abs(up.r - mid.r) == std::abs(down.b - mid.b));
  CHECK(std::abs(up.b - mid.b) == std::abs(down.r - mid.r));
  CHECK(std::abs(up.g - mid.g) == std::abs(down.g - mid.g));
  CHECK(up.hex() != down.hex());
  for (double v : {1.0, 3.5, 7.0}) {
    const auto a = heatmap_color(v, 10), b = heatmap_color(-v, 10);
    CHECK(a.r == b.b);
    CHECK(a.g == b.g);
    CHECK(a.b == b.r);
  }

  const auto fills = attr_values(out.svg, "<rect [^>]*class=\"cell\"[^>]*>", "fill");
  REQUIRE(fills.size() == 3);
  CHECK(fills[0] == up.hex());
  CHECK(fills[1] == down.hex());
  CHECK(fills[2] == mid.hex());

  const auto rows = csv::parse(out.csv);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"variant", "polarity", "model", "category", "bias"});
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(std::stod(rows[i][4]) == *g.get(rows[i][3], rows[i][2], Polarity::positive));
}

TEST_CASE("all-zero heatmap is uniform") {
  BiasGrid g;
  g.variant = "vanilla";
  g.models = {"m1", "m2"};
  g.categories = {"c1", "c2"};
  for (const auto& m : g.models)
    for (const auto& c : g.categories) g.values[{c, m, Polarity::negative}] = 0;
  const auto out = emit_heatmap(g, Polarity::negative, "b - a");
  for (const auto& f : attr_values(out.svg, "<rect [^>]*class=\"cell\"[^>]*>", "fill")) CHECK(f == svg::kMid.hex());
  const std::regex value_re("class=\"value\">([^<]*)<");
  int n = 0;
  for (auto it = std::sregex_iterator(out.svg.begin(), out.svg.end(), value_re); it != std::sregex_iterator(); ++it) {
    CHECK((*it)[1] == "0");
    ++n;
  }
  CHECK(n == 4);
}

TEST_CASE("heatmap CSV round-trips bias values exactly") {
  std::mt19937 rng(3);
  BiasGrid g;
  g.variant = "v";
  g.models = {"m1", "m2"};
  g.categories = {"c1", "c2", "c3"};
  for (const auto& m : g.models)
    for (const auto& c : g.categories) g.values[{c, m, Polarity::positive}] = (static_cast<double>(rng() % 2001) - 1000) / 3.0;
  const auto rows = csv::parse(emit_heatmap(g, Polarity::positive, "").csv);
  REQUIRE(rows.size() == 7);
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(std::stod(rows[i][4]) == *g.get(rows[i][3], rows[i][2], Polarity::positive));
}

TEST_CASE("shift chart places markers at the shift") {
  const Axes axes{"a", "b", {"c"}};
  std::vector<ShiftResult> shifts;
  for (const std::string e : {"a", "b"})
    for (auto p : kPolarities) {
      shifts.push_back({"m", "citizen_a", e, p, 7, 10, 0});
      shifts.push_back({"m", "in_context", e, p, 0, 10, 0});
    }
  const auto svg = emit_shift(shifts, "m", axes, {"citizen_a", "in_context", "lang_x_full"});
  CHECK(well_formed_svg(svg));
  const auto values = attr_values(svg, "<circle class=\"shift\"[^>]*>", "data-shift");
  CHECK(std::count(values.begin(), values.end(), "7.00") == 4);
  CHECK(std::count(values.begin(), values.end(), "0.00") == 4);
  // Zero-shift markers sit exactly on the baseline line.
  const auto baseline_y = attr_values(svg, "<line [^>]*class=\"baseline\"[^>]*>", "y1");
  const auto zero_cy = attr_values(svg, "<circle class=\"shift\"[^>]*data-variant=\"in_context\"[^>]*>", "cy");
  REQUIRE(zero_cy.size() == 4);
  for (const auto& cy : zero_cy) CHECK(std::find(baseline_y.begin(), baseline_y.end(), cy) != baseline_y.end());
  CHECK(svg.find("not available: lang_x_full") != std::string::npos);
}

TEST_CASE("report bundle contents and determinism") {
  const auto run = mock_run("model: planted\nmock: {delta: 10, noise: [-5, 0, 5], seed: 4}\n", {"vanilla", "citizen_ru"});
  ReportInputs in;
  in.table = &run.table;
  in.axes = Axes::from(run.cb);
  const auto a = build_report(in);
  const auto b = build_report(in);
  CHECK(a.files == b.files);
  for (const auto& name : {"means.csv", "js_divergence.csv", "bias_heatmap.csv", "heatmap_positive.svg",
                           "heatmap_negative.svg", "rankings.json", "aggregate.csv", "pairwise.csv", "shift.csv",
                           "radar_planted.svg", "shift_planted.svg", "scatter_positive.svg", "scatter_negative.svg",
                           "manifest.json"})
    CHECK(a.files.count(name) == 1);
  for (const auto& [name, content] : a.files) {
    if (name.ends_with(".svg")) CHECK(well_formed_svg(content));
    if (name.ends_with(".csv")) CHECK(content.find('\n') != std::string::npos);
    if (name.ends_with(".json")) CHECK(nlohmann::json::accept(content));
  }

  // aggregate.csv totals against a hand recomputation from the rows.
  std::map<std::tuple<std::string, std::string, std::string>, std::pair<double, int>> acc;
  for (const auto& r : run.table.rows)
    if (r.variant_id == "vanilla") {
      auto& x = acc[{r.category_id, std::string(to_string(r.polarity)), r.entity_id}];
      x.first += r.score;
      ++x.second;
    }
  std::map<std::string, double> totals;
  for (const auto& c : run.cb.category_ids())
    for (std::string p : {"positive", "negative"}) {
      const auto& ru = acc.at({c, p, "ru"});
      const auto& ua = acc.at({c, p, "ua"});
      totals[p] += std::abs(ua.first / ua.second - ru.first / ru.second);
    }
  const auto rows = csv::parse(a.files.at("aggregate.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"model", "polarity", "mean_ru", "mean_ua", "total_absolute_bias"});
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][4]) == Approx(totals.at(rows[i][1])));

  const auto manifest = nlohmann::json::parse(a.files.at("manifest.json"));
  for (const auto& [name, content] : a.files)
    if (name != "manifest.json") CHECK(manifest["files"][name] == sha256_hex(content));
}

TEST_CASE("report without vanilla warns and leaves shift.csv empty") {
  const auto run = mock_run("model: m\n", {"in_context", "citizen_ru"});
  ReportInputs in;
  in.table = &run.table;
  in.axes = Axes::from(run.cb);
  const auto r = build_report(in);
  CHECK(csv::parse(r.files.at("shift.csv")).size() == 1);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("vanilla") != std::string::npos);

  ScoreTable empty;
  in.table = &empty;
  CHECK_THROWS_AS(build_report(in), MetricError);
}
