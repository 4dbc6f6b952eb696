#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "xitrace/cli.hpp"

using namespace xitrace;
using Catch::Approx;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// split a CSV payload into comment lines and data rows
struct CsvDoc {
  std::vector<std::string> comments;
  std::vector<std::vector<std::string>> rows;  // header first
};

CsvDoc parse_csv(const std::string& text) {
  CsvDoc doc;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      doc.comments.push_back(line);
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    doc.rows.push_back(cells);
  }
  return doc;
}

int run_argv(std::initializer_list<const char*> args) {
  std::vector<const char*> argv(args);
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("config parsing") {
  const Config cfg = Config::from_string(
      "# a comment\n"
      "[operator]\n"
      "kind = harmonic   ; trailing comment\n"
      "a = 2.5\n"
      "\n"
      "[xi]\n"
      "points = 11\n"
      "grid = 1, 2.5  7\n",
      "test.ini");
  CHECK(cfg.require_string("operator", "kind") == "harmonic");
  CHECK(cfg.require_double("operator", "a") == 2.5);
  CHECK(cfg.get_double("operator", "b", -1.0) == -1.0);  // default
  CHECK(cfg.require_int("xi", "points") == 11);
  CHECK(cfg.get_list("xi", "grid", {}) == std::vector<double>{1.0, 2.5, 7.0});
  CHECK(cfg.has("xi", "points"));
  CHECK_FALSE(cfg.has("xi", "missing"));

  // every consulted key lands in the echo, defaults included
  const auto& res = cfg.resolved();
  CHECK(res.at("operator.kind") == "harmonic");
  CHECK(res.at("operator.b") == "-1");
  CHECK(res.at("xi.grid") == "1, 2.5  7");

  SECTION("typo guard") {
    const Config c2 = Config::from_string("[operator]\nkind = zero\nx = 1\n");
    c2.require_string("operator", "kind");
    CHECK_THROWS_AS(c2.check_consumed({"operator"}), config_error);
    CHECK_NOTHROW(c2.check_consumed({"xi"}));  // unowned section ignored
  }
  SECTION("overrides") {
    Config c2 = Config::from_string("[operator]\nkind = zero\n");
    c2.set_override("operator.kind=harmonic");
    CHECK(c2.require_string("operator", "kind") == "harmonic");
    CHECK_THROWS_AS(c2.set_override("nodot=3"), config_error);
    CHECK_THROWS_AS(c2.set_override("operator.kind"), config_error);
  }
}

TEST_CASE("config parse errors") {
  CHECK_THROWS_AS(Config::from_string("key = 1\n"), config_error);  // no section
  CHECK_THROWS_AS(Config::from_string("[s]\njust a line\n"), config_error);
  CHECK_THROWS_AS(Config::from_string("[s\nk = 1\n"), config_error);
  CHECK_THROWS_AS(Config::from_string("[s]\nk = 1\nk = 2\n"), config_error);
  CHECK_THROWS_AS(Config::from_file("/no/such/file.ini"), config_error);
  const Config cfg = Config::from_string("[s]\nk = abc\nl = 1, x\n");
  CHECK_THROWS_AS(cfg.require_double("s", "k"), config_error);
  CHECK_THROWS_AS(cfg.require_int("s", "k"), config_error);
  CHECK_THROWS_AS(cfg.get_list("s", "l", {}), config_error);
  CHECK_THROWS_AS(cfg.require_string("s", "absent"), config_error);
}

TEST_CASE("xi subcommand: free potential grid") {
  const Config cfg = Config::from_string(
      "[operator]\nkind = zero\n"
      "[xi]\nlambda_min = -1\nlambda_max = 5\npoints = 7\n");
  REQUIRE(cli::run_xi(cfg, cli::Emitter{"cli_xi_zero"}) == 0);
  const CsvDoc doc = parse_csv(slurp("cli_xi_zero.csv"));

  REQUIRE_FALSE(doc.comments.empty());
  CHECK(doc.comments[0] == "# xitrace xi v1");
  // resolved config echoed in the preamble
  bool saw_kind = false;
  for (const auto& c : doc.comments)
    saw_kind |= (c == "# config: operator.kind = zero");
  CHECK(saw_kind);

  REQUIRE(doc.rows.size() == 8);  // header + 7 points
  CHECK(doc.rows[0] ==
        std::vector<std::string>{"lambda", "xi", "flagged", "uncertainty"});
  // spectrum of -d^2/dx^2 is [0, inf): xi = 0 below, 1/2 above
  CHECK(std::stod(doc.rows[1][1]) == Approx(0.0).margin(1e-6));   // -1
  for (int r = 3; r <= 7; ++r) {
    CHECK(std::stod(doc.rows[r][1]) == Approx(0.5).margin(1e-6));
    CHECK(doc.rows[r][2] == "0");
  }
}

TEST_CASE("xi subcommand: Jacobi site") {
  const Config cfg = Config::from_string(
      "[operator]\nkind = constant\nvalue = 0\n"
      "[xi]\nlambda_min = -3\nlambda_max = 3\npoints = 5\nsite = 2\n"
      "[tolerances]\neps = 1e-2, 1e-3, 1e-4\n");
  REQUIRE(cli::run_xi(cfg, cli::Emitter{"cli_xi_jac"}) == 0);
  const CsvDoc doc = parse_csv(slurp("cli_xi_jac.csv"));
  REQUIRE(doc.rows.size() == 6);
  // grid -3, -1.5, 0, 1.5, 3: below / in / in / in / above the band
  CHECK(std::stod(doc.rows[1][1]) == Approx(0.0).margin(1e-3));
  CHECK(std::stod(doc.rows[2][1]) == Approx(0.5).margin(1e-3));
  CHECK(std::stod(doc.rows[3][1]) == Approx(0.5).margin(1e-3));
  CHECK(std::stod(doc.rows[4][1]) == Approx(0.5).margin(1e-3));
  CHECK(std::stod(doc.rows[5][1]) == Approx(1.0).margin(1e-3));
}

TEST_CASE("trace subcommand: exact Jacobi identity") {
  const Config cfg = Config::from_string(
      "[operator]\nkind = finite\nvalues = 1.0, -0.5, 0.25\nfirst_index = -1\n"
      "[trace]\nsite = 0\n");
  REQUIRE(cli::run_trace(cfg, cli::Emitter{"cli_trace_jac"}) == 0);
  const auto j = nlohmann::json::parse(slurp("cli_trace_jac.json"));
  CHECK(j["schema_version"] == "1");
  CHECK(j["result"]["family"] == "jacobi");
  CHECK(j["result"]["true_value"].get<double>() == -0.5);
  CHECK(j["result"]["value"].get<double>() ==
        Approx(-0.5).margin(1e-10));  // counting identity is exact
  CHECK(j["config"]["trace.first"] == "-12");  // defaults echoed
}

TEST_CASE("trace subcommand: harmonic fixture reconstructs V(0) = -1") {
  const Config cfg = Config::from_string(
      "[operator]\nkind = harmonic\na = 1\nb = -1\n"
      "[trace]\nx = 0\nlambda_max = 80\n");
  REQUIRE(cli::run_trace(cfg, cli::Emitter{"cli_trace_harm"}) == 0);
  const auto j = nlohmann::json::parse(slurp("cli_trace_harm.json"));
  CHECK(j["result"]["family"] == "schrodinger");
  CHECK(j["result"]["value"].get<double>() == Approx(-1.0).margin(0.02));
  CHECK(j["result"]["abel"]["raw"].size() == 3);
  CHECK(j["result"]["abel"]["converged"].get<bool>());
  CHECK_FALSE(j["result"]["summable"].get<bool>());
}

TEST_CASE("bands subcommand emits CSV and JSON") {
  const Config cfg = Config::from_string(
      "[operator]\nkind = mathieu\namplitude = 2.0\n"
      "[bands]\ncount = 5\nx = 0.7\n");
  REQUIRE(cli::run_bands(cfg, cli::Emitter{"cli_bands"}) == 0);

  const CsvDoc doc = parse_csv(slurp("cli_bands.csv"));
  REQUIRE(doc.rows.size() == 6);
  CHECK(doc.rows[0][0] == "band");
  // edges ascend and the last band has no gap columns
  double prev = -1e300;
  for (int b = 1; b <= 5; ++b) {
    const double lo = std::stod(doc.rows[b][1]), hi = std::stod(doc.rows[b][2]);
    CHECK(lo > prev);
    CHECK(hi > lo);
    prev = hi;
  }
  CHECK(doc.rows[5][4].empty());
  CHECK(doc.rows[5][5].empty());

  const auto j = nlohmann::json::parse(slurp("cli_bands.json"));
  CHECK(j["result"]["edges"].size() == 10);
  CHECK(j["result"]["mu"].size() == 4);
  const double v = j["result"]["reconstruction"]["value"].get<double>();
  const double truth = 2.0 * std::cos(0.7);
  const double tail = j["result"]["reconstruction"]["tail_bound"].get<double>();
  CHECK(std::abs(v - truth) <= tail + 1e-6);
}

TEST_CASE("scatter subcommand: bound column stays satisfied") {
  const Config cfg = Config::from_string(
      "[operator]\nkind = square_well\ndepth = 1.5\nwidth = 2.0\n"
      "[scatter]\nlambda_min = 0.2\nlambda_max = 4\npoints = 9\nx = 0.3\n");
  REQUIRE(cli::run_scatter(cfg, cli::Emitter{"cli_scatter"}) == 0);
  const CsvDoc doc = parse_csv(slurp("cli_scatter.csv"));
  REQUIRE(doc.rows.size() == 10);
  for (std::size_t r = 1; r < doc.rows.size(); ++r) {
    CHECK(doc.rows[r][10] == "1");  // bound_ok
    CHECK(std::stod(doc.rows[r][7]) < 1e-8);  // unitarity defect
    const double xi = std::stod(doc.rows[r][8]);
    CHECK(std::abs(xi - 0.5) <= std::stod(doc.rows[r][9]) + 1e-12);
  }
}

TEST_CASE("am subcommand") {
  SECTION("explicit rationals; the 1/2 row clears the measure bound") {
    const Config cfg = Config::from_string(
        "[am]\ncoupling = 1.0\nrationals = 1/2, 1/3\n");
    REQUIRE(cli::run_am(cfg, cli::Emitter{"cli_am"}) == 0);
    const CsvDoc doc = parse_csv(slurp("cli_am.csv"));
    REQUIRE(doc.rows.size() == 3);
    CHECK(doc.rows[1][0] == "1");
    CHECK(doc.rows[1][1] == "2");
    CHECK(std::stod(doc.rows[1][5]) >= 2.0);           // measure
    CHECK(std::stod(doc.rows[1][6]) == Approx(2.0));   // 4 - 2 coupling
    CHECK(std::stod(doc.rows[2][5]) >= 2.0);
  }
  SECTION("max_q enumeration is sorted by alpha, lowest terms only") {
    const Config cfg = Config::from_string("[am]\ncoupling = 0.4\nmax_q = 3\n");
    REQUIRE(cli::run_am(cfg, cli::Emitter{"cli_am_enum"}) == 0);
    const CsvDoc doc = parse_csv(slurp("cli_am_enum.csv"));
    // 0/1, 1/3, 1/2, 2/3, 1/1
    REQUIRE(doc.rows.size() == 6);
    const std::vector<std::pair<std::string, std::string>> expect = {
        {"0", "1"}, {"1", "3"}, {"1", "2"}, {"2", "3"}, {"1", "1"}};
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(doc.rows[i + 1][0] == expect[i].first);
      CHECK(doc.rows[i + 1][1] == expect[i].second);
    }
  }
  SECTION("bad rational") {
    const Config cfg = Config::from_string("[am]\ncoupling = 1\nrationals = 7\n");
    CHECK_THROWS_AS(cli::run_am(cfg, cli::Emitter{"unused"}), config_error);
  }
}

TEST_CASE("borg subcommand") {
  const Config cfg = Config::from_string(
      "[operator]\nkind = harmonic\n[borg]\nn_levels = 12\n");
  REQUIRE(cli::run_borg(cfg, cli::Emitter{"cli_borg"}) == 0);
  const auto j = nlohmann::json::parse(slurp("cli_borg.json"));
  CHECK(j["schema_version"] == "1");
  CHECK(j["result"]["eigenvalues"].size() == 12);
  CHECK(j["result"]["eigenvalues"][0].get<double>() == Approx(1.0).margin(1e-6));
  CHECK(j["result"]["v0_true"].get<double>() == 0.0);
  CHECK(j["result"]["low_confidence"].get<bool>());  // 12 levels is thin
  CHECK(j["result"]["abs_error"].get<double>() < 0.25);
}

TEST_CASE("descriptor errors") {
  // unknown kind
  {
    const Config cfg = Config::from_string(
        "[operator]\nkind = cubic\n[xi]\nlambda_min = 0\nlambda_max = 1\n");
    CHECK_THROWS_AS(cli::run_xi(cfg, cli::Emitter{"unused"}), config_error);
  }
  // unconsumed key in an owned section (typo)
  {
    const Config cfg = Config::from_string(
        "[operator]\nkind = zero\n"
        "[xi]\nlambda_min = 0\nlambda_max = 1\npoinst = 5\n");
    CHECK_THROWS_AS(cli::run_xi(cfg, cli::Emitter{"unused"}), config_error);
  }
  // scattering energies must be positive
  {
    const Config cfg = Config::from_string(
        "[operator]\nkind = square_well\ndepth = 1\nwidth = 1\n"
        "[scatter]\nlambda_min = -1\nlambda_max = 1\n");
    CHECK_THROWS_AS(cli::run_scatter(cfg, cli::Emitter{"unused"}), config_error);
  }
  // a periodic potential is not short-range: admission is a descriptor error
  {
    const Config cfg = Config::from_string(
        "[operator]\nkind = mathieu\namplitude = 1\n"
        "[scatter]\nlambda_min = 1\nlambda_max = 2\npoints = 2\n");
    CHECK_THROWS_AS(cli::run_scatter(cfg, cli::Emitter{"unused"}),
                    std::invalid_argument);
  }
  // bands on a non-periodic potential
  {
    const Config cfg = Config::from_string("[operator]\nkind = zero\n");
    CHECK_THROWS_AS(cli::run_bands(cfg, cli::Emitter{"unused"}),
                    std::invalid_argument);
  }
}

TEST_CASE("argv plumbing and exit codes") {
  // missing config file -> 2, even through the full driver
  {
    std::ostringstream captured;
    auto* old = std::cerr.rdbuf(captured.rdbuf());
    const int code = run_argv({"xitrace", "xi", "-c", "/no/such/file.ini"});
    std::cerr.rdbuf(old);
    CHECK(code == 2);
    CHECK(captured.str().find("config error") != std::string::npos);
  }
  // no subcommand -> usage error
  {
    std::ostringstream captured;
    auto* old = std::cerr.rdbuf(captured.rdbuf());
    const int code = run_argv({"xitrace"});
    std::cerr.rdbuf(old);
    CHECK(code == 2);
  }
  // --help exits 0 and documents the CSV columns
  {
    std::ostringstream captured;
    auto* old = std::cout.rdbuf(captured.rdbuf());
    const int code = run_argv({"xitrace", "--help"});
    std::cout.rdbuf(old);
    CHECK(code == 0);
    CHECK(captured.str().find("xi") != std::string::npos);
  }
  {
    std::ostringstream captured;
    auto* old = std::cout.rdbuf(captured.rdbuf());
    const int code = run_argv({"xitrace", "scatter", "--help"});
    std::cout.rdbuf(old);
    CHECK(code == 0);
    CHECK(captured.str().find("unitarity_defect") != std::string::npos);
  }
}

TEST_CASE("determinism: reruns and thread counts are byte-identical") {
  const std::string text =
      "[operator]\nkind = square_well\ndepth = 2.0\nwidth = 1.5\n"
      "[scatter]\nlambda_min = 0.3\nlambda_max = 5\npoints = 24\n";
  const Config cfg1 = Config::from_string(text);
  REQUIRE(cli::run_scatter(cfg1, cli::Emitter{"cli_det_a"}) == 0);

  // same input again
  const Config cfg2 = Config::from_string(text);
  REQUIRE(cli::run_scatter(cfg2, cli::Emitter{"cli_det_b"}) == 0);
  CHECK(slurp("cli_det_a.csv") == slurp("cli_det_b.csv"));

  // single-threaded sweep must assemble the identical file
  setenv("XITRACE_THREADS", "1", 1);
  const Config cfg3 = Config::from_string(text);
  REQUIRE(cli::run_scatter(cfg3, cli::Emitter{"cli_det_c"}) == 0);
  unsetenv("XITRACE_THREADS");
  CHECK(slurp("cli_det_a.csv") == slurp("cli_det_c.csv"));

  // JSON route too
  const std::string jtext =
      "[operator]\nkind = finite\nvalues = 0.4, -1.1\n[trace]\nsite = 1\n";
  const Config j1 = Config::from_string(jtext);
  const Config j2 = Config::from_string(jtext);
  REQUIRE(cli::run_trace(j1, cli::Emitter{"cli_det_j1"}) == 0);
  REQUIRE(cli::run_trace(j2, cli::Emitter{"cli_det_j2"}) == 0);
  CHECK(slurp("cli_det_j1.json") == slurp("cli_det_j2.json"));
}

TEST_CASE("stdout emission matches file emission") {
  const std::string text =
      "[am]\ncoupling = 0.5\nrationals = 1/2\n";
  const Config c1 = Config::from_string(text);
  REQUIRE(cli::run_am(c1, cli::Emitter{"cli_am_file"}) == 0);

  const Config c2 = Config::from_string(text);
  std::ostringstream captured;
  auto* old = std::cout.rdbuf(captured.rdbuf());
  const int code = cli::run_am(c2, cli::Emitter{""});
  std::cout.rdbuf(old);
  REQUIRE(code == 0);
  CHECK(captured.str() == slurp("cli_am_file.csv"));
}
