#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "epirecon/cli.hpp"

using namespace epirecon;
namespace fs = std::filesystem;

namespace {

const std::string kData = EPIRECON_DATA_DIR;

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("epirecon_cli_") + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string path(const std::string& name) const { return (root_ / name).string(); }
  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(path(name), std::ios::binary) << content;
    return path(name);
  }
  static std::vector<std::string> files(const std::string& dir) {
    std::vector<std::string> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
  }

  fs::path root_;
};

std::string metadata(const std::string& csv_text, const std::string& key) {
  std::istringstream in(csv_text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# " + key + ": ", 0) == 0) return line.substr(key.size() + 4);
  }
  return {};
}

std::vector<double> column(const util::CsvTable& t, const std::string& name) {
  const int c = t.column(name);
  std::vector<double> v;
  for (const auto& r : t.rows) v.push_back(util::parse_double(r[static_cast<std::size_t>(c)], name));
  return v;
}

void expect_csv_twins(const std::string& dir) {
  for (const auto& f : fs::directory_iterator(dir)) {
    if (f.path().extension() != ".svg") continue;
    auto twin = f.path();
    twin.replace_extension(".csv");
    EXPECT_TRUE(fs::exists(twin)) << f.path();
  }
}

std::vector<std::string> excess_args(const std::string& dir, const std::string& out) {
  return {"excess",
          "--input", dir + "/weekly_deaths.csv",
          "--life-table", dir + "/life_table.csv",
          "--population", dir + "/population.csv",
          "--population-ref", dir + "/population_ref.csv",
          "--target-start", "2019-12-30",
          "--out-dir", out};
}

// Cumulative lifetable-style excess over the target as a fraction of deaths.
double excess_fraction(const std::string& report_csv) {
  const auto t = util::read_csv(report_csv);
  const auto obs = column(t, "observed");
  double total = 0.0;
  for (double d : obs) total += d;
  return column(t, "cum_excess").back() / total;
}

}  // namespace

TEST_F(Cli, DeconvOnBundledDatasetFindsThePeak) {
  const auto out = path("out");
  const auto r = run({"deconv", "--input", kData + "/deaths_two_wave.csv", "--lockdowns", kData + "/lockdowns.csv",
                      "--out-dir", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("peak incidence: "), std::string::npos);
  EXPECT_EQ(files(out), (std::vector<std::string>{"forward_check.csv", "forward_check.svg", "incidence.csv",
                                                  "incidence.svg", "logR.csv", "logR.svg"}));
  const auto t = util::read_csv(out + "/incidence.csv");
  ASSERT_EQ(t.header, (std::vector<std::string>{"date", "inc_mean", "inc_lo", "inc_hi", "fitted_deaths"}));
  const auto inc = column(t, "inc_mean");
  const auto peak = static_cast<std::size_t>(std::max_element(inc.begin(), inc.end()) - inc.begin());
  const util::Date truth = util::parse_date("2020-03-01") + std::chrono::days{cli::datasets::kTwoWavePeakDay};
  EXPECT_LE(std::abs((util::parse_date(t.rows[peak][0]) - truth).count()), 2);
  // the lockdown marker is drawn and recorded in the CSV twins
  EXPECT_EQ(metadata(util::read_file(out + "/incidence.csv"), "lockdowns"), "2020-03-23");
  EXPECT_NE(util::read_file(out + "/incidence.svg").find("stroke=\"#d62728\""), std::string::npos);
  expect_csv_twins(out);
}

TEST_F(Cli, NegBinBandsAreWiderOnOverdispersedData) {
  const auto rp = run({"deconv", "--input", kData + "/deaths_overdispersed.csv", "--out-dir", path("p")});
  const auto rn = run({"deconv", "--input", kData + "/deaths_overdispersed.csv", "--family", "negbin", "--out-dir",
                       path("n")});
  ASSERT_EQ(rp.code, 0) << rp.err;
  ASSERT_EQ(rn.code, 0) << rn.err;
  const double ap = util::parse_double(metadata(util::read_file(path("p/incidence.csv")), "band_area"), "area");
  const double an = util::parse_double(metadata(util::read_file(path("n/incidence.csv")), "band_area"), "area");
  EXPECT_GT(an, ap);
  EXPECT_EQ(metadata(util::read_file(path("p/incidence.csv")), "dispersion"), "NaN");
  EXPECT_GT(util::parse_double(metadata(util::read_file(path("n/incidence.csv")), "dispersion"), "size"), 0.0);
}

TEST_F(Cli, EmptyCsvExitsTwoWithoutOutputs) {
  const auto in = write("empty.csv", "date,deaths\n");
  const auto r = run({"deconv", "--input", in, "--out-dir", path("out")});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(files(path("out")).empty());
  const auto blank = write("blank.csv", "");
  EXPECT_EQ(run({"deconv", "--input", blank, "--out-dir", path("out")}).code, 2);
  EXPECT_TRUE(files(path("out")).empty());
}

TEST_F(Cli, MissingLifeTableExitsFourNamingThePath) {
  auto args = excess_args(kData + "/stationary", path("out"));
  const std::string missing = path("no_such_life_table.csv");
  args[4] = missing;
  const auto r = run(args);
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
  EXPECT_TRUE(files(path("out")).empty());
}

TEST_F(Cli, InvalidInputsWriteNothing) {
  // a bad date fails after the series is read, still before any output
  const auto bad = write("bad.csv", "date,deaths\n2020-01-01,3\n2020-01-03,4\n");
  EXPECT_EQ(run({"deconv", "--input", bad, "--out-dir", path("out")}).code, 2);
  EXPECT_EQ(run({"deconv", "--input", kData + "/deaths_two_wave.csv", "--family", "binomial", "--out-dir", path("out")}).code, 2);
  EXPECT_EQ(run({"deconv", "--input", path("missing.csv"), "--out-dir", path("out")}).code, 4);
  EXPECT_EQ(run({"excess", "--input", kData + "/stationary/weekly_deaths.csv", "--out-dir", path("out")}).code, 2);
  EXPECT_EQ(run({"seir", "--dt", "0.5", "--out-dir", path("out")}).code, 2);
  EXPECT_EQ(run({"seir", "--r0", "abc", "--out-dir", path("out")}).code, 2);
  EXPECT_EQ(run({"nonsense"}).code, 2);
  EXPECT_TRUE(files(path("out")).empty());
}

TEST_F(Cli, OutputPathThatIsAFileExitsFour) {
  const auto f = write("taken", "x");
  EXPECT_EQ(run({"finalsize", "--out-dir", f}).code, 4);
}

TEST_F(Cli, FinalSizeGridReadsOneHalfAtLambdaTwoRZeroTwo) {
  for (const auto& args : {std::vector<std::string>{"seir", "--finalsize-grid", "--out-dir", path("s")},
                           std::vector<std::string>{"finalsize", "--out-dir", path("f")}}) {
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const auto& dir : {path("s"), path("f")}) {
    const auto t = util::read_csv(dir + "/finalsize.csv");
    ASSERT_EQ(t.header, (std::vector<std::string>{"R0", "lambda", "x"}));
    int hits = 0;
    for (const auto& row : t.rows) {
      if (row[0] == "2" && row[1] == "2") {
        EXPECT_EQ(row[2], "0.5");
        ++hits;
      }
    }
    EXPECT_EQ(hits, 1);
    EXPECT_EQ(t.rows.size(), 4u * 41u);
    expect_csv_twins(dir);
  }
  const auto r = run({"finalsize", "--r0", "3", "--lambda", "1.2,2.9", "--out-dir", path("g")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto x = column(util::read_csv(path("g/finalsize.csv")), "x");
  ASSERT_EQ(x.size(), 2u);
  EXPECT_DOUBLE_EQ(x[0], seir::final_size(3.0, 1.2));
  EXPECT_GT(x[0], x[1]);
}

TEST_F(Cli, LambdaBelowOneExitsTwo) {
  const auto r = run({"seir", "--lambda", "0.5", "--out-dir", path("out")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("immunity coefficient"), std::string::npos);
  EXPECT_TRUE(files(path("out")).empty());
}

TEST_F(Cli, LockdownScenarioDipsThenRecovers) {
  const auto r = run({"seir", "--config", kData + "/lockdown.cfg", "--out-dir", path("out")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto R = column(util::read_csv(path("out/lockdown.csv")), "R");
  ASSERT_GT(R.size(), 10u);
  // a strictly decreasing run from onset, then a strictly increasing run
  std::size_t m = 0;
  while (m + 1 < R.size() && R[m + 1] < R[m]) ++m;
  EXPECT_GE(m, 2u);
  std::size_t up = m;
  while (up + 1 < R.size() && R[up + 1] > R[up]) ++up;
  EXPECT_GE(up - m, 2u);
  EXPECT_LT(*std::max_element(R.begin() + static_cast<std::ptrdiff_t>(m), R.end()), R[0]);
  expect_csv_twins(path("out"));
}

TEST_F(Cli, SeirTrajectoryMatchesLibrary) {
  const auto r = run({"seir", "--r0", "2.5", "--heterogeneity", "susceptibility", "--k", "2", "--horizon", "200",
                      "--out-dir", path("out")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = util::read_csv(path("out/trajectory.csv"));
  ASSERT_EQ(t.header, (std::vector<std::string>{"t", "S", "E", "I", "incidence", "logR"}));
  seir::SeirConfig c;
  c.R0 = 2.5;
  c.heterogeneity = seir::Heterogeneity::susceptibility;
  c.k = 2.0;
  const auto lib = seir::solve_seir(c, 1e-4, 200.0);
  const auto S = column(t, "S");
  ASSERT_EQ(S.size(), lib.S.size());
  for (std::size_t i = 0; i < S.size(); ++i) EXPECT_EQ(S[i], lib.S[i]);
}

TEST_F(Cli, IdenticalSeedGivesByteIdenticalOutputs) {
  const std::vector<std::string> base{"deconv", "--input", kData + "/deaths_two_wave.csv", "--weekly-cycle", "--seed", "7"};
  auto a = base, b = base, c = base;
  a.insert(a.end(), {"--out-dir", path("a")});
  b.insert(b.end(), {"--out-dir", path("b")});
  c.insert(c.end(), {"--out-dir", path("c")});
  c[5] = "8";
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  ASSERT_EQ(run(c).code, 0);
  for (const auto& f : files(path("a"))) EXPECT_EQ(util::read_file(path("a/" + f)), util::read_file(path("b/" + f))) << f;
  EXPECT_NE(util::read_file(path("a/incidence.csv")), util::read_file(path("c/incidence.csv")));
}

TEST_F(Cli, CsvIsLfTerminatedWithRoundTripDoubles) {
  ASSERT_EQ(run({"deconv", "--input", kData + "/deaths_two_wave.csv", "--out-dir", path("out")}).code, 0);
  for (const auto& f : files(path("out"))) {
    if (fs::path(f).extension() != ".csv") continue;
    const auto text = util::read_file(path("out/" + f));
    EXPECT_EQ(text.find('\r'), std::string::npos) << f;
    ASSERT_FALSE(text.empty());
    EXPECT_EQ(text.back(), '\n');
    const auto t = util::parse_csv(text, f);
    for (const auto& row : t.rows) {
      for (std::size_t i = 1; i < row.size(); ++i) {
        if (row[i].empty() || row[i] == "yes" || row[i] == "no") continue;
        const double v = util::parse_double(row[i], f);
        EXPECT_EQ(util::format_double(v), row[i]) << f;
      }
    }
  }
}

TEST_F(Cli, SimcheckFlagsShiftedDuration) {
  const auto ok = run({"simcheck", "--input", kData + "/deaths_two_wave.csv", "--out-dir", path("ok")});
  const auto bad = run({"simcheck", "--input", kData + "/deaths_two_wave.csv", "--meanlog-shift", "0.5", "--out-dir",
                        path("bad")});
  ASSERT_EQ(ok.code, 0) << ok.err;
  ASSERT_EQ(bad.code, 0) << bad.err;
  EXPECT_EQ(metadata(util::read_file(path("ok/simcheck.csv")), "misspecified"), "no");
  EXPECT_EQ(metadata(util::read_file(path("bad/simcheck.csv")), "misspecified"), "yes");
  EXPECT_GT(util::parse_double(metadata(util::read_file(path("bad/simcheck.csv")), "outside_fraction"), "f"), 0.2);
  expect_csv_twins(path("ok"));
}

TEST_F(Cli, DurationPresets) {
  const auto r = run({"deconv", "--input", kData + "/deaths_two_wave.csv", "--duration", "linton", "--out-dir", path("l")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(metadata(util::read_file(path("l/incidence.csv")), "duration"), "meanlog 3.153 sdlog 0.44 d_max 80");
  EXPECT_EQ(run({"deconv", "--input", kData + "/deaths_two_wave.csv", "--duration", "nobody", "--out-dir", path("x")}).code, 2);
  EXPECT_EQ(run({"deconv", "--input", kData + "/deaths_two_wave.csv", "--duration", "wu", "--presets",
                 path("none.cfg"), "--out-dir", path("x")}).code,
            4);
  EXPECT_TRUE(files(path("x")).empty());
  const auto presets = cli::parse_duration_presets("a.meanlog = 3\na.sdlog = 0.4 # c\n", "p");
  EXPECT_EQ(presets.at("a").meanlog, 3.0);
  EXPECT_EQ(presets.at("a").sdlog, 0.4);
  EXPECT_THROW(cli::parse_duration_presets("a.meanlog = 3\n", "p"), InputError);
  EXPECT_THROW(cli::parse_duration_presets("a.mean = 3\na.sdlog = 1\n", "p"), InputError);
}

TEST_F(Cli, ConfigFileSuppliesDefaultsAndFlagsWin) {
  const auto cfg = write("run.cfg", "# scenario\nr0 = 3\nlambda = 2\nhorizon = 300\n");
  ASSERT_EQ(run({"seir", "--config", cfg, "--out-dir", path("a")}).code, 0);
  ASSERT_EQ(run({"seir", "--config", cfg, "--r0", "2", "--out-dir", path("b")}).code, 0);
  const auto a = util::read_file(path("a/trajectory.csv"));
  const auto b = util::read_file(path("b/trajectory.csv"));
  EXPECT_EQ(metadata(a, "R0").substr(0, 1), "3");
  EXPECT_EQ(metadata(b, "R0").substr(0, 1), "2");
  EXPECT_NE(metadata(b, "R0").find("lambda: 2"), std::string::npos);
  EXPECT_EQ(column(util::read_csv(path("b/trajectory.csv")), "t").back(), 300.0);

  EXPECT_EQ(run({"seir", "--config", write("bad.cfg", "no-such-option = 1\n"), "--out-dir", path("c")}).code, 2);
  EXPECT_EQ(run({"seir", "--config", write("bad2.cfg", "r0\n"), "--out-dir", path("c")}).code, 2);
  EXPECT_EQ(run({"seir", "--config", path("missing.cfg"), "--out-dir", path("c")}).code, 4);
  EXPECT_TRUE(files(path("c")).empty());
}

TEST_F(Cli, StationaryPopulationHasNoLifetableExcess) {
  const auto r = run(excess_args(kData + "/stationary", path("out")));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(files(path("out")),
            (std::vector<std::string>{"ageing.csv", "ageing.svg", "cycle.csv", "excess.csv", "excess.svg",
                                      "excess_lifetable.csv", "excess_no_ageing.csv", "excess_weekly_average.csv"}));
  EXPECT_LT(std::abs(excess_fraction(path("out/excess_lifetable.csv"))), 0.005);
  expect_csv_twins(path("out"));

  // a second stationary population, generated here
  const auto ds = cli::datasets::demography_dataset(cli::datasets::stationary_scenario(9));
  fs::create_directories(path("gen"));
  write("gen/life_table.csv", ds.life_table);
  write("gen/population.csv", ds.population);
  write("gen/population_ref.csv", ds.population_ref);
  write("gen/weekly_deaths.csv", ds.weekly_deaths);
  ASSERT_EQ(run(excess_args(path("gen"), path("out9"))).code, 0);
  EXPECT_LT(std::abs(excess_fraction(path("out9/excess_lifetable.csv"))), 0.005);
}

TEST_F(Cli, AgeingPopulationShowsSpuriousWeeklyAverageExcess) {
  const auto r = run(excess_args(kData + "/ageing", path("out")));
  ASSERT_EQ(r.code, 0) << r.err;
  const double lifetable = excess_fraction(path("out/excess_lifetable.csv"));
  const double weekly = excess_fraction(path("out/excess_weekly_average.csv"));
  const double fixed = excess_fraction(path("out/excess_no_ageing.csv"));
  EXPECT_GT(weekly, 0.01);
  EXPECT_LT(std::abs(lifetable), 0.002);
  EXPECT_LT(std::abs(fixed - weekly), 0.005);
  // the stacked table carries all three methods
  const auto all = util::read_csv(path("out/excess.csv"));
  int methods[3] = {0, 0, 0};
  for (const auto& row : all.rows) {
    methods[0] += row[5] == "lifetable";
    methods[1] += row[5] == "weekly-average";
    methods[2] += row[5] == "lifetable-no-ageing";
  }
  EXPECT_GT(methods[0], 0);
  EXPECT_EQ(methods[0], methods[1]);
  EXPECT_EQ(methods[0], methods[2]);
  const auto ageing = util::read_csv(path("out/ageing.csv"));
  EXPECT_EQ(ageing.rows.front()[0], "50");
}

TEST_F(Cli, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("deconv"), std::string::npos);
}

TEST(Svg, RendersBandsLinesAndMarkers) {
  cli::Plot p;
  p.title = "a < b";
  p.bands.push_back({"band", {0, 1, 2}, {0, 1, 2}, {1, 2, 3}});
  p.lines.push_back({"line", {0, 1, 2}, {0.5, std::nan(""), 2.5}});
  p.markers = {1.0};
  const auto s = p.render();
  EXPECT_EQ(s.rfind("<svg", 0), 0u);
  EXPECT_NE(s.find("a &lt; b"), std::string::npos);
  EXPECT_NE(s.find("<polygon"), std::string::npos);
  // the NaN splits the line in two
  std::size_t polylines = 0;
  for (std::size_t pos = 0; (pos = s.find("<polyline", pos)) != std::string::npos; ++pos) ++polylines;
  EXPECT_EQ(polylines, 2u);
  EXPECT_EQ(s, p.render());
}
