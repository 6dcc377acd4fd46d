#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include <CLI11.hpp>

#include "epirecon/cli/svg.hpp"
#include "epirecon/deconv.hpp"
#include "epirecon/demog.hpp"
#include "epirecon/error.hpp"
#include "epirecon/seir.hpp"
#include "epirecon/util/csv.hpp"

#ifndef EPIRECON_DATA_DIR
#define EPIRECON_DATA_DIR ""
#endif

namespace epirecon::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kInputError = 2, kConvergenceError = 3, kIoError = 4 };

struct OutputFile {
  std::string name;
  std::string content;
};

struct CommandResult {
  std::vector<OutputFile> files;
  // Summary lines for standard output.
  std::vector<std::string> messages;

  void add(std::string name, std::string content) { files.push_back({std::move(name), std::move(content)}); }
};

// Writes every file of `result` into out_dir or none of them: each file goes
// to a temporary name first and all are renamed only when all were written.
inline void commit(const CommandResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path dir(out_dir.empty() ? "." : out_dir);
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    for (const auto& t : temps) fs::remove(t, ec);
  };
  for (const auto& f : result.files) {
    const fs::path tmp = dir / ("." + f.name + ".partial");
    temps.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << f.content;
    out.close();
    if (!out) {
      cleanup();
      throw IoError("cannot write '" + (dir / f.name).string() + "'");
    }
  }
  for (std::size_t i = 0; i < result.files.size(); ++i) {
    fs::rename(temps[i], dir / result.files[i].name, ec);
    if (ec) {
      cleanup();
      throw IoError("cannot write '" + (dir / result.files[i].name).string() + "'");
    }
  }
}

inline void require_readable(const std::string& path, const std::string& what) {
  if (path.empty()) throw InputError(what + ": no file given");
  std::ifstream in(path, std::ios::binary);
  if (!in || std::filesystem::is_directory(path)) throw IoError("cannot read " + what + " '" + path + "'");
}

inline void require_output_dir(const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(out_dir, ec) && !fs::is_directory(out_dir, ec)) {
    throw IoError("output path '" + out_dir + "' is not a directory");
  }
}

inline std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    out.push_back(util::parse_double(std::string_view(text).substr(pos, comma - pos), what));
    pos = comma + 1;
  }
  return out;
}

inline std::string join(const std::vector<double>& v, const char* sep = ";") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + util::format_double(v[i]);
  return s;
}

// ---- duration presets ----

struct DurationPreset {
  double meanlog = deconv::kIsaricMeanlog;
  double sdlog = deconv::kIsaricSdlog;
};

inline std::string default_presets_path() {
  const std::string dir = EPIRECON_DATA_DIR;
  return dir.empty() ? std::string() : dir + "/duration_presets.cfg";
}

// Flat `name.meanlog = x` / `name.sdlog = y` lines; '#' starts a comment.
inline std::map<std::string, DurationPreset> parse_duration_presets(std::string_view text, const std::string& source) {
  std::map<std::string, DurationPreset> out;
  std::map<std::string, int> seen;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty()) continue;
    const auto where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    const auto dot = line.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) throw InputError(where + ": expected name.field = value");
    std::string name = line.substr(0, dot);
    std::string field = line.substr(dot + 1, eq - dot - 1);
    field.erase(field.find_last_not_of(" \t") + 1);
    const double v = util::parse_double(line.substr(eq + 1), where);
    if (field == "meanlog") {
      out[name].meanlog = v;
    } else if (field == "sdlog") {
      out[name].sdlog = v;
    } else {
      throw InputError(where + ": unknown field '" + field + "'");
    }
    ++seen[name];
  }
  for (const auto& [name, n] : seen) {
    if (n != 2) throw InputError(source + ": preset '" + name + "' needs both meanlog and sdlog");
  }
  return out;
}

// ---- deconv and simcheck ----

struct DeconvArgs {
  std::string input;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  std::string family = "poisson";
  bool weekly_cycle = false;
  int K = 0;
  int d_start = 20;
  int d_limit = 80;
  int d_max = 80;
  std::string duration = "isaric";
  std::string presets = default_presets_path();
  std::optional<double> meanlog, sdlog;
  // Rates for R(t): 1/mean latency and 1/mean infectious duration, per day.
  double delta = 1.0 / 3.0;
  double gamma = 1.0 / 5.0;
  std::string lockdowns;
  int n_rep = 100;
  int n_draws = 1000;
  // simcheck: added to meanlog of the duration used for resimulation.
  double meanlog_shift = 0.0;
};

inline deconv::Family parse_family(const std::string& s) {
  if (s == "poisson") return deconv::Family::poisson;
  if (s == "negbin") return deconv::Family::negbin;
  throw ParameterError("unknown family '" + s + "' (poisson or negbin)");
}

struct DeconvInputs {
  deconv::DeathSeries series;
  deconv::DurationDist duration;
  std::vector<util::Date> lockdowns;
};

inline DeconvInputs load_deconv_inputs(const DeconvArgs& a) {
  require_readable(a.input, "death series");
  if (!a.lockdowns.empty()) require_readable(a.lockdowns, "lockdown dates");
  DurationPreset p;
  if (a.duration != "isaric") {
    if (a.presets.empty()) throw InputError("duration preset '" + a.duration + "' needs a presets file");
    require_readable(a.presets, "duration presets");
  }
  require_output_dir(a.out_dir);
  parse_family(a.family);

  DeconvInputs in;
  if (a.duration != "isaric") {
    const auto presets = parse_duration_presets(util::read_file(a.presets), a.presets);
    const auto it = presets.find(a.duration);
    if (it == presets.end()) throw InputError("unknown duration preset '" + a.duration + "' in '" + a.presets + "'");
    p = it->second;
  }
  in.duration = deconv::discretize_duration(a.meanlog.value_or(p.meanlog), a.sdlog.value_or(p.sdlog), a.d_max);
  in.series = deconv::read_death_csv(a.input);
  if (!a.lockdowns.empty()) {
    const auto t = util::read_csv(a.lockdowns);
    const int c = t.require_column("date", a.lockdowns);
    for (const auto& row : t.rows) in.lockdowns.push_back(util::parse_date(row[static_cast<std::size_t>(c)]));
  }
  return in;
}

inline deconv::IncidenceReconstruction fit_deaths(const DeconvArgs& a, const DeconvInputs& in) {
  deconv::ReconstructOptions o;
  o.family = parse_family(a.family);
  o.weekly_cycle = a.weekly_cycle;
  o.K = a.K;
  o.d_start = a.d_start;
  o.d_limit = a.d_limit;
  o.n_draws = a.n_draws;
  o.seed = a.seed;
  return deconv::reconstruct_incidence(in.series, in.duration, o);
}

// Area between the upper and lower incidence bands over the interior days
// 0 .. n-1-mode of the series, where deaths inform the incidence. Near the
// ends the bands mostly reflect the prior.
inline double band_area(const deconv::IncidenceReconstruction& r, const deconv::DurationDist& duration) {
  const int last = static_cast<int>(r.series.size()) - 1 - duration.mode();
  double s = 0.0;
  for (std::size_t j = 0; j < r.grid_size(); ++j) {
    if (r.day(j) >= 0 && r.day(j) <= last) s += r.incidence_hi[j] - r.incidence_lo[j];
  }
  return s;
}

inline std::vector<double> date_axis(const deconv::IncidenceReconstruction& r) {
  std::vector<double> x;
  for (std::size_t j = 0; j < r.grid_size(); ++j) x.push_back(day_number(r.date(j)));
  return x;
}

inline std::vector<double> marker_days(const std::vector<util::Date>& dates) {
  std::vector<double> x;
  for (auto d : dates) x.push_back(day_number(d));
  return x;
}

inline void add_lockdown_comment(util::CsvWriter& w, const std::vector<util::Date>& dates) {
  if (dates.empty()) return;
  std::string s = "lockdowns:";
  for (auto d : dates) s += " " + util::format_date(d);
  w.comment(s);
}

inline void add_envelope(CommandResult& out, const std::string& stem, const std::string& title,
                         const deconv::IncidenceReconstruction& rec, const deconv::SimulationEnvelope& env,
                         const std::vector<util::Date>& lockdowns) {
  util::CsvWriter w;
  w.comment("replicates: " + std::to_string(env.n_rep));
  w.comment("outside_fraction: " + util::format_double(env.outside_fraction));
  w.comment(std::string("misspecified: ") + (env.misspecified ? "yes" : "no"));
  add_lockdown_comment(w, lockdowns);
  w.row({"date", "observed", "fitted", "lo", "hi", "min", "max", "outside"});
  Plot plot;
  plot.title = title;
  plot.xlabel = "date";
  plot.ylabel = "deaths per day";
  plot.date_axis = true;
  plot.markers = marker_days(lockdowns);
  Band band{"95% envelope", {}, {}, {}, "#7f7f7f"};
  Line obs{"observed", {}, {}, "#000000"};
  Line fit{"fitted", {}, {}, "#1f77b4", true};
  for (std::size_t i = 0; i < rec.series.size(); ++i) {
    const double y = rec.series.deaths[i];
    const bool outside = y < env.lo[i] || y > env.hi[i];
    w.row({util::format_date(rec.series.date(i)), util::format_double(y), util::format_double(rec.fitted_deaths[i]),
           util::format_double(env.lo[i]), util::format_double(env.hi[i]), util::format_double(env.min[i]),
           util::format_double(env.max[i]), outside ? "1" : "0"});
    const double x = day_number(rec.series.date(i));
    band.x.push_back(x);
    band.lo.push_back(env.lo[i]);
    band.hi.push_back(env.hi[i]);
    obs.x.push_back(x);
    obs.y.push_back(y);
    fit.x.push_back(x);
    fit.y.push_back(rec.fitted_deaths[i]);
  }
  plot.bands.push_back(std::move(band));
  plot.lines = {std::move(obs), std::move(fit)};
  out.add(stem + ".csv", w.str());
  out.add(stem + ".svg", plot.render());
}

inline std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * fraction);
  return buf;
}

// Incidence reconstruction, R(t) and the forward simulation check.
inline CommandResult cmd_deconv(const DeconvArgs& a) {
  if (!(a.delta > 0.0) || !(a.gamma > 0.0)) throw ParameterError("deconv: delta and gamma must be positive");
  const DeconvInputs in = load_deconv_inputs(a);
  const auto rec = fit_deaths(a, in);
  const auto R = seir::r_from_incidence(rec.incidence_mean, a.delta, a.gamma);
  const auto env = deconv::forward_simulate_check(rec, in.duration, a.n_rep, a.seed);
  const auto x = date_axis(rec);
  CommandResult out;

  {
    util::CsvWriter w;
    w.comment(std::string("family: ") + deconv::family_name(rec.family));
    w.comment("K: " + std::to_string(rec.K));
    w.comment("lambdas: " + join(std::vector<double>(rec.fit.lambdas.data(), rec.fit.lambdas.data() + rec.fit.lambdas.size())));
    w.comment("dispersion: " + util::format_double(rec.dispersion));
    w.comment("d_start: " + std::to_string(rec.d_start) + " d_limit: " + std::to_string(rec.d_limit));
    w.comment("duration: meanlog " + util::format_double(in.duration.meanlog) + " sdlog " +
              util::format_double(in.duration.sdlog) + " d_max " + std::to_string(in.duration.d_max));
    if (!rec.weekly_cycle.empty()) w.comment("weekly_cycle (Sun..Sat): " + join(rec.weekly_cycle));
    w.comment("band_area: " + util::format_double(band_area(rec, in.duration)));
    add_lockdown_comment(w, in.lockdowns);
    w.row({"date", "inc_mean", "inc_lo", "inc_hi", "fitted_deaths"});
    Plot plot;
    plot.title = "Reconstructed fatal incidence";
    plot.xlabel = "date";
    plot.ylabel = "infections per day";
    plot.date_axis = true;
    plot.markers = marker_days(in.lockdowns);
    Line fitted{"fitted deaths", {}, {}, "#000000", true};
    for (std::size_t j = 0; j < rec.grid_size(); ++j) {
      const int i = rec.day(j);
      const bool in_series = i >= 0;
      w.row({util::format_date(rec.date(j)), util::format_double(rec.incidence_mean[j]),
             util::format_double(rec.incidence_lo[j]), util::format_double(rec.incidence_hi[j]),
             in_series ? util::format_double(rec.fitted_deaths[static_cast<std::size_t>(i)]) : ""});
      if (in_series) {
        fitted.x.push_back(x[j]);
        fitted.y.push_back(rec.fitted_deaths[static_cast<std::size_t>(i)]);
      }
    }
    plot.bands.push_back({"95% band", x, rec.incidence_lo, rec.incidence_hi, "#1f77b4"});
    plot.lines.push_back({"incidence", x, rec.incidence_mean, "#1f77b4"});
    plot.lines.push_back(std::move(fitted));
    out.add("incidence.csv", w.str());
    out.add("incidence.svg", plot.render());
  }
  {
    util::CsvWriter w;
    w.comment("delta: " + util::format_double(a.delta) + " gamma: " + util::format_double(a.gamma));
    w.comment("burn_in_days: " + util::format_double(R.burn_in));
    add_lockdown_comment(w, in.lockdowns);
    w.row({"date", "logR", "R", "reliable"});
    std::vector<double> shown;
    for (std::size_t j = 0; j < rec.grid_size(); ++j) {
      w.row({util::format_date(rec.date(j)), util::format_double(R.log_R[j]), util::format_double(R.R[j]),
             R.reliable[j] ? "1" : "0"});
      shown.push_back(R.reliable[j] ? R.log_R[j] : std::numeric_limits<double>::quiet_NaN());
    }
    Plot plot;
    plot.title = "Log reproduction number";
    plot.xlabel = "date";
    plot.ylabel = "log R";
    plot.date_axis = true;
    plot.markers = marker_days(in.lockdowns);
    plot.lines.push_back({"log R (reliable days)", x, shown, "#2ca02c"});
    out.add("logR.csv", w.str());
    out.add("logR.svg", plot.render());
  }
  add_envelope(out, "forward_check", "Forward simulation check", rec, env, in.lockdowns);

  const std::size_t pk = rec.peak_index();
  out.messages.push_back("peak incidence: " + util::format_date(rec.date(pk)) + " (" +
                         util::format_double(rec.incidence_mean[pk]) + " per day)");
  out.messages.push_back("band area: " + util::format_double(band_area(rec, in.duration)));
  out.messages.push_back("forward check: " + percent(env.outside_fraction) + " of days outside the 95% envelope");
  return out;
}

// Fits the deaths, then resimulates them with the duration meanlog shifted
// by meanlog_shift and reports how often the data leave the envelope.
inline CommandResult cmd_simcheck(const DeconvArgs& a) {
  const DeconvInputs in = load_deconv_inputs(a);
  const auto rec = fit_deaths(a, in);
  const auto sim_duration =
      deconv::discretize_duration(in.duration.meanlog + a.meanlog_shift, in.duration.sdlog, in.duration.d_max);
  const auto env = deconv::forward_simulate_check(rec, sim_duration, a.n_rep, a.seed);
  CommandResult out;
  add_envelope(out, "simcheck", "Forward simulation check", rec, env, in.lockdowns);
  out.messages.push_back("outside envelope: " + percent(env.outside_fraction) + " of days");
  out.messages.push_back(std::string("misspecified: ") + (env.misspecified ? "yes" : "no"));
  return out;
}

// ---- excess ----

struct ExcessArgs {
  std::string input;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  std::string life_table;
  std::string population;
  std::string population_ref;
  std::string target_start;
  std::string error = "t";
  int age_floor = 50;
};

inline CommandResult cmd_excess(const ExcessArgs& a) {
  require_readable(a.input, "weekly deaths");
  require_readable(a.life_table, "life table");
  require_readable(a.population, "population");
  if (!a.population_ref.empty()) require_readable(a.population_ref, "reference population");
  require_output_dir(a.out_dir);
  if (a.target_start.empty()) throw InputError("excess: --target-start is required");
  const util::Date target_start = util::parse_date(a.target_start);
  demog::SeasonalOptions so;
  if (a.error == "gaussian") {
    so.error = demog::ErrorModel::gaussian;
  } else if (a.error != "t") {
    throw ParameterError("unknown error model '" + a.error + "' (t or gaussian)");
  }

  const demog::WeeklyDeaths deaths = demog::read_weekly_deaths_csv(a.input);
  const demog::LifeTable lt = demog::read_life_table_csv(a.life_table);
  const demog::AnnualPopulation pop = demog::read_population_csv(a.population);
  const demog::AnnualPopulation pop_ref =
      a.population_ref.empty() ? pop : demog::read_population_csv(a.population_ref);
  const demog::WeeklyDeaths ref = deaths.slice(deaths.week_start.front(), target_start);
  const demog::WeeklyDeaths target = deaths.slice(target_start, deaths.week_start.back() + std::chrono::days{1});
  if (ref.size() == 0) throw InputError("excess: no reference weeks before " + a.target_start);
  if (target.size() == 0 || target.week_start.front() != target_start) {
    throw InputError("excess: target start " + a.target_start + " is not a week start in '" + a.input + "'");
  }

  const demog::SeasonalCycle cycle = demog::fit_seasonal_cycle(ref, so);
  const auto n = static_cast<int>(target.size());
  const auto lifetable = demog::excess_deaths(
      target, demog::expected_from_run(demog::iterate_demography(demog::split_to_weekly(pop), lt, cycle, target_start, n),
                                       demog::ExcessMethod::lifetable));
  const auto weekly = demog::excess_deaths(target, demog::baseline_weekly_average(ref, target.week_start));
  const auto fixed = demog::excess_deaths(
      target, demog::expected_from_run(demog::no_ageing_variant(demog::split_to_weekly(pop_ref), lt, cycle, target_start, n),
                                       demog::ExcessMethod::lifetable_no_ageing));
  const auto ageing = demog::ageing_decomposition(pop_ref, pop, lt, a.age_floor);

  CommandResult out;
  out.add("excess_lifetable.csv", demog::excess_report_csv(lifetable));
  out.add("excess_weekly_average.csv", demog::excess_report_csv(weekly));
  out.add("excess_no_ageing.csv", demog::excess_report_csv(fixed));
  {
    // All three reports in one table, the data of the overlay plot.
    std::string all = demog::excess_report_csv(lifetable);
    for (const auto* r : {&weekly, &fixed}) {
      const std::string s = demog::excess_report_csv(*r);
      all += s.substr(s.find('\n') + 1);
    }
    Plot plot;
    plot.title = "Cumulative excess deaths";
    plot.xlabel = "week";
    plot.ylabel = "cumulative excess deaths";
    plot.date_axis = true;
    const std::vector<std::pair<const demog::ExcessDeathReport*, const char*>> styles{
        {&lifetable, "#d62728"}, {&weekly, "#000000"}, {&fixed, "#1f77b4"}};
    for (const auto& [r, color] : styles) {
      Line l{demog::method_name(r->method), {}, r->cumulative, color, r != &lifetable};
      for (auto d : r->week_start) l.x.push_back(day_number(d));
      plot.lines.push_back(std::move(l));
    }
    out.add("excess.csv", all);
    out.add("excess.svg", plot.render());
  }
  {
    util::CsvWriter w;
    w.comment(std::string("error: ") + (cycle.error == demog::ErrorModel::scaled_t ? "scaled t" : "gaussian"));
    w.comment("sigma: " + util::format_double(cycle.sigma));
    w.comment("nu: " + util::format_double(cycle.nu));
    w.row({"week", "d", "f1"});
    for (int wk = 1; wk <= demog::kWeeksPerYear; ++wk) {
      const auto i = static_cast<std::size_t>(wk - 1);
      w.row({std::to_string(wk), util::format_double(cycle.d[i]), util::format_double(cycle.f1[i])});
    }
    out.add("cycle.csv", w.str());
  }
  {
    util::CsvWriter w;
    w.comment("age_floor: " + std::to_string(a.age_floor));
    w.row({"age", "delta", "extra", "cum_extra"});
    Line l{"cumulative extra deaths per year", {}, ageing.cumulative, "#d62728"};
    for (std::size_t i = 0; i < ageing.age.size(); ++i) {
      w.row({ageing.age[i], util::format_double(ageing.delta[i]), util::format_double(ageing.extra[i]),
             util::format_double(ageing.cumulative[i])});
    }
    for (int lower : pop_ref.lower)
      if (lower >= a.age_floor) l.x.push_back(lower);
    Plot plot;
    plot.title = "Extra expected deaths from population change";
    plot.xlabel = "age";
    plot.ylabel = "cumulative extra deaths per year";
    plot.lines.push_back(std::move(l));
    out.add("ageing.csv", w.str());
    out.add("ageing.svg", plot.render());
  }

  double observed = 0.0;
  for (double d : target.deaths) observed += d;
  auto summary = [&](const demog::ExcessDeathReport& r) {
    return demog::method_name(r.method) + " cumulative excess: " + util::format_double(r.total()) + " (" +
           percent(r.total() / observed) + " of deaths)";
  };
  out.messages = {summary(lifetable), summary(weekly), summary(fixed),
                  "ageing decomposition total: " + util::format_double(ageing.total()) + " per year"};
  if (lt.monotonicity_warning) out.messages.push_back("warning: terminal mortality rate below the preceding age");
  return out;
}

// ---- seir and finalsize ----

// Final size x on the grid R0 x lambda; lambda defaults to 1..5 in steps of 0.1.
inline CommandResult finalsize_grid(std::vector<double> r0s, std::vector<double> lambdas) {
  if (r0s.empty()) r0s = {2.0, 3.0, 4.0, 5.0};
  if (lambdas.empty()) {
    for (int i = 0; i <= 40; ++i) lambdas.push_back((10.0 + i) / 10.0);
  }
  util::CsvWriter w;
  w.row({"R0", "lambda", "x"});
  Plot plot;
  plot.title = "Final size against immunity coefficient";
  plot.xlabel = "immunity coefficient lambda";
  plot.ylabel = "final proportion infected";
  const char* colors[] = {"#d62728", "#2ca02c", "#1f77b4", "#17becf", "#9467bd", "#8c564b"};
  for (std::size_t r = 0; r < r0s.size(); ++r) {
    Line l{"R0 = " + util::format_double(r0s[r]), lambdas, {}, colors[r % 6]};
    for (double lam : lambdas) {
      const double x = seir::final_size(r0s[r], lam);
      w.row({util::format_double(r0s[r]), util::format_double(lam), util::format_double(x)});
      l.y.push_back(x);
    }
    plot.lines.push_back(std::move(l));
  }
  CommandResult out;
  out.add("finalsize.csv", w.str());
  out.add("finalsize.svg", plot.render());
  return out;
}

struct FinalsizeArgs {
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  std::string r0 = "2,3,4,5";
  std::string lambda;
};

inline CommandResult cmd_finalsize(const FinalsizeArgs& a) {
  require_output_dir(a.out_dir);
  const auto r0s = parse_list(a.r0, "--r0");
  const auto lambdas = a.lambda.empty() ? std::vector<double>{} : parse_list(a.lambda, "--lambda");
  auto out = finalsize_grid(r0s, lambdas);
  out.messages.push_back("final size at R0 = " + util::format_double(r0s.front()) + ", lambda = 2: " +
                         util::format_double(seir::final_size(r0s.front(), 2.0)));
  return out;
}

struct SeirArgs {
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  double r0 = 2.0;
  double delta = 1.0 / 3.0;
  double gamma = 1.0 / 5.0;
  std::string heterogeneity = "none";
  double k = std::numeric_limits<double>::infinity();
  std::optional<double> lambda;
  double initial_infected = 1e-4;
  double horizon = 365.0;
  double dt = 0.05;
  bool finalsize_grid = false;
  bool lockdown = false;
  double locked_r0 = 0.6;
  double key_r0 = 3.0;
  double key_share = 0.2;
  double pre_r0 = 3.0;
  double ramp_days = 7.0;
  double cross_mixing = 0.0;
};

inline seir::Heterogeneity parse_heterogeneity(const std::string& s) {
  if (s == "none") return seir::Heterogeneity::none;
  if (s == "susceptibility") return seir::Heterogeneity::susceptibility;
  if (s == "connectivity") return seir::Heterogeneity::connectivity;
  throw ParameterError("unknown heterogeneity '" + s + "' (none, susceptibility or connectivity)");
}

inline CommandResult cmd_seir(const SeirArgs& a) {
  require_output_dir(a.out_dir);
  seir::SeirConfig c;
  c.R0 = a.r0;
  c.delta = a.delta;
  c.gamma = a.gamma;
  c.heterogeneity = parse_heterogeneity(a.heterogeneity);
  c.k = a.k;
  c.lambda = a.lambda;
  c.validate();
  seir::SolveOptions so;
  so.dt = a.dt;

  CommandResult out;
  const auto tr = seir::solve_seir(c, a.initial_infected, a.horizon, so);
  {
    util::CsvWriter w;
    w.comment("R0: " + util::format_double(c.R0) + " delta: " + util::format_double(c.delta) +
              " gamma: " + util::format_double(c.gamma) + " lambda: " + util::format_double(c.immunity_coefficient()));
    w.row({"t", "S", "E", "I", "incidence", "logR"});
    for (std::size_t i = 0; i < tr.size(); ++i) {
      w.row({util::format_double(tr.t[i]), util::format_double(tr.S[i]), util::format_double(tr.E[i]),
             util::format_double(tr.I[i]), util::format_double(tr.incidence[i]), util::format_double(tr.log_R[i])});
    }
    Plot plot;
    plot.title = "SEIR trajectory";
    plot.xlabel = "day";
    plot.ylabel = "proportion of population";
    plot.lines = {{"S", tr.t, tr.S, "#1f77b4"}, {"E", tr.t, tr.E, "#ff7f0e"}, {"I", tr.t, tr.I, "#d62728"}};
    out.add("trajectory.csv", w.str());
    out.add("trajectory.svg", plot.render());
  }
  out.messages.push_back("final attack fraction: " + util::format_double(1.0 - tr.S.back()) +
                         " (final size equation: " + util::format_double(seir::final_size(c.R0, c.immunity_coefficient())) + ")");

  if (a.lockdown) {
    seir::SeirConfig locked = c, key = c;
    locked.R0 = a.locked_r0;
    key.R0 = a.key_r0;
    seir::LockdownOptions lo;
    lo.pre_R0 = a.pre_r0;
    lo.ramp_days = a.ramp_days;
    lo.cross_mixing = a.cross_mixing;
    lo.initial_infected = a.initial_infected;
    lo.solve = so;
    const auto res = seir::two_compartment_lockdown(locked, key, a.key_share, a.horizon, lo);
    util::CsvWriter w;
    w.comment("locked_R0: " + util::format_double(a.locked_r0) + " key_R0: " + util::format_double(a.key_r0) +
              " key_share: " + util::format_double(a.key_share) + " pre_R0: " + util::format_double(a.pre_r0));
    w.row({"t", "incidence", "R", "locked_R", "key_R"});
    std::vector<double> lr, kr;
    for (std::size_t i = 0; i < res.t.size(); ++i) {
      lr.push_back(std::exp(res.locked.log_R[i]));
      kr.push_back(std::exp(res.key.log_R[i]));
      w.row({util::format_double(res.t[i]), util::format_double(res.incidence[i]), util::format_double(res.aggregate_R[i]),
             util::format_double(lr.back()), util::format_double(kr.back())});
    }
    Plot plot;
    plot.title = "Reproduction number after lockdown";
    plot.xlabel = "days since lockdown";
    plot.ylabel = "R";
    plot.lines = {{"whole population", res.t, res.aggregate_R, "#000000"},
                  {"locked down", res.t, lr, "#1f77b4", true},
                  {"key workers", res.t, kr, "#d62728", true}};
    out.add("lockdown.csv", w.str());
    out.add("lockdown.svg", plot.render());
    const auto imin = static_cast<std::size_t>(std::min_element(res.aggregate_R.begin(), res.aggregate_R.end()) -
                                               res.aggregate_R.begin());
    out.messages.push_back("lockdown: minimum R " + util::format_double(res.aggregate_R[imin]) + " on day " +
                           util::format_double(res.t[imin]));
  }
  if (a.finalsize_grid) {
    auto grid = finalsize_grid({}, {});
    for (auto& f : grid.files) out.files.push_back(std::move(f));
  }
  return out;
}

// ---- entry point ----

namespace detail {

// Reads a flat `key = value` config file into `--key=value` arguments.
inline std::vector<std::string> config_arguments(const std::string& path) {
  require_readable(path, "config file");
  const std::string text = util::read_file(path);
  std::vector<std::string> args;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(path + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty() || key == "config") throw InputError(path + ":" + std::to_string(line_no) + ": invalid key '" + key + "'");
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

// Value of --config in the arguments after the subcommand, if any.
inline std::optional<std::string> find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

inline void add_common(CLI::App* sub, std::string& out_dir, std::uint64_t& seed) {
  sub->add_option("--out-dir", out_dir, "Output directory (created if missing)");
  sub->add_option("--seed", seed, "Random seed");
  sub->add_option("--config", "Flat key = value file of option defaults; flags win");
}

inline void add_deconv_options(CLI::App* sub, DeconvArgs& a) {
  sub->add_option("--input", a.input, "Daily deaths CSV (date,deaths)");
  add_common(sub, a.out_dir, a.seed);
  sub->add_option("--family", a.family, "poisson or negbin");
  sub->add_flag("--weekly-cycle", a.weekly_cycle, "Fit a day-of-week multiplier");
  sub->add_option("--K", a.K, "Basis dimension (0: one per 8 days, 6..60)");
  sub->add_option("--d-start", a.d_start, "Lag window on the first day");
  sub->add_option("--d-limit", a.d_limit, "Maximum lag window");
  sub->add_option("--d-max", a.d_max, "Duration support in days");
  sub->add_option("--duration", a.duration, "Duration preset name");
  sub->add_option("--presets", a.presets, "Duration presets file");
  sub->add_option("--meanlog", a.meanlog, "Duration meanlog (overrides the preset)");
  sub->add_option("--sdlog", a.sdlog, "Duration sdlog (overrides the preset)");
  sub->add_option("--delta", a.delta, "1 / mean latency for R(t), per day");
  sub->add_option("--gamma", a.gamma, "1 / mean infectious duration for R(t), per day");
  sub->add_option("--lockdowns", a.lockdowns, "CSV with a date column of lockdown starts");
  sub->add_option("--replicates", a.n_rep, "Forward simulation replicates");
  sub->add_option("--draws", a.n_draws, "Posterior draws for the bands");
}

}  // namespace detail

// Parses the command line, runs the subcommand and writes its outputs.
// `args` excludes the program name. Returns the process exit code.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  if (!args.empty()) {
    try {
      if (const auto cfg = detail::find_config(args)) {
        auto extra = detail::config_arguments(*cfg);
        args.insert(args.begin() + 1, extra.begin(), extra.end());
      }
    } catch (const IoError& e) {
      err << "error: " << e.what() << "\n";
      return kIoError;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kInputError;
    }
  }

  CLI::App app{"Epidemic incidence reconstruction, SEIR dynamics and excess deaths"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  DeconvArgs deconv_args, simcheck_args;
  ExcessArgs excess_args;
  SeirArgs seir_args;
  FinalsizeArgs finalsize_args;

  auto* deconv_cmd = app.add_subcommand("deconv", "Reconstruct fatal incidence and R(t) from daily deaths");
  detail::add_deconv_options(deconv_cmd, deconv_args);

  auto* simcheck_cmd = app.add_subcommand("simcheck", "Forward simulation check of a deaths fit");
  detail::add_deconv_options(simcheck_cmd, simcheck_args);
  simcheck_cmd->add_option("--meanlog-shift", simcheck_args.meanlog_shift, "Shift of the resimulation duration meanlog");

  auto* excess_cmd = app.add_subcommand("excess", "Expected and excess weekly deaths by three methods");
  excess_cmd->add_option("--input", excess_args.input, "Weekly deaths CSV (week_start_date,deaths)");
  detail::add_common(excess_cmd, excess_args.out_dir, excess_args.seed);
  excess_cmd->add_option("--life-table", excess_args.life_table, "Life table CSV (age,m)");
  excess_cmd->add_option("--population", excess_args.population, "Population by age at the target start (age,count)");
  excess_cmd->add_option("--population-ref", excess_args.population_ref,
                         "Population by age in the reference period, for the no-ageing variant and the decomposition");
  excess_cmd->add_option("--target-start", excess_args.target_start, "First week of the target period (YYYY-MM-DD)");
  excess_cmd->add_option("--error", excess_args.error, "Seasonal fit error model: t or gaussian");
  excess_cmd->add_option("--age-floor", excess_args.age_floor, "Youngest age in the ageing decomposition");

  auto* seir_cmd = app.add_subcommand("seir", "Solve the heterogeneous SEIR model");
  detail::add_common(seir_cmd, seir_args.out_dir, seir_args.seed);
  seir_cmd->add_option("--r0", seir_args.r0, "Basic reproduction number");
  seir_cmd->add_option("--delta", seir_args.delta, "E to I rate per day");
  seir_cmd->add_option("--gamma", seir_args.gamma, "I to R rate per day");
  seir_cmd->add_option("--heterogeneity", seir_args.heterogeneity, "none, susceptibility or connectivity");
  seir_cmd->add_option("--k", seir_args.k, "Gamma shape of the heterogeneity");
  seir_cmd->add_option("--lambda", seir_args.lambda, "Immunity coefficient (overrides heterogeneity)");
  seir_cmd->add_option("--initial-infected", seir_args.initial_infected, "Initial infectious fraction");
  seir_cmd->add_option("--horizon", seir_args.horizon, "Days to simulate");
  seir_cmd->add_option("--dt", seir_args.dt, "Step size in days (at most 0.1)");
  seir_cmd->add_flag("--finalsize-grid", seir_args.finalsize_grid, "Also write the final size grid");
  seir_cmd->add_flag("--lockdown", seir_args.lockdown, "Also run the two-compartment lockdown scenario");
  seir_cmd->add_option("--locked-r0", seir_args.locked_r0, "R0 of the locked-down compartment");
  seir_cmd->add_option("--key-r0", seir_args.key_r0, "R0 of the key-worker compartment");
  seir_cmd->add_option("--key-share", seir_args.key_share, "Key-worker share of the population");
  seir_cmd->add_option("--pre-r0", seir_args.pre_r0, "R0 before lockdown");
  seir_cmd->add_option("--ramp-days", seir_args.ramp_days, "Days for transmission to reach its lockdown level");
  seir_cmd->add_option("--cross-mixing", seir_args.cross_mixing, "Share of infection pressure from the whole population");

  auto* finalsize_cmd = app.add_subcommand("finalsize", "Final size over a grid of R0 and lambda");
  detail::add_common(finalsize_cmd, finalsize_args.out_dir, finalsize_args.seed);
  finalsize_cmd->add_option("--r0", finalsize_args.r0, "Comma separated R0 values");
  finalsize_cmd->add_option("--lambda", finalsize_args.lambda, "Comma separated lambda values (default 1..5 by 0.1)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInputError;
  }

  try {
    CommandResult result;
    std::string out_dir;
    if (deconv_cmd->parsed()) {
      result = cmd_deconv(deconv_args);
      out_dir = deconv_args.out_dir;
    } else if (simcheck_cmd->parsed()) {
      result = cmd_simcheck(simcheck_args);
      out_dir = simcheck_args.out_dir;
    } else if (excess_cmd->parsed()) {
      result = cmd_excess(excess_args);
      out_dir = excess_args.out_dir;
    } else if (seir_cmd->parsed()) {
      result = cmd_seir(seir_args);
      out_dir = seir_args.out_dir;
    } else {
      result = cmd_finalsize(finalsize_args);
      out_dir = finalsize_args.out_dir;
    }
    commit(result, out_dir);
    for (const auto& m : result.messages) out << m << "\n";
    for (const auto& f : result.files) out << "wrote " << (std::filesystem::path(out_dir) / f.name).string() << "\n";
    return kOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << " after " << e.iterations() << " iterations\n";
    return kConvergenceError;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kConvergenceError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace epirecon::cli
