#include "syrisk/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "syrisk/identification.hpp"
#include "syrisk/io.hpp"

namespace syrisk {

using nlohmann::json;

namespace {

struct FlagSpec {
  const char* name;
  const char* help;
  bool boolean = false;
  bool required = false;
  bool input = false;  // path that must be readable
};

struct VerbSpec {
  Verb verb;
  const char* name;
  const char* help;
  std::vector<FlagSpec> flags;
};

const std::vector<VerbSpec>& verbs() {
  static const std::vector<VerbSpec> table = {
      {Verb::Simulate,
       "simulate",
       "simulate the GARCH / GAS-copula data generating process",
       {{"n", "number of periods", false, true},
        {"out", "output CSV (date,x,y)", false, true},
        {"seed", "random seed"},
        {"prices", "write price levels starting at 100 instead of losses", true}}},
      {Verb::Fit,
       "fit",
       "fit the marginal volatility models and the dynamic copula",
       {{"obs", "observations CSV", false, true, true},
        {"prices", "observation columns are prices", true},
        {"margin", "garch | gjr-garch"},
        {"copula", "t | gaussian"},
        {"seed", "seed recorded with the model"},
        {"out", "output JSON (stdout when absent)"}}},
      {Verb::Forecast,
       "forecast",
       "rolling one-step-ahead VaR and systemic risk forecasts",
       {{"obs", "observations CSV", false, true, true},
        {"out", "output forecasts CSV", false, true},
        {"prices", "observation columns are prices", true},
        {"window", "estimation window (default 1000)"},
        {"refit", "refit every k periods, 0 = fit once (default 1)"},
        {"measures", "comma list of covar,coes,mes (default covar,coes)"},
        {"margin", "garch | gjr-garch"},
        {"copula", "t | gaussian"},
        {"alpha", "systemic level (default 0.95)"},
        {"beta", "VaR level (default 0.95)"},
        {"jobs", "worker threads"}}},
      {Verb::Compare,
       "compare",
       "Diebold-Mariano comparison of two forecast files",
       {{"f1", "benchmark forecasts CSV", false, true, true},
        {"f2", "alternative forecasts CSV", false, true, true},
        {"obs", "observations CSV", false, true, true},
        {"scores", "var-covar | var-covar-coes | var-mes | var-es | mean-var"},
        {"zero-hom", "use scores with 0-homogeneous differences", true},
        {"level", "test level nu (default 0.05)"},
        {"lag", "HAC lag truncation (default 0)"},
        {"kernel", "flat | bartlett"},
        {"prices", "observation columns are prices", true},
        {"alpha", "default systemic level"},
        {"beta", "default VaR level"},
        {"svg", "write the zone figure"},
        {"out", "output JSON (stdout when absent)"}}},
      {Verb::Calibrate,
       "calibrate",
       "Wald calibration test of one forecast file",
       {{"f", "forecasts CSV", false, true, true},
        {"obs", "observations CSV", false, true, true},
        {"kind", "var | var-covar | var-covar-coes | var-mes (default var-covar)"},
        {"variant", "strict | non-strict"},
        {"level", "test level (default 0.05)"},
        {"prices", "observation columns are prices", true},
        {"alpha", "default systemic level"},
        {"beta", "default VaR level"},
        {"out", "output JSON (stdout when absent)"}}},
      {Verb::Traffic,
       "traffic",
       "traffic-light classification of a forecast comparison",
       {{"f1", "benchmark forecasts CSV", false, true, true},
        {"f2", "alternative forecasts CSV", false, true, true},
        {"obs", "observations CSV", false, true, true},
        {"scores", "var-covar | var-covar-coes | var-mes | var-es | mean-var"},
        {"zero-hom", "use scores with 0-homogeneous differences", true},
        {"level", "nominal level nu (default 0.05)"},
        {"lag", "HAC lag truncation (default 0)"},
        {"kernel", "flat | bartlett"},
        {"prices", "observation columns are prices", true},
        {"alpha", "default systemic level"},
        {"beta", "default VaR level"},
        {"svg", "write the zone figure"},
        {"out", "output JSON (stdout when absent)"}}},
      {Verb::Study,
       "study",
       "Monte Carlo studies",
       {{"kind", "dm | calibration | dm-null (default dm)"},
        {"replications", "number of replications"},
        {"n", "comma list of evaluation lengths"},
        {"window", "estimation window (dm study)"},
        {"level", "test level (default 0.05)"},
        {"alpha", "systemic level"},
        {"beta", "VaR level"},
        {"seed", "random seed"},
        {"jobs", "worker threads"},
        {"csv", "write one CSV row per cell"},
        {"out", "output JSON (stdout when absent)"}}},
      {Verb::Levels,
       "levels",
       "size-corrected levels of the one-and-a-half-sided test",
       {{"nu", "nominal level; the table for 1%, 5%, 10% when absent"}}},
      {Verb::Cxls,
       "cxls",
       "mixture counterexample for convex level sets",
       {{"rho", "correlation (default 0.8)"},
        {"alpha", "systemic level"},
        {"beta", "VaR level"},
        {"rule", "conditional | joint"},
        {"json", "print JSON instead of a table", true}}},
  };
  return table;
}

const VerbSpec& spec_of(Verb v) {
  for (const auto& s : verbs())
    if (s.verb == v) return s;
  throw UsageError("unknown verb");
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string config_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_array()) {
    std::vector<std::string> parts;
    for (const auto& e : v) parts.push_back(config_value(e));
    return join(parts, ",");
  }
  return v.dump();
}

}  // namespace

std::string to_string(Verb v) {
  if (v == Verb::Help) return "help";
  return spec_of(v).name;
}

std::optional<std::string> Command::get(const std::string& name) const {
  const auto it = options.find(name);
  if (it == options.end()) return std::nullopt;
  return it->second;
}

std::string Command::text(const std::string& name, const std::string& fallback) const {
  return get(name).value_or(fallback);
}

double Command::number(const std::string& name, double fallback) const {
  const auto s = get(name);
  if (!s) return fallback;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
  if (ec != std::errc() || p != s->data() + s->size() || !std::isfinite(v))
    throw UsageError("--" + name + " expects a number, got '" + *s + "'");
  return v;
}

long long Command::integer(const std::string& name, long long fallback) const {
  const auto s = get(name);
  if (!s) return fallback;
  long long v = 0;
  const auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
  if (ec != std::errc() || p != s->data() + s->size())
    throw UsageError("--" + name + " expects an integer, got '" + *s + "'");
  return v;
}

bool Command::flag(const std::string& name) const {
  const auto s = get(name);
  return s && *s == "true";
}

Command parse_args(const std::vector<std::string>& args) {
  CLI::App app{"Comparative backtests of systemic risk forecasts", "syrisk"};
  app.require_subcommand(0, 1);
  struct Slot {
    std::string value;
    bool set = false;
  };
  std::map<std::pair<Verb, std::string>, Slot> slots;
  std::map<Verb, CLI::App*> subs;
  for (const auto& v : verbs()) {
    CLI::App* sub = app.add_subcommand(v.name, v.help);
    subs[v.verb] = sub;
    std::vector<FlagSpec> flags = v.flags;
    flags.push_back({"config", "JSON file with flag values (flags win)", false, false, true});
    for (const auto& f : flags) {
      auto& slot = slots[{v.verb, f.name}];
      const std::string opt = std::string("--") + f.name;
      if (f.boolean)
        sub->add_flag(opt, slot.set, f.help);
      else
        sub->add_option(opt, slot.value, f.help);
    }
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    Command c;
    const auto chosen = app.get_subcommands();
    c.help = chosen.empty() ? app.help() : chosen.front()->help();
    return c;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  const auto chosen = app.get_subcommands();
  if (chosen.empty()) {
    std::vector<std::string> names;
    for (const auto& v : verbs()) names.push_back(v.name);
    throw UsageError("missing verb; expected one of " + join(names, ", "));
  }
  Command cmd;
  const VerbSpec* vs = nullptr;
  for (const auto& v : verbs())
    if (subs[v.verb] == chosen.front()) vs = &v;
  cmd.verb = vs->verb;
  CLI::App* sub = subs[cmd.verb];

  for (const auto& f : vs->flags) {
    const std::string opt = std::string("--") + f.name;
    if (sub->count(opt) == 0) continue;
    const auto& slot = slots[{cmd.verb, f.name}];
    cmd.options[f.name] = f.boolean ? "true" : slot.value;
  }

  if (sub->count("--config") > 0) {
    const std::string path = slots[{cmd.verb, "config"}].value;
    std::ifstream in(path);
    if (!in) throw UsageError("--config: cannot read '" + path + "'");
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("--config: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw UsageError("--config: document must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      const auto it = std::find_if(vs->flags.begin(), vs->flags.end(),
                                   [&](const FlagSpec& f) { return key == f.name; });
      if (it == vs->flags.end())
        throw UsageError("--config: '" + key + "' is not a flag of " + vs->name);
      if (cmd.has(key)) continue;
      const std::string s = config_value(value);
      if (it->boolean) {
        if (s == "true") cmd.options[key] = "true";
        continue;
      }
      cmd.options[key] = s;
    }
  }

  if (const char* env = std::getenv("SYRISK_SEED"); env && *env) {
    const bool takes_seed = std::any_of(vs->flags.begin(), vs->flags.end(),
                                        [](const FlagSpec& f) { return std::string(f.name) == "seed"; });
    if (takes_seed) cmd.options["seed"] = env;
  }

  std::vector<std::string> missing;
  for (const auto& f : vs->flags)
    if (f.required && !cmd.has(f.name)) missing.push_back(std::string("--") + f.name);
  if (!missing.empty())
    throw UsageError(std::string(vs->name) + ": missing required flags " + join(missing, ", "));

  for (const auto& f : vs->flags) {
    if (!f.input || !cmd.has(f.name)) continue;
    std::ifstream in(cmd.options[f.name]);
    if (!in) throw UsageError(std::string("--") + f.name + ": cannot read '" + cmd.options[f.name] + "'");
  }
  if (cmd.has("seed")) {
    if (cmd.integer("seed", 0) < 0) throw UsageError("--seed must be nonnegative");
  }
  return cmd;
}

// --------------------------------------------------------------- commands

namespace {

RiskLevels levels_of(const Command& c) {
  RiskLevels l{c.number("alpha", 0.95), c.number("beta", 0.95)};
  try {
    l.validate();
  } catch (const Error& e) {
    throw UsageError(std::string("--alpha/--beta: ") + e.what());
  }
  return l;
}

std::uint64_t seed_of(const Command& c) { return static_cast<std::uint64_t>(c.integer("seed", 1)); }

unsigned jobs_of(const Command& c) {
  const long long j = c.integer("jobs", 1);
  if (j < 1) throw UsageError("--jobs must be positive");
  return static_cast<unsigned>(j);
}

ModelSpec model_spec_of(const Command& c) {
  ModelSpec s;
  try {
    s.margin = garch_family_from_string(c.text("margin", "garch"));
    s.copula = copula_family_from_string(c.text("copula", "t"));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return s;
}

void emit(const Command& c, std::ostream& out, const json& j) {
  if (const auto path = c.get("out"))
    write_atomic(*path, j.dump(2) + "\n");
  else
    out << j.dump(2) << "\n";
}

LossSeries observations(const Command& c, json& report) {
  CsvDiagnostics d;
  LossSeries s = read_observations(c.text("obs", ""), c.flag("prices"), &d);
  if (s.dates.empty())
    for (std::size_t t = 0; t < s.size(); ++t) s.dates.push_back(std::to_string(t + 1));
  report["obs_rows"] = {{"rows_in", d.rows_in}, {"accepted", d.accepted},
                        {"rejected", d.rejected}, {"messages", d.messages}};
  return s;
}

ForecastFile forecasts(const std::string& path, const RiskLevels& levels, const std::string& tag,
                       json& report) {
  CsvDiagnostics d;
  ForecastFile f = read_forecasts(path, levels, &d);
  report[tag + "_rows"] = {{"rows_in", d.rows_in}, {"accepted", d.accepted},
                           {"rejected", d.rejected}, {"messages", d.messages}};
  return f;
}

/// Observations paired with forecasts by date, or by position when a file has no dates.
struct Aligned {
  LossSeries obs;
  std::vector<std::vector<ForecastTuple>> f;
};

Aligned align(const LossSeries& obs, const std::vector<const ForecastFile*>& files) {
  Aligned a;
  a.f.resize(files.size());
  std::vector<std::map<std::string, std::size_t>> index(files.size());
  for (std::size_t k = 0; k < files.size(); ++k) {
    const auto& ff = *files[k];
    if (ff.dates.empty()) {
      if (ff.forecasts.size() != obs.size())
        throw DataError("forecast file without dates must have one row per observation");
      continue;
    }
    for (std::size_t t = 0; t < ff.dates.size(); ++t)
      if (!index[k].emplace(ff.dates[t], t).second)
        throw DataError("duplicate forecast date '" + ff.dates[t] + "'");
  }
  for (std::size_t t = 0; t < obs.size(); ++t) {
    std::vector<std::size_t> rows(files.size());
    bool all = true;
    for (std::size_t k = 0; k < files.size() && all; ++k) {
      if (files[k]->dates.empty()) {
        rows[k] = t;
        continue;
      }
      const auto it = index[k].find(obs.dates[t]);
      if (it == index[k].end())
        all = false;
      else
        rows[k] = it->second;
    }
    if (!all) continue;
    a.obs.dates.push_back(obs.dates[t]);
    a.obs.x.push_back(obs.x[t]);
    a.obs.y.push_back(obs.y[t]);
    for (std::size_t k = 0; k < files.size(); ++k) a.f[k].push_back(files[k]->forecasts[rows[k]]);
  }
  if (a.obs.size() < 2) throw InsufficientDataError("fewer than two periods with forecasts and observations");
  return a;
}

int cmd_simulate(const Command& c, std::ostream& out) {
  const long long n = c.integer("n", 0);
  if (n < 1) throw UsageError("--n must be positive");
  const DgpSpec dgp;
  RngStream rng = rng_stream(seed_of(c), 0);
  const SimulatedPath p = simulate_dgp({dgp.margin_x, dgp.margin_y}, dgp.copula,
                                       {dgp.innov_x, dgp.innov_y}, static_cast<std::size_t>(n), rng);
  LossSeries s = p.series;
  if (c.flag("prices")) {
    LossSeries prices;
    double px = 100.0, py = 100.0;
    prices.x.push_back(px);
    prices.y.push_back(py);
    for (std::size_t t = 0; t < s.size(); ++t) {
      px *= std::exp(-s.x[t]);
      py *= std::exp(-s.y[t]);
      prices.x.push_back(px);
      prices.y.push_back(py);
    }
    s = prices;
  }
  write_atomic(c.text("out", ""), observations_csv(s));
  out << json{{"rows", s.size()}, {"seed", seed_of(c)}, {"warnings", p.warnings}}.dump() << "\n";
  return 0;
}

int cmd_fit(const Command& c, std::ostream& out) {
  json report;
  const LossSeries s = observations(c, report);
  const FittedModel m = fit_model(s, model_spec_of(c));
  json j = to_json(m, seed_of(c));
  j["obs_rows"] = report["obs_rows"];
  emit(c, out, j);
  return 0;
}

int cmd_forecast(const Command& c, std::ostream& out) {
  json report;
  const LossSeries s = observations(c, report);
  ForecastConfig cfg;
  cfg.levels = levels_of(c);
  cfg.window = static_cast<std::size_t>(std::max(0LL, c.integer("window", 1000)));
  const long long refit = c.integer("refit", 1);
  if (refit < 0) throw UsageError("--refit must be nonnegative");
  cfg.refit_every = static_cast<std::size_t>(refit);
  cfg.jobs = jobs_of(c);
  cfg.measures = {false, false, false};
  for (const auto& m : split_list(c.text("measures", "covar,coes"))) {
    if (m == "covar")
      cfg.measures.covar = true;
    else if (m == "coes")
      cfg.measures.coes = true;
    else if (m == "mes")
      cfg.measures.mes = true;
    else
      throw UsageError("--measures: unknown measure '" + m + "'");
  }
  try {
    cfg.validate();
  } catch (const UsageError& e) {
    throw UsageError(std::string("--window/--jobs: ") + e.what());
  }
  const RollingResult r = rolling_forecast(s, cfg, model_spec_of(c));
  write_atomic(c.text("out", ""), forecasts_csv(r.points));
  std::size_t warned = 0;
  std::vector<std::string> first;
  for (const auto& p : r.points) {
    if (p.warnings.empty()) continue;
    ++warned;
    if (first.size() < 5) first.push_back(p.date + ": " + p.warnings.front());
  }
  report["periods"] = r.points.size();
  report["fits"] = r.fits;
  report["failed_fits"] = r.failed_fits;
  report["missing"] = r.missing();
  report["periods_with_warnings"] = warned;
  report["warnings"] = first;
  out << report.dump(2) << "\n";
  if (r.fits > 0 && r.failed_fits == r.fits) return 3;
  return 0;
}

Kernel kernel_of(const Command& c) {
  const std::string k = c.text("kernel", "flat");
  if (k == "flat") return Kernel::Flat;
  if (k == "bartlett") return Kernel::Bartlett;
  throw UsageError("--kernel: expected flat or bartlett, got '" + k + "'");
}

double nu_of(const Command& c) {
  const double nu = c.number("level", 0.05);
  if (!(nu > 0.0 && nu < 0.5)) throw UsageError("--level must lie in (0, 0.5)");
  return nu;
}

/// Zone when one covariance component vanishes: the sign of the mean
/// differences decides, with the t-test on the second component when the
/// first differences are all zero.
TrafficZone degenerate_zone(MoScore dbar, const std::optional<DmResult>& t2, double nu) {
  if (dbar.s1 < 0.0) return TrafficZone::Red;
  if (dbar.s1 > 0.0) return TrafficZone::Grey;
  if (t2) {
    if (t2->statistic > 0.0 && norm_cdf(-t2->statistic) < nu) return TrafficZone::Green;
    if (t2->statistic < 0.0 && norm_cdf(t2->statistic) < nu) return TrafficZone::Orange;
    return TrafficZone::Yellow;
  }
  if (dbar.s2 > 0.0) return TrafficZone::Green;
  if (dbar.s2 < 0.0) return TrafficZone::Orange;
  return TrafficZone::Yellow;
}

int cmd_compare(const Command& c, std::ostream& out, bool traffic) {
  json report;
  const RiskLevels levels = levels_of(c);
  const double nu = nu_of(c);
  ScoreSpec spec;
  try {
    const Functional f = functional_from_string(c.text("scores", "var-covar"));
    spec = c.flag("zero-hom") ? ScoreSpec::zero_hom(f) : ScoreSpec::canonical(f);
    spec.validate();
  } catch (const Error& e) {
    throw UsageError(std::string("--scores: ") + e.what());
  }
  const long long lag = c.integer("lag", 0);
  if (lag < 0) throw UsageError("--lag must be nonnegative");
  const Kernel kernel = kernel_of(c);

  const LossSeries obs = observations(c, report);
  const ForecastFile f1 = forecasts(c.text("f1", ""), levels, "f1", report);
  const ForecastFile f2 = forecasts(c.text("f2", ""), levels, "f2", report);
  const Aligned a = align(obs, {&f1, &f2});
  const ScoreDiffSeries d = score_diff_series(a.f[0], a.f[1], a.obs, spec);
  const HacEstimate omega = hac_cov(d, static_cast<int>(lag), kernel);
  const MoScore dbar = d.mean();
  const LevelAdjustment adj = adjust_level(nu);
  const double n = static_cast<double>(d.n());

  report["scores"] = to_string(spec.functional);
  report["zero_hom"] = spec.zero_hom();
  report["n"] = d.n();
  report["nu"] = nu;
  report["nu_tilde"] = adj.nu_tilde;
  report["dbar"] = {dbar.s1, dbar.s2};
  report["omega"] = {{"s11", omega.s11}, {"s12", omega.s12}, {"s22", omega.s22},
                     {"m", omega.m}, {"kernel", to_string(omega.kernel)}};

  TrafficZone zone;
  double statistic = 0.0, p_value = 1.0;
  std::string test;
  const bool zero_cov = !(omega.s11 + omega.s22 > 0.0);
  if (zero_cov) {
    // constant differences: either identical scores or an infinite statistic
    const bool zero_mean = dbar.s1 == 0.0 && dbar.s2 == 0.0;
    statistic = zero_mean ? 0.0 : std::numeric_limits<double>::infinity();
    p_value = zero_mean ? 1.0 : 0.0;
    zone = degenerate_zone(dbar, std::nullopt, nu);
    test = "constant-differences";
  } else if (!(omega.s11 > 0.0)) {
    const DmResult two = dm_degenerate(d, Side::TwoSided, omega.m, kernel);
    const DmResult one = dm_degenerate(d, Side::OneSided, omega.m, kernel);
    report["degenerate_two_sided"] = to_json(two);
    report["degenerate_one_sided"] = to_json(one);
    zone = degenerate_zone(dbar, one, nu);
    const DmResult& main = traffic ? one : two;
    statistic = main.statistic;
    p_value = main.p_value;
    test = traffic ? "degenerate-one-sided" : "degenerate-two-sided";
  } else {
    const DmResult two = dm_two_sided(d, omega);
    const DmResult lex = dm_one_half_sided(d, omega);
    report["two_sided"] = to_json(two);
    report["one_half_sided"] = to_json(lex);
    zone = classify_zone(dbar, omega, d.n(), nu);
    const DmResult& main = traffic ? lex : two;
    statistic = main.statistic;
    p_value = main.p_value;
    test = to_string(main.hypothesis);
    if (const auto svg = c.get("svg")) write_atomic(*svg, zone_svg(dbar, omega, d.n(), nu));
  }
  if (zero_cov || !(omega.s11 > 0.0)) {
    if (const auto svg = c.get("svg"))
      report["svg_skipped"] = "first-component variance is zero; no ellipse to draw";
  }
  report["test"] = test;
  report["statistic"] = std::isfinite(statistic) ? json(statistic) : json("inf");
  report["p_value"] = p_value;
  report["reject"] = p_value < nu;
  report["zone"] = to_string(zone);

  // unconditional VaR coverage of each file
  json coverage;
  for (std::size_t k = 0; k < 2; ++k) {
    std::size_t hits = 0;
    double beta = 0.0;
    for (std::size_t t = 0; t < a.obs.size(); ++t) {
      hits += a.obs.x[t] > a.f[k][t].v ? 1 : 0;
      beta += a.f[k][t].levels.beta;
    }
    beta /= n;
    const double rate = hits / n;
    const double se = std::sqrt(beta * (1.0 - beta) / n);
    coverage[k == 0 ? "f1" : "f2"] = {{"violations", hits},
                                      {"rate", rate},
                                      {"expected", 1.0 - beta},
                                      {"se", se},
                                      {"z", (rate - (1.0 - beta)) / se}};
  }
  report["var_violations"] = coverage;
  emit(c, out, report);
  return 0;
}

int cmd_calibrate(const Command& c, std::ostream& out) {
  json report;
  const RiskLevels levels = levels_of(c);
  const double nu = nu_of(c);
  const std::string kind_s = c.text("kind", "var-covar");
  IdKind kind;
  if (kind_s == "var")
    kind = IdKind::VaR;
  else if (kind_s == "var-covar")
    kind = IdKind::VarCoVar;
  else if (kind_s == "var-covar-coes")
    kind = IdKind::VarCoVarCoEs;
  else if (kind_s == "var-mes")
    kind = IdKind::VarMes;
  else
    throw UsageError("--kind: unknown identification '" + kind_s + "'");
  const std::string var_s = c.text("variant", "strict");
  if (var_s != "strict" && var_s != "non-strict")
    throw UsageError("--variant: expected strict or non-strict, got '" + var_s + "'");
  const IdVariant variant = var_s == "strict" ? IdVariant::Strict : IdVariant::NonStrict;

  const LossSeries obs = observations(c, report);
  const ForecastFile f = forecasts(c.text("f", ""), levels, "f", report);
  const Aligned a = align(obs, {&f});
  const CalibResult r = calibration_test(a.f[0], a.obs, kind, variant);
  report["kind"] = kind_s;
  report["variant"] = var_s;
  report["n"] = a.obs.size();
  report["level"] = nu;
  report["result"] = to_json(r);
  report["reject"] = r.p_value < nu;
  emit(c, out, report);
  return 0;
}

std::vector<std::size_t> sizes_of(const Command& c, const std::vector<std::size_t>& fallback) {
  if (!c.has("n")) return fallback;
  std::vector<std::size_t> out;
  for (const auto& s : split_list(*c.get("n"))) {
    long long v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v < 1)
      throw UsageError("--n expects positive integers, got '" + s + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw UsageError("--n is empty");
  return out;
}

int cmd_study(const Command& c, std::ostream& out) {
  const std::string kind = c.text("kind", "dm");
  const long long reps = c.integer("replications", kind == "dm" ? 300 : 1000);
  if (reps < 1) throw UsageError("--replications must be positive");
  json doc;
  std::string csv;
  if (kind == "dm") {
    StudyConfig cfg;
    cfg.replications = static_cast<std::size_t>(reps);
    cfg.n = sizes_of(c, cfg.n);
    cfg.window = static_cast<std::size_t>(std::max(0LL, c.integer("window", 1000)));
    cfg.levels = levels_of(c);
    cfg.seed = seed_of(c);
    cfg.jobs = jobs_of(c);
    cfg.nu = nu_of(c);
    cfg.validate();
    const StudyResult r = run_mc_dm(cfg);
    doc = {{"kind", kind}, {"config", to_json(cfg)}, {"result", to_json(r)}};
    csv = study_csv(r);
  } else if (kind == "calibration") {
    CalibStudyConfig cfg;
    cfg.replications = static_cast<std::size_t>(reps);
    cfg.n = sizes_of(c, cfg.n);
    cfg.levels = levels_of(c);
    cfg.seed = seed_of(c);
    cfg.jobs = jobs_of(c);
    cfg.nu = nu_of(c);
    cfg.alpha_grid = {0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
    cfg.validate();
    const CalibStudyResult r = run_mc_calibration(cfg);
    doc = {{"kind", kind},
           {"config",
            {{"replications", cfg.replications}, {"n", cfg.n}, {"alpha", cfg.levels.alpha},
             {"beta", cfg.levels.beta}, {"alpha_mis", cfg.alpha_mis}, {"beta_mis", cfg.beta_mis},
             {"seed", cfg.seed}, {"nu", cfg.nu}}},
           {"result", to_json(r)}};
    csv = study_csv(r);
  } else if (kind == "dm-null") {
    const auto n = sizes_of(c, {1000});
    const DmNullResult r =
        run_dm_null(static_cast<std::size_t>(reps), n.front(), seed_of(c), nu_of(c));
    doc = {{"kind", kind},
           {"config", {{"replications", reps}, {"n", n.front()}, {"seed", seed_of(c)}, {"nu", nu_of(c)}}},
           {"result", {{"rejection_rate", r.rejection_rate}, {"ks_distance", r.ks_distance}}}};
    std::ostringstream os;
    os << "replications,n,rejection_rate,ks_distance\n"
       << reps << ',' << n.front() << ',' << r.rejection_rate << ',' << r.ks_distance << '\n';
    csv = os.str();
  } else {
    throw UsageError("--kind: expected dm, calibration or dm-null, got '" + kind + "'");
  }
  if (const auto path = c.get("csv")) write_atomic(*path, csv);
  emit(c, out, doc);
  return 0;
}

double round_to(double v, int digits) {
  const double k = std::pow(10.0, digits);
  return std::round(v * k) / k;
}

int cmd_levels(const Command& c, std::ostream& out) {
  auto entry = [](const LevelAdjustment& a) {
    json j;
    j["nu"] = a.nu;
    j["nu_tilde"] = round_to(a.nu_tilde, 4);
    j["nu_prime"] = round_to(a.nu_prime, 4);
    return j;
  };
  if (c.has("nu")) {
    const double nu = c.number("nu", 0.05);
    if (!(nu > 0.0 && nu < 0.5)) throw UsageError("--nu must lie in (0, 0.5)");
    out << entry(adjust_level(nu)).dump() << "\n";
    return 0;
  }
  json table = json::array();
  for (const auto& a : level_table()) table.push_back(entry(a));
  out << table.dump() << "\n";
  return 0;
}

int cmd_cxls(const Command& c, std::ostream& out) {
  const double rho = c.number("rho", 0.8);
  if (!(std::abs(rho) < 1.0)) throw UsageError("--rho must lie in (-1, 1)");
  const std::string rule_s = c.text("rule", "conditional");
  if (rule_s != "conditional" && rule_s != "joint")
    throw UsageError("--rule: expected conditional or joint, got '" + rule_s + "'");
  const MixtureRule rule = rule_s == "joint" ? MixtureRule::Joint : MixtureRule::Conditional;
  const CxlsReport r = cxls_report(rho, levels_of(c), rule);
  if (c.flag("json")) {
    out << to_json(r).dump(2) << "\n";
    return 0;
  }
  auto row = [&](const std::string& name, double a, double b, double m) {
    out << std::left << std::setw(10) << name << std::right << std::fixed << std::setprecision(4)
        << std::setw(10) << a << std::setw(10) << b << std::setw(10) << m << "\n";
  };
  out << "rho = " << rho << ", alpha = " << r.levels.alpha << ", beta = " << r.levels.beta
      << ", rule = " << rule_s << "\n";
  out << std::left << std::setw(10) << "measure" << std::right << std::setw(10) << "F0"
      << std::setw(10) << "F1" << std::setw(10) << "mix" << "\n";
  row("VaR", r.var_f0, r.var_f1, r.var_mix);
  row("CoVaR", r.covar.value_f0, r.covar.value_f1, r.covar.value_mix);
  row("CoES", r.coes.value_f0, r.coes.value_f1, r.coes.value_mix);
  row("MES", r.mes.value_f0, r.mes.value_f1, r.mes.value_mix);
  row("MES/rho", r.mes_coef_f0, r.mes_coef_f0, r.mes_coef_mix);
  return 0;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const DataError*>(&e) ||
      dynamic_cast<const DomainError*>(&e) || dynamic_cast<const InsufficientDataError*>(&e))
    return 2;
  return 3;
}

}  // namespace

int run_command(const Command& cmd, std::ostream& out) {
  switch (cmd.verb) {
    case Verb::Help:
      out << cmd.help;
      return 0;
    case Verb::Simulate:
      return cmd_simulate(cmd, out);
    case Verb::Fit:
      return cmd_fit(cmd, out);
    case Verb::Forecast:
      return cmd_forecast(cmd, out);
    case Verb::Compare:
      return cmd_compare(cmd, out, false);
    case Verb::Traffic:
      return cmd_compare(cmd, out, true);
    case Verb::Calibrate:
      return cmd_calibrate(cmd, out);
    case Verb::Study:
      return cmd_study(cmd, out);
    case Verb::Levels:
      return cmd_levels(cmd, out);
    case Verb::Cxls:
      return cmd_cxls(cmd, out);
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return run_command(parse_args(args), out);
  } catch (const Error& e) {
    err << json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << json{{"error", "internal_error"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  }
}

}  // namespace syrisk
