#include "syrisk/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <system_error>

namespace syrisk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Numeric cell; nullopt for text that is not a finite number.
std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* b = s.data();
  const char* e = b + s.size();
  if (*b == '+') ++b;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string fmt(double v) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

struct CsvTable {
  std::map<std::string, std::size_t> columns;
  std::size_t width = 0;
  struct Row {
    std::size_t line;
    std::vector<std::string> cells;
  };
  std::vector<Row> rows;

  std::optional<std::size_t> column(const std::string& name) const {
    const auto it = columns.find(name);
    if (it == columns.end()) return std::nullopt;
    return it->second;
  }
};

CsvTable read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    if (!header) {
      const auto names = split(line);
      for (std::size_t i = 0; i < names.size(); ++i) {
        const std::string key = lower(names[i]);
        if (key.empty()) continue;
        if (!t.columns.emplace(key, i).second)
          throw DataError(path.string() + ": duplicate column '" + names[i] + "'");
      }
      t.width = names.size();
      header = true;
      continue;
    }
    t.rows.push_back({lineno, split(line)});
  }
  if (!header) throw DataError(path.string() + ": missing header row");
  return t;
}

void reject(CsvDiagnostics& d, const fs::path& path, std::size_t line, const std::string& why) {
  ++d.rejected;
  d.messages.push_back(path.filename().string() + " line " + std::to_string(line) + ": " + why);
}

}  // namespace

LossSeries read_observations(const fs::path& path, bool prices, CsvDiagnostics* diag) {
  const CsvTable t = read_table(path);
  const auto cx = t.column("x");
  const auto cy = t.column("y");
  if (!cx || !cy) throw DataError(path.string() + ": header must name columns x and y");
  const auto cd = t.column("date");

  CsvDiagnostics local;
  CsvDiagnostics& d = diag ? *diag : local;
  d = {};
  LossSeries raw;
  for (const auto& row : t.rows) {
    ++d.rows_in;
    if (row.cells.size() != t.width) {
      reject(d, path, row.line,
             "expected " + std::to_string(t.width) + " fields, found " +
                 std::to_string(row.cells.size()));
      continue;
    }
    const auto x = parse_number(row.cells[*cx]);
    const auto y = parse_number(row.cells[*cy]);
    if (!x || !y) {
      reject(d, path, row.line, "x and y must be finite numbers");
      continue;
    }
    if (prices && (*x <= 0.0 || *y <= 0.0)) {
      reject(d, path, row.line, "prices must be positive");
      continue;
    }
    ++d.accepted;
    if (cd) raw.dates.push_back(row.cells[*cd]);
    raw.x.push_back(*x);
    raw.y.push_back(*y);
  }
  if (raw.size() == 0) throw DataError(path.string() + ": no valid data rows");
  if (!prices) return raw;

  if (raw.size() < 2) throw DataError(path.string() + ": prices need at least two rows");
  LossSeries out;
  for (std::size_t t2 = 1; t2 < raw.size(); ++t2) {
    if (!raw.dates.empty()) out.dates.push_back(raw.dates[t2]);
    out.x.push_back(-std::log(raw.x[t2] / raw.x[t2 - 1]));
    out.y.push_back(-std::log(raw.y[t2] / raw.y[t2 - 1]));
  }
  return out;
}

ForecastFile read_forecasts(const fs::path& path, const RiskLevels& levels, CsvDiagnostics* diag) {
  const CsvTable t = read_table(path);
  const auto cv = t.column("var");
  if (!cv) throw DataError(path.string() + ": header must name a var column");
  const auto cd = t.column("date");
  const auto cc = t.column("covar");
  const auto ce = t.column("coes");
  const auto cm = t.column("mes");
  const auto ca = t.column("alpha");
  const auto cb = t.column("beta");

  CsvDiagnostics local;
  CsvDiagnostics& d = diag ? *diag : local;
  d = {};
  ForecastFile out;
  for (const auto& row : t.rows) {
    ++d.rows_in;
    if (row.cells.size() != t.width) {
      reject(d, path, row.line,
             "expected " + std::to_string(t.width) + " fields, found " +
                 std::to_string(row.cells.size()));
      continue;
    }
    ForecastTuple f;
    f.levels = levels;
    bool ok = true;
    auto cell = [&](std::optional<std::size_t> c, const char* name) -> std::optional<double> {
      if (!c || row.cells[*c].empty()) return std::nullopt;
      const auto v = parse_number(row.cells[*c]);
      if (!v) {
        reject(d, path, row.line, std::string(name) + " must be a finite number");
        ok = false;
      }
      return v;
    };
    const auto v = cell(cv, "var");
    if (ok && !v) {
      reject(d, path, row.line, "var is missing");
      continue;
    }
    if (ok) f.c = cell(cc, "covar");
    if (ok) f.e = cell(ce, "coes");
    if (ok) f.mu = cell(cm, "mes");
    std::optional<double> a, b;
    if (ok) a = cell(ca, "alpha");
    if (ok) b = cell(cb, "beta");
    if (!ok) continue;
    f.v = *v;
    if (a) f.levels.alpha = *a;
    if (b) f.levels.beta = *b;
    try {
      f.levels.validate();
    } catch (const Error& e) {
      reject(d, path, row.line, e.what());
      continue;
    }
    ++d.accepted;
    if (cd) out.dates.push_back(row.cells[*cd]);
    out.forecasts.push_back(f);
  }
  if (out.forecasts.empty()) throw DataError(path.string() + ": no valid forecast rows");
  return out;
}

std::string observations_csv(const LossSeries& s) {
  s.validate();
  std::ostringstream os;
  os << "date,x,y\n";
  for (std::size_t t = 0; t < s.size(); ++t)
    os << (s.dates.empty() ? std::to_string(t + 1) : s.dates[t]) << ',' << fmt(s.x[t]) << ','
       << fmt(s.y[t]) << '\n';
  return os.str();
}

namespace {

void forecast_row(std::ostream& os, const std::string& date, const std::optional<ForecastTuple>& f) {
  os << date << ',';
  if (f) {
    auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
    os << fmt(f->v) << ',' << opt(f->c) << ',' << opt(f->e) << ',' << opt(f->mu) << ','
       << fmt(f->levels.alpha) << ',' << fmt(f->levels.beta);
  } else {
    os << ",,,,,";
  }
  os << '\n';
}

constexpr const char* kForecastHeader = "date,var,covar,coes,mes,alpha,beta\n";

}  // namespace

std::string forecasts_csv(const std::vector<RollingPoint>& points) {
  std::ostringstream os;
  os << kForecastHeader;
  for (const auto& p : points)
    forecast_row(os, p.date.empty() ? std::to_string(p.index + 1) : p.date, p.forecast);
  return os.str();
}

std::string forecasts_csv(const ForecastFile& f) {
  std::ostringstream os;
  os << kForecastHeader;
  for (std::size_t t = 0; t < f.forecasts.size(); ++t)
    forecast_row(os, f.dates.empty() ? std::to_string(t + 1) : f.dates[t], f.forecasts[t]);
  return os.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw DataError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DataError("cannot replace '" + path.string() + "'");
  }
}

// ------------------------------------------------------------------ json

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void put_margin(json& j, const std::string& p, const GarchParams& g) {
  j[p + ".family"] = to_string(g.family);
  j[p + ".omega"] = g.omega;
  j[p + ".alpha"] = g.alpha;
  j[p + ".beta"] = g.beta;
  j[p + ".leverage"] = g.leverage;
}

GarchParams get_margin(const json& j, const std::string& p) {
  GarchParams g;
  g.family = garch_family_from_string(j.at(p + ".family").get<std::string>());
  g.omega = j.at(p + ".omega").get<double>();
  g.alpha = j.at(p + ".alpha").get<double>();
  g.beta = j.at(p + ".beta").get<double>();
  g.leverage = j.value(p + ".leverage", 0.0);
  return g;
}

json omega_json(const HacEstimate& o) {
  return {{"s11", o.s11}, {"s12", o.s12}, {"s22", o.s22}, {"m", o.m},
          {"kernel", to_string(o.kernel)}, {"repaired", o.repaired}};
}

}  // namespace

json to_json(const FittedModel& m, std::uint64_t seed) {
  json j;
  put_margin(j, "x", m.x.params);
  put_margin(j, "y", m.y.params);
  j["copula.family"] = to_string(m.copula.params.family());
  j["copula.omega"] = m.copula.params.omega;
  j["copula.alpha"] = m.copula.params.alpha;
  j["copula.beta"] = m.copula.params.beta;
  j["copula.df"] = number_or_null(m.copula.params.df);
  j["link"] = kLinkName;
  j["seed"] = seed;
  j["n"] = m.resid_x.size();
  j["loglik"] = m.loglik;
  j["x.loglik"] = m.x.loglik;
  j["y.loglik"] = m.y.loglik;
  j["copula.loglik"] = m.copula.loglik;
  j["copula.clamped"] = m.copula.path.clamped;
  j["forecast.sigma_x"] = m.x.sigma.back();
  j["forecast.sigma_y"] = m.y.sigma.back();
  j["forecast.rho"] = m.copula.path.rho.back();
  return j;
}

ModelParams model_params_from_json(const json& j) {
  try {
    if (j.value("link", std::string(kLinkName)) != kLinkName)
      throw DataError("model uses an unsupported link '" + j.at("link").get<std::string>() + "'");
    ModelParams p;
    p.x = get_margin(j, "x");
    p.y = get_margin(j, "y");
    p.copula.omega = j.at("copula.omega").get<double>();
    p.copula.alpha = j.at("copula.alpha").get<double>();
    p.copula.beta = j.at("copula.beta").get<double>();
    const auto& df = j.at("copula.df");
    p.copula.df = df.is_null() ? std::numeric_limits<double>::infinity() : df.get<double>();
    p.seed = j.value("seed", std::uint64_t{0});
    return p;
  } catch (const json::exception& e) {
    throw DataError(std::string("model document: ") + e.what());
  }
}

json to_json(const DmResult& r) {
  json j = {{"statistic", number_or_null(r.statistic)},
            {"p_value", r.p_value},
            {"hypothesis", to_string(r.hypothesis)},
            {"n", r.n},
            {"dbar", {r.dbar.s1, r.dbar.s2}},
            {"omega", omega_json(r.omega)}};
  j["zone"] = r.zone ? json(to_string(*r.zone)) : json(nullptr);
  return j;
}

json to_json(const CalibResult& r) {
  json mean = json::array(), cov = json::array();
  for (Eigen::Index i = 0; i < r.mean_id.size(); ++i) mean.push_back(r.mean_id(i));
  for (Eigen::Index i = 0; i < r.cov.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < r.cov.cols(); ++k) row.push_back(r.cov(i, k));
    cov.push_back(row);
  }
  return {{"statistic", number_or_null(r.statistic)}, {"dof", r.dof},
          {"p_value", r.p_value},                     {"mean", mean},
          {"cov", cov},                               {"rank_deficient", r.rank_deficient}};
}

json to_json(const StudyConfig& c) {
  json fs = json::array(), vm = json::array(), sc = json::array();
  for (auto f : c.functionals) fs.push_back(to_string(f));
  for (auto v : c.var_modes) vm.push_back(to_string(v));
  for (auto s : c.scenarios) sc.push_back(to_string(s));
  return {{"replications", c.replications},
          {"n", c.n},
          {"window", c.window},
          {"alpha", c.levels.alpha},
          {"beta", c.levels.beta},
          {"seed", c.seed},
          {"functionals", fs},
          {"var_modes", vm},
          {"scenarios", sc},
          {"jobs", c.jobs},
          {"nu", c.nu},
          {"noise_shape", c.noise_shape},
          {"noise_scale", c.noise_scale},
          {"margin", to_string(c.model.margin)},
          {"copula", to_string(c.model.copula)}};
}

json to_json(const StudyResult& r) {
  json cells = json::array();
  for (const auto& c : r.cells)
    cells.push_back({{"n", c.n},
                     {"functional", to_string(c.functional)},
                     {"var_mode", to_string(c.var_mode)},
                     {"scenario", to_string(c.scenario)},
                     {"null", to_string(c.null_kind)},
                     {"rejections", c.rejections},
                     {"valid", c.valid},
                     {"failures", c.failures},
                     {"rate", c.rate},
                     {"se", c.se},
                     {"invalid", c.invalid}});
  return {{"replications", r.replications},
          {"failed_replications", r.failed_replications},
          {"failure_messages", r.failure_messages},
          {"cells", cells}};
}

namespace {

json calib_cell_json(const CalibCell& c) {
  return {{"n", c.n},
          {"alpha_f", c.alpha_f},
          {"beta_f", c.beta_f},
          {"correct", c.correct},
          {"variant", c.variant == IdVariant::Strict ? "strict" : "non-strict"},
          {"rejections", c.rejections},
          {"valid", c.valid},
          {"rate", c.rate},
          {"se", c.se},
          {"var_forecast", c.var_forecast},
          {"covar_forecast", c.covar_forecast}};
}

}  // namespace

json to_json(const CalibStudyResult& r) {
  json t = json::array(), c = json::array();
  for (const auto& x : r.table) t.push_back(calib_cell_json(x));
  for (const auto& x : r.curve) c.push_back(calib_cell_json(x));
  return {{"table", t}, {"curve", c}, {"failures", r.failures}};
}

json to_json(const LevelAdjustment& a) {
  return {{"nu", a.nu}, {"nu_tilde", a.nu_tilde}, {"nu_prime", a.nu_prime}, {"chi2_crit", a.chi2_crit}};
}

json to_json(const CxlsReport& r) {
  auto triple = [](const CxlsResult& c) {
    return json{{"f0", c.value_f0}, {"f1", c.value_f1}, {"mix", c.value_mix}, {"violated", c.violated}};
  };
  return {{"rho", r.rho},
          {"alpha", r.levels.alpha},
          {"beta", r.levels.beta},
          {"rule", r.rule == MixtureRule::Joint ? "joint" : "conditional"},
          {"var", {{"f0", r.var_f0}, {"f1", r.var_f1}, {"mix", r.var_mix}}},
          {"covar", triple(r.covar)},
          {"coes", triple(r.coes)},
          {"mes", triple(r.mes)},
          {"mes_coef", {{"f0", r.mes_coef_f0}, {"mix", r.mes_coef_mix}}}};
}

std::string study_csv(const StudyResult& r) {
  std::ostringstream os;
  os << "n,functional,var_mode,scenario,null,rejections,valid,failures,rate,se,invalid\n";
  for (const auto& c : r.cells)
    os << c.n << ',' << to_string(c.functional) << ',' << to_string(c.var_mode) << ','
       << to_string(c.scenario) << ',' << to_string(c.null_kind) << ',' << c.rejections << ','
       << c.valid << ',' << c.failures << ',' << fmt(c.rate) << ',' << fmt(c.se) << ','
       << (c.invalid ? "true" : "false") << '\n';
  return os.str();
}

std::string study_csv(const CalibStudyResult& r) {
  std::ostringstream os;
  os << "part,n,alpha_f,beta_f,correct,variant,rejections,valid,rate,se\n";
  auto row = [&](const char* part, const CalibCell& c) {
    os << part << ',' << c.n << ',' << fmt(c.alpha_f) << ',' << fmt(c.beta_f) << ','
       << (c.correct ? "true" : "false") << ','
       << (c.variant == IdVariant::Strict ? "strict" : "non-strict") << ',' << c.rejections << ','
       << c.valid << ',' << fmt(c.rate) << ',' << fmt(c.se) << '\n';
  };
  for (const auto& c : r.table) row("table", c);
  for (const auto& c : r.curve) row("curve", c);
  return os.str();
}

}  // namespace syrisk
