#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "syrisk/experiments.hpp"
#include "syrisk/forecast.hpp"
#include "syrisk/models.hpp"
#include "syrisk/series.hpp"

namespace syrisk {

/// Row accounting for one CSV file; rows_in = accepted + rejected.
struct CsvDiagnostics {
  std::size_t rows_in = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<std::string> messages;  // "line N: ..."
};

/// Reads `date,x,y` (date optional). With `prices`, columns hold price
/// levels and are turned into losses -log(P_t / P_{t-1}), dropping the first row.
LossSeries read_observations(const std::filesystem::path& path, bool prices,
                             CsvDiagnostics* diag = nullptr);

struct ForecastFile {
  std::vector<std::string> dates;
  std::vector<ForecastTuple> forecasts;
};

/// Reads `date,var,covar,coes,mes[,alpha,beta]`. Empty cells are unreported
/// components; missing level columns take `levels`.
ForecastFile read_forecasts(const std::filesystem::path& path, const RiskLevels& levels,
                            CsvDiagnostics* diag = nullptr);

std::string observations_csv(const LossSeries& s);
std::string forecasts_csv(const std::vector<RollingPoint>& points);
std::string forecasts_csv(const ForecastFile& f);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

nlohmann::json to_json(const FittedModel& m, std::uint64_t seed);
/// Parameters of a serialized model (the flat keys written by to_json).
struct ModelParams {
  GarchParams x;
  GarchParams y;
  GasCopulaParams copula;
  std::uint64_t seed = 0;
};
ModelParams model_params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DmResult& r);
nlohmann::json to_json(const CalibResult& r);
nlohmann::json to_json(const StudyConfig& c);
nlohmann::json to_json(const StudyResult& r);
nlohmann::json to_json(const CalibStudyResult& r);
nlohmann::json to_json(const LevelAdjustment& a);
nlohmann::json to_json(const CxlsReport& r);

std::string study_csv(const StudyResult& r);
std::string study_csv(const CalibStudyResult& r);

/// Traffic-light figure: critical ellipse, dashed diameter, zone shading and
/// the observed mean difference, on a 600x600 view box.
std::string zone_svg(MoScore dbar, const HacEstimate& omega, std::size_t n, double nu);

}  // namespace syrisk
