#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsbrown/model.hpp"

namespace qsb {

/// beta-analogue of Brownian TASEP: 2A = I, d = 1, r = delta, mu_k = mu/2,
/// U(z) = (beta/4 - 1/2) log z - (mu/2) z. Requires beta > 4 and mu > 0.
ModelSpec preset_beta_tasep(double beta, double mu, int K);

/// O'Connell-Yor tandem queues: 2A = I, d = 1, r = delta, mu_k = mu/2,
/// U(z) = -(mu z + e^{-z})/2. Requires mu > 0.
ModelSpec preset_oconnell_yor(double mu, int K);

/// Independent Brownian motions (U = 0). Simulation only: the spacing
/// law is not normalizable.
ModelSpec preset_free(int K);

/// Closed-form statistics of the spacing law, where known.
struct ExpectedStats {
  std::optional<double> partition;
  std::optional<double> spacing_mean;
  std::optional<double> spacing_variance;
  std::optional<double> fisher;
};

struct PresetInfo {
  std::string name;
  std::string description;
  /// Parameter names with defaults.
  std::map<std::string, double> defaults;
  bool measure_defined = true;
};

const std::vector<PresetInfo>& list_presets();
const PresetInfo& preset_info(const std::string& name);

/// Builds a preset; missing parameters take their defaults. Throws
/// ConfigError for an unknown name or parameter.
ModelSpec make_preset(const std::string& name, const std::map<std::string, double>& params, int K);
ExpectedStats preset_expected(const std::string& name, const std::map<std::string, double>& params);

/// Description, resolved parameters, model JSON and expected statistics.
nlohmann::json preset_json(const std::string& name, const std::map<std::string, double>& params, int K);

}  // namespace qsb
