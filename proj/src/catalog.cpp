#include "qsbrown/catalog.hpp"

#include <cmath>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "qsbrown/errors.hpp"
#include "qsbrown/model_json.hpp"

namespace qsb {

namespace {

void check_K(int K) {
  if (K < 1) throw ParameterOutOfRange("K must be at least 1");
}

std::map<std::string, double> resolve(const PresetInfo& info, const std::map<std::string, double>& params) {
  auto out = info.defaults;
  for (const auto& [key, value] : params) {
    if (!out.count(key))
      throw ConfigError("preset '" + info.name + "' has no parameter '" + key + "'");
    out[key] = value;
  }
  return out;
}

}  // namespace

ModelSpec preset_beta_tasep(double beta, double mu, int K) {
  check_K(K);
  if (!(beta > 4.0))
    throw ParameterOutOfRange("beta_tasep needs beta > 4 (Fisher information of the spacing law diverges otherwise)");
  if (!(mu > 0.0)) throw ParameterOutOfRange("beta_tasep needs mu > 0");
  ModelSpec s;
  s.K = K;
  s.d = 1;
  s.covariance = Covariance::identity_half();
  s.interaction = Interaction::delta();
  s.drifts = Drifts::constant(mu / 2.0);
  s.potential = Potential::beta_tasep(beta, mu);
  return s;
}

ModelSpec preset_oconnell_yor(double mu, int K) {
  check_K(K);
  if (!(mu > 0.0)) throw ParameterOutOfRange("oy needs mu > 0");
  ModelSpec s;
  s.K = K;
  s.d = 1;
  s.covariance = Covariance::identity_half();
  s.interaction = Interaction::delta();
  s.drifts = Drifts::constant(mu / 2.0);
  s.potential = Potential::oconnell_yor(mu);
  return s;
}

ModelSpec preset_free(int K) {
  check_K(K);
  ModelSpec s;
  s.K = K;
  s.d = 1;
  s.covariance = Covariance::identity_half();
  s.interaction = Interaction::delta();
  s.drifts = Drifts::constant(0.0);
  s.potential = Potential::zero();
  return s;
}

const std::vector<PresetInfo>& list_presets() {
  static const std::vector<PresetInfo> presets = {
      {"beta_tasep",
       "beta-analogue of Brownian TASEP: drift (beta/4 - 1/2)/spacing, Gamma(beta/2, mu) spacings; "
       "valid for beta > 4",
       {{"beta", 6.0}, {"mu", 1.0}},
       true},
      {"oy",
       "O'Connell-Yor system (Brownian queues in tandem): drift (1/2) exp(-spacing), "
       "log-Gamma spacings with Z = Gamma(mu)",
       {{"mu", 2.0}},
       true},
      {"free",
       "independent Brownian motions with 2A = I; simulation only, no spacing measure",
       {},
       false},
  };
  return presets;
}

const PresetInfo& preset_info(const std::string& name) {
  for (const auto& p : list_presets())
    if (p.name == name) return p;
  throw ConfigError("unknown preset '" + name + "'");
}

ModelSpec make_preset(const std::string& name, const std::map<std::string, double>& params, int K) {
  const auto& info = preset_info(name);
  const auto p = resolve(info, params);
  if (name == "beta_tasep") return preset_beta_tasep(p.at("beta"), p.at("mu"), K);
  if (name == "oy") return preset_oconnell_yor(p.at("mu"), K);
  return preset_free(K);
}

ExpectedStats preset_expected(const std::string& name, const std::map<std::string, double>& params) {
  const auto& info = preset_info(name);
  const auto p = resolve(info, params);
  ExpectedStats e;
  if (name == "beta_tasep") {
    const double shape = p.at("beta") / 2.0;
    const double rate = p.at("mu");
    e.partition = std::tgamma(shape) / std::pow(rate, shape);
    e.spacing_mean = shape / rate;
    e.spacing_variance = shape / (rate * rate);
    // E[(d/dz log density)^2] for Gamma(shape, rate), finite iff shape > 2.
    if (shape > 2.0) e.fisher = rate * rate / (shape - 2.0);
  } else if (name == "oy") {
    const double mu = p.at("mu");
    e.partition = std::tgamma(mu);
    e.spacing_mean = -boost::math::digamma(mu);
    e.spacing_variance = boost::math::trigamma(mu);
    e.fisher = mu;
  }
  return e;
}

nlohmann::json preset_json(const std::string& name, const std::map<std::string, double>& params, int K) {
  const auto& info = preset_info(name);
  const auto p = resolve(info, params);
  const ModelSpec spec = make_preset(name, p, K);
  const ExpectedStats e = preset_expected(name, p);
  nlohmann::json expected = nlohmann::json::object();
  if (e.partition) expected["partition"] = *e.partition;
  if (e.spacing_mean) expected["spacing_mean"] = *e.spacing_mean;
  if (e.spacing_variance) expected["spacing_variance"] = *e.spacing_variance;
  if (e.fisher) expected["fisher"] = *e.fisher;
  return {{"name", info.name},
          {"description", info.description},
          {"parameters", p},
          {"measure_defined", info.measure_defined},
          {"model", to_json(spec)},
          {"expected", expected}};
}

}  // namespace qsb
