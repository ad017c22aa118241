#include "qsbrown/model_json.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "qsbrown/errors.hpp"

namespace qsb {

using nlohmann::json;

namespace {

template <typename T>
T require(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(std::string("missing field '") + key + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad field '") + key + "' in " + where + ": " + e.what());
  }
}

json covariance_json(const ModelSpec& spec) {
  const auto& c = spec.covariance;
  if (c.kind() == Covariance::Kind::IdentityHalf) return {{"kind", "identity_half"}};
  const int n = std::min(c.extent(), spec.K + spec.d);
  json rows = json::array();
  for (int k = 1; k <= n; ++k) {
    json row = json::array();
    for (int l = 1; l <= n; ++l) row.push_back(c(k, l));
    rows.push_back(std::move(row));
  }
  return {{"kind", "dense"}, {"data", std::move(rows)}};
}

json interaction_json(const ModelSpec& spec) {
  const auto& r = spec.interaction;
  if (r.kind() == Interaction::Kind::Delta) return {{"kind", "delta"}};
  if (r.kind() == Interaction::Kind::Banded) return {{"kind", "banded"}, {"data", r.rows()}};
  const int n = std::min(r.extent(), spec.K + spec.d);
  json rows = json::array();
  for (int k = 1; k <= n; ++k) {
    json row = json::array();
    for (int j = 0; j < spec.d; ++j) row.push_back(spec.r(k + j, k));
    rows.push_back(std::move(row));
  }
  return {{"kind", "banded"}, {"data", std::move(rows)}};
}

}  // namespace

Potential potential_from_json(const json& j) {
  const auto kind = require<std::string>(j, "kind", "potential");
  if (kind == "beta_tasep")
    return Potential::beta_tasep(require<double>(j, "beta", "potential"),
                                 require<double>(j, "mu", "potential"));
  if (kind == "oy") return Potential::oconnell_yor(require<double>(j, "mu", "potential"));
  if (kind == "custom") {
    const auto expr = require<std::string>(j, "U", "potential");
    std::optional<std::string> deriv;
    if (j.contains("dU")) deriv = require<std::string>(j, "dU", "potential");
    const auto support = support_from_string(j.value("support", std::string("full")));
    return Potential::from_expression(expr, deriv, support);
  }
  throw ConfigError("unknown potential kind '" + kind + "'");
}

json to_json(const ModelSpec& spec) {
  return {{"K", spec.K},
          {"d", spec.d},
          {"covariance", covariance_json(spec)},
          {"interaction", interaction_json(spec)},
          {"drifts", {{"values", spec.drifts.values}, {"k0", spec.drifts.k0}}},
          {"potential", spec.potential.descriptor()}};
}

ModelSpec model_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model must be a JSON object");
  ModelSpec spec;
  spec.K = require<int>(j, "K", "model");
  spec.d = require<int>(j, "d", "model");

  const auto& cov = j.contains("covariance") ? j.at("covariance") : json{{"kind", "identity_half"}};
  const auto cov_kind = require<std::string>(cov, "kind", "covariance");
  if (cov_kind == "identity_half") {
    spec.covariance = Covariance::identity_half();
  } else if (cov_kind == "dense") {
    const auto rows = require<std::vector<std::vector<double>>>(cov, "data", "covariance");
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n)
        throw ConfigError("covariance.data must be square");
      for (Eigen::Index k = 0; k < n; ++k) a(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    spec.covariance = Covariance::dense(std::move(a));
  } else {
    throw ConfigError("unknown covariance kind '" + cov_kind + "'");
  }

  const auto& inter = j.contains("interaction") ? j.at("interaction") : json{{"kind", "delta"}};
  const auto inter_kind = require<std::string>(inter, "kind", "interaction");
  if (inter_kind == "delta") {
    spec.interaction = Interaction::delta();
  } else if (inter_kind == "banded") {
    spec.interaction =
        Interaction::banded(require<std::vector<std::vector<double>>>(inter, "data", "interaction"));
  } else {
    throw ConfigError("unknown interaction kind '" + inter_kind + "'");
  }

  const auto& drifts = j.contains("drifts") ? j.at("drifts") : json::object();
  spec.drifts.values = require<std::vector<double>>(drifts, "values", "drifts");
  spec.drifts.k0 = drifts.value("k0", static_cast<int>(spec.drifts.values.size()));

  if (!j.contains("potential")) throw ConfigError("missing field 'potential' in model");
  spec.potential = potential_from_json(j.at("potential"));
  spec.check_structure();
  return spec;
}

ModelSpec load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace qsb
