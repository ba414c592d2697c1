#include "skewmix/model_io.hpp"

#include <string>
#include <vector>

#include "skewmix/error.hpp"

namespace skewmix {
namespace {

using nlohmann::json;

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) r[static_cast<std::size_t>(k)] = m(i, k);
    rows.push_back(r);
  }
  return rows;
}

Vector json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix json_mat(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw Error(ErrorCode::ParseError, "empty matrix in model json");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw Error(ErrorCode::ParseError, "ragged matrix in model json");
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

std::string_view to_string(DofPolicy d) {
  switch (d) {
    case DofPolicy::per_component: return "per_component";
    case DofPolicy::shared: return "shared";
    case DofPolicy::fixed: return "fixed";
  }
  return "?";
}

DofPolicy dof_policy_from_string(const std::string& s) {
  if (s == "per_component") return DofPolicy::per_component;
  if (s == "shared") return DofPolicy::shared;
  if (s == "fixed") return DofPolicy::fixed;
  throw Error(ErrorCode::ParseError, "unknown dof policy '" + s + "'");
}

template <class Params>
json component_json(const Params& c) {
  json j{{"mu", vec_json(c.mu())},
         {"sigma", mat_json(c.sigma().matrix())},
         {"sigma_lower", mat_json(c.sigma().lower())},
         {"delta", vec_json(c.delta())}};
  j["nu"] = c.nu() ? json(*c.nu()) : json(nullptr);
  return j;
}

}  // namespace

json model_to_json(const MixtureModel& model) {
  json comps = json::array();
  for (int h = 0; h < model.g(); ++h) {
    comps.push_back(is_restricted(model.family()) ? component_json(model.restricted()[h])
                                                  : component_json(model.unrestricted()[h]));
  }
  return json{{"family", std::string(to_string(model.family()))},
              {"dof_policy", std::string(to_string(model.dof_policy()))},
              {"g", model.g()},
              {"p", model.dim()},
              {"weights", vec_json(model.weights())},
              {"components", comps}};
}

MixtureModel model_from_json(const json& j) {
  try {
    const Family family = family_from_string(j.at("family").get<std::string>());
    const DofPolicy policy = dof_policy_from_string(j.at("dof_policy").get<std::string>());
    const Vector weights = json_vec(j.at("weights"));
    std::vector<RestrictedParams> restricted;
    std::vector<UnrestrictedParams> unrestricted;
    for (const json& c : j.at("components")) {
      const std::optional<double> nu = c.at("nu").is_null() ? std::nullopt : std::optional<double>(c.at("nu").get<double>());
      SpdMatrix sigma(json_mat(c.at("sigma")));
      if (is_restricted(family)) {
        restricted.emplace_back(json_vec(c.at("mu")), std::move(sigma), json_vec(c.at("delta")), nu);
      } else {
        unrestricted.emplace_back(json_vec(c.at("mu")), std::move(sigma), json_vec(c.at("delta")), nu);
      }
    }
    if (is_restricted(family)) return MixtureModel(family, weights, std::move(restricted), policy);
    return MixtureModel(family, weights, std::move(unrestricted), policy);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model json: ") + e.what());
  }
}

void validate_report(const json& report) {
  const auto need = [&](const char* key, auto check, const char* type) {
    if (!report.contains(key) || !check(report.at(key))) {
      throw Error(ErrorCode::InvalidArgument, std::string("report.json: field '") + key + "' missing or not " + type);
    }
  };
  const auto is_string = [](const json& v) { return v.is_string(); };
  const auto is_number = [](const json& v) { return v.is_number(); };
  const auto is_int = [](const json& v) { return v.is_number_integer(); };
  const auto is_bool = [](const json& v) { return v.is_boolean(); };
  const auto is_object = [](const json& v) { return v.is_object(); };
  const auto is_array = [](const json& v) { return v.is_array(); };
  need("status", is_string, "a string");
  need("seed", is_int, "an integer");
  need("wall_time_s", is_number, "a number");
  const std::string status = report.at("status").get<std::string>();
  if (status == "error") {
    need("error", is_object, "an object");
    const json& e = report.at("error");
    if (!e.contains("code") || !e.at("code").is_string() || !e.contains("message") || !e.at("message").is_string()) {
      throw Error(ErrorCode::InvalidArgument, "report.json: error record needs string code and message");
    }
    return;
  }
  if (status != "ok") throw Error(ErrorCode::InvalidArgument, "report.json: status must be ok or error");
  need("family", is_string, "a string");
  need("g", is_int, "an integer");
  need("n", is_int, "an integer");
  need("p", is_int, "an integer");
  need("loglik", is_number, "a number");
  need("iterations", is_int, "an integer");
  need("converged", is_bool, "a boolean");
  need("warnings", is_array, "an array");
  if (report.contains("misclassification_rate")) need("misclassification_rate", is_number, "a number");
}

}  // namespace skewmix
