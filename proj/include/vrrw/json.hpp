#pragma once

// JSON forms of the model objects used by config files and CLI output.
// Sites are written as 1-based labels.

#include <string>
#include <vector>

#include <json.hpp>

#include "vrrw/dynamics.hpp"
#include "vrrw/equilibria.hpp"
#include "vrrw/graph_model.hpp"

namespace vrrw {

using Json = nlohmann::json;

/// {"n": N, "entries": [[...], ...]}
inline Json matrix_to_json(const InteractionMatrix& a) {
  Json rows = Json::array();
  for (int i = 0; i < a.size(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < a.size(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return Json{{"n", a.size()}, {"entries", std::move(rows)}};
}

inline InteractionMatrix matrix_from_json(const Json& j) {
  try {
    const int n = j.at("n").get<int>();
    const auto& rows = j.at("entries");
    if (!rows.is_array() || static_cast<int>(rows.size()) != n) {
      throw Error(ErrorKind::InvalidSize, "entries must have n rows");
    }
    Matrix raw(n, n);
    for (int i = 0; i < n; ++i) {
      const auto& row = rows.at(static_cast<std::size_t>(i));
      if (!row.is_array() || static_cast<int>(row.size()) != n) {
        throw Error(ErrorKind::InvalidSize, "every row of entries must have n values");
      }
      for (int k = 0; k < n; ++k) raw(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    return InteractionMatrix::validate(raw);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Config, std::string("malformed matrix: ") + e.what());
  }
}

/// {"n", "alpha", "c"} plus an optional explicit "matrix". Without a matrix
/// the complete graph (or the loop model when c > 0) is used.
inline ModelParameters model_from_json(const Json& j) {
  try {
    const double alpha = j.at("alpha").get<double>();
    const double c = j.value("c", 0.0);
    if (j.contains("matrix")) {
      InteractionMatrix a = matrix_from_json(j.at("matrix"));
      if (j.contains("n") && j.at("n").get<int>() != a.size()) {
        throw Error(ErrorKind::Config, "model.n disagrees with model.matrix.n");
      }
      return ModelParameters(std::move(a), alpha, c);
    }
    const int n = j.at("n").get<int>();
    return c > 0.0 ? ModelParameters::loop_model(n, alpha, c) : ModelParameters::complete(n, alpha);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Config, std::string("malformed model: ") + e.what());
  }
}

/// True when the matrix is the complete graph with a constant diagonal, i.e.
/// the model `enumerate_all` describes.
inline bool is_complete_family(const ModelParameters& p) {
  const int n = p.size();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i != j && p.matrix(i, j) != 1.0) return false;
      if (i == j && p.matrix(i, i) != p.loop_c) return false;
    }
  return true;
}

inline Json model_to_json(const ModelParameters& p) {
  Json j{{"n", p.size()}, {"alpha", p.alpha}, {"c", p.loop_c}};
  if (!is_complete_family(p)) j["matrix"] = matrix_to_json(p.matrix);
  return j;
}

inline Json equilibrium_to_json(const Equilibrium& e) {
  Json point = Json::array();
  for (int i = 0; i < e.point.size(); ++i) point.push_back(e.point[i]);
  Json j{{"support", e.support.labels()},
         {"kind", to_string(e.kind)},
         {"point", std::move(point)},
         {"eigenvalues", e.tangent_eigenvalues},
         {"normal_eigenvalues", e.normal_eigenvalues},
         {"verdict", e.verdict ? Json(to_string(*e.verdict)) : Json(nullptr)},
         {"t", e.two_level ? Json(e.two_level->t) : Json(nullptr)},
         {"k", e.two_level ? Json(e.two_level->k) : Json(nullptr)}};
  return j;
}

}  // namespace vrrw
