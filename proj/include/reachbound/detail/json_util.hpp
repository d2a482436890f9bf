#pragma once

#include <Eigen/Dense>
#include <cmath>

#include <nlohmann/json.hpp>

namespace reachbound::detail {

// Nonfinite values cross the JSON boundary as strings; NaN marks
// an unpopulated field and becomes null.
inline nlohmann::ordered_json json_num(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline nlohmann::ordered_json json_vec(const Eigen::VectorXd& v) {
  auto a = nlohmann::ordered_json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace reachbound::detail
