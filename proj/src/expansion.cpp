#include "opera/expansion.hpp"

#include <nlohmann/json.hpp>

namespace opera {

using json = nlohmann::json;

UnivariateExpansion difference_to_univariate(const UnivariateKernel& g, const DifferenceExpansion& d) {
  std::vector<Point> centers;
  centers.reserve(2 * d.pairs.size());
  Eigen::VectorXd coeffs(2 * static_cast<Eigen::Index>(d.pairs.size()));
  for (std::size_t i = 0; i < d.pairs.size(); ++i) {
    centers.push_back(d.pairs[i].first);
    centers.push_back(d.pairs[i].second);
    coeffs[2 * static_cast<Eigen::Index>(i)] = d.coeffs[static_cast<Eigen::Index>(i)];
    coeffs[2 * static_cast<Eigen::Index>(i) + 1] = -d.coeffs[static_cast<Eigen::Index>(i)];
  }
  return UnivariateExpansion::from_parts(g, std::move(centers), std::move(coeffs));
}

PairwiseExpansion difference_to_pairwise(const UnivariateKernel& g, const DifferenceExpansion& d) {
  return PairwiseExpansion::from_parts(PairwiseKernel::induced(g), d.pairs, d.coeffs);
}

IsometryResult isometry_check(const UnivariateKernel& g, const DifferenceExpansion& d) {
  IsometryResult r;
  r.norm_g = d.pairs.empty() ? 0.0 : difference_to_univariate(g, d).rkhs_norm();
  r.norm_k = d.pairs.empty() ? 0.0 : difference_to_pairwise(g, d).rkhs_norm();
  return r;
}

namespace {

json point_to_json(const Point& p) {
  json a = json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(p[i]);
  return a;
}

Point point_from_json(const json& a) {
  Point p(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) p[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return p;
}

Eigen::VectorXd coeffs_from_json(const json& a) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) c[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return c;
}

json coeffs_to_json(const Eigen::VectorXd& c) {
  json a = json::array();
  for (Eigen::Index i = 0; i < c.size(); ++i) a.push_back(c[i]);
  return a;
}

}  // namespace

std::string to_json_string(const UnivariateExpansion& e) {
  json j;
  j["kernel"] = e.kernel().spec_string();
  json centers = json::array();
  for (const auto& c : e.centers()) centers.push_back(point_to_json(c));
  j["centers"] = std::move(centers);
  j["coefficients"] = coeffs_to_json(e.coefficients());
  return j.dump();
}

std::string to_json_string(const PairwiseExpansion& e) {
  json j;
  j["kernel"] = e.kernel().spec_string();
  json centers = json::array();
  for (const auto& c : e.centers()) centers.push_back(json::array({point_to_json(c.first), point_to_json(c.second)}));
  j["centers"] = std::move(centers);
  j["coefficients"] = coeffs_to_json(e.coefficients());
  return j.dump();
}

UnivariateExpansion univariate_expansion_from_json(const std::string& text, int dim) {
  json j = json::parse(text);
  auto k = UnivariateKernel::parse(j.at("kernel").get<std::string>(), dim);
  std::vector<Point> centers;
  for (const auto& c : j.at("centers")) centers.push_back(point_from_json(c));
  return UnivariateExpansion::from_parts(std::move(k), std::move(centers),
                                         coeffs_from_json(j.at("coefficients")));
}

PairwiseExpansion pairwise_expansion_from_json(const std::string& text, int dim) {
  json j = json::parse(text);
  auto k = PairwiseKernel::parse(j.at("kernel").get<std::string>(), dim);
  std::vector<PairPoint> centers;
  for (const auto& c : j.at("centers"))
    centers.emplace_back(point_from_json(c.at(0)), point_from_json(c.at(1)));
  return PairwiseExpansion::from_parts(std::move(k), std::move(centers),
                                       coeffs_from_json(j.at("coefficients")));
}

}  // namespace opera
