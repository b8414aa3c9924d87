#include "sinkstat/serialization.hpp"

#include <cstdio>
#include <stdexcept>

namespace sinkstat {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

json to_json(const DiscreteMeasure& m) {
  return {{"n_points", m.size()}, {"weights", to_std(m.weights())}};
}

json to_json(const EmpiricalMeasure& m) {
  json j = to_json(m.measure());
  j["counts"] = m.counts();
  j["sample_size"] = m.sample_size();
  return j;
}

json to_json(const SinkhornSolution& sol) {
  return {{"lambda", sol.lambda},
          {"primal", sol.primal},
          {"dual", sol.dual},
          {"iterations", sol.iterations},
          {"marginal_err", sol.marginal_err},
          {"converged", sol.converged},
          {"alpha", to_std(sol.alpha)},
          {"beta", to_std(sol.beta)}};
}

json to_json(const AsymptoticLaw& law) {
  json j = {{"kind", law.kind == LawKind::OneSample ? "one-sample" : "two-sample"},
            {"variance", law.variance}};
  j["gamma"] = law.gamma ? json(*law.gamma) : json(nullptr);
  return j;
}

json to_json(const TestReport& r) {
  json j = {{"statistic", r.statistic},
            {"p_value", r.p_value},
            {"ci_low", r.ci_low},
            {"ci_high", r.ci_high},
            {"converged_fraction", r.converged_fraction},
            {"requested_replicates", r.requested_replicates},
            {"kept_replicates", r.bootstrap_stats.size()}};
  j["asymptotic_variance"] = r.asymptotic_variance ? json(*r.asymptotic_variance) : json(nullptr);
  return j;
}

DiscreteMeasure discrete_measure_from_json(const json& j) {
  const auto w = j.at("weights").get<std::vector<double>>();
  if (j.contains("n_points") && j.at("n_points").get<std::size_t>() != w.size()) {
    throw std::invalid_argument("measure JSON: n_points does not match weights");
  }
  return DiscreteMeasure(from_std(w));
}

EmpiricalMeasure empirical_measure_from_json(const json& j) {
  EmpiricalMeasure m(j.at("counts").get<std::vector<std::int64_t>>());
  if (j.contains("sample_size") && j.at("sample_size").get<std::int64_t>() != m.sample_size()) {
    throw std::invalid_argument("empirical measure JSON: sample_size does not match counts");
  }
  if (j.contains("n_points") && j.at("n_points").get<std::size_t>() != m.size()) {
    throw std::invalid_argument("empirical measure JSON: n_points does not match counts");
  }
  return m;
}

void write_plan_csv(std::ostream& os, const Eigen::MatrixXd& plan) {
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
      if (j) os << ',';
      os << format_double(plan(i, j));
    }
    os << '\n';
  }
}

void write_values_csv(std::ostream& os, std::span<const double> values) {
  for (double v : values) os << format_double(v) << '\n';
}

void write_curve_csv(std::ostream& os, std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("write_curve_csv: length mismatch");
  os << "x,density\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    os << format_double(xs[i]) << ',' << format_double(ys[i]) << '\n';
  }
}

}  // namespace sinkstat
