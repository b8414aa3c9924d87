#pragma once

#include "sinkstat/asymptotics.hpp"
#include "sinkstat/inference.hpp"
#include "sinkstat/measures.hpp"
#include "sinkstat/sinkhorn.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <ostream>
#include <span>
#include <string>

namespace sinkstat {

using json = nlohmann::json;

/// Shortest round-trip representation ("%.17g").
std::string format_double(double x);

json to_json(const DiscreteMeasure& m);
json to_json(const EmpiricalMeasure& m);
json to_json(const SinkhornSolution& sol);
json to_json(const AsymptoticLaw& law);
json to_json(const TestReport& report);

/// Accepts {"n_points", "weights"}; n_points must match.
DiscreteMeasure discrete_measure_from_json(const json& j);
/// Accepts {"n_points", "counts", "sample_size"[, "weights"]}; weights are
/// recomputed from the counts.
EmpiricalMeasure empirical_measure_from_json(const json& j);

/// Dense plan, row i = source point i.
void write_plan_csv(std::ostream& os, const Eigen::MatrixXd& plan);
/// One value per line, no header.
void write_values_csv(std::ostream& os, std::span<const double> values);
/// Header "x,density" then one row per evaluation point.
void write_curve_csv(std::ostream& os, std::span<const double> xs, std::span<const double> ys);

}  // namespace sinkstat
