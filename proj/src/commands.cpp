#include "sinkstat/commands.hpp"

#include "sinkstat/asymptotics.hpp"
#include "sinkstat/inference.hpp"
#include "sinkstat/ingest.hpp"
#include "sinkstat/measures.hpp"
#include "sinkstat/rng.hpp"
#include "sinkstat/serialization.hpp"
#include "sinkstat/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>

namespace sinkstat {

namespace fs = std::filesystem;

const char* tool_version() { return "0.1.0"; }

namespace {

std::string tag(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

template <typename T>
T take(json& spec, const char* key, T fallback) {
  if (!spec.contains(key) || spec[key].is_null()) spec[key] = fallback;
  return spec[key].get<T>();
}

template <typename T>
std::vector<T> take_list(json& spec, const char* key, std::vector<T> fallback) {
  if (!spec.contains(key) || spec[key].is_null()) spec[key] = fallback;
  if (!spec[key].is_array()) spec[key] = json::array({spec[key]});
  auto out = spec[key].get<std::vector<T>>();
  if (out.empty()) throw std::invalid_argument(std::string("spec: '") + key + "' is empty");
  return out;
}

template <typename T>
void require_positive(const std::vector<T>& xs, const char* key) {
  for (const auto& x : xs) {
    if (!(x > 0)) throw std::invalid_argument(std::string("spec: '") + key + "' must be positive");
  }
}

SolverConfig solver_from(json& spec, double lambda) {
  SolverConfig cfg;
  cfg.lambda = lambda;
  cfg.tol = take(spec, "tol", cfg.tol);
  cfg.max_iter = take(spec, "max_iter", cfg.max_iter);
  cfg.validate();
  return cfg;
}

class Outputs {
 public:
  Outputs(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {
    fs::create_directories(dir_);
  }

  std::ofstream open(const std::string& name) {
    const auto path = dir_ / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    result_.files.push_back(path);
    names_.push_back(name);
    return os;
  }

  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

  void write_values(const std::string& name, std::span<const double> values) {
    auto os = open(name);
    write_values_csv(os, values);
  }

  // Skips the curve when the samples cannot carry a bandwidth.
  bool write_kde(const std::string& name, std::span<const double> samples, std::size_t points,
                 std::optional<std::pair<double, double>> range = std::nullopt) {
    if (samples.size() < 2 || points < 2) return false;
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    if (!(*mx > *mn)) return false;
    double lo = *mn;
    double hi = *mx;
    if (range) {
      lo = range->first;
      hi = range->second;
    } else {
      const double pad = 0.1 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
    std::vector<double> xs(points);
    for (std::size_t i = 0; i < points; ++i) {
      xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    const auto ys = kde(samples, xs);
    auto os = open(name);
    write_curve_csv(os, xs, ys);
    return true;
  }

  CommandResult finish(const json& spec, json details) {
    json manifest = {{"tool", "sinkstat"},
                     {"version", tool_version()},
                     {"command", command_},
                     {"spec", spec},
                     {"outputs", names_}};
    manifest["details"] = std::move(details);
    write_json("manifest.json", manifest);
    result_.manifest = std::move(manifest);
    return std::move(result_);
  }

 private:
  fs::path dir_;
  std::string command_;
  std::vector<std::string> names_;
  CommandResult result_;
};

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

std::vector<DiscreteMeasure> group_measures(const BinnedDataset& ds,
                                            const std::vector<std::string>& labels) {
  std::vector<DiscreteMeasure> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(ds.group(l).measure());
  return out;
}

// Reference measure of the data-mode tests.
DiscreteMeasure data_reference(json& spec, const BinnedDataset& ds) {
  if (spec.contains("reference_file") && !spec["reference_file"].is_null()) {
    return discrete_measure_from_json(load_json(spec["reference_file"].get<std::string>()));
  }
  json& ref = spec["reference"];
  if (ref.is_null()) ref = json::object();
  const auto labels = take_list<std::string>(ref, "groups", ds.labels);
  const bool uniform = take(ref, "uniform_support", false);
  const auto measures = group_measures(ds, labels);
  auto bary = euclidean_barycenter(measures);
  return uniform ? uniform_on_support(bary) : bary;
}

EmpiricalMeasure data_sample(const BinnedDataset& ds, const std::string& label) {
  return label == "*" ? ds.pooled() : ds.group(label);
}

json report_json(const TestReport& report, double lambda) {
  json j = to_json(report);
  j["lambda"] = lambda;
  return j;
}

void check_measure_fits(const DiscreteMeasure& m, const CostMatrix& cost) {
  if (m.size() != cost.size()) {
    throw std::invalid_argument("reference measure size does not match the grid");
  }
}

}  // namespace

CommandResult cmd_simulate_clt(const json& input, const fs::path& out_dir) {
  json spec = input;
  const auto mode = take<std::string>(spec, "mode", "H0-one");
  if (mode != "H0-one" && mode != "H1-one" && mode != "H0-two" && mode != "H1-two") {
    throw std::invalid_argument("simulate-clt: unknown mode '" + mode + "'");
  }
  const bool alternative = mode.starts_with("H1");
  const bool two_sample = mode.ends_with("two");
  const int grid = take(spec, "grid", 5);
  const auto lambdas = take_list<double>(spec, "lambda", {1.0});
  const auto ns = take_list<std::int64_t>(spec, "n", {1000});
  const auto ms = take_list<std::int64_t>(spec, "m", ns);
  const double theta = take(spec, "theta", 0.5);
  const int reps = take(spec, "reps", 1000);
  const auto seed = take<std::uint64_t>(spec, "seed", 0);
  const auto kde_points = take<std::size_t>(spec, "kde_points", 256);
  require_positive(lambdas, "lambda");
  require_positive(ns, "n");
  require_positive(ms, "m");
  if (ms.size() != ns.size()) throw std::invalid_argument("simulate-clt: 'm' and 'n' lengths differ");
  if (reps < 1) throw std::invalid_argument("simulate-clt: reps must be >= 1");

  const auto space = make_grid(grid);
  const auto cost = squared_euclidean_cost(space);
  const auto a = uniform_measure(space.size());
  const auto b = alternative ? linear_trend_measure(space.size(), theta) : a;

  Outputs out(out_dir, "simulate-clt");
  json runs = json::array();
  for (double lambda : lambdas) {
    const auto cfg = solver_from(spec, lambda);
    const auto pop = sinkhorn_solve(a, b, cost, cfg);
    if (!pop.converged) throw ConvergenceError("simulate-clt: population solve did not converge");

    for (std::size_t k = 0; k < ns.size(); ++k) {
      const auto n = ns[k];
      const auto m = ms[k];
      const double gamma = static_cast<double>(m) / static_cast<double>(n + m);
      const auto law = two_sample ? asymptotic_law(pop, a, &b, gamma) : asymptotic_law(pop, a);
      const double scale = two_sample ? rho(n, m) : std::sqrt(static_cast<double>(n));

      std::vector<std::optional<double>> slots(static_cast<std::size_t>(reps));
      parallel_for(slots.size(), [&](std::size_t j) {
        const auto a_hat = sample_empirical(a, n, derive_seed(seed, 2 * j));
        const DiscreteMeasure* other = &b;
        std::optional<EmpiricalMeasure> b_hat;
        if (two_sample) {
          b_hat = sample_empirical(b, m, derive_seed(seed, 2 * j + 1));
          other = &b_hat->measure();
        }
        const auto sol = sinkhorn_solve(a_hat.measure(), *other, cost, cfg, pop.beta);
        if (sol.converged) slots[j] = scale * (sol.dual - pop.dual);
      });
      std::vector<double> stats;
      for (const auto& s : slots) {
        if (s) stats.push_back(*s);
      }
      const auto limit = sample_limit(law, static_cast<std::size_t>(reps), derive_seed(seed ^ 0x5eedULL, k));

      std::string stem = "clt_" + mode + "_lambda" + tag(lambda) + "_n" + std::to_string(n);
      if (two_sample) stem += "_m" + std::to_string(m);
      out.write_values(stem + "_stats.csv", stats);
      out.write_values(stem + "_limit.csv", limit);
      std::optional<std::pair<double, double>> range;
      if (!stats.empty()) {
        auto [mn, mx] = std::minmax_element(stats.begin(), stats.end());
        double lo = *mn;
        double hi = *mx;
        for (double x : limit) {
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
        const double pad = 0.1 * (hi - lo);
        range = std::make_pair(lo - pad, hi + pad);
      }
      const bool kde_stats = out.write_kde(stem + "_stats_kde.csv", stats, kde_points, range);
      const bool kde_limit = out.write_kde(stem + "_limit_kde.csv", limit, kde_points, range);
      json law_j = to_json(law);
      runs.push_back({{"lambda", lambda},
                      {"n", n},
                      {"m", two_sample ? json(m) : json(nullptr)},
                      {"population_divergence", pop.dual},
                      {"law", law_j},
                      {"converged", stats.size()},
                      {"failed", slots.size() - stats.size()},
                      {"kde_written", kde_stats && kde_limit}});
    }
  }
  return out.finish(spec, {{"runs", runs}});
}

CommandResult cmd_test_one(const json& input, const fs::path& out_dir) {
  json spec = input;
  const auto lambdas = take_list<double>(spec, "lambda", {1.0});
  const int reps = take(spec, "reps", 1000);
  const double level = take(spec, "level", 0.05);
  const auto seed = take<std::uint64_t>(spec, "seed", 0);
  const auto kde_points = take<std::size_t>(spec, "kde_points", 256);
  require_positive(lambdas, "lambda");

  std::optional<CostMatrix> cost;
  std::optional<EmpiricalMeasure> sample;
  std::optional<DiscreteMeasure> reference;
  std::optional<DiscreteMeasure> center;
  json details;
  if (spec.contains("data") && !spec["data"].is_null()) {
    const auto ds = dataset_from_json(load_json(spec["data"].get<std::string>()));
    cost = squared_euclidean_cost(ds.space());
    sample = data_sample(ds, take<std::string>(spec, "sample", "*"));
    reference = data_reference(spec, ds);
    center = *reference;
    details["mode"] = "data";
  } else {
    const int grid = take(spec, "grid", 5);
    const auto n = take<std::int64_t>(spec, "n", 1000);
    const double theta = take(spec, "theta", 0.0);
    const auto space = make_grid(grid);
    cost = squared_euclidean_cost(space);
    const auto a = uniform_measure(space.size());
    sample = sample_empirical(a, n, derive_seed(seed, 0));
    reference = linear_trend_measure(space.size(), theta);
    center = a;
    details["mode"] = "synthetic";
  }
  check_measure_fits(*reference, *cost);
  check_measure_fits(sample->measure(), *cost);
  details["sample_size"] = sample->sample_size();

  Outputs out(out_dir, "test-one");
  json reports = json::array();
  for (double lambda : lambdas) {
    TestConfig tc;
    tc.solver = solver_from(spec, lambda);
    tc.replicates = reps;
    tc.level = level;
    tc.seed = derive_seed(seed, 1);
    const auto report = bootstrap_test_one(*sample, *reference, *center, *cost, tc);
    const auto stem = "lambda" + tag(lambda);
    out.write_json("report_" + stem + ".json", report_json(report, lambda));
    out.write_values("replicates_" + stem + ".csv", report.bootstrap_stats);
    out.write_kde("kde_" + stem + ".csv", report.bootstrap_stats, kde_points);
    reports.push_back(report_json(report, lambda));
  }
  details["reports"] = reports;
  return out.finish(spec, details);
}

CommandResult cmd_test_two(const json& input, const fs::path& out_dir) {
  json spec = input;
  const auto lambdas = take_list<double>(spec, "lambda", {1.0});
  const int reps = take(spec, "reps", 1000);
  const double level = take(spec, "level", 0.05);
  const auto seed = take<std::uint64_t>(spec, "seed", 0);
  const auto kde_points = take<std::size_t>(spec, "kde_points", 256);
  require_positive(lambdas, "lambda");

  struct Pair {
    std::string name_a, name_b;
    EmpiricalMeasure a_hat, b_hat;
  };
  std::vector<Pair> pairs;
  std::vector<std::string> matrix_labels;
  std::optional<CostMatrix> cost;
  std::optional<DiscreteMeasure> a_ref;
  std::optional<DiscreteMeasure> b_ref;
  json details;
  if (spec.contains("data") && !spec["data"].is_null()) {
    const auto ds = dataset_from_json(load_json(spec["data"].get<std::string>()));
    cost = squared_euclidean_cost(ds.space());
    a_ref = data_reference(spec, ds);
    b_ref = *a_ref;
    if (spec.contains("pairs") && !spec["pairs"].is_null()) {
      matrix_labels = spec["pairs"].get<std::vector<std::string>>();
      for (std::size_t k = 0; k < matrix_labels.size(); ++k) {
        for (std::size_t l = k + 1; l < matrix_labels.size(); ++l) {
          pairs.push_back({matrix_labels[k], matrix_labels[l], ds.group(matrix_labels[k]),
                           ds.group(matrix_labels[l])});
        }
      }
    } else {
      const auto la = spec.at("sample_a").get<std::string>();
      const auto lb = spec.at("sample_b").get<std::string>();
      pairs.push_back({la, lb, data_sample(ds, la), data_sample(ds, lb)});
    }
    details["mode"] = "data";
  } else {
    const int grid = take(spec, "grid", 5);
    const auto n = take<std::int64_t>(spec, "n", 1000);
    const auto m = take<std::int64_t>(spec, "m", n);
    const double theta = take(spec, "theta", 0.5);
    const auto space = make_grid(grid);
    cost = squared_euclidean_cost(space);
    a_ref = uniform_measure(space.size());
    b_ref = linear_trend_measure(space.size(), theta);
    pairs.push_back({"a", "b", sample_empirical(*a_ref, n, derive_seed(seed, 0)),
                     sample_empirical(*b_ref, m, derive_seed(seed, 1))});
    details["mode"] = "synthetic";
  }
  check_measure_fits(*a_ref, *cost);
  if (pairs.empty()) throw std::invalid_argument("test-two: need at least two labels in 'pairs'");

  Outputs out(out_dir, "test-two");
  json reports = json::array();
  for (double lambda : lambdas) {
    const auto stem = "lambda" + tag(lambda);
    std::vector<double> pvals;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& pr = pairs[k];
      TestConfig tc;
      tc.solver = solver_from(spec, lambda);
      tc.replicates = reps;
      tc.level = level;
      tc.seed = derive_seed(seed, 2 + k);
      const auto report = bootstrap_test_two(pr.a_hat, pr.b_hat, *a_ref, *b_ref, *cost, tc);
      const auto pair_stem = stem + "_" + pr.name_a + "_" + pr.name_b;
      auto rj = report_json(report, lambda);
      rj["sample_a"] = pr.name_a;
      rj["sample_b"] = pr.name_b;
      out.write_json("report_" + pair_stem + ".json", rj);
      out.write_values("replicates_" + pair_stem + ".csv", report.bootstrap_stats);
      out.write_kde("kde_" + pair_stem + ".csv", report.bootstrap_stats, kde_points);
      reports.push_back(rj);
      pvals.push_back(report.p_value);
    }
    if (!matrix_labels.empty()) {
      auto os = out.open("pvalues_" + stem + ".csv");
      for (const auto& l : matrix_labels) os << ',' << l;
      os << '\n';
      std::size_t idx = 0;
      std::vector<std::vector<std::string>> cells(matrix_labels.size(),
                                                  std::vector<std::string>(matrix_labels.size()));
      for (std::size_t k = 0; k < matrix_labels.size(); ++k) {
        cells[k][k] = "1";
        for (std::size_t l = k + 1; l < matrix_labels.size(); ++l) cells[k][l] = format_double(pvals[idx++]);
      }
      for (std::size_t k = 0; k < matrix_labels.size(); ++k) {
        os << matrix_labels[k];
        for (const auto& c : cells[k]) os << ',' << c;
        os << '\n';
      }
    }
  }
  details["reports"] = reports;
  return out.finish(spec, details);
}

CommandResult cmd_power(const json& input, const fs::path& out_dir) {
  json spec = input;
  const int grid = take(spec, "grid", 5);
  PowerConfig pc;
  pc.thetas = take_list<double>(spec, "theta", {0.0, 0.05, 0.1, 0.15});
  pc.lambdas = take_list<double>(spec, "lambda", {1.0, 5.0, 10.0});
  pc.sample_size = take<std::int64_t>(spec, "n", 1000);
  pc.replicates = take(spec, "reps", 1000);
  pc.repeats = take(spec, "repeats", 100);
  pc.level = take(spec, "level", 0.05);
  pc.seed = take<std::uint64_t>(spec, "seed", 0);
  pc.solver = solver_from(spec, pc.lambdas.front());
  require_positive(pc.lambdas, "lambda");

  const auto space = make_grid(grid);
  const auto cost = squared_euclidean_cost(space);
  const auto curve = power_curve(uniform_measure(space.size()), cost, pc);

  Outputs out(out_dir, "power");
  auto os = out.open("power.csv");
  os << "theta,lambda,power,rejections,repeats\n";
  json rows = json::array();
  for (const auto& pt : curve) {
    os << format_double(pt.theta) << ',' << format_double(pt.lambda) << ','
       << format_double(pt.power) << ',' << pt.rejections << ',' << pt.repeats << '\n';
    rows.push_back({{"theta", pt.theta}, {"lambda", pt.lambda}, {"power", pt.power}});
  }
  os.close();
  return out.finish(spec, {{"curve", rows}});
}

CommandResult cmd_ingest(const json& input, const fs::path& out_dir) {
  json spec = input;
  IngestOptions opt;
  const auto csv = spec.at("csv").get<std::string>();
  const auto box = spec.at("bbox").get<std::vector<double>>();
  if (box.size() != 4) throw std::invalid_argument("ingest: bbox needs xmin,xmax,ymin,ymax");
  opt.bbox = {box[0], box[1], box[2], box[3]};
  opt.rows = take(spec, "rows", opt.rows);
  opt.cols = take(spec, "cols", opt.cols);
  opt.group_column = take(spec, "group_col", opt.group_column);
  opt.x_column = take(spec, "x_col", opt.x_column);
  opt.y_column = take(spec, "y_col", opt.y_column);
  const auto ds = ingest_points(fs::path(csv), opt);

  Outputs out(out_dir, "ingest");
  out.write_json("dataset.json", to_json(ds));
  json sizes = json::object();
  for (std::size_t k = 0; k < ds.labels.size(); ++k) sizes[ds.labels[k]] = ds.groups[k].sample_size();
  return out.finish(spec, {{"total_rows", ds.total_rows},
                           {"skipped", ds.skipped},
                           {"out_of_bounds", ds.out_of_bounds},
                           {"group_sizes", sizes}});
}

CommandResult cmd_barycenter(const json& input, const fs::path& out_dir) {
  json spec = input;
  const auto ds = dataset_from_json(load_json(spec.at("data").get<std::string>()));
  const auto labels = take_list<std::string>(spec, "groups", ds.labels);
  const bool uniform = take(spec, "uniform_support", false);
  const auto measures = group_measures(ds, labels);
  auto bary = euclidean_barycenter(measures);
  if (uniform) bary = uniform_on_support(bary);

  Outputs out(out_dir, "barycenter");
  out.write_json("barycenter.json", to_json(bary));
  return out.finish(spec, {{"support_size", bary.support().size()}});
}

CommandResult run_command(const std::string& name, const json& input, const fs::path& out_dir) {
  // A manifest can be fed back in place of the spec it records.
  const json& spec = (input.contains("command") && input.contains("spec")) ? input["spec"] : input;
  if (name == "simulate-clt") return cmd_simulate_clt(spec, out_dir);
  if (name == "test-one") return cmd_test_one(spec, out_dir);
  if (name == "test-two") return cmd_test_two(spec, out_dir);
  if (name == "power") return cmd_power(spec, out_dir);
  if (name == "ingest") return cmd_ingest(spec, out_dir);
  if (name == "barycenter") return cmd_barycenter(spec, out_dir);
  throw std::invalid_argument("unknown command '" + name + "'");
}

}  // namespace sinkstat
