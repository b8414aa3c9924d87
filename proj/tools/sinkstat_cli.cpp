#include "sinkstat/commands.hpp"
#include "sinkstat/sinkhorn.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

enum class Kind { Int, Real, Text, IntList, RealList, TextList, Flag };

struct Binding {
  std::string key;
  Kind kind;
  std::string raw;
  bool flag = false;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

json convert(const Binding& b) {
  switch (b.kind) {
    case Kind::Int: return std::stoll(b.raw);
    case Kind::Real: return std::stod(b.raw);
    case Kind::Text: return b.raw;
    case Kind::Flag: return b.flag;
    case Kind::IntList: {
      json arr = json::array();
      for (const auto& p : split(b.raw)) arr.push_back(std::stoll(p));
      return arr;
    }
    case Kind::RealList: {
      json arr = json::array();
      for (const auto& p : split(b.raw)) arr.push_back(std::stod(p));
      return arr;
    }
    case Kind::TextList: {
      json arr = json::array();
      for (const auto& p : split(b.raw)) arr.push_back(p);
      return arr;
    }
  }
  return nullptr;
}

// Sets a possibly nested key such as "reference/groups".
void assign(json& spec, const std::string& key, json value) {
  json* node = &spec;
  std::size_t start = 0;
  for (auto pos = key.find('/'); pos != std::string::npos; pos = key.find('/', start)) {
    node = &(*node)[key.substr(start, pos - start)];
    start = pos + 1;
  }
  (*node)[key.substr(start)] = std::move(value);
}

struct Sub {
  CLI::App* app = nullptr;
  std::string spec_file;
  std::string out_dir = "out";
  std::vector<std::unique_ptr<Binding>> bindings;

  void opt(const std::string& flags, const std::string& key, Kind kind, const std::string& help) {
    auto b = std::make_unique<Binding>();
    b->key = key;
    b->kind = kind;
    if (kind == Kind::Flag) {
      app->add_flag(flags, b->flag, help);
    } else {
      app->add_option(flags, b->raw, help);
    }
    bindings.push_back(std::move(b));
  }

  json resolve() const {
    json spec = json::object();
    if (!spec_file.empty()) {
      std::ifstream in(spec_file);
      if (!in) throw std::runtime_error("cannot open spec file " + spec_file);
      spec = json::parse(in);
      if (spec.contains("command") && spec.contains("spec")) spec = json(spec["spec"]);
    }
    for (const auto& b : bindings) {
      const bool given = b->kind == Kind::Flag ? b->flag : !b->raw.empty();
      if (given) assign(spec, b->key, convert(*b));
    }
    return spec;
  }
};

void common_options(Sub& s) {
  s.app->add_option("--spec", s.spec_file, "JSON spec or a previous manifest.json");
  s.app->add_option("--out,-o", s.out_dir, "Output directory")->capture_default_str();
  s.opt("--seed", "seed", Kind::Int, "Base RNG seed");
  s.opt("--tol", "tol", Kind::Real, "Marginal L1 tolerance of each solve");
  s.opt("--max-iter", "max_iter", Kind::Int, "Iteration cap of each solve");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropic transport divergences: limit laws and bootstrap tests"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sinkstat::tool_version()));

  std::map<std::string, std::unique_ptr<Sub>> subs;
  auto make = [&](const std::string& name, const std::string& help) -> Sub& {
    auto s = std::make_unique<Sub>();
    s->app = app.add_subcommand(name, help);
    common_options(*s);
    auto& ref = *s;
    subs[name] = std::move(s);
    return ref;
  };

  {
    auto& s = make("simulate-clt", "Monte Carlo of the centered statistic against its limit law");
    s.opt("--mode", "mode", Kind::Text, "H0-one, H1-one, H0-two or H1-two");
    s.opt("--grid", "grid", Kind::Int, "Grid side length");
    s.opt("--lambda", "lambda", Kind::RealList, "Regularization values, comma separated");
    s.opt("--n", "n", Kind::IntList, "Sample sizes of the first measure");
    s.opt("--m", "m", Kind::IntList, "Sample sizes of the second measure");
    s.opt("--theta", "theta", Kind::Real, "Trend parameter of the alternative");
    s.opt("--reps,-M", "reps", Kind::Int, "Monte Carlo replicates");
    s.opt("--kde-points", "kde_points", Kind::Int, "Density evaluation points");
  }
  {
    auto& s = make("test-one", "One-sample bootstrap test");
    s.opt("--grid", "grid", Kind::Int, "Grid side length (synthetic mode)");
    s.opt("--lambda", "lambda", Kind::RealList, "Regularization values, comma separated");
    s.opt("--n", "n", Kind::Int, "Sample size (synthetic mode)");
    s.opt("--theta", "theta", Kind::Real, "Trend parameter of the reference");
    s.opt("--reps,-M", "reps", Kind::Int, "Bootstrap replicates");
    s.opt("--level", "level", Kind::Real, "Test level");
    s.opt("--data", "data", Kind::Text, "Binned dataset JSON from `ingest`");
    s.opt("--sample", "sample", Kind::Text, "Group label, or * for all groups pooled");
    s.opt("--reference-groups", "reference/groups", Kind::TextList, "Groups averaged into the reference");
    s.opt("--uniform-support", "reference/uniform_support", Kind::Flag,
          "Use the uniform measure on the reference support");
    s.opt("--reference-file", "reference_file", Kind::Text, "Reference measure JSON");
    s.opt("--kde-points", "kde_points", Kind::Int, "Density evaluation points");
  }
  {
    auto& s = make("test-two", "Two-sample bootstrap test");
    s.opt("--grid", "grid", Kind::Int, "Grid side length (synthetic mode)");
    s.opt("--lambda", "lambda", Kind::RealList, "Regularization values, comma separated");
    s.opt("--n", "n", Kind::Int, "First sample size (synthetic mode)");
    s.opt("--m", "m", Kind::Int, "Second sample size (synthetic mode)");
    s.opt("--theta", "theta", Kind::Real, "Trend parameter of the second measure");
    s.opt("--reps,-M", "reps", Kind::Int, "Bootstrap replicates");
    s.opt("--level", "level", Kind::Real, "Test level");
    s.opt("--data", "data", Kind::Text, "Binned dataset JSON from `ingest`");
    s.opt("--sample-a", "sample_a", Kind::Text, "First group label");
    s.opt("--sample-b", "sample_b", Kind::Text, "Second group label");
    s.opt("--pairs", "pairs", Kind::TextList, "Test every pair among these labels");
    s.opt("--reference-groups", "reference/groups", Kind::TextList, "Groups averaged into the reference");
    s.opt("--kde-points", "kde_points", Kind::Int, "Density evaluation points");
  }
  {
    auto& s = make("power", "Rejection rate of the one-sample test over trend alternatives");
    s.opt("--grid", "grid", Kind::Int, "Grid side length");
    s.opt("--theta", "theta", Kind::RealList, "Trend parameters, comma separated");
    s.opt("--lambda", "lambda", Kind::RealList, "Regularization values, comma separated");
    s.opt("--n", "n", Kind::Int, "Sample size");
    s.opt("--reps,-M", "reps", Kind::Int, "Bootstrap replicates per test");
    s.opt("--repeats,-R", "repeats", Kind::Int, "Tests per power estimate");
    s.opt("--level", "level", Kind::Real, "Test level");
  }
  {
    auto& s = make("ingest", "Bin point records from a CSV file onto a grid");
    s.opt("--csv", "csv", Kind::Text, "Input CSV with a header row");
    s.opt("--bbox", "bbox", Kind::RealList, "xmin,xmax,ymin,ymax");
    s.opt("--rows", "rows", Kind::Int, "Grid rows (along y)");
    s.opt("--cols", "cols", Kind::Int, "Grid columns (along x)");
    s.opt("--group-col", "group_col", Kind::Text, "Group column name");
    s.opt("--x-col", "x_col", Kind::Text, "x column name");
    s.opt("--y-col", "y_col", Kind::Text, "y column name");
  }
  {
    auto& s = make("barycenter", "Euclidean barycenter of group measures");
    s.opt("--data", "data", Kind::Text, "Binned dataset JSON from `ingest`");
    s.opt("--groups", "groups", Kind::TextList, "Groups to average (default all)");
    s.opt("--uniform-support", "uniform_support", Kind::Flag,
          "Replace by the uniform measure on its support");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [name, sub] : subs) {
      if (!sub->app->parsed()) continue;
      const auto result = sinkstat::run_command(name, sub->resolve(), sub->out_dir);
      for (const auto& f : result.files) std::cout << f.string() << '\n';
    }
  } catch (const sinkstat::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
