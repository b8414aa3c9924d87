#include "sinkstat/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

namespace sinkstat {

FiniteSpace BinnedDataset::space() const {
  const int extents[] = {rows, cols};
  return make_grid(extents);
}

const EmpiricalMeasure& BinnedDataset::group(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw std::out_of_range("dataset has no group '" + label + "'");
  return groups[static_cast<std::size_t>(it - labels.begin())];
}

EmpiricalMeasure BinnedDataset::pooled() const {
  if (groups.empty()) throw std::invalid_argument("dataset has no groups");
  std::vector<std::int64_t> total(groups.front().size(), 0);
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += g.counts()[i];
  }
  return EmpiricalMeasure(std::move(total));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else if (ch != '\r') {
      fields.back() += ch;
    }
  }
  return fields;
}

int bin_index(double coord, double lo, double hi, int cells) {
  if (!(coord >= lo && coord <= hi)) return -1;
  const double pos = (coord - lo) / (hi - lo) * cells;
  // Cells are (k, k+1] in scaled units, with the left edge folded into cell 0.
  const int k = static_cast<int>(std::ceil(pos)) - 1;
  return std::clamp(k, 0, cells - 1);
}

namespace {

bool parse_number(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first == last) return false;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

std::size_t column_of(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::invalid_argument("CSV header has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

// Numeric labels sort by value ("2" before "10"), anything else lexically.
struct LabelOrder {
  bool operator()(const std::string& x, const std::string& y) const {
    double vx = 0.0;
    double vy = 0.0;
    const bool nx = parse_number(x, vx);
    const bool ny = parse_number(y, vy);
    if (nx && ny && vx != vy) return vx < vy;
    if (nx != ny) return nx;
    return x < y;
  }
};

void check_options(const IngestOptions& opt) {
  if (opt.rows < 1 || opt.cols < 1) throw std::invalid_argument("ingest: grid must be at least 1x1");
  const auto& b = opt.bbox;
  if (!(b.xmax > b.xmin) || !(b.ymax > b.ymin)) {
    throw std::invalid_argument("ingest: bounding box must have positive extent");
  }
}

}  // namespace

BinnedDataset ingest_points(std::istream& in, const IngestOptions& opt) {
  check_options(opt);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("ingest: missing header row");
  const auto header = split_csv_line(line);
  const auto gcol = column_of(header, opt.group_column);
  const auto xcol = column_of(header, opt.x_column);
  const auto ycol = column_of(header, opt.y_column);
  const auto need = std::max({gcol, xcol, ycol}) + 1;
  const auto cells = static_cast<std::size_t>(opt.rows) * static_cast<std::size_t>(opt.cols);

  BinnedDataset ds;
  ds.rows = opt.rows;
  ds.cols = opt.cols;
  ds.bbox = opt.bbox;
  std::map<std::string, std::vector<std::int64_t>, LabelOrder> bins;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++ds.total_rows;
    const auto fields = split_csv_line(line);
    double x = 0.0;
    double y = 0.0;
    if (fields.size() < need || fields[gcol].empty() || !parse_number(fields[xcol], x) ||
        !parse_number(fields[ycol], y)) {
      ++ds.skipped;
      continue;
    }
    auto& counts = bins[fields[gcol]];
    if (counts.empty()) counts.assign(cells, 0);
    const int c = bin_index(x, opt.bbox.xmin, opt.bbox.xmax, opt.cols);
    const int r = bin_index(y, opt.bbox.ymin, opt.bbox.ymax, opt.rows);
    if (c < 0 || r < 0) {
      ++ds.skipped;
      ++ds.out_of_bounds;
      continue;
    }
    ++counts[static_cast<std::size_t>(r) * static_cast<std::size_t>(opt.cols) +
             static_cast<std::size_t>(c)];
  }

  for (auto& [label, counts] : bins) {
    if (std::accumulate(counts.begin(), counts.end(), std::int64_t{0}) == 0) {
      throw std::invalid_argument("ingest: group '" + label + "' has no record inside the grid");
    }
    ds.labels.push_back(label);
    ds.groups.emplace_back(std::move(counts));
  }
  return ds;
}

BinnedDataset ingest_points(const std::filesystem::path& csv, const IngestOptions& opt) {
  std::ifstream in(csv);
  if (!in) throw std::runtime_error("ingest: cannot open " + csv.string());
  return ingest_points(in, opt);
}

nlohmann::json to_json(const BinnedDataset& ds) {
  nlohmann::json groups = nlohmann::json::array();
  for (std::size_t k = 0; k < ds.groups.size(); ++k) {
    groups.push_back({{"label", ds.labels[k]},
                      {"sample_size", ds.groups[k].sample_size()},
                      {"counts", ds.groups[k].counts()}});
  }
  return {{"grid", {{"rows", ds.rows}, {"cols", ds.cols}}},
          {"bbox", {ds.bbox.xmin, ds.bbox.xmax, ds.bbox.ymin, ds.bbox.ymax}},
          {"n_points", ds.rows * ds.cols},
          {"total_rows", ds.total_rows},
          {"skipped", ds.skipped},
          {"out_of_bounds", ds.out_of_bounds},
          {"groups", groups}};
}

BinnedDataset dataset_from_json(const nlohmann::json& j) {
  BinnedDataset ds;
  ds.rows = j.at("grid").at("rows").get<int>();
  ds.cols = j.at("grid").at("cols").get<int>();
  const auto box = j.at("bbox").get<std::vector<double>>();
  if (box.size() != 4) throw std::invalid_argument("dataset JSON: bbox needs four numbers");
  ds.bbox = {box[0], box[1], box[2], box[3]};
  ds.total_rows = j.value("total_rows", std::int64_t{0});
  ds.skipped = j.value("skipped", std::int64_t{0});
  ds.out_of_bounds = j.value("out_of_bounds", std::int64_t{0});
  const auto cells = static_cast<std::size_t>(ds.rows) * static_cast<std::size_t>(ds.cols);
  for (const auto& g : j.at("groups")) {
    EmpiricalMeasure m(g.at("counts").get<std::vector<std::int64_t>>());
    if (m.size() != cells) throw std::invalid_argument("dataset JSON: counts length != rows*cols");
    ds.labels.push_back(g.at("label").get<std::string>());
    ds.groups.push_back(std::move(m));
  }
  return ds;
}

}  // namespace sinkstat
