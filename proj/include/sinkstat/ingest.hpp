#pragma once

#include "sinkstat/measures.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace sinkstat {

struct BoundingBox {
  double xmin = 0.0;
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 1.0;
};

struct IngestOptions {
  BoundingBox bbox;
  int rows = 18;
  int cols = 27;
  std::string group_column = "group";
  std::string x_column = "x";
  std::string y_column = "y";
};

/// Point records binned onto a rows x cols grid, one empirical measure per
/// group label. Cell (r, c) is support index r * cols + c and sits at grid
/// coordinates (r + 1, c + 1); rows follow y and columns follow x.
struct BinnedDataset {
  int rows = 0;
  int cols = 0;
  BoundingBox bbox;
  std::vector<std::string> labels;
  std::vector<EmpiricalMeasure> groups;
  /// Unparsable rows plus rows outside the bounding box.
  std::int64_t skipped = 0;
  std::int64_t out_of_bounds = 0;
  std::int64_t total_rows = 0;

  FiniteSpace space() const;
  /// Throws std::out_of_range for an unknown label.
  const EmpiricalMeasure& group(const std::string& label) const;
  /// All groups' counts added together.
  EmpiricalMeasure pooled() const;
};

/// Splits one CSV record; handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line);

/// Cell index of `coord` among `cells` equal cells spanning [lo, hi]. A value
/// on an interior boundary goes to the lower cell; returns -1 outside [lo, hi].
int bin_index(double coord, double lo, double hi, int cells);

/// Reads a header row followed by records. Unparsable and out-of-box rows are
/// counted in `skipped`; a group left with no binned record is an error.
BinnedDataset ingest_points(std::istream& in, const IngestOptions& opt);
BinnedDataset ingest_points(const std::filesystem::path& csv, const IngestOptions& opt);

nlohmann::json to_json(const BinnedDataset& ds);
BinnedDataset dataset_from_json(const nlohmann::json& j);

}  // namespace sinkstat
