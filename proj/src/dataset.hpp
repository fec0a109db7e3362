#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "likert.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace tipinet {

struct RespondentRecord {
  std::string id;
  std::array<int, kNumItems> items;
  std::array<double, kNumFactors> targets;  // E, A, C, ES, O
  std::optional<int> age_group;             // 1..5
  std::optional<std::string> gender;
};

// Column-name mapping for the delimiter-separated input files, stored as a
// sidecar key=value file so public datasets with arbitrary headers can be
// ingested without code changes.
struct Schema {
  std::array<std::string, kNumItems> item_columns;
  std::array<std::string, kNumFactors> target_columns;
  // Declared per-factor scale maxima; observed column maxima are used when
  // absent.
  std::optional<std::array<double, kNumFactors>> scale_max;
  std::optional<std::string> id_column;
  std::optional<std::string> age_column;
  std::optional<std::string> gender_column;

  static Schema load(const std::filesystem::path& path);
  static Schema parse(std::istream& in, const std::string& origin);
  void save(const std::filesystem::path& path) const;
};

struct Dataset {
  std::vector<RespondentRecord> records;
  std::array<double, kNumFactors> target_scale_max;
  double item_scale_max = kLikertMax;
  // True when target_scale_max came from the schema declaration rather than
  // from observed column maxima.
  bool declared_maxima = false;
};

Dataset load_dataset(std::istream& in, const Schema& schema,
                     const std::string& origin = "<stream>");
Dataset load_dataset_file(const std::filesystem::path& data_path,
                          const std::filesystem::path& schema_path);

// Writes the dataset back out in the same delimiter-separated format the
// loader consumes (comma-delimited, schema column names).
void save_dataset(const Dataset& ds, const Schema& schema, std::ostream& out);

struct NormalizedData {
  Matrix items;    // N x 10, entries in (0, 1]
  Matrix targets;  // N x 5, entries in [0, 1]
  bool declared_maxima = false;
};

NormalizedData normalize(const Dataset& ds);

// Replaces reverse-keyed columns x with (max + 1)/max - x, i.e. applies the
// Likert reversal on the normalized scale.
void pre_reverse_items(Matrix& normalized_items, double item_scale_max);

struct Split {
  std::vector<int> train;
  std::vector<int> val;
};

// |val| = round-half-up(val_fraction * n); both halves sorted ascending.
Split split_train_val(int n, double val_fraction, Rng& rng);

// Uniform random reordering of whole rows.
Matrix permute_rows(const Matrix& m, Rng& rng);

void write_matrix_csv(const Matrix& m, std::ostream& out);
std::string format_double(double v);

}  // namespace tipinet
