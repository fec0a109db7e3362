#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "error.hpp"

namespace tipinet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delim)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

double parse_number(const std::string& cell, int row, const std::string& col) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != cell.size()) {
    throw ValidationError("non-numeric cell '" + cell + "' at row " +
                          std::to_string(row) + ", column '" + col + "'");
  }
  return v;
}

int parse_likert(const std::string& cell, int row, const std::string& col) {
  const double v = parse_number(cell, row, col);
  const int iv = static_cast<int>(std::lround(v));
  if (v != iv || iv < kLikertMin || iv > kLikertMax) {
    throw ValidationError("item value " + cell + " out of 7-point range at row " +
                          std::to_string(row) + ", column '" + col + "'");
  }
  return iv;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Trim to the shortest representation that round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

Schema Schema::parse(std::istream& in, const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  Schema s;
  for (int i = 0; i < kNumItems; ++i) {
    const std::string key = "item." + std::to_string(i + 1);
    auto it = kv.find(key);
    if (it == kv.end() || it->second.empty()) {
      throw ConfigError(origin + ": missing schema key '" + key + "'");
    }
    s.item_columns[static_cast<std::size_t>(i)] = it->second;
    kv.erase(it);
  }
  for (int f = 0; f < kNumFactors; ++f) {
    const std::string key = std::string("target.") + kFactorNames[f];
    auto it = kv.find(key);
    if (it == kv.end() || it->second.empty()) {
      throw ConfigError(origin + ": missing schema key '" + key + "'");
    }
    s.target_columns[static_cast<std::size_t>(f)] = it->second;
    kv.erase(it);
  }

  int declared = 0;
  std::array<double, kNumFactors> maxima{};
  for (int f = 0; f < kNumFactors; ++f) {
    const std::string key = std::string("scale_max.") + kFactorNames[f];
    auto it = kv.find(key);
    if (it == kv.end()) continue;
    maxima[static_cast<std::size_t>(f)] = parse_number(it->second, 0, key);
    if (maxima[static_cast<std::size_t>(f)] <= 0) {
      throw ConfigError(origin + ": " + key + " must be positive");
    }
    kv.erase(it);
    ++declared;
  }
  if (declared == kNumFactors) {
    s.scale_max = maxima;
  } else if (declared != 0) {
    throw ConfigError(origin +
                      ": scale_max.* must be declared for all five factors "
                      "or none");
  }

  auto take = [&kv](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end() || it->second.empty()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  s.id_column = take("id");
  s.age_column = take("age_group");
  s.gender_column = take("gender");

  if (!kv.empty()) {
    throw ConfigError(origin + ": unknown schema key '" + kv.begin()->first +
                      "'");
  }
  return s;
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file: " + path.string());
  return parse(in, path.string());
}

void Schema::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write schema file: " + path.string());
  for (int i = 0; i < kNumItems; ++i) {
    out << "item." << (i + 1) << " = "
        << item_columns[static_cast<std::size_t>(i)] << "\n";
  }
  for (int f = 0; f < kNumFactors; ++f) {
    out << "target." << kFactorNames[f] << " = "
        << target_columns[static_cast<std::size_t>(f)] << "\n";
  }
  if (scale_max) {
    for (int f = 0; f < kNumFactors; ++f) {
      out << "scale_max." << kFactorNames[f] << " = "
          << format_double((*scale_max)[static_cast<std::size_t>(f)]) << "\n";
    }
  }
  if (id_column) out << "id = " << *id_column << "\n";
  if (age_column) out << "age_group = " << *age_column << "\n";
  if (gender_column) out << "gender = " << *gender_column << "\n";
}

Dataset load_dataset(std::istream& in, const Schema& schema,
                     const std::string& origin) {
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw ValidationError(origin + ": empty file");
  }
  const char delim =
      header_line.find('\t') != std::string::npos ? '\t' : ',';
  const std::vector<std::string> header = split_line(header_line, delim);

  auto column_index = [&](const std::string& name) -> int {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ValidationError(origin + ": missing column '" + name + "'");
    }
    return static_cast<int>(it - header.begin());
  };

  std::array<int, kNumItems> item_idx;
  for (int i = 0; i < kNumItems; ++i) {
    item_idx[static_cast<std::size_t>(i)] =
        column_index(schema.item_columns[static_cast<std::size_t>(i)]);
  }
  std::array<int, kNumFactors> target_idx;
  for (int f = 0; f < kNumFactors; ++f) {
    target_idx[static_cast<std::size_t>(f)] =
        column_index(schema.target_columns[static_cast<std::size_t>(f)]);
  }
  const int id_idx = schema.id_column ? column_index(*schema.id_column) : -1;
  int age_idx = -1, gender_idx = -1;
  if (schema.age_column &&
      std::find(header.begin(), header.end(), *schema.age_column) !=
          header.end()) {
    age_idx = column_index(*schema.age_column);
  }
  if (schema.gender_column &&
      std::find(header.begin(), header.end(), *schema.gender_column) !=
          header.end()) {
    gender_idx = column_index(*schema.gender_column);
  }

  Dataset ds;
  std::string line;
  int row = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line, delim);
    if (cells.size() < header.size()) {
      throw ValidationError(origin + ": row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
    }
    RespondentRecord rec;
    rec.id = id_idx >= 0 ? cells[static_cast<std::size_t>(id_idx)]
                         : "row" + std::to_string(row);
    for (int i = 0; i < kNumItems; ++i) {
      rec.items[static_cast<std::size_t>(i)] = parse_likert(
          cells[static_cast<std::size_t>(item_idx[static_cast<std::size_t>(i)])],
          row, schema.item_columns[static_cast<std::size_t>(i)]);
    }
    for (int f = 0; f < kNumFactors; ++f) {
      const std::string& col =
          schema.target_columns[static_cast<std::size_t>(f)];
      const double v = parse_number(
          cells[static_cast<std::size_t>(
              target_idx[static_cast<std::size_t>(f)])],
          row, col);
      if (v < 0) {
        throw ValidationError(origin + ": negative target at row " +
                              std::to_string(row) + ", column '" + col + "'");
      }
      rec.targets[static_cast<std::size_t>(f)] = v;
    }
    if (age_idx >= 0 && !cells[static_cast<std::size_t>(age_idx)].empty()) {
      rec.age_group = static_cast<int>(parse_number(
          cells[static_cast<std::size_t>(age_idx)], row, *schema.age_column));
    }
    if (gender_idx >= 0 &&
        !cells[static_cast<std::size_t>(gender_idx)].empty()) {
      rec.gender = cells[static_cast<std::size_t>(gender_idx)];
    }
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) {
    throw ValidationError(origin + ": no data rows");
  }

  if (schema.scale_max) {
    ds.target_scale_max = *schema.scale_max;
    ds.declared_maxima = true;
    for (const auto& rec : ds.records) {
      for (int f = 0; f < kNumFactors; ++f) {
        if (rec.targets[static_cast<std::size_t>(f)] >
            ds.target_scale_max[static_cast<std::size_t>(f)]) {
          throw ValidationError(
              origin + ": target for factor " + kFactorNames[f] +
              " exceeds declared scale maximum in record '" + rec.id + "'");
        }
      }
    }
  } else {
    ds.target_scale_max.fill(0.0);
    for (const auto& rec : ds.records) {
      for (int f = 0; f < kNumFactors; ++f) {
        ds.target_scale_max[static_cast<std::size_t>(f)] =
            std::max(ds.target_scale_max[static_cast<std::size_t>(f)],
                     rec.targets[static_cast<std::size_t>(f)]);
      }
    }
    for (int f = 0; f < kNumFactors; ++f) {
      if (ds.target_scale_max[static_cast<std::size_t>(f)] <= 0) {
        throw ConfigError(origin + ": observed maximum for factor " +
                          std::string(kFactorNames[f]) +
                          " is not positive; declare scale_max in the schema");
      }
    }
    ds.declared_maxima = false;
  }
  return ds;
}

Dataset load_dataset_file(const std::filesystem::path& data_path,
                          const std::filesystem::path& schema_path) {
  const Schema schema = Schema::load(schema_path);
  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + data_path.string());
  return load_dataset(in, schema, data_path.string());
}

void save_dataset(const Dataset& ds, const Schema& schema, std::ostream& out) {
  std::vector<std::string> header;
  std::vector<std::function<std::string(const RespondentRecord&)>> emit;
  if (schema.id_column) {
    header.push_back(*schema.id_column);
    emit.emplace_back([](const RespondentRecord& r) { return r.id; });
  }
  for (int i = 0; i < kNumItems; ++i) {
    header.push_back(schema.item_columns[static_cast<std::size_t>(i)]);
    emit.emplace_back([i](const RespondentRecord& r) {
      return std::to_string(r.items[static_cast<std::size_t>(i)]);
    });
  }
  for (int f = 0; f < kNumFactors; ++f) {
    header.push_back(schema.target_columns[static_cast<std::size_t>(f)]);
    emit.emplace_back([f](const RespondentRecord& r) {
      return format_double(r.targets[static_cast<std::size_t>(f)]);
    });
  }
  if (schema.age_column) {
    header.push_back(*schema.age_column);
    emit.emplace_back([](const RespondentRecord& r) {
      return r.age_group ? std::to_string(*r.age_group) : std::string();
    });
  }
  if (schema.gender_column) {
    header.push_back(*schema.gender_column);
    emit.emplace_back([](const RespondentRecord& r) {
      return r.gender ? *r.gender : std::string();
    });
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    out << header[c] << (c + 1 < header.size() ? "," : "");
  }
  out << "\n";
  for (const auto& rec : ds.records) {
    for (std::size_t c = 0; c < emit.size(); ++c) {
      out << emit[c](rec) << (c + 1 < emit.size() ? "," : "");
    }
    out << "\n";
  }
}

NormalizedData normalize(const Dataset& ds) {
  if (ds.item_scale_max <= 0) {
    throw ConfigError("item scale maximum must be positive");
  }
  for (int f = 0; f < kNumFactors; ++f) {
    if (ds.target_scale_max[static_cast<std::size_t>(f)] <= 0) {
      throw ConfigError("target scale maximum must be positive for factor " +
                        std::string(kFactorNames[f]));
    }
  }
  const int n = static_cast<int>(ds.records.size());
  NormalizedData out;
  out.items = Matrix(n, kNumItems);
  out.targets = Matrix(n, kNumFactors);
  out.declared_maxima = ds.declared_maxima;
  for (int r = 0; r < n; ++r) {
    const auto& rec = ds.records[static_cast<std::size_t>(r)];
    for (int i = 0; i < kNumItems; ++i) {
      out.items(r, i) =
          rec.items[static_cast<std::size_t>(i)] / ds.item_scale_max;
    }
    for (int f = 0; f < kNumFactors; ++f) {
      out.targets(r, f) = rec.targets[static_cast<std::size_t>(f)] /
                          ds.target_scale_max[static_cast<std::size_t>(f)];
    }
  }
  return out;
}

void pre_reverse_items(Matrix& normalized_items, double item_scale_max) {
  const double flip = (item_scale_max + 1.0) / item_scale_max;
  for (int r = 0; r < normalized_items.rows(); ++r) {
    for (int idx : kReversedItem) {
      normalized_items(r, idx) = flip - normalized_items(r, idx);
    }
  }
}

Split split_train_val(int n, double val_fraction, Rng& rng) {
  if (n < 2) {
    throw ValidationError("need at least 2 rows to split, got " +
                          std::to_string(n));
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ValidationError("val_fraction must lie in (0, 1)");
  }
  int n_val = static_cast<int>(std::floor(val_fraction * n + 0.5));
  n_val = std::clamp(n_val, 1, n - 1);

  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);

  Split s;
  s.val.assign(idx.begin(), idx.begin() + n_val);
  s.train.assign(idx.begin() + n_val, idx.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

Matrix permute_rows(const Matrix& m, Rng& rng) {
  if (m.rows() < 1) throw ValidationError("cannot permute an empty matrix");
  std::vector<int> order(static_cast<std::size_t>(m.rows()));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  Matrix out(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      out(r, c) = m(order[static_cast<std::size_t>(r)], c);
    }
  }
  return out;
}

void write_matrix_csv(const Matrix& m, std::ostream& out) {
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      out << format_double(m(r, c)) << (c + 1 < m.cols() ? "," : "");
    }
    out << "\n";
  }
}

}  // namespace tipinet
