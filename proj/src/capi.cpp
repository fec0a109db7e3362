#include "tipinet.h"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "likert.hpp"
#include "manifest.hpp"
#include "model.hpp"
#include "replicate.hpp"
#include "stats.hpp"
#include "synth.hpp"

namespace {

thread_local std::string g_last_error;

tn_status fail(tn_status code, const char* what) {
  g_last_error = what;
  return code;
}

// Maps core exceptions onto status codes.
template <typename Fn>
tn_status guarded(Fn&& fn) {
  try {
    fn();
    return TN_OK;
  } catch (const tipinet::DivergedError& e) {
    return fail(TN_ERR_NUMERIC, e.what());
  } catch (const tipinet::IoError& e) {
    return fail(TN_ERR_IO, e.what());
  } catch (const tipinet::ValidationError& e) {
    return fail(TN_ERR_VALIDATION, e.what());
  } catch (const tipinet::ConfigError& e) {
    return fail(TN_ERR_VALIDATION, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(TN_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(TN_ERR_VALIDATION, e.what());
  }
}

tn_status require(bool ok, const char* what) {
  return ok ? TN_OK : fail(TN_ERR_VALIDATION, what);
}

}  // namespace

struct tn_dataset {
  tipinet::Dataset ds;
  std::string fingerprint;
};

extern "C" {

const char* tn_version(void) { return tipinet::kToolVersion; }

const char* tn_last_error(void) { return g_last_error.c_str(); }

tn_status tn_dataset_load(const char* data_path, const char* schema_path,
                          tn_dataset** out) {
  if (require(data_path && schema_path && out, "null argument") != TN_OK) {
    return TN_ERR_VALIDATION;
  }
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<tn_dataset>();
    handle->ds = tipinet::load_dataset_file(data_path, schema_path);
    handle->fingerprint = tipinet::fingerprint_file(data_path);
    *out = handle.release();
  });
}

void tn_dataset_free(tn_dataset* ds) { delete ds; }

int tn_dataset_size(const tn_dataset* ds) {
  return ds ? static_cast<int>(ds->ds.records.size()) : 0;
}

int tn_dataset_declared_maxima(const tn_dataset* ds) {
  return ds && ds->ds.declared_maxima ? 1 : 0;
}

tn_status tn_reverse_likert(int value, int* out) {
  if (require(out != nullptr, "null output") != TN_OK) return TN_ERR_VALIDATION;
  return guarded([&] { *out = tipinet::reverse_likert(value); });
}

tn_status tn_score_items(const int items[10], double scores[5]) {
  if (require(items && scores, "null argument") != TN_OK) {
    return TN_ERR_VALIDATION;
  }
  return guarded([&] {
    const auto s = tipinet::score_tipi(
        std::span<const int, tipinet::kNumItems>(items, tipinet::kNumItems));
    const auto arr = s.as_array();
    std::copy(arr.begin(), arr.end(), scores);
  });
}

tn_status tn_score_file(const char* input_path, const char* schema_path,
                        const char* output_path) {
  if (require(input_path && schema_path && output_path, "null argument") !=
      TN_OK) {
    return TN_ERR_VALIDATION;
  }
  return guarded([&] {
    const tipinet::Schema schema = tipinet::Schema::load(schema_path);
    std::ifstream in(input_path, std::ios::binary);
    if (!in) {
      throw tipinet::IoError(std::string("cannot open input file: ") +
                             input_path);
    }
    std::string header_line;
    if (!std::getline(in, header_line)) {
      throw tipinet::ValidationError(std::string(input_path) + ": empty file");
    }
    while (!header_line.empty() &&
           (header_line.back() == '\r' || header_line.back() == '\n')) {
      header_line.pop_back();
    }
    const char delim =
        header_line.find('\t') != std::string::npos ? '\t' : ',';

    std::vector<std::string> header;
    {
      std::stringstream ss(header_line);
      std::string cell;
      while (std::getline(ss, cell, delim)) header.push_back(cell);
    }
    std::array<int, tipinet::kNumItems> item_idx;
    for (int i = 0; i < tipinet::kNumItems; ++i) {
      const std::string& name =
          schema.item_columns[static_cast<std::size_t>(i)];
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) {
        throw tipinet::ValidationError(std::string(input_path) +
                                       ": missing column '" + name + "'");
      }
      item_idx[static_cast<std::size_t>(i)] =
          static_cast<int>(it - header.begin());
    }

    std::ofstream out(output_path, std::ios::binary);
    if (!out) {
      throw tipinet::IoError(std::string("cannot write output file: ") +
                             output_path);
    }
    out << header_line;
    for (const char* factor : tipinet::kFactorNames) {
      out << delim << "score_" << factor;
    }
    out << "\n";

    std::string line;
    int row = 1;
    while (std::getline(in, line)) {
      ++row;
      while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
        line.pop_back();
      }
      if (line.empty()) continue;
      std::vector<std::string> cells;
      {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, delim)) cells.push_back(cell);
      }
      std::array<int, tipinet::kNumItems> items;
      for (int i = 0; i < tipinet::kNumItems; ++i) {
        const int col = item_idx[static_cast<std::size_t>(i)];
        if (col >= static_cast<int>(cells.size())) {
          throw tipinet::ValidationError(
              std::string(input_path) + ": row " + std::to_string(row) +
              " is missing item columns");
        }
        const std::string& cell = cells[static_cast<std::size_t>(col)];
        char* end = nullptr;
        const long v = std::strtol(cell.c_str(), &end, 10);
        if (end == cell.c_str() || *end != '\0') {
          throw tipinet::ValidationError(
              std::string(input_path) + ": non-numeric item '" + cell +
              "' at row " + std::to_string(row));
        }
        items[static_cast<std::size_t>(i)] = static_cast<int>(v);
      }
      tipinet::BigFiveScores s;
      try {
        s = tipinet::score_tipi(std::span<const int, tipinet::kNumItems>(
            items.data(), tipinet::kNumItems));
      } catch (const tipinet::ValidationError& e) {
        throw tipinet::ValidationError(std::string(input_path) + ": row " +
                                       std::to_string(row) + ": " + e.what());
      }
      out << line;
      for (double v : s.as_array()) {
        out << delim << tipinet::format_double(v);
      }
      out << "\n";
    }
    if (row == 1) {
      throw tipinet::ValidationError(std::string(input_path) +
                                     ": no data rows");
    }
  });
}

tn_status tn_baseline(const tn_dataset* ds, double* mse_out) {
  if (require(ds && mse_out, "null argument") != TN_OK) {
    return TN_ERR_VALIDATION;
  }
  return guarded([&] { *mse_out = tipinet::baseline_mse(ds->ds); });
}

tn_status tn_export_normalized(const tn_dataset* ds, const char* items_path,
                               const char* targets_path) {
  if (require(ds && items_path && targets_path, "null argument") != TN_OK) {
    return TN_ERR_VALIDATION;
  }
  return guarded([&] {
    const tipinet::NormalizedData norm = tipinet::normalize(ds->ds);
    std::ofstream items(items_path, std::ios::binary);
    if (!items) {
      throw tipinet::IoError(std::string("cannot write ") + items_path);
    }
    tipinet::write_matrix_csv(norm.items, items);
    std::ofstream targets(targets_path, std::ios::binary);
    if (!targets) {
      throw tipinet::IoError(std::string("cannot write ") + targets_path);
    }
    tipinet::write_matrix_csv(norm.targets, targets);
  });
}

tn_status tn_ks_two_sample(const double* a, int n, const double* b, int m,
                           double* d_out, double* p_out) {
  if (require(a && b && d_out && p_out, "null argument") != TN_OK) {
    return TN_ERR_VALIDATION;
  }
  if (require(n > 0 && m > 0, "samples must be nonempty") != TN_OK) {
    return TN_ERR_VALIDATION;
  }
  return guarded([&] {
    const tipinet::KsResult r = tipinet::ks_two_sample(
        std::span<const double>(a, static_cast<std::size_t>(n)),
        std::span<const double>(b, static_cast<std::size_t>(m)));
    *d_out = r.d;
    *p_out = r.p_value;
  });
}

void tn_experiment_opts_init(tn_experiment_opts* opts) {
  if (!opts) return;
  opts->replicates = 100;
  opts->epochs = 300;
  opts->learning_rate = 0.5;
  opts->val_fraction = 0.4;
  opts->master_seed = 0;
  opts->resplit_per_replicate = 1;
  opts->pre_reverse = 0;
  opts->adaptive_moment = 0;
  opts->batch_size = 0;
  opts->alpha = 0.001;
  opts->snapshot_bins = 20;
  opts->threads = 0;
}

tn_status tn_permtest(const tn_dataset* ds, const tn_experiment_opts* opts,
                      const char* out_dir, const char* command_line,
                      tn_permtest_result* result) {
  if (require(ds && opts && out_dir, "null argument") != TN_OK) {
    return TN_ERR_VALIDATION;
  }
  return guarded([&] {
    tipinet::ExperimentConfig cfg;
    cfg.replicates = opts->replicates;
    cfg.train.epochs = opts->epochs;
    cfg.train.learning_rate = opts->learning_rate;
    cfg.train.val_fraction = opts->val_fraction;
    cfg.train.optimizer = opts->adaptive_moment
                              ? tipinet::Optimizer::kAdaptiveMoment
                              : tipinet::Optimizer::kGradientDescent;
    cfg.train.batch_size = opts->batch_size;
    cfg.master_seed = opts->master_seed;
    cfg.resplit_per_replicate = opts->resplit_per_replicate != 0;
    cfg.pre_reverse = opts->pre_reverse != 0;
    cfg.alpha = opts->alpha;
    cfg.snapshot_bins = opts->snapshot_bins;
    cfg.threads = opts->threads;
    const tipinet::ExperimentSummary summary = tipinet::run_experiment(
        ds->ds, cfg, out_dir, command_line ? command_line : "",
        ds->fingerprint);
    if (result) {
      result->d_mse = summary.final_d_mse;
      result->lnp_mse = summary.final_lnp_mse;
      result->d_mae = summary.final_d_mae;
      result->lnp_mae = summary.final_lnp_mae;
      result->pass = summary.pass ? 1 : 0;
    }
  });
}

tn_status tn_weights_report(const char* results_dir, int epoch,
                            const char* out_dir, double threshold,
                            int ascii_image, tn_alignment* out) {
  if (require(results_dir && out_dir, "null argument") != TN_OK) {
    return TN_ERR_VALIDATION;
  }
  return guarded([&] {
    const double th = threshold > 0 ? threshold : 0.5;
    const tipinet::WeightsReportResult r = tipinet::weights_report(
        results_dir, epoch, out_dir, th, ascii_image != 0);
    if (out) {
      out->threshold = th;
      int min_index = 0;
      for (int f = 0; f < tipinet::kNumFactors; ++f) {
        const auto& fa = r.alignment.factors[static_cast<std::size_t>(f)];
        out->mass_fraction[f] = fa.mass_fraction;
        out->sign_correct[f] = fa.sign_correct ? 1 : 0;
        out->verdict[f] = fa.verdict == "aligned"
                              ? 0
                              : (fa.verdict == "diffuse" ? 1 : 2);
        if (fa.mass_fraction < out->mass_fraction[min_index]) min_index = f;
      }
      out->min_index = min_index;
    }
  });
}

tn_status tn_synth(int n_respondents, double noise_sd,
                   unsigned long long seed, const char* out_csv_path) {
  if (require(out_csv_path != nullptr, "null output path") != TN_OK) {
    return TN_ERR_VALIDATION;
  }
  return guarded([&] {
    tipinet::SynthConfig cfg;
    cfg.n_respondents = n_respondents;
    cfg.noise_sd = noise_sd;
    cfg.seed = seed;
    const tipinet::Dataset ds = tipinet::generate(cfg);
    const tipinet::Schema schema = tipinet::synth_schema();
    std::ofstream out(out_csv_path, std::ios::binary);
    if (!out) {
      throw tipinet::IoError(std::string("cannot write dataset file: ") +
                             out_csv_path);
    }
    tipinet::save_dataset(ds, schema, out);
    schema.save(std::string(out_csv_path) + ".schema");
  });
}

}  // extern "C"
