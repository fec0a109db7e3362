#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "interpret.hpp"
#include "model.hpp"

namespace tipinet {

struct ExperimentConfig {
  int replicates = 100;
  TrainConfig train;
  std::uint64_t master_seed = 0;
  // Redraw the train/validation split for every replicate (vs one shared
  // split derived from the master seed).
  bool resplit_per_replicate = true;
  // Reverse-code the reverse-keyed items before training.
  bool pre_reverse = false;
  double alpha = 0.001;
  int snapshot_bins = 20;
  int threads = 0;  // 0 = TIPINET_THREADS env var, then hardware count
};

// Trains `replicates` independent runs. Replicate i uses a child seed
// derived from (master_seed, i, permuted); with permuted set, each
// replicate reshuffles the target rows with its own generator before
// splitting. Results do not depend on scheduling order.
std::vector<ReplicateRun> run_population(
    const NormalizedData& data, const ExperimentConfig& config, bool permuted,
    std::span<const int> weight_snapshot_epochs = {});

struct DivergenceTrajectory {
  // Epoch-0 comparison at initialization, before any update.
  double initial_d_mse = 0.0, initial_lnp_mse = 0.0;
  double initial_d_mae = 0.0, initial_lnp_mae = 0.0;
  std::vector<double> d_mse, lnp_mse, d_mae, lnp_mae;
  std::vector<double> correct_mse_mean, correct_mse_sd;
  std::vector<double> permuted_mse_mean, permuted_mse_sd;
  std::vector<double> correct_mae_mean, correct_mae_sd;
  std::vector<double> permuted_mae_mean, permuted_mae_sd;

  std::size_t epochs() const { return d_mse.size(); }
};

// Per epoch, the two-sample KS comparison of the populations' validation
// MSE samples and validation MAE samples.
DivergenceTrajectory divergence_trajectory(
    const std::vector<ReplicateRun>& correct,
    const std::vector<ReplicateRun>& permuted);

struct HistogramPair {
  std::vector<double> edges;  // bins + 1 shared edges
  std::vector<int> correct_counts, permuted_counts;
};

// Binned validation-MSE counts of both populations at a 1-based epoch.
HistogramPair snapshot_distributions(const std::vector<ReplicateRun>& correct,
                                     const std::vector<ReplicateRun>& permuted,
                                     int epoch, int bins);

struct ExperimentSummary {
  double final_d_mse = 0.0, final_lnp_mse = 0.0;
  double final_d_mae = 0.0, final_lnp_mae = 0.0;
  bool pass = false;
  std::vector<int> weight_snapshot_epochs;
};

// Full correct-vs-permuted experiment: trains both populations, writes
// runs, weights, trajectory.csv, snapshot histograms and manifest.json
// into out_dir (which must not already contain files). Partial output is
// removed on failure.
ExperimentSummary run_experiment(const Dataset& dataset,
                                 const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir,
                                 const std::string& command_line,
                                 const std::string& dataset_fingerprint);

struct WeightsReportResult {
  Matrix averaged;
  AlignmentReport alignment;
  int epoch = -1;  // -1 = final
};

// Averages the correct population's weights from a run_experiment results
// directory (at a recorded snapshot epoch, or the final weights), writes
// the grayscale heatmap, the averaged grid and the alignment report into
// out_dir. Reads everything it needs from the manifest.
WeightsReportResult weights_report(const std::filesystem::path& results_dir,
                                   int epoch,
                                   const std::filesystem::path& out_dir,
                                   double threshold, bool ascii_image = false);

}  // namespace tipinet
