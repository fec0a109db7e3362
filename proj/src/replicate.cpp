#include "replicate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "manifest.hpp"
#include "stats.hpp"

namespace tipinet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int resolve_threads(int configured, int replicates) {
  int t = configured;
  if (t <= 0) {
    if (const char* env = std::getenv("TIPINET_THREADS")) {
      t = std::atoi(env);
    }
  }
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  if (t <= 0) t = 1;
  return std::min(t, replicates);
}

void mean_sd(std::span<const double> v, double& mean, double& sd) {
  double acc = 0.0;
  for (double x : v) acc += x;
  mean = acc / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
}

std::string replicate_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", i);
  return buf;
}

void write_run_file(const ReplicateRun& run, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write run file: " + path.string());
  out << "# seed = " << run.seed << "\n";
  out << "# columns: epoch,train_mse,train_mae,val_mse,val_mae\n";
  for (std::size_t e = 0; e < run.train_mse.size(); ++e) {
    out << (e + 1) << "," << format_double(run.train_mse[e]) << ","
        << format_double(run.train_mae[e]) << ","
        << format_double(run.val_mse[e]) << ","
        << format_double(run.val_mae[e]) << "\n";
  }
}

void write_weights_file(const Matrix& w, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weights file: " + path.string());
  write_matrix_csv(w, out);
}

Matrix read_weights_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open weights file: " + path.string());
  Matrix w(kNumFactors, kNumItems);
  std::string line;
  for (int r = 0; r < kNumFactors; ++r) {
    if (!std::getline(in, line)) {
      throw IoError("truncated weights file: " + path.string());
    }
    std::stringstream ss(line);
    std::string cell;
    for (int c = 0; c < kNumItems; ++c) {
      if (!std::getline(ss, cell, ',')) {
        throw IoError("truncated weights row in " + path.string());
      }
      w(r, c) = std::strtod(cell.c_str(), nullptr);
    }
  }
  return w;
}

std::vector<double> epoch_sample(const std::vector<ReplicateRun>& runs,
                                 int epoch, bool use_mae) {
  std::vector<double> out;
  out.reserve(runs.size());
  for (const auto& run : runs) {
    const auto& v = use_mae ? run.val_mae : run.val_mse;
    out.push_back(v[static_cast<std::size_t>(epoch - 1)]);
  }
  return out;
}

}  // namespace

std::vector<ReplicateRun> run_population(
    const NormalizedData& data, const ExperimentConfig& config, bool permuted,
    std::span<const int> weight_snapshot_epochs) {
  if (config.replicates < 2) {
    throw ValidationError("replicates must be >= 2");
  }

  Split shared_split;
  const Split* fixed_split = nullptr;
  if (!config.resplit_per_replicate) {
    Rng split_rng(Rng::derive(config.master_seed, 0x5b1f7, 2));
    shared_split =
        split_train_val(data.items.rows(), config.train.val_fraction, split_rng);
    fixed_split = &shared_split;
  }

  std::vector<ReplicateRun> runs(static_cast<std::size_t>(config.replicates));
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  int error_index = -1;
  std::exception_ptr error;

  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= config.replicates || failed.load()) return;
      try {
        const std::uint64_t child =
            Rng::derive(config.master_seed, static_cast<std::uint64_t>(i),
                        permuted ? 1 : 0);
        const Matrix* targets = &data.targets;
        Matrix permuted_targets;
        if (permuted) {
          Rng perm_rng(Rng::derive(child, 0x7e57ab1e, 3));
          permuted_targets = permute_rows(data.targets, perm_rng);
          targets = &permuted_targets;
        }
        TrainConfig tc = config.train;
        tc.seed = child;
        runs[static_cast<std::size_t>(i)] =
            train(data.items, *targets, tc, fixed_split,
                  weight_snapshot_epochs);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (error_index < 0 || i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
        failed.store(true);
      }
    }
  };

  const int n_threads = resolve_threads(config.threads, config.replicates);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const DivergedError& e) {
      throw DivergedError(e.epoch, "replicate " + std::to_string(error_index) +
                                       ": " + e.what());
    }
  }
  return runs;
}

DivergenceTrajectory divergence_trajectory(
    const std::vector<ReplicateRun>& correct,
    const std::vector<ReplicateRun>& permuted) {
  if (correct.empty() || permuted.empty() ||
      correct.size() != permuted.size()) {
    throw ValidationError("populations must be nonempty and equally sized");
  }
  const std::size_t epochs = correct.front().val_mse.size();
  for (const auto& run : correct) {
    if (run.val_mse.size() != epochs) {
      throw ValidationError("mismatched epoch counts across replicates");
    }
  }
  for (const auto& run : permuted) {
    if (run.val_mse.size() != epochs) {
      throw ValidationError("mismatched epoch counts across populations");
    }
  }

  DivergenceTrajectory traj;
  {
    std::vector<double> c0_mse, p0_mse, c0_mae, p0_mae;
    for (const auto& run : correct) {
      c0_mse.push_back(run.initial_val_mse);
      c0_mae.push_back(run.initial_val_mae);
    }
    for (const auto& run : permuted) {
      p0_mse.push_back(run.initial_val_mse);
      p0_mae.push_back(run.initial_val_mae);
    }
    const KsResult k0_mse = ks_two_sample(c0_mse, p0_mse);
    const KsResult k0_mae = ks_two_sample(c0_mae, p0_mae);
    traj.initial_d_mse = k0_mse.d;
    traj.initial_lnp_mse = safe_log_p(k0_mse.p_value);
    traj.initial_d_mae = k0_mae.d;
    traj.initial_lnp_mae = safe_log_p(k0_mae.p_value);
  }
  for (int e = 1; e <= static_cast<int>(epochs); ++e) {
    const std::vector<double> c_mse = epoch_sample(correct, e, false);
    const std::vector<double> p_mse = epoch_sample(permuted, e, false);
    const std::vector<double> c_mae = epoch_sample(correct, e, true);
    const std::vector<double> p_mae = epoch_sample(permuted, e, true);

    const KsResult k_mse = ks_two_sample(c_mse, p_mse);
    const KsResult k_mae = ks_two_sample(c_mae, p_mae);
    traj.d_mse.push_back(k_mse.d);
    traj.lnp_mse.push_back(safe_log_p(k_mse.p_value));
    traj.d_mae.push_back(k_mae.d);
    traj.lnp_mae.push_back(safe_log_p(k_mae.p_value));

    double mean, sd;
    mean_sd(c_mse, mean, sd);
    traj.correct_mse_mean.push_back(mean);
    traj.correct_mse_sd.push_back(sd);
    mean_sd(p_mse, mean, sd);
    traj.permuted_mse_mean.push_back(mean);
    traj.permuted_mse_sd.push_back(sd);
    mean_sd(c_mae, mean, sd);
    traj.correct_mae_mean.push_back(mean);
    traj.correct_mae_sd.push_back(sd);
    mean_sd(p_mae, mean, sd);
    traj.permuted_mae_mean.push_back(mean);
    traj.permuted_mae_sd.push_back(sd);
  }
  return traj;
}

HistogramPair snapshot_distributions(const std::vector<ReplicateRun>& correct,
                                     const std::vector<ReplicateRun>& permuted,
                                     int epoch, int bins) {
  if (bins < 1) throw ValidationError("snapshot bins must be >= 1");
  if (correct.empty() || permuted.empty()) {
    throw ValidationError("populations must be nonempty");
  }
  const int epochs = static_cast<int>(correct.front().val_mse.size());
  if (epoch < 1 || epoch > epochs) {
    throw ValidationError("snapshot epoch " + std::to_string(epoch) +
                          " out of range 1.." + std::to_string(epochs));
  }
  const std::vector<double> c = epoch_sample(correct, epoch, false);
  const std::vector<double> p = epoch_sample(permuted, epoch, false);

  double lo = c.front(), hi = c.front();
  for (double v : c) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : p) lo = std::min(lo, v), hi = std::max(hi, v);
  if (hi <= lo) hi = lo + 1.0;  // all values identical

  HistogramPair h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) {
    h.edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
  }
  h.correct_counts.assign(static_cast<std::size_t>(bins), 0);
  h.permuted_counts.assign(static_cast<std::size_t>(bins), 0);
  auto bin_of = [&](double v) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    return std::clamp(b, 0, bins - 1);
  };
  for (double v : c) ++h.correct_counts[static_cast<std::size_t>(bin_of(v))];
  for (double v : p) ++h.permuted_counts[static_cast<std::size_t>(bin_of(v))];
  return h;
}

ExperimentSummary run_experiment(const Dataset& dataset,
                                 const ExperimentConfig& config,
                                 const fs::path& out_dir,
                                 const std::string& command_line,
                                 const std::string& dataset_fingerprint) {
  if (config.replicates < 2) {
    throw ValidationError("replicates must be >= 2");
  }
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
    throw ValidationError("alpha must lie in (0, 1)");
  }
  if (fs::exists(out_dir) && !fs::is_empty(out_dir)) {
    throw IoError("output directory exists and is not empty: " +
                  out_dir.string());
  }
  const bool created = !fs::exists(out_dir);
  fs::create_directories(out_dir);

  try {
    NormalizedData data = normalize(dataset);
    if (config.pre_reverse) {
      pre_reverse_items(data.items, dataset.item_scale_max);
    }

    const int epochs = config.train.epochs;
    std::vector<int> snaps = {1, (epochs + 1) / 2, epochs};
    std::sort(snaps.begin(), snaps.end());
    snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());

    const std::vector<ReplicateRun> correct =
        run_population(data, config, false, snaps);
    const std::vector<ReplicateRun> permuted =
        run_population(data, config, true);

    fs::create_directories(out_dir / "correct");
    fs::create_directories(out_dir / "permuted");
    fs::create_directories(out_dir / "snapshots");
    for (int i = 0; i < config.replicates; ++i) {
      const auto& c = correct[static_cast<std::size_t>(i)];
      const auto& p = permuted[static_cast<std::size_t>(i)];
      const std::string name = replicate_name(i);
      write_run_file(c, out_dir / "correct" / (name + ".run"));
      write_run_file(p, out_dir / "permuted" / (name + ".run"));
      write_weights_file(c.final_weights,
                         out_dir / "correct" / (name + ".weights"));
      write_weights_file(p.final_weights,
                         out_dir / "permuted" / (name + ".weights"));
      for (const auto& [epoch, w] : c.weight_snapshots) {
        write_weights_file(w, out_dir / "correct" /
                                  (name + ".weights_epoch_" +
                                   std::to_string(epoch)));
      }
    }

    const DivergenceTrajectory traj = divergence_trajectory(correct, permuted);
    {
      std::ofstream out(out_dir / "trajectory.csv", std::ios::binary);
      if (!out) throw IoError("cannot write trajectory.csv");
      out << "epoch,d_mse,lnp_mse,d_mae,lnp_mae,"
             "correct_mse_mean,correct_mse_sd,permuted_mse_mean,"
             "permuted_mse_sd,correct_mae_mean,correct_mae_sd,"
             "permuted_mae_mean,permuted_mae_sd\n";
      {
        std::vector<double> c0_mse, p0_mse, c0_mae, p0_mae;
        for (const auto& run : correct) {
          c0_mse.push_back(run.initial_val_mse);
          c0_mae.push_back(run.initial_val_mae);
        }
        for (const auto& run : permuted) {
          p0_mse.push_back(run.initial_val_mse);
          p0_mae.push_back(run.initial_val_mae);
        }
        double cm, cs, pm, ps, cam, cas, pam, pas;
        mean_sd(c0_mse, cm, cs);
        mean_sd(p0_mse, pm, ps);
        mean_sd(c0_mae, cam, cas);
        mean_sd(p0_mae, pam, pas);
        out << "0," << format_double(traj.initial_d_mse) << ","
            << format_double(traj.initial_lnp_mse) << ","
            << format_double(traj.initial_d_mae) << ","
            << format_double(traj.initial_lnp_mae) << ","
            << format_double(cm) << "," << format_double(cs) << ","
            << format_double(pm) << "," << format_double(ps) << ","
            << format_double(cam) << "," << format_double(cas) << ","
            << format_double(pam) << "," << format_double(pas) << "\n";
      }
      for (std::size_t e = 0; e < traj.epochs(); ++e) {
        out << (e + 1) << "," << format_double(traj.d_mse[e]) << ","
            << format_double(traj.lnp_mse[e]) << ","
            << format_double(traj.d_mae[e]) << ","
            << format_double(traj.lnp_mae[e]) << ","
            << format_double(traj.correct_mse_mean[e]) << ","
            << format_double(traj.correct_mse_sd[e]) << ","
            << format_double(traj.permuted_mse_mean[e]) << ","
            << format_double(traj.permuted_mse_sd[e]) << ","
            << format_double(traj.correct_mae_mean[e]) << ","
            << format_double(traj.correct_mae_sd[e]) << ","
            << format_double(traj.permuted_mae_mean[e]) << ","
            << format_double(traj.permuted_mae_sd[e]) << "\n";
      }
    }

    for (int snap : snaps) {
      const HistogramPair h =
          snapshot_distributions(correct, permuted, snap, config.snapshot_bins);
      std::ofstream out(out_dir / "snapshots" /
                            ("epoch_" + std::to_string(snap) + ".csv"),
                        std::ios::binary);
      if (!out) throw IoError("cannot write snapshot histogram");
      out << "bin_lo,bin_hi,correct_count,permuted_count\n";
      for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
        out << format_double(h.edges[b]) << "," << format_double(h.edges[b + 1])
            << "," << h.correct_counts[b] << "," << h.permuted_counts[b]
            << "\n";
      }
    }

    ExperimentSummary summary;
    summary.final_d_mse = traj.d_mse.back();
    summary.final_lnp_mse = traj.lnp_mse.back();
    summary.final_d_mae = traj.d_mae.back();
    summary.final_lnp_mae = traj.lnp_mae.back();
    summary.pass = summary.final_lnp_mse < std::log(config.alpha);
    summary.weight_snapshot_epochs = snaps;

    json manifest;
    manifest["tool"] = kToolName;
    manifest["version"] = kToolVersion;
    manifest["command_line"] = command_line;
    manifest["master_seed"] = config.master_seed;
    manifest["dataset_fingerprint"] = dataset_fingerprint;
    manifest["config"] = {
        {"replicates", config.replicates},
        {"epochs", config.train.epochs},
        {"learning_rate", config.train.learning_rate},
        {"val_fraction", config.train.val_fraction},
        {"optimizer", config.train.optimizer == Optimizer::kGradientDescent
                          ? "gradient_descent"
                          : "adaptive_moment"},
        {"batch_size", config.train.batch_size},
        {"resplit_per_replicate", config.resplit_per_replicate},
        {"pre_reverse", config.pre_reverse},
        {"alpha", config.alpha},
        {"snapshot_bins", config.snapshot_bins},
    };
    manifest["normalization"] =
        dataset.declared_maxima ? "declared_maxima" : "observed_maxima";
    manifest["weight_snapshot_epochs"] = snaps;
    manifest["verdict"] = {
        {"d_mse", summary.final_d_mse},
        {"lnp_mse", summary.final_lnp_mse},
        {"d_mae", summary.final_d_mae},
        {"lnp_mae", summary.final_lnp_mae},
        {"pass", summary.pass},
    };
    manifest["artifacts"] = {
        {"trajectory", "trajectory.csv"},
        {"correct_runs", "correct/"},
        {"permuted_runs", "permuted/"},
        {"snapshots", "snapshots/"},
    };
    std::ofstream mf(out_dir / "manifest.json", std::ios::binary);
    if (!mf) throw IoError("cannot write manifest.json");
    mf << manifest.dump(2) << "\n";

    return summary;
  } catch (...) {
    std::error_code ec;
    if (created) {
      fs::remove_all(out_dir, ec);
    } else {
      for (const char* sub : {"correct", "permuted", "snapshots"}) {
        fs::remove_all(out_dir / sub, ec);
      }
      fs::remove(out_dir / "trajectory.csv", ec);
      fs::remove(out_dir / "manifest.json", ec);
    }
    throw;
  }
}

WeightsReportResult weights_report(const fs::path& results_dir, int epoch,
                                   const fs::path& out_dir, double threshold,
                                   bool ascii_image) {
  std::ifstream mf(results_dir / "manifest.json");
  if (!mf) {
    throw IoError("cannot open manifest.json in " + results_dir.string());
  }
  json manifest = json::parse(mf, nullptr, true, true);
  const int replicates = manifest.at("config").at("replicates").get<int>();
  const bool pre_reverse =
      manifest.at("config").at("pre_reverse").get<bool>();
  const std::vector<int> snaps =
      manifest.at("weight_snapshot_epochs").get<std::vector<int>>();

  std::string suffix = ".weights";
  if (epoch >= 0) {
    if (std::find(snaps.begin(), snaps.end(), epoch) == snaps.end()) {
      throw ValidationError(
          "epoch " + std::to_string(epoch) +
          " has no recorded weight snapshot in this results directory");
    }
    suffix = ".weights_epoch_" + std::to_string(epoch);
  }

  std::vector<Matrix> weights;
  weights.reserve(static_cast<std::size_t>(replicates));
  for (int i = 0; i < replicates; ++i) {
    weights.push_back(read_weights_file(results_dir / "correct" /
                                        (replicate_name(i) + suffix)));
  }

  WeightsReportResult result;
  result.epoch = epoch;
  result.averaged = average_weights(weights);
  result.alignment =
      alignment_score(result.averaged, template_matrix(pre_reverse), threshold);

  fs::create_directories(out_dir);
  write_pgm(render_heatmap(result.averaged), out_dir / "weights.pgm",
            !ascii_image);
  {
    std::ofstream out(out_dir / "weights.csv", std::ios::binary);
    if (!out) throw IoError("cannot write weights.csv");
    write_matrix_csv(result.averaged, out);
  }
  {
    json report;
    report["epoch"] = epoch < 0 ? json("final") : json(epoch);
    report["threshold"] = threshold;
    report["pre_reverse"] = pre_reverse;
    for (int f = 0; f < kNumFactors; ++f) {
      const auto& fa = result.alignment.factors[static_cast<std::size_t>(f)];
      report["factors"][kFactorNames[f]] = {
          {"mass_fraction", fa.mass_fraction},
          {"sign_correct", fa.sign_correct},
          {"verdict", fa.verdict},
      };
    }
    std::ofstream out(out_dir / "alignment.json", std::ios::binary);
    if (!out) throw IoError("cannot write alignment.json");
    out << report.dump(2) << "\n";
  }
  return result;
}

}  // namespace tipinet
