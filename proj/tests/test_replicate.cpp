#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "model.hpp"
#include "replicate.hpp"
#include "stats.hpp"
#include "synth.hpp"

using namespace tipinet;
namespace fs = std::filesystem;

namespace {

NormalizedData small_data() {
  SynthConfig cfg;
  cfg.n_respondents = 40;
  cfg.noise_sd = 0.1;
  cfg.seed = 17;
  return normalize(generate(cfg));
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.replicates = 8;
  cfg.train.epochs = 25;
  cfg.master_seed = 99;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("run_population is deterministic and seed-derived") {
  const NormalizedData data = small_data();
  const ExperimentConfig cfg = small_config();

  const std::vector<ReplicateRun> a = run_population(data, cfg, false);
  const std::vector<ReplicateRun> b = run_population(data, cfg, false);
  REQUIRE(a.size() == 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].val_mse == b[i].val_mse);
    CHECK(a[i].final_weights == b[i].final_weights);
  }
  // distinct replicates start from distinct seeds
  CHECK(a[0].seed != a[1].seed);
  // the permuted population lives on a different seed stream
  const std::vector<ReplicateRun> p = run_population(data, cfg, true);
  CHECK(p[0].seed != a[0].seed);
}

TEST_CASE("run_population output does not depend on the thread count") {
  const NormalizedData data = small_data();
  ExperimentConfig cfg = small_config();
  cfg.threads = 1;
  const std::vector<ReplicateRun> serial = run_population(data, cfg, true);
  cfg.threads = 8;
  const std::vector<ReplicateRun> parallel = run_population(data, cfg, true);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].val_mse == parallel[i].val_mse);
    CHECK(serial[i].final_weights == parallel[i].final_weights);
  }
}

TEST_CASE("run_population rejects bad configuration") {
  const NormalizedData data = small_data();
  ExperimentConfig cfg = small_config();
  cfg.replicates = 1;
  CHECK_THROWS_AS(run_population(data, cfg, false), ValidationError);
}

TEST_CASE("divergence_trajectory on an identical pair is flat at p = 1") {
  const NormalizedData data = small_data();
  const ExperimentConfig cfg = small_config();
  const std::vector<ReplicateRun> pop = run_population(data, cfg, false);
  const DivergenceTrajectory traj = divergence_trajectory(pop, pop);
  REQUIRE(traj.epochs() == 25);
  CHECK(traj.initial_d_mse == 0.0);
  CHECK(traj.initial_lnp_mse == 0.0);
  for (std::size_t e = 0; e < traj.epochs(); ++e) {
    CHECK(traj.d_mse[e] == 0.0);
    CHECK(traj.lnp_mse[e] == 0.0);
    CHECK(traj.d_mae[e] == 0.0);
    CHECK(traj.correct_mse_mean[e] == traj.permuted_mse_mean[e]);
  }
}

TEST_CASE("divergence_trajectory separates correct from permuted labels") {
  SynthConfig sc;
  sc.n_respondents = 120;
  sc.noise_sd = 0.05;
  sc.seed = 4;
  const NormalizedData data = normalize(generate(sc));

  ExperimentConfig cfg;
  cfg.replicates = 30;
  cfg.train.epochs = 60;
  cfg.master_seed = 7;
  const std::vector<ReplicateRun> correct = run_population(data, cfg, false);
  const std::vector<ReplicateRun> permuted = run_population(data, cfg, true);
  const DivergenceTrajectory traj = divergence_trajectory(correct, permuted);

  CHECK(traj.lnp_mse.back() < std::log(0.001));
  CHECK(traj.lnp_mae.back() < std::log(0.001));
  // indistinguishable before training starts
  CHECK(traj.initial_lnp_mse > std::log(0.05));
  CHECK(traj.d_mse.back() > 0.9);
  CHECK(traj.correct_mse_mean.back() < traj.permuted_mse_mean.back());

  // median ln(p) over the last quarter is far below the first quarter
  const std::size_t q = traj.epochs() / 4;
  double early = 0.0, late = 0.0;
  for (std::size_t e = 0; e < q; ++e) early += traj.lnp_mse[e];
  for (std::size_t e = traj.epochs() - q; e < traj.epochs(); ++e) {
    late += traj.lnp_mse[e];
  }
  CHECK(late < early);
}

TEST_CASE("divergence_trajectory validates shapes") {
  const NormalizedData data = small_data();
  const ExperimentConfig cfg = small_config();
  const std::vector<ReplicateRun> pop = run_population(data, cfg, false);
  std::vector<ReplicateRun> shorter = pop;
  shorter[0].val_mse.pop_back();
  CHECK_THROWS_AS(divergence_trajectory(pop, shorter), ValidationError);
  CHECK_THROWS_AS(divergence_trajectory({}, pop), ValidationError);
}

TEST_CASE("snapshot_distributions bins both populations on shared edges") {
  const NormalizedData data = small_data();
  const ExperimentConfig cfg = small_config();
  const std::vector<ReplicateRun> correct = run_population(data, cfg, false);
  const std::vector<ReplicateRun> permuted = run_population(data, cfg, true);

  const HistogramPair h = snapshot_distributions(correct, permuted, 25, 10);
  REQUIRE(h.edges.size() == 11);
  CHECK(std::is_sorted(h.edges.begin(), h.edges.end()));
  int total_c = 0, total_p = 0;
  for (int c : h.correct_counts) total_c += c;
  for (int c : h.permuted_counts) total_p += c;
  CHECK(total_c == 8);
  CHECK(total_p == 8);

  CHECK_THROWS_AS(snapshot_distributions(correct, permuted, 0, 10),
                  ValidationError);
  CHECK_THROWS_AS(snapshot_distributions(correct, permuted, 26, 10),
                  ValidationError);
  CHECK_THROWS_AS(snapshot_distributions(correct, permuted, 25, 0),
                  ValidationError);
}

TEST_CASE("run_experiment writes a complete results directory") {
  SynthConfig sc;
  sc.n_respondents = 80;
  sc.noise_sd = 0.1;
  sc.seed = 23;
  const Dataset ds = generate(sc);

  ExperimentConfig cfg;
  cfg.replicates = 10;
  cfg.train.epochs = 30;
  cfg.master_seed = 5;
  cfg.snapshot_bins = 8;

  TempDir dir("tipinet_exp_test");
  const ExperimentSummary summary =
      run_experiment(ds, cfg, dir.path, "unit-test", "fnv1a64:0");

  CHECK(std::isfinite(summary.final_lnp_mse));
  REQUIRE(summary.weight_snapshot_epochs.size() == 3);
  CHECK(summary.weight_snapshot_epochs[0] == 1);
  CHECK(summary.weight_snapshot_epochs[2] == 30);

  CHECK(fs::exists(dir.path / "manifest.json"));
  CHECK(fs::exists(dir.path / "trajectory.csv"));
  CHECK(fs::exists(dir.path / "correct" / "000.run"));
  CHECK(fs::exists(dir.path / "correct" / "009.run"));
  CHECK(fs::exists(dir.path / "correct" / "000.weights"));
  CHECK(fs::exists(dir.path / "correct" / "000.weights_epoch_1"));
  CHECK(fs::exists(dir.path / "permuted" / "009.run"));
  CHECK(fs::exists(dir.path / "snapshots" / "epoch_1.csv"));
  CHECK(fs::exists(dir.path / "snapshots" / "epoch_30.csv"));

  const std::string traj = slurp(dir.path / "trajectory.csv");
  CHECK(traj.rfind("epoch,d_mse,lnp_mse,d_mae,lnp_mae,", 0) == 0);
  // header, the epoch-0 row, one line per epoch
  CHECK(std::count(traj.begin(), traj.end(), '\n') == 32);
  CHECK(traj.find("\n0,") != std::string::npos);

  const std::string run0 = slurp(dir.path / "correct" / "000.run");
  CHECK(run0.find("# seed = ") != std::string::npos);
  CHECK(run0.find("# columns: epoch,train_mse,train_mae,val_mse,val_mae") !=
        std::string::npos);

  const std::string manifest = slurp(dir.path / "manifest.json");
  CHECK(manifest.find("\"tool\"") != std::string::npos);
  CHECK(manifest.find("\"dataset_fingerprint\"") != std::string::npos);
  CHECK(manifest.find("unit-test") != std::string::npos);

  // refuses to clobber the now non-empty directory
  CHECK_THROWS_AS(run_experiment(ds, cfg, dir.path, "x", "y"), IoError);
}

TEST_CASE("run_experiment output is byte-identical across reruns and threads") {
  SynthConfig sc;
  sc.n_respondents = 60;
  sc.noise_sd = 0.1;
  sc.seed = 31;
  const Dataset ds = generate(sc);

  ExperimentConfig cfg;
  cfg.replicates = 6;
  cfg.train.epochs = 20;
  cfg.master_seed = 12;
  cfg.threads = 1;

  TempDir a("tipinet_det_a"), b("tipinet_det_b");
  run_experiment(ds, cfg, a.path, "same", "fp");
  cfg.threads = 4;
  run_experiment(ds, cfg, b.path, "same", "fp");

  CHECK(slurp(a.path / "trajectory.csv") == slurp(b.path / "trajectory.csv"));
  CHECK(slurp(a.path / "correct" / "003.run") ==
        slurp(b.path / "correct" / "003.run"));
  CHECK(slurp(a.path / "permuted" / "005.run") ==
        slurp(b.path / "permuted" / "005.run"));
}

TEST_CASE("planted synthetic data yields a passing verdict end to end") {
  SynthConfig sc;
  sc.n_respondents = 150;
  sc.noise_sd = 0.1;
  sc.seed = 42;
  const Dataset ds = generate(sc);

  ExperimentConfig cfg;
  cfg.replicates = 40;
  cfg.train.epochs = 80;
  cfg.master_seed = 9;
  cfg.pre_reverse = true;

  TempDir dir("tipinet_pass_test");
  const ExperimentSummary summary =
      run_experiment(ds, cfg, dir.path, "unit-test", "fp");
  CHECK(summary.pass);
  CHECK(summary.final_lnp_mse < std::log(0.001));

  TempDir rep("tipinet_weights_test");
  const WeightsReportResult res =
      weights_report(dir.path, -1, rep.path, 0.5);
  CHECK(fs::exists(rep.path / "weights.pgm"));
  CHECK(fs::exists(rep.path / "weights.csv"));
  CHECK(fs::exists(rep.path / "alignment.json"));
  CHECK(res.averaged.rows() == 5);
  CHECK(res.averaged.cols() == 10);
  for (const FactorAlignment& f : res.alignment.factors) {
    CHECK(f.mass_fraction > 0.5);
    CHECK(f.sign_correct);
  }

  // early-epoch weights are less concentrated than the final ones
  TempDir early("tipinet_weights_early");
  const WeightsReportResult at1 = weights_report(dir.path, 1, early.path, 0.5);
  double early_min = 1.0, final_min = 1.0;
  for (int f = 0; f < kNumFactors; ++f) {
    early_min = std::min(
        early_min, at1.alignment.factors[static_cast<std::size_t>(f)]
                       .mass_fraction);
    final_min = std::min(
        final_min, res.alignment.factors[static_cast<std::size_t>(f)]
                       .mass_fraction);
  }
  CHECK(early_min < final_min);

  // an unrecorded epoch is rejected
  TempDir bad("tipinet_weights_bad");
  CHECK_THROWS_AS(weights_report(dir.path, 2, bad.path, 0.5), ValidationError);
}
