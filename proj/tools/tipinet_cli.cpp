// Command-line front end; talks to the core exclusively through the
// shared library's C API.

#include <cmath>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "tipinet.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 2;    // validation / IO failure
constexpr int kExitUsage = 64;  // bad command line
constexpr int kExitNumeric = 70;

const char* kFactorNames[5] = {"E", "A", "C", "ES", "O"};

int exit_code_for(tn_status status) {
  switch (status) {
    case TN_OK:
      return kExitOk;
    case TN_ERR_NUMERIC:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

int report_failure(tn_status status) {
  std::fprintf(stderr, "error: %s\n", tn_last_error());
  return exit_code_for(status);
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

struct DatasetHandle {
  tn_dataset* ds = nullptr;
  ~DatasetHandle() { tn_dataset_free(ds); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural-network construct-validity test for a 10-item "
               "questionnaire"};
  app.set_version_flag("--version", tn_version());
  app.require_subcommand(1);

  // score
  std::string in_path, schema_path, out_path;
  auto* score = app.add_subcommand(
      "score", "Compute the five scale scores for every respondent");
  score->add_option("input", in_path, "dataset file")->required();
  score->add_option("schema", schema_path, "schema file")->required();
  score->add_option("output", out_path, "output file")->required();

  // baseline
  auto* baseline = app.add_subcommand(
      "baseline",
      "Best achievable MSE: normalized targets vs normalized scale scores");
  baseline->add_option("input", in_path, "dataset file")->required();
  baseline->add_option("schema", schema_path, "schema file")->required();

  // normalize
  std::string items_out, targets_out;
  auto* normalize = app.add_subcommand(
      "normalize", "Export the normalized item and target matrices");
  normalize->add_option("input", in_path, "dataset file")->required();
  normalize->add_option("schema", schema_path, "schema file")->required();
  normalize->add_option("--items", items_out, "items CSV output")
      ->default_val("items.csv");
  normalize->add_option("--targets", targets_out, "targets CSV output")
      ->default_val("targets.csv");

  // permtest
  tn_experiment_opts opts;
  tn_experiment_opts_init(&opts);
  auto* permtest = app.add_subcommand(
      "permtest",
      "Train correct-label and permuted-label replicate populations and "
      "test their error distributions for divergence");
  permtest->add_option("input", in_path, "dataset file")->required();
  permtest->add_option("schema", schema_path, "schema file")->required();
  permtest->add_option("--out", out_path, "results directory")->required();
  permtest->add_option("--replicates", opts.replicates, "runs per population")
      ->check(CLI::Range(2, 1000000));
  permtest->add_option("--epochs", opts.epochs, "training epochs")
      ->check(CLI::PositiveNumber);
  permtest->add_option("--lr", opts.learning_rate, "learning rate")
      ->check(CLI::PositiveNumber);
  permtest->add_option("--val-frac", opts.val_fraction,
                       "validation fraction in (0,1)");
  permtest->add_option("--seed", opts.master_seed, "master seed");
  permtest->add_option("--alpha", opts.alpha, "verdict threshold on KS p");
  permtest->add_flag("--pre-reverse", opts.pre_reverse,
                     "reverse-code items before training");
  bool fixed_split = false;
  permtest->add_flag("--fixed-split", fixed_split,
                     "share one train/validation split across replicates");
  permtest->add_flag("--adam", opts.adaptive_moment,
                     "adaptive-moment optimizer instead of plain descent");
  permtest->add_option("--batch-size", opts.batch_size,
                       "mini-batch size (0 = full batch)");
  permtest->add_option("--threads", opts.threads,
                       "worker threads (0 = TIPINET_THREADS env, then cores)");
  permtest->add_option("--bins", opts.snapshot_bins,
                       "snapshot histogram bins")
      ->check(CLI::PositiveNumber);

  // weights
  std::string results_dir;
  int epoch = -1;
  double threshold = 0.5;
  bool ascii_image = false;
  auto* weights = app.add_subcommand(
      "weights",
      "Average the correct population's weights, render the heatmap and "
      "score template alignment");
  weights->add_option("results", results_dir, "permtest results directory")
      ->required();
  weights->add_option("--out", out_path, "report directory")->required();
  weights->add_option("--epoch", epoch,
                      "recorded snapshot epoch (-1 = final weights)");
  weights->add_option("--threshold", threshold,
                      "mass-fraction threshold for the aligned verdict");
  weights->add_flag("--ascii", ascii_image, "plain-text image variant");

  // synth
  int n_respondents = 457;
  double noise_sd = 0.0;
  unsigned long long synth_seed = 0;
  auto* synth = app.add_subcommand(
      "synth", "Generate a synthetic dataset with planted linear structure");
  synth->add_option("--n", n_respondents, "respondent count")
      ->check(CLI::Range(5, 100000000));
  synth->add_option("--noise", noise_sd, "noise sd on the normalized scale")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", out_path, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*score) {
    const tn_status st =
        tn_score_file(in_path.c_str(), schema_path.c_str(), out_path.c_str());
    if (st != TN_OK) return report_failure(st);
    std::printf("scored %s -> %s\n", in_path.c_str(), out_path.c_str());
    return kExitOk;
  }

  if (*baseline || *normalize || *permtest) {
    DatasetHandle data;
    tn_status st =
        tn_dataset_load(in_path.c_str(), schema_path.c_str(), &data.ds);
    if (st != TN_OK) return report_failure(st);

    if (*baseline) {
      double mse = 0.0;
      st = tn_baseline(data.ds, &mse);
      if (st != TN_OK) return report_failure(st);
      std::printf("records: %d\n", tn_dataset_size(data.ds));
      std::printf("normalization: %s\n", tn_dataset_declared_maxima(data.ds)
                                             ? "declared maxima"
                                             : "observed maxima");
      std::printf("baseline_mse: %.6g\n", mse);
      return kExitOk;
    }

    if (*normalize) {
      st = tn_export_normalized(data.ds, items_out.c_str(),
                                targets_out.c_str());
      if (st != TN_OK) return report_failure(st);
      std::printf("wrote %s and %s\n", items_out.c_str(), targets_out.c_str());
      return kExitOk;
    }

    // permtest
    opts.resplit_per_replicate = fixed_split ? 0 : 1;
    tn_permtest_result result;
    st = tn_permtest(data.ds, &opts, out_path.c_str(),
                     join_args(argc, argv).c_str(), &result);
    if (st != TN_OK) return report_failure(st);
    std::printf("final epoch ln(p): mse %.6g, mae %.6g\n", result.lnp_mse,
                result.lnp_mae);
    std::printf("final epoch KS d: mse %.6g, mae %.6g\n", result.d_mse,
                result.d_mae);
    std::printf("verdict (alpha = %g, MSE gating): %s\n", opts.alpha,
                result.pass ? "PASS" : "FAIL");
    std::printf("results: %s\n", out_path.c_str());
    return kExitOk;
  }

  if (*weights) {
    tn_alignment alignment;
    const tn_status st =
        tn_weights_report(results_dir.c_str(), epoch, out_path.c_str(),
                          threshold, ascii_image ? 1 : 0, &alignment);
    if (st != TN_OK) return report_failure(st);
    const char* verdict_names[3] = {"aligned", "diffuse", "degenerate"};
    for (int f = 0; f < 5; ++f) {
      std::printf("%-2s mass_fraction %.4f sign_correct %d verdict %s\n",
                  kFactorNames[f], alignment.mass_fraction[f],
                  alignment.sign_correct[f],
                  verdict_names[alignment.verdict[f]]);
    }
    std::printf("lowest mass fraction: %s\n",
                kFactorNames[alignment.min_index]);
    std::printf("report: %s\n", out_path.c_str());
    return kExitOk;
  }

  if (*synth) {
    const tn_status st =
        tn_synth(n_respondents, noise_sd, synth_seed, out_path.c_str());
    if (st != TN_OK) return report_failure(st);
    std::printf("wrote %s and %s.schema\n", out_path.c_str(),
                out_path.c_str());
    return kExitOk;
  }

  return kExitUsage;
}
