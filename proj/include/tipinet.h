/* tipinet - questionnaire construct-validity testing via a tiny linear
 * predictor, permutation replicates and a two-sample KS test.
 *
 * C API of the shared library. All functions return a tn_status; on any
 * failure tn_last_error() describes what went wrong (thread-local).
 */
#ifndef TIPINET_H
#define TIPINET_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tn_status {
  TN_OK = 0,
  TN_ERR_VALIDATION = 1, /* bad data or out-of-contract argument */
  TN_ERR_IO = 2,         /* file system / format failure */
  TN_ERR_NUMERIC = 3     /* diverged training or other numeric failure */
} tn_status;

const char* tn_version(void);

/* Message for the most recent failure on this thread. */
const char* tn_last_error(void);

/* ------------------------------------------------------------------ */
/* Datasets                                                           */

typedef struct tn_dataset tn_dataset;

/* Loads a delimiter-separated dataset described by a key=value schema
 * file. The handle must be released with tn_dataset_free. */
tn_status tn_dataset_load(const char* data_path, const char* schema_path,
                          tn_dataset** out);
void tn_dataset_free(tn_dataset* ds);
int tn_dataset_size(const tn_dataset* ds);
/* 1 when the schema declared the target scale maxima, 0 when observed
 * column maxima are in use. */
int tn_dataset_declared_maxima(const tn_dataset* ds);

/* ------------------------------------------------------------------ */
/* Scoring primitives                                                 */

/* 7 -> 1, 6 -> 2, ... Fails outside [1, 7]. */
tn_status tn_reverse_likert(int value, int* out);

/* Scale scores E, A, C, ES, O from the ten item answers. */
tn_status tn_score_items(const int items[10], double scores[5]);

/* Batch scoring: appends the five score columns to every row. */
tn_status tn_score_file(const char* input_path, const char* schema_path,
                        const char* output_path);

/* MSE between normalized targets and normalized scale scores. */
tn_status tn_baseline(const tn_dataset* ds, double* mse_out);

/* Writes the normalized item and target matrices as CSV for audit. */
tn_status tn_export_normalized(const tn_dataset* ds, const char* items_path,
                               const char* targets_path);

/* ------------------------------------------------------------------ */
/* Statistics                                                         */

/* Two-sample Kolmogorov-Smirnov test: sup-distance between the empirical
 * CDFs and the asymptotic p-value. */
tn_status tn_ks_two_sample(const double* a, int n, const double* b, int m,
                           double* d_out, double* p_out);

/* ------------------------------------------------------------------ */
/* Permutation experiment                                             */

typedef struct tn_experiment_opts {
  int replicates;                  /* >= 2, default 100 */
  int epochs;                      /* default 300 */
  double learning_rate;            /* default 0.5 */
  double val_fraction;             /* default 0.4 */
  unsigned long long master_seed;  /* default 0 */
  int resplit_per_replicate;       /* default 1 */
  int pre_reverse;                 /* reverse-code items first, default 0 */
  int adaptive_moment;             /* 1 = Adam-style optimizer, default 0 */
  int batch_size;                  /* 0 = full batch */
  double alpha;                    /* verdict threshold, default 0.001 */
  int snapshot_bins;               /* histogram bins, default 20 */
  int threads;                     /* 0 = TIPINET_THREADS env, then cores */
} tn_experiment_opts;

void tn_experiment_opts_init(tn_experiment_opts* opts);

typedef struct tn_permtest_result {
  double d_mse, lnp_mse;
  double d_mae, lnp_mae;
  int pass; /* final-epoch KS p for MSE below alpha */
} tn_permtest_result;

/* Runs the correct-vs-permuted replicate experiment and writes run files,
 * trajectory.csv, snapshot histograms and manifest.json into out_dir.
 * out_dir must not already contain files; partial output is removed on
 * failure. command_line is recorded in the manifest (may be NULL). */
tn_status tn_permtest(const tn_dataset* ds, const tn_experiment_opts* opts,
                      const char* out_dir, const char* command_line,
                      tn_permtest_result* result);

/* ------------------------------------------------------------------ */
/* Weight interpretation                                              */

typedef struct tn_alignment {
  double mass_fraction[5]; /* E, A, C, ES, O */
  int sign_correct[5];
  /* 0 = aligned, 1 = diffuse, 2 = degenerate */
  int verdict[5];
  double threshold;
  int min_index; /* factor with the smallest mass fraction */
} tn_alignment;

/* Averages the correct population's weights from a tn_permtest results
 * directory and writes weights.pgm, weights.csv and alignment.json into
 * out_dir. epoch -1 selects the final weights; otherwise a recorded
 * snapshot epoch. threshold <= 0 selects the default 0.5. */
tn_status tn_weights_report(const char* results_dir, int epoch,
                            const char* out_dir, double threshold,
                            int ascii_image, tn_alignment* out);

/* ------------------------------------------------------------------ */
/* Synthetic data                                                     */

/* Writes a synthetic dataset with planted structure to out_csv_path and
 * its schema to out_csv_path + ".schema". noise_sd is on the normalized
 * target scale. */
tn_status tn_synth(int n_respondents, double noise_sd,
                   unsigned long long seed, const char* out_csv_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TIPINET_H */
