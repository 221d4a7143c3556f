/* mdlp11 — modal decomposition of the degenerate LP11 fiber-mode group.
 *
 * C API of the shared library. All functions return MDLP_OK (0) on success
 * or a nonzero mdlp_status; a human-readable detail for the most recent
 * failure on the calling thread is available via mdlp_last_error().
 *
 * Conventions baked into every artifact this library writes:
 *   - render grid: 121 x 121 pixels, pitch a/50, span x,y in [-1.2a, 1.2a];
 *     row 0 is y = -1.2a, column 0 of a full image is x = -1.2a;
 *   - half images keep the x >= 0 columns (width 61, center included);
 *   - stacks are row-major, channel-last, float32 in files;
 *   - label layout z1..z7 = (x1, x2, y2, x3, y3, x4, y4), max|z_n| = 1,
 *     z1 >= 0;
 *   - RHCP analyzer = |(ex - i*ey)/sqrt(2)|^2 (tag "rhcp=(ex-i*ey)/sqrt2").
 */
#ifndef MDLP11_H
#define MDLP11_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define MDLP11_API_VERSION 1

typedef enum mdlp_status {
  MDLP_OK = 0,
  MDLP_ERR_INVALID_ARGUMENT = 1,
  MDLP_ERR_MODE_NOT_GUIDED = 2,
  MDLP_ERR_NO_ROOT_FOUND = 3,
  MDLP_ERR_ALL_ZERO_COEFFICIENTS = 4,
  MDLP_ERR_EMPTY_CHANNEL_SET = 5,
  MDLP_ERR_DIMENSION_MISMATCH = 6,
  MDLP_ERR_WRONG_WIDTH = 7,
  MDLP_ERR_ALL_ZERO_STACK = 8,
  MDLP_ERR_ALL_ZERO_IMAGE = 9,
  MDLP_ERR_IO = 10,
  MDLP_ERR_BAD_MAGIC = 11,
  MDLP_ERR_VERSION_MISMATCH = 12,
  MDLP_ERR_TRUNCATED_FILE = 13,
  MDLP_ERR_INVARIANT_VIOLATION = 14,
  MDLP_ERR_BAD_SHAPE = 15,
  MDLP_ERR_SHAPE_MISMATCH = 16,
  MDLP_ERR_LENGTH_MISMATCH = 17,
  MDLP_ERR_NON_FINITE_GRADIENT = 18,
  MDLP_ERR_FINGERPRINT_MISMATCH = 19,
  MDLP_ERR_NO_CONVERGENCE = 20,
  MDLP_ERR_TOO_FEW_SAMPLES = 21,
  MDLP_ERR_UNKNOWN = 99
} mdlp_status;

int mdlp_api_version(void);
const char* mdlp_status_name(mdlp_status status);
/* Detail message of the most recent failure on this thread. */
const char* mdlp_last_error(void);

/* ----------------------------------------------------------- channels -- */

/* Channel ids, canonical order. */
enum {
  MDLP_CH_FULL = 0,
  MDLP_CH_LP0 = 1,
  MDLP_CH_LP45 = 2,
  MDLP_CH_LP90 = 3,
  MDLP_CH_LP135 = 4,
  MDLP_CH_RHCP = 5,
  MDLP_CH_LHCP = 6
};

const char* mdlp_channel_name(int channel); /* NULL if out of range */

/* Fill ids[] with a preset ("n3", "n4", "n7"); *count receives the length. */
mdlp_status mdlp_channel_preset(const char* preset, int ids[7], int* count);

/* -------------------------------------------------------------- basis -- */

/* Opaque: fiber + solved LP11 basis + render grid + cached mode fields. */
typedef struct mdlp_basis mdlp_basis;

mdlp_status mdlp_basis_create(double core_radius_um, double numerical_aperture,
                              double wavelength_um, mdlp_basis** out);
void mdlp_basis_free(mdlp_basis* basis);
mdlp_status mdlp_basis_params(const mdlp_basis* basis, double* u, double* w, double* v);

/* ----------------------------------------------------------- rendering -- */

/* Render the analyzer stack of a gauge-fixed label vector z[7].
 * full != 0: 121 x 121 x nch; full == 0: cropped to 121 x 61 x nch.
 * normalize != 0: divide by the stack-global max pixel.
 * `out` must hold height*width*nch doubles (row-major, channel-last). */
mdlp_status mdlp_render(const mdlp_basis* basis, const double z[7], const int* channels, int nch,
                        int full, int normalize, double* out);

/* Binary P5 PGM, 16-bit, max scaled to 65535. */
mdlp_status mdlp_export_pgm(const char* path, const double* image, int height, int width);

/* -------------------------------------------------------------- labels -- */

/* (x_n, y_n) complex coefficients <-> 7-label vector (max-normalized). */
mdlp_status mdlp_labels_encode(const double c_re[4], const double c_im[4], double z[7]);
mdlp_status mdlp_labels_decode(const double z[7], double c_re[4], double c_im[4]);

/* ------------------------------------------------------------- dataset -- */

typedef struct mdlp_dataset mdlp_dataset;

mdlp_status mdlp_dataset_generate(const mdlp_basis* basis, long long n, uint64_t seed,
                                  const int* channels, int nch, mdlp_dataset** out);
mdlp_status mdlp_dataset_save(const mdlp_dataset* dataset, const char* path);
mdlp_status mdlp_dataset_load(const char* path, mdlp_dataset** out);
void mdlp_dataset_free(mdlp_dataset* dataset);

mdlp_status mdlp_dataset_info(const mdlp_dataset* dataset, long long* n, int* height, int* width,
                              int* nch);
mdlp_status mdlp_dataset_channels(const mdlp_dataset* dataset, int ids[7], int* count);
mdlp_status mdlp_dataset_fiber(const mdlp_dataset* dataset, double* core_radius_um,
                               double* numerical_aperture, double* wavelength_um);
mdlp_status mdlp_dataset_label(const mdlp_dataset* dataset, long long i, double z[7]);
/* Borrowed pointer to the sample's height*width*nch float32 stack. */
const float* mdlp_dataset_stack(const mdlp_dataset* dataset, long long i);

/* --------------------------------------------------------------- model -- */

typedef struct mdlp_model mdlp_model;

/* Fixed published architecture on a (height, width, channels) input. */
mdlp_status mdlp_model_create(int height, int width, int channels, uint64_t init_seed,
                              mdlp_model** out);
mdlp_status mdlp_model_save(const mdlp_model* model, const char* path);
mdlp_status mdlp_model_load(const char* path, mdlp_model** out);
void mdlp_model_free(mdlp_model* model);
mdlp_status mdlp_model_input_shape(const mdlp_model* model, int* height, int* width,
                                   int* channels);

mdlp_status mdlp_model_predict(const mdlp_model* model, const float* stack, size_t stack_len,
                               double z[7]);

typedef void (*mdlp_epoch_callback)(int epoch, double train_rms, double val_rms, void* user);

/* Adam training with per-epoch seeded shuffles; the model is left at the
 * best-validation checkpoint. The callback (optional) fires once per epoch. */
mdlp_status mdlp_model_train(mdlp_model* model, const mdlp_dataset* train_set,
                             const mdlp_dataset* val_set, int epochs, int batch, double lr,
                             uint64_t seed, mdlp_epoch_callback callback, void* user);

/* ----------------------------------------------------- baseline solver -- */

typedef struct mdlp_lsq_options {
  int starts;            /* default 32 */
  int max_iterations;    /* default 200 */
  double residual_tol;   /* default 1e-12 */
  double step_tol;       /* default 1e-12 */
  uint64_t seed;
} mdlp_lsq_options;

void mdlp_lsq_options_default(mdlp_lsq_options* options);

typedef struct mdlp_solution {
  double z[7];
  double residual;
} mdlp_solution;

#define MDLP_MAX_ALTERNATES 7

typedef struct mdlp_decomposition {
  mdlp_solution best;
  int converged;
  int n_alternates; /* distinct near-tie solutions, clamped to the array */
  mdlp_solution alternates[MDLP_MAX_ALTERNATES];
} mdlp_decomposition;

/* `observed` is a normalized half stack (121 x 61 x nch doubles). */
mdlp_status mdlp_decompose(const mdlp_basis* basis, const double* observed, const int* channels,
                           int nch, const mdlp_lsq_options* options, mdlp_decomposition* out);

/* ---------------------------------------------------------- evaluation -- */

typedef struct mdlp_metrics {
  double label_mae;
  double label_rms;
  double rho_mae;
  double rho_rms;
  double phase_mae_over_2pi;
  double corr_full;
  double corr_mean;
  double corr_channel[7];
  long long n_samples;
  long long n_ambiguous;
} mdlp_metrics;

typedef struct mdlp_sample_metrics {
  long long sample_id;
  double label_mae;
  double label_rms;
  double rho_rms;
  double phase_mae_over_2pi;
  double corr_full;
  double corr_mean;
  int ambiguous;
} mdlp_sample_metrics;

typedef struct mdlp_report mdlp_report;

/* Model predictions over a dataset (channel sets must match). */
mdlp_status mdlp_eval_model(const mdlp_model* model, const mdlp_dataset* dataset,
                            mdlp_report** out);

/* Baseline decomposition over a dataset using `channels`, which must be a
 * subset of the dataset's channels (sub-stacks are re-normalized). */
mdlp_status mdlp_eval_baseline(const mdlp_dataset* dataset, const int* channels, int nch,
                               const mdlp_lsq_options* options, mdlp_report** out);

mdlp_status mdlp_report_metrics(const mdlp_report* report, mdlp_metrics* out);
mdlp_status mdlp_report_sample(const mdlp_report* report, long long i, mdlp_sample_metrics* out);
/* Sample ids of the rank ceil(N/4), ceil(N/2), ceil(3N/4) smallest
 * per-sample label-MAE losses. */
mdlp_status mdlp_report_quartiles(const mdlp_report* report, long long ids[3]);
void mdlp_report_free(mdlp_report* report);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MDLP11_H */
