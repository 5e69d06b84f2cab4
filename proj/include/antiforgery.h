/*
 * antiforgery C API
 *
 * Facial-image protection against GAN manipulation via bounded perturbations
 * in the CIELAB a/b channels, plus the evaluation harness around it. All
 * functions return af_status; every other output travels through out
 * parameters. Objects are opaque handles owned by the caller and released
 * with the matching *_free function.
 */

#ifndef ANTIFORGERY_H
#define ANTIFORGERY_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum af_status {
  AF_OK = 0,
  AF_ERR_INVALID_ARG = 1,
  AF_ERR_BAD_HANDLE = 2,
  AF_ERR_IO = 3,
  AF_ERR_CONFIG = 4,
  AF_ERR_RUNTIME = 5,
  AF_ERR_BUFFER_TOO_SMALL = 6,
} af_status;

/* Library version string, e.g. "0.1.0". */
const char* af_version(void);

/* Human-readable name of a status code. */
const char* af_status_name(af_status status);

/* Message of the most recent failure on this thread; empty if none. */
const char* af_last_error(void);

/* ------------------------------------------------------------------ images */

typedef struct af_image af_image;

typedef enum af_value_range {
  AF_RANGE_UNIT = 0,      /* [0,1]  */
  AF_RANGE_SYMMETRIC = 1, /* [-1,1] */
} af_value_range;

af_status af_image_create(int32_t height, int32_t width, af_value_range range,
                          af_image** out);
/* pixels: height*width*3 doubles, row major, interleaved RGB; values are
 * clamped into the declared range. */
af_status af_image_from_pixels(int32_t height, int32_t width,
                               af_value_range range, const double* pixels,
                               af_image** out);
af_status af_image_clone(const af_image* img, af_image** out);
void af_image_free(af_image* img);

int32_t af_image_height(const af_image* img);
int32_t af_image_width(const af_image* img);
af_value_range af_image_range(const af_image* img);
/* Copies height*width*3 doubles into `out`; capacity is the element count of
 * the destination buffer. */
af_status af_image_copy_pixels(const af_image* img, double* out,
                               size_t capacity);

/* Reads PNG (8-bit gray/RGB/RGBA) or binary PPM. */
af_status af_image_read(const char* path, af_value_range range, af_image** out);
af_status af_image_write_png(const af_image* img, const char* path);

/* -------------------------------------------------------------- colorspace */

/* L, a, b buffers each hold height*width doubles (L in [0,100], a/b in
 * [-128,127]); capacity is the per-channel element count. */
af_status af_rgb_to_lab(const af_image* img, double* L, double* a, double* b,
                        size_t capacity);
/* clamp_count (optional) receives the number of out-of-gamut samples clamped
 * during conversion. */
af_status af_lab_to_rgb(int32_t height, int32_t width, const double* L,
                        const double* a, const double* b, af_value_range range,
                        int64_t* clamp_count, af_image** out);

/* -------------------------------------------------------------- surrogates */

typedef struct af_generator af_generator;

/* Seeded analytic color-mix generator. */
af_status af_generator_toy(uint64_t seed, int32_t label_count,
                           double blur_sigma, af_generator** out);
/* Convolutional generator from an AFW1 weight file. */
af_status af_generator_convnet(const char* weight_path, af_generator** out);
/* Seeded random convolutional generator (no weight file needed). */
af_status af_generator_convnet_random(uint64_t seed, int32_t label_count,
                                      int32_t hidden_channels, int32_t blocks,
                                      af_generator** out);
af_status af_generator_identity(int32_t label_count, af_generator** out);
void af_generator_free(af_generator* gen);

int32_t af_generator_label_count(const af_generator* gen);
/* x must be in the symmetric range. */
af_status af_generator_forward(const af_generator* gen, const af_image* x,
                               int32_t label, af_image** out);

/* ----------------------------------------------------------------- attacks */

typedef struct af_attack_config af_attack_config;

af_status af_attack_config_create(af_attack_config** out);
void af_attack_config_free(af_attack_config* cfg);
/* Keys: epsilon, learning_rate, iterations, objective (toward_zero |
 * toward_one | toward_noise | away_from_translation), loss_norm (l1 | l2),
 * seed. Values are parsed from strings. */
af_status af_attack_config_set(af_attack_config* cfg, const char* key,
                               const char* value);

/* kind: "antiforge" | "pgd" | "cw". theta_linf (optional) receives the final
 * perturbation magnitude. */
af_status af_attack_run(const char* kind, const af_image* x,
                        const af_generator* gen, const af_attack_config* cfg,
                        af_image** x_adv, double* theta_linf);

/* ----------------------------------------------------------------- metrics */

af_status af_mse(const af_image* a, const af_image* b, double* out);
af_status af_psnr(const af_image* a, const af_image* b, double* out);
af_status af_ssim(const af_image* a, const af_image* b, double* out);
/* Mean squared difference on the [-1,1] scale. */
af_status af_l2_distortion(const af_image* a, const af_image* b, double* out);

/* -------------------------------------------------------------- experiments */

/* kind: effectiveness | robustness | reconstruction | transfer | colorspace |
 * ablate | spectra. Reads the config file, runs the experiment, and writes
 * CSV/PNG/JSON outputs. out_dir and seed_override may be NULL. */
af_status af_experiment_run(const char* kind, const char* config_path,
                            const char* out_dir, const uint64_t* seed_override);

/* Protects a batch of image files; per-file failures are reported on stderr
 * and counted in failed_count (optional) while the batch continues. */
af_status af_protect_files(const char* config_path, const char* const* inputs,
                           size_t input_count, const char* out_dir,
                           const uint64_t* seed_override, size_t* failed_count);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ANTIFORGERY_H */
